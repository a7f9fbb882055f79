"""
Result storage package.
"""
from .base import BaseResultStore
from .csv_store import CsvResultStore

__all__ = ["BaseResultStore", "CsvResultStore"]
