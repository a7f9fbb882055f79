"""
Persistence layer: trajectory, summary and coefficient-matrix stores under ``models.results``.
"""
from .results import BaseResultStore, CsvResultStore

__all__ = ["BaseResultStore", "CsvResultStore"]
