"""
CSV/JSON result storage implementation.
"""
import json
import logging
import math
import os
from typing import Any, Dict

import numpy as np
import pandas as pd

from .base import BaseResultStore

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def _jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats for json.dump."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


class CsvResultStore(BaseResultStore):
    """Writes tables as CSV with 17 significant digits and summaries as sorted JSON."""

    def __init__(self, out_dir: str = "outputs"):
        """
        Initialize the store and create its directory.

        Args:
            out_dir: Directory receiving every output file
        """
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)

    def _path(self, filename: str) -> str:
        return os.path.join(self.out_dir, filename)

    def write_trajectory(self, name: str, trajectory: pd.DataFrame) -> str:
        path = self._path(f"{name}_trajectory.csv")
        trajectory.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        logger.info(f"Trajectory with {len(trajectory)} rows written to {path}")
        return path

    def write_summary(self, name: str, summary: Dict[str, Any]) -> str:
        path = self._path(f"{name}_summary.json")
        with open(path, "w") as f:
            json.dump(_jsonable(summary), f, indent=2, sort_keys=True)
        logger.info(f"Summary written to {path}")
        return path

    def write_table(self, name: str, table: pd.DataFrame) -> str:
        path = self._path(f"{name}.csv")
        table.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        return path

    def write_family(self, name: str, members: Dict[str, Any]) -> Dict[str, str]:
        paths = {}
        for member, matrix in members.items():
            path = self._path(f"{name}_{member}.csv")
            pd.DataFrame(np.atleast_2d(matrix)).to_csv(path, index=False, header=False, float_format=FLOAT_FORMAT)
            paths[member] = path
        logger.info(f"Coefficient family {name} written to {self.out_dir}")
        return paths
