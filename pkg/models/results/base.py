"""
Base interface for result storage implementations.
"""
from abc import ABC, abstractmethod
from typing import Any, Dict

import pandas as pd


class BaseResultStore(ABC):
    """Base class for result storage implementations."""

    @abstractmethod
    def write_trajectory(self, name: str, trajectory: pd.DataFrame) -> str:
        """
        Store a trajectory table.

        Args:
            name: Base name of the run (e.g. the method)
            trajectory: Rows of t, stage, diagnostics, fluxes and angles

        Returns:
            str: Location of the stored trajectory
        """
        pass

    @abstractmethod
    def write_summary(self, name: str, summary: Dict[str, Any]) -> str:
        """
        Store a run summary.

        Args:
            name: Base name of the summary
            summary: JSON-serialisable report

        Returns:
            str: Location of the stored summary
        """
        pass

    @abstractmethod
    def write_table(self, name: str, table: pd.DataFrame) -> str:
        """Store an auxiliary table (probe logs, error norms, equilibria)."""
        pass

    @abstractmethod
    def write_family(self, name: str, members: Dict[str, Any]) -> Dict[str, str]:
        """
        Store the coefficient matrices of a trigonometric matrix family.

        Args:
            name: Family name, e.g. "I_N"
            members: Coefficient name to matrix

        Returns:
            Dict[str, str]: Coefficient name to stored location
        """
        pass
