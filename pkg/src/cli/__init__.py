"""
Command-line surface
"""
from .commands import cmd_cct, cmd_compare, cmd_equilibrium, cmd_simulate, dump_reduction

__all__ = ["cmd_cct", "cmd_compare", "cmd_equilibrium", "cmd_simulate", "dump_reduction"]
