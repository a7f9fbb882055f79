"""
ftsim: fault transients of a 7-winding synchronous generator on an inductive network.

``core`` builds and reduces the stage models and ``integrators`` advances them.
``scenario`` chains the stages into a fault transient and searches the clearing time.
"""
from . import config
from . import core
from . import integrators
from . import scenario

__version__ = "0.1.0"
