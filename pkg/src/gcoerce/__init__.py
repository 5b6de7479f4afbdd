"""Front propagation of the G-equation in divergence-free flows.

Modules: ``field`` (velocity fields), ``stats`` (box averages and r_star),
``frontier`` (level-set solver and waiting times), ``theory`` (closed-form
parameters) and ``experiments`` (ensembles, statistics and checks).
"""

__version__ = "0.1.0"

from . import experiments, field, frontier, stats, theory

__all__ = ["experiments", "field", "frontier", "stats", "theory", "__version__"]
