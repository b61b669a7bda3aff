"""quasilab: a desk-scale laboratory for concentrating quasimodes and the
sensitivity of Schrodinger propagators to shrinking-support potentials."""

__version__ = "0.1.0"

from . import grids, legendre, potentials, propagation, quasimodes, transforms  # noqa: F401
