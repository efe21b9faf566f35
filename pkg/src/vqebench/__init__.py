"""Benchmark suite comparing ADAM, BFGS and natural-gradient descent on
variational ground-state problems for periodic spin chains, backed by an
exact free-fermion simulator and a dense statevector simulator."""

from . import costmodel, freefermion, harness, models, optimizers, statevector

__version__ = "0.1.0"

__all__ = [
    "costmodel",
    "freefermion",
    "harness",
    "models",
    "optimizers",
    "statevector",
    "__version__",
]
