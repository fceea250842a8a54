"""Numerical laboratory for the Revuz correspondence at finite energy.

The package computes the energy metric on measures of finite energy
integrals by quadrature, simulates the corresponding positive continuous
additive functionals (PCAFs) by reproducible Monte Carlo under four
concrete symmetric Hunt processes, and cross-checks the energy identities
that tie the two sides together.

Layout
------
``models``      the four process models and their closed-form exit data
``measures``    smooth measures (densities, Dirac atoms, Cantor levels)
``kernels``     Green's functions, resolvents, potentials, energy metric
``simulate``    reproducible path simulation with lifetime detection
``pcaf``        PCAF evaluation along paths, sup and discounted distances
``estimators``  Monte Carlo expectations under m-, kappa- and nu0-weightings
``harness``     scripted experiments and the report/verdict machinery
"""

__version__ = "0.1.0"

from revuz_lab import estimators, harness, kernels, measures, models, pcaf, simulate

__all__ = [
    "models",
    "measures",
    "kernels",
    "simulate",
    "pcaf",
    "estimators",
    "harness",
    "__version__",
]
