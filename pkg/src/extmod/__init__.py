"""Numerical laboratory for conformal moduli of stretched quadrilaterals.

Subpackages
-----------
elliptic   Complete/incomplete elliptic integrals, series expansions, oracles.
geometry   Graph-bounded quadrilaterals, stretching, piecewise-linear
           straightening, slit comparison configurations.
canonical  Analytic moduli of the symmetric slit frame via the elliptic
           parameter system.
modulus    Grid-based interior/exterior conformal modulus engine.
harness    H-sweeps, invariant suites, CLI entry points.
"""

__version__ = "0.1.0"
