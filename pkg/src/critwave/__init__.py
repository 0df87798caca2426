"""Numerical laboratory for weakly coupled semilinear damped wave systems
with modulus-of-continuity nonlinearities on the critical curve."""

__version__ = "0.1.0"
