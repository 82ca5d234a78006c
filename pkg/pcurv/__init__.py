"""
Characteristic polynomials of p-curvatures for all primes below a bound.
"""

__version__ = "0.1.0"
