"""Numerical laboratory for a Davenport-Heilbronn problem with prime variables.

Counts and certifies prime solutions of

    |l1 p1^2 + l2 p2^2 + l3 p3^2 + l4 p4^k - omega| <= (max p_j)^(-(7-6k)/(14k) + eps)

and checks, at desk scale, the analytic ingredients of the circle-method
argument behind it: sieve weights, exponential sums, arc integrals,
rational approximation and the closing exponent optimisation.
"""

__version__ = "0.1.0"
