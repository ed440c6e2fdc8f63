"""Shared helpers for the test suite."""

import numpy as np

from tensorinfo.identities import ScalarFunction


def random_admissible(rng) -> ScalarFunction:
    """Random positive mixture of sqrt(1 + (a x)^2) terms.

    Convex, strictly convex, non-decreasing and Lipschitz on the half
    line; the box bound tracks the Lipschitz constant sum(c a) so optima
    stay interior regardless of the drawn coefficients.
    """
    k = int(rng.integers(1, 4))
    cs = rng.uniform(0.2, 1.5, size=k)
    As = rng.uniform(0.3, 2.0, size=k)
    bound = 1.3 * float(np.dot(cs, As)) + 0.5

    def fn(x, cs=cs, As=As):
        x = np.asarray(x, dtype=float)
        return sum(c * np.sqrt(1.0 + (a * x) ** 2) for c, a in zip(cs, As))

    def deriv(x, cs=cs, As=As):
        x = np.asarray(x, dtype=float)
        return sum(c * a * a * x / np.sqrt(1.0 + (a * x) ** 2)
                   for c, a in zip(cs, As))

    return ScalarFunction(fn, bound, deriv)


def shared_bound(a: ScalarFunction, b: ScalarFunction):
    """Put a pair of functions on the larger of their two boxes."""
    bb = max(a.bound, b.bound)
    return (ScalarFunction(a.fn, bb, a.deriv),
            ScalarFunction(b.fn, bb, b.deriv))


def sqrt_function(a: float, bound: float = 2.0) -> ScalarFunction:
    """The fixed family sqrt(1 + (a x)^2) with exact derivative."""
    return ScalarFunction(
        lambda x, a=a: np.sqrt(1.0 + (a * np.asarray(x, dtype=float)) ** 2),
        bound,
        lambda x, a=a: a * a * np.asarray(x, dtype=float)
        / np.sqrt(1.0 + (a * np.asarray(x, dtype=float)) ** 2))
