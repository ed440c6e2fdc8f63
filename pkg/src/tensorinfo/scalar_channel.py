"""Scalar Gaussian-channel free energy and overlap.

Estimating X ~ P from Y = sqrt(m) X + Z with Z ~ N(0,1) has free energy

    f(m) = -E ln int dP(x) exp(-m x^2/2 + m x X + sqrt(m) x Z)

and posterior overlap q(m) = E[<x> X] = -2 f'(m), which lies in [0, rho]
for zero-mean priors. For discrete priors the X-average and the inner
integral are exact atom sums and the Z-average is Gauss-Hermite; for the
Gaussian prior everything is closed form.

The overlap is computed through the posterior mean rather than by
differentiating f: the quadrature of <x> is exact for discrete priors
and needs no step-size tuning. The derivative route survives in the
tests as an independent oracle.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from .priors import Prior

# Above this atom-count^2 x node-count work estimate, switch from the
# direct log-sum-exp kernel to the shifted-GEMM kernel.
_DIRECT_KERNEL_MAX = 2_000_000

# GEMM entries whose stabilized sum drops below this are recomputed in
# the log domain entry by entry (they lost all precision to underflow).
_GEMM_UNDERFLOW = 1e-250


class DomainError(ValueError):
    """Argument outside the operation's domain."""


class QuadratureWarning(UserWarning):
    """Two quadrature node counts disagree beyond the self-check tolerance."""


@dataclass(frozen=True)
class QuadratureConfig:
    hermite_nodes: int = 127
    log_domain: bool = True
    check_nodes: int = 63          # node count for the accuracy self-check
    check_tol: float = 1e-7

    def __post_init__(self):
        if self.hermite_nodes < 21:
            raise ValueError(f"hermite_nodes must be >= 21, got {self.hermite_nodes}")


@lru_cache(maxsize=32)
def _hermite_rule(n: int):
    """Nodes/weights for E_{Z~N(0,1)} g(Z) = sum_j w_j g(y_j)."""
    t, w = np.polynomial.hermite.hermgauss(n)
    return np.sqrt(2.0) * t, w / np.sqrt(np.pi)


def _check_m(m: float) -> float:
    m = float(m)
    if not np.isfinite(m) or m < 0:
        raise DomainError(f"snr m must be finite and >= 0, got {m}")
    return m


class ScalarChannel:
    """Scalar channel for one prior; all operations are pure in (prior, m)."""

    def __init__(self, prior: Prior, quad: QuadratureConfig | None = None):
        self.prior = prior
        self.quad = quad or QuadratureConfig()

    # -- public operations -------------------------------------------------

    def free_energy(self, m: float) -> float:
        """f(m); exactly 0 at m = 0."""
        m = _check_m(m)
        if m == 0.0:
            return 0.0
        if self.prior.kind == "gaussian":
            rho = self.prior.variance
            return 0.5 * np.log1p(m * rho) - 0.5 * m * rho
        return self._free_energy_discrete(m, self.quad.hermite_nodes)

    def overlap(self, m: float) -> float:
        """q(m) = E[<x> X]; equals (E x)^2 at m = 0."""
        m = _check_m(m)
        if m == 0.0:
            return self.prior.mean ** 2
        if self.prior.kind == "gaussian":
            rho = self.prior.variance
            return m * rho * rho / (1.0 + m * rho)
        return self._posterior_moments(m, self.quad.hermite_nodes)[0]

    def mmse(self, m: float) -> float:
        """E(X - <x>)^2 = rho - q(m)."""
        return self.prior.second_moment - self.overlap(m)

    def mutual_info(self, m: float) -> float:
        """I(X; Y) = f(m) + m rho / 2; non-negative, non-decreasing in m."""
        m = _check_m(m)
        return self.free_energy(m) + 0.5 * m * self.prior.second_moment

    def free_energy_checked(self, m: float) -> tuple[float, float]:
        """f(m) plus the gap to a lower-node recomputation.

        Emits QuadratureWarning when the gap exceeds the configured
        tolerance; the returned value is always the full-node one.
        """
        m = _check_m(m)
        value = self.free_energy(m)
        if m == 0.0 or self.prior.kind == "gaussian":
            return value, 0.0
        other = self._free_energy_discrete(m, max(21, self.quad.check_nodes))
        gap = abs(value - other)
        if gap > self.quad.check_tol:
            warnings.warn(
                f"quadrature self-check gap {gap:.3e} at m={m:g} "
                f"({self.quad.hermite_nodes} vs {self.quad.check_nodes} nodes)",
                QuadratureWarning, stacklevel=2)
        return value, gap

    def posterior_second_moments(self, m: float) -> tuple[float, float]:
        """(E[<x> X], E[<x>^2]) by quadrature; equal by the Bayes identity."""
        m = _check_m(m)
        if m == 0.0:
            mu = self.prior.mean
            return mu * mu, mu * mu
        if self.prior.kind == "gaussian":
            q = self.overlap(m)
            return q, q
        return self._posterior_moments(m, self.quad.hermite_nodes)

    # -- discrete-prior kernels --------------------------------------------

    def _tables(self, m: float, nodes: int):
        """Shared exponent tables for the discrete-prior kernels.

        Exponents are c_k + x_k y with c_k = log p_k - m x_k^2 / 2 and
        y = m X_i + sqrt(m) z_j, split as P[i, k] = c_k + m X_i x_k and
        Q[j, k] = sqrt(m) z_j x_k.
        """
        x = self.prior.locations
        p = self.prior.weights
        z, w = _hermite_rule(nodes)
        with np.errstate(divide="ignore"):
            logp = np.log(p)
        c = logp - 0.5 * m * x * x
        P = c[None, :] + m * np.outer(x, x)          # (K, K): rows = X atoms
        Q = np.sqrt(m) * np.outer(z, x)              # (H, K)
        return x, p, w, P, Q

    def _free_energy_discrete(self, m: float, nodes: int) -> float:
        x, p, w, P, Q = self._tables(m, nodes)
        K, H = len(x), len(w)
        if K * K * H <= _DIRECT_KERNEL_MAX:
            # (K_X, H, K) exponent cube, exact log-sum-exp over atoms
            L = logsumexp(P[:, None, :] + Q[None, :, :], axis=2)
        else:
            L = self._log_inner_gemm(P, Q, p, w)
        return float(-p @ L @ w)

    def _posterior_moments(self, m: float, nodes: int) -> tuple[float, float]:
        x, p, w, P, Q = self._tables(m, nodes)
        K, H = len(x), len(w)
        if K * K * H <= _DIRECT_KERNEL_MAX:
            A = P[:, None, :] + Q[None, :, :]
            A -= A.max(axis=2, keepdims=True)
            E = np.exp(A)
            mean = (E @ x) / E.sum(axis=2)           # <x> at (X_i, z_j)
        else:
            mean = self._posterior_mean_gemm(P, Q, x, p, w)
        q = float(p @ (x * (mean @ w)))
        qq = float(p @ ((mean * mean) @ w))
        return q, qq

    def _stabilized_products(self, P, Q, x=None):
        """exp-shifted GEMMs: denominator sum and optional x-weighted sum."""
        pmax = P.max(axis=1)
        qmax = Q.max(axis=1)
        A = np.exp(P - pmax[:, None])
        B = np.exp(Q - qmax[:, None])
        denom = A @ B.T                              # (K_X, H)
        num = (A * x[None, :]) @ B.T if x is not None else None
        return pmax, qmax, denom, num

    def _relevant_underflow(self, denom, pmax, qmax, p, w):
        """Underflowed entries whose outer-weighted contribution matters.

        The separate row/column shifts can underflow entries whose true
        log value is representable, but most such entries sit at extreme
        (atom, node) pairs with negligible weight p_i w_j; recomputing
        them exactly would dominate the runtime for nothing. An entry is
        recomputed only when its weight times a bound on |L| exceeds the
        target accuracy.
        """
        bad = denom < _GEMM_UNDERFLOW
        if not bad.any():
            return bad
        scale = (np.abs(pmax)[:, None] + np.abs(qmax)[None, :]
                 - np.log(_GEMM_UNDERFLOW))
        return bad & (np.outer(p, w) * scale > 1e-13)

    def _log_inner_gemm(self, P, Q, p, w) -> np.ndarray:
        pmax, qmax, denom, _ = self._stabilized_products(P, Q)
        shift = pmax[:, None] + qmax[None, :]
        with np.errstate(divide="ignore"):
            L = shift + np.log(denom)
        bad = denom < _GEMM_UNDERFLOW
        if bad.any():
            # negligible underflows get the (upper-bound) shift value;
            # relevant ones are recomputed by exact log-sum-exp
            L[bad] = shift[bad]
            fix = self._relevant_underflow(denom, pmax, qmax, p, w)
            if fix.any():
                ii, jj = np.nonzero(fix)
                L[ii, jj] = logsumexp(P[ii, :] + Q[jj, :], axis=1)
        return L

    def _posterior_mean_gemm(self, P, Q, x, p, w) -> np.ndarray:
        pmax, qmax, denom, num = self._stabilized_products(P, Q, x)
        bad = denom < _GEMM_UNDERFLOW
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = num / denom
        if bad.any():
            mean[bad] = 0.0
            fix = self._relevant_underflow(denom, pmax, qmax, p, w)
            if fix.any():
                ii, jj = np.nonzero(fix)
                A = P[ii, :] + Q[jj, :]
                A -= A.max(axis=1, keepdims=True)
                E = np.exp(A)
                mean[ii, jj] = (E @ x) / E.sum(axis=1)
        return mean
