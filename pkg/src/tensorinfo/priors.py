"""Bounded-support scalar prior distributions.

A prior is either a finite mixture of atoms (discrete) or a centered
Gaussian. Discrete priors are the workhorse: they admit exact inner
integrals in the scalar-channel quadrature and exact posterior
enumeration in the finite-size oracle. The Gaussian kind exists because
every formula it enters has a closed form, which anchors the numerics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import special

# Sanity bound on atom locations; not a theoretical requirement, just an
# input guard against absurd quantizations.
MAX_SUPPORT_BOUND = 1e3

_WEIGHT_SUM_TOL = 1e-12


class PriorError(ValueError):
    """Invalid prior specification; the message names the offending field."""


@dataclass(frozen=True)
class Prior:
    """Scalar prior, immutable after construction.

    kind
        "discrete" or "gaussian".
    atoms
        Tuple of (location, weight) pairs; empty for the gaussian kind.
    variance
        Variance of the gaussian kind (mean is fixed to 0); 0.0 otherwise.
    """

    kind: str
    atoms: tuple[tuple[float, float], ...] = ()
    variance: float = 0.0

    def __post_init__(self):
        if self.kind == "discrete":
            if not self.atoms:
                raise PriorError("atoms: empty atom list")
            locs = [a[0] for a in self.atoms]
            for x, p in self.atoms:
                if not np.isfinite(x):
                    raise PriorError(f"atoms: non-finite location {x}")
                if abs(x) > MAX_SUPPORT_BOUND:
                    raise PriorError(
                        f"atoms: location {x} exceeds support bound {MAX_SUPPORT_BOUND}")
                if p < 0 or not np.isfinite(p):
                    raise PriorError(f"atoms: negative weight {p} at location {x}")
            if len(set(locs)) != len(locs):
                raise PriorError("atoms: duplicate locations")
            total = float(sum(p for _, p in self.atoms))
            if abs(total - 1.0) > _WEIGHT_SUM_TOL:
                raise PriorError(f"atoms: weights sum to {total}, expected 1")
        elif self.kind == "gaussian":
            if self.atoms:
                raise PriorError("atoms: gaussian prior takes no atoms")
            if not (self.variance > 0 and np.isfinite(self.variance)):
                raise PriorError(f"variance: must be positive, got {self.variance}")
        else:
            raise PriorError(f"kind: unknown prior kind {self.kind!r}")

    @cached_property
    def locations(self) -> np.ndarray:
        a = np.array([x for x, _ in self.atoms], dtype=np.float64)
        a.setflags(write=False)
        return a

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.array([p for _, p in self.atoms], dtype=np.float64)
        w = w / w.sum()
        w.setflags(write=False)
        return w

    @property
    def second_moment(self) -> float:
        if self.kind == "gaussian":
            return self.variance
        return float(np.dot(self.weights, self.locations ** 2))

    @property
    def mean(self) -> float:
        if self.kind == "gaussian":
            return 0.0
        return float(np.dot(self.weights, self.locations))

    @property
    def support_bound(self) -> float:
        """Max |location| for discrete priors; inf for the gaussian kind."""
        if self.kind == "gaussian":
            return np.inf
        return float(np.max(np.abs(self.locations)))

    def sample(self, rng: np.random.Generator, size=None) -> float | np.ndarray:
        """Draw from the prior using the caller-owned generator state."""
        if self.kind == "gaussian":
            return rng.normal(0.0, np.sqrt(self.variance), size=size)
        idx = rng.choice(len(self.atoms), size=size, p=self.weights)
        return self.locations[idx]

    def descriptor(self) -> dict:
        """JSON-serializable descriptor accepted back by construct_prior."""
        if self.kind == "gaussian":
            return {"kind": "gaussian", "variance": self.variance}
        return {"kind": "discrete", "atoms": [[x, p] for x, p in self.atoms]}


def rademacher() -> Prior:
    """Symmetric +-1 prior, second moment 1."""
    return Prior("discrete", atoms=((1.0, 0.5), (-1.0, 0.5)))


def sparse_rademacher(s: float) -> Prior:
    """Atoms +-1/sqrt(s) with mass s/2 each and 0 with mass 1-s; rho = 1."""
    if not (0 < s <= 1):
        raise PriorError(f"s: sparsity must lie in (0, 1], got {s}")
    if s == 1.0:
        return rademacher()
    x = 1.0 / np.sqrt(s)
    return Prior("discrete", atoms=((x, s / 2), (-x, s / 2), (0.0, 1.0 - s)))


def gaussian(rho: float) -> Prior:
    """Centered Gaussian with second moment rho."""
    return Prior("gaussian", variance=float(rho))


def discrete(atoms) -> Prior:
    """Discrete prior from an iterable of (location, weight) pairs."""
    return Prior("discrete", atoms=tuple((float(x), float(p)) for x, p in atoms))


def gaussian_quantization(rho: float, n_atoms: int = 2001,
                          tail_cut: float = 1e-20) -> Prior:
    """Discrete quantization of N(0, rho) on Gauss-Hermite nodes.

    The Gauss-Hermite rule reproduces the Gaussian moments essentially to
    machine precision, so the quantized prior has second moment rho and
    makes the quadrature-vs-closed-form comparisons meaningful. Extreme
    nodes below tail_cut weight are dropped: they shift every computed
    quantity by less than tail_cut times a bounded factor while the atom
    count (and with it the quadrature cost, quadratic in it) would be
    dominated by them.
    """
    if not rho > 0:
        raise PriorError(f"rho: must be positive, got {rho}")
    if not 0.0 <= tail_cut < 1e-6:
        raise PriorError(f"tail_cut: must lie in [0, 1e-6), got {tail_cut}")
    # scipy's rule stays stable at thousands of nodes where numpy's
    # hermgauss overflows
    t, w = special.roots_hermite(int(n_atoms))
    locs = np.sqrt(2.0 * rho) * t
    probs = w / np.sqrt(np.pi)
    keep = probs > tail_cut
    locs, probs = locs[keep], probs[keep]
    probs = probs / probs.sum()
    return Prior("discrete", atoms=tuple(zip(locs.tolist(), probs.tolist())))


def construct_prior(spec) -> Prior:
    """Build a prior from a descriptor.

    Accepts a dict (JSON descriptor), a shorthand string
    ("rademacher", "gaussian:1.0", "sparse_rademacher:0.25",
    "file:<path>"), or an existing Prior (returned unchanged).
    """
    if isinstance(spec, Prior):
        return spec
    if isinstance(spec, str):
        return _from_shorthand(spec)
    if isinstance(spec, dict):
        return _from_descriptor(spec)
    raise PriorError(f"descriptor: unsupported type {type(spec).__name__}")


def _from_descriptor(d: dict) -> Prior:
    kind = d.get("kind")
    if kind == "discrete":
        if "atoms" not in d:
            raise PriorError("atoms: missing from discrete descriptor")
        return discrete(d["atoms"])
    if kind == "gaussian":
        if "variance" not in d:
            raise PriorError("variance: missing from gaussian descriptor")
        return gaussian(d["variance"])
    if kind == "rademacher":
        return rademacher()
    if kind == "sparse_rademacher":
        if "s" not in d:
            raise PriorError("s: missing from sparse_rademacher descriptor")
        return sparse_rademacher(d["s"])
    raise PriorError(f"kind: unknown prior kind {kind!r}")


def _from_shorthand(s: str) -> Prior:
    name, _, arg = s.partition(":")
    name = name.strip()
    if name == "rademacher":
        return rademacher()
    if name == "gaussian":
        return gaussian(_parse_float(arg, "gaussian variance"))
    if name == "sparse_rademacher":
        return sparse_rademacher(_parse_float(arg, "sparsity"))
    if name == "file":
        try:
            with open(arg) as fh:
                d = json.load(fh)
        except OSError as exc:
            raise PriorError(f"file: cannot read prior file {arg!r}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise PriorError(f"file: invalid JSON in {arg!r}: {exc}") from exc
        return _from_descriptor(d)
    raise PriorError(f"descriptor: unknown prior shorthand {s!r}")


def _parse_float(arg: str, what: str) -> float:
    try:
        return float(arg)
    except ValueError as exc:
        raise PriorError(f"descriptor: bad {what} {arg!r}") from exc
