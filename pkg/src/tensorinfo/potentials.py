"""Replica-symmetric potentials and free-energy/mutual-information conversion.

Order 2:   f_pot2(mu, mv) = (lam/2) au av mu mv
                            + au f_u(lam av mv) + av f_v(lam au mu)
Order 3:   f_pot3(mu, mv, mw) = lam au av aw mu mv mw
                            + au f_u(lam av aw mv mw)
                            + av f_v(lam au aw mu mw)
                            + aw f_w(lam au av mu mv)
Auxiliary: f_aux3(mw, muv) = (lam/2) au av aw muv mw
                            + aw f_w(lam au av muv)
                            + inf_mu sup_mv f_pot2(mu, mv; lam aw mw)

where f_* are the scalar-channel free energies. The trilinear term of
f_pot3 carries coefficient lam, not lam/2; the auxiliary/order-3
agreement checked in the solvers guards that asymmetry.

Mutual information per n is the free energy plus (lam/2) prod(alpha) prod(rho).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache

import numpy as np

from .priors import Prior, construct_prior
from .scalar_channel import DomainError, QuadratureConfig, ScalarChannel

_BOX_TOL = 1e-9


@dataclass(frozen=True)
class ModelParams:
    """Model order, snr, aspect ratios and per-factor priors."""

    order: int
    lam: float
    alphas: tuple[float, ...]
    priors: tuple[Prior, ...]
    quad: QuadratureConfig = field(default_factory=QuadratureConfig)

    def __post_init__(self):
        if self.order not in (2, 3):
            raise ValueError(f"order must be 2 or 3, got {self.order}")
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")
        if len(self.alphas) != self.order or len(self.priors) != self.order:
            raise ValueError(
                f"order {self.order} needs {self.order} alphas and priors, got "
                f"{len(self.alphas)} and {len(self.priors)}")
        if any(a <= 0 or not np.isfinite(a) for a in self.alphas):
            raise ValueError(f"alphas must be positive, got {self.alphas}")

    @cached_property
    def channels(self) -> tuple[ScalarChannel, ...]:
        return tuple(ScalarChannel(p, self.quad) for p in self.priors)

    @property
    def rhos(self) -> tuple[float, ...]:
        return tuple(p.second_moment for p in self.priors)

    def with_lambda(self, lam: float) -> "ModelParams":
        return replace(self, lam=lam)

    def inner_matrix_params(self, lam_eff: float) -> "ModelParams":
        """Order-2 sub-model over the first two factors at an effective snr."""
        if self.order != 3:
            raise ValueError("inner matrix model only exists for order 3")
        return ModelParams(order=2, lam=lam_eff, alphas=self.alphas[:2],
                           priors=self.priors[:2], quad=self.quad)


def make_params(order, lam, priors, alphas=None,
                quad: QuadratureConfig | None = None) -> ModelParams:
    """Convenience constructor accepting prior descriptors and default alphas."""
    pr = tuple(construct_prior(p) for p in priors)
    al = tuple(float(a) for a in alphas) if alphas is not None else (1.0,) * order
    return ModelParams(order=order, lam=float(lam), alphas=al, priors=pr,
                       quad=quad or QuadratureConfig())


def _check_box(name: str, value: float, hi: float):
    if not np.isfinite(value) or value < -_BOX_TOL or value > hi + _BOX_TOL:
        raise DomainError(f"{name} = {value} outside [0, {hi}]")
    return min(max(value, 0.0), hi)


def f_pot2(p: ModelParams, m_u: float, m_v: float) -> float:
    """Order-2 potential at trial overlaps (m_u, m_v)."""
    ru, rv = p.rhos
    m_u = _check_box("m_u", m_u, ru)
    m_v = _check_box("m_v", m_v, rv)
    au, av = p.alphas
    ch_u, ch_v = p.channels
    return (0.5 * p.lam * au * av * m_u * m_v
            + au * ch_u.free_energy(p.lam * av * m_v)
            + av * ch_v.free_energy(p.lam * au * m_u))


def f_pot3(p: ModelParams, m_u: float, m_v: float, m_w: float) -> float:
    """Order-3 potential; trilinear coefficient is lam, as printed."""
    ru, rv, rw = p.rhos
    m_u = _check_box("m_u", m_u, ru)
    m_v = _check_box("m_v", m_v, rv)
    m_w = _check_box("m_w", m_w, rw)
    au, av, aw = p.alphas
    ch_u, ch_v, ch_w = p.channels
    return (p.lam * au * av * aw * m_u * m_v * m_w
            + au * ch_u.free_energy(p.lam * av * aw * m_v * m_w)
            + av * ch_v.free_energy(p.lam * au * aw * m_u * m_w)
            + aw * ch_w.free_energy(p.lam * au * av * m_u * m_v))


def f_aux3(p: ModelParams, m_w: float, m_uv: float, cfg=None) -> float:
    """Auxiliary order-3 potential; inner inf-sup solved by the solvers.

    The inner term depends on m_w only through the effective snr
    lam * alpha_w * m_w; values are cached per ModelParams keyed by it.
    """
    ru, rv, rw = p.rhos
    m_w = _check_box("m_w", m_w, rw)
    m_uv = _check_box("m_uv", m_uv, ru * rv)
    au, av, aw = p.alphas
    ch_w = p.channels[2]
    inner = _inner_infsup_cached(p, p.lam * aw * m_w, cfg)
    return (0.5 * p.lam * au * av * aw * m_uv * m_w
            + aw * ch_w.free_energy(p.lam * au * av * m_uv)
            + inner)


@lru_cache(maxsize=8192)
def _inner_infsup_cached(p: ModelParams, lam_eff: float, cfg) -> float:
    from .solvers import SolverConfig, inf_sup2  # deferred: solvers import us

    sub = p.inner_matrix_params(lam_eff)
    return inf_sup2(sub, cfg or SolverConfig()).free_energy


def mutual_info_from_f(p: ModelParams, f: float) -> float:
    """Mutual information per n from the free energy."""
    if not np.isfinite(f):
        raise DomainError(f"free energy must be finite, got {f}")
    const = 0.5 * p.lam * np.prod(p.alphas) * np.prod(p.rhos)
    return f + float(const)
