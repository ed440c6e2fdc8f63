"""State-evolution fixed points, variational free energies, thresholds.

The critical points of the replica-symmetric potential coincide with the
fixed points of the state-evolution map

    order 2:  m_u <- q_u(lam a_v m_v),          m_v <- q_v(lam a_u m_u)
    order 3:  m_u <- q_u(lam a_v a_w m_v m_w),  (cyclically)

where q is the scalar-channel overlap. The asymptotic free energy is the
infimum of the potential over that set; it equals the inf-sup of the
potential (order 2) and the inf-sup of the auxiliary potential (order 3),
which this module also evaluates as independent routes.

Enumeration runs a damped iteration from a multi-start grid; starts that
fail to converge are handed to a Newton-type root finder so that
iteration-unstable critical points (the middle branch near first-order
transitions) are captured as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from .potentials import ModelParams, f_aux3, f_pot2, f_pot3, mutual_info_from_f

# Nontriviality threshold for branch classification and transition search.
DELTA_NONTRIVIAL = 1e-6
# Minimizer jump separating first-order from continuous transitions.
DELTA_JUMP = 1e-3


class SolverError(RuntimeError):
    """Fixed-point enumeration or variational optimization failed."""

    def __init__(self, message: str, worst_residual: float = np.nan):
        super().__init__(message)
        self.worst_residual = worst_residual


@dataclass(frozen=True)
class SolverConfig:
    damping: float = 0.0
    tol: float = 1e-10
    max_iter: int = 200_000
    init_grid: int = 9
    dedup_tol: float = 1e-7
    grid_refine_levels: int = 6
    outer_grid: int = 129          # base grid for the outer inf

    def __post_init__(self):
        if not (0 <= self.damping < 1):
            raise ValueError(f"damping must lie in [0, 1), got {self.damping}")
        if not self.tol < self.dedup_tol:
            raise ValueError("tol must be smaller than dedup_tol")


@dataclass(frozen=True)
class CriticalPoint:
    point: tuple[float, ...]
    potential: float
    residual: float
    basin: str                     # informative | uninformative | other


@dataclass(frozen=True)
class CriticalPointSet:
    points: tuple[CriticalPoint, ...]

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def nontrivial(self, delta: float = DELTA_NONTRIVIAL):
        return [cp for cp in self.points if max(cp.point) > delta]


@dataclass(frozen=True)
class RSResult:
    free_energy: float
    mutual_info_per_n: float
    minimizer: tuple[float, ...]
    branch: str
    method: str                    # gamma-inf | inf-sup | aux-inf-sup
    gamma_count: int = 0
    tie: bool = False


@dataclass(frozen=True)
class ThresholdResult:
    found: bool
    lambda_opt: float = np.nan
    kind: str = ""                 # continuous | first-order
    lambda_emergence: float = np.nan


# -- state-evolution maps --------------------------------------------------

def se_step2(p: ModelParams, point) -> tuple[float, float]:
    m_u, m_v = point
    au, av = p.alphas
    ch_u, ch_v = p.channels
    return (ch_u.overlap(p.lam * av * max(m_v, 0.0)),
            ch_v.overlap(p.lam * au * max(m_u, 0.0)))


def se_step3(p: ModelParams, point) -> tuple[float, float, float]:
    m_u, m_v, m_w = (max(c, 0.0) for c in point)
    au, av, aw = p.alphas
    ch_u, ch_v, ch_w = p.channels
    return (ch_u.overlap(p.lam * av * aw * m_v * m_w),
            ch_v.overlap(p.lam * au * aw * m_u * m_w),
            ch_w.overlap(p.lam * au * av * m_u * m_v))


def _se_step(p: ModelParams, point):
    return se_step2(p, point) if p.order == 2 else se_step3(p, point)


def _potential(p: ModelParams, point) -> float:
    return f_pot2(p, *point) if p.order == 2 else f_pot3(p, *point)


def _residual(p: ModelParams, point) -> float:
    step = _se_step(p, point)
    return max(abs(s - m) for s, m in zip(step, point))


# -- fixed-point enumeration -----------------------------------------------

def _iterate(p: ModelParams, start, cfg: SolverConfig):
    """Damped iteration; returns (point, residual, converged)."""
    m = tuple(start)
    theta = cfg.damping
    res = np.inf
    prev = None
    window_res = np.inf
    for it in range(cfg.max_iter):
        step = _se_step(p, m)
        res = max(abs(s - c) for s, c in zip(step, m))
        if res <= cfg.tol:
            return step, res, True
        # undamped iteration can fall into a period-2 cycle (e.g. starts on
        # a coordinate axis); bail out so the root polish can take over
        if prev is not None and max(
                abs(s - c) for s, c in zip(step, prev)) <= cfg.tol:
            return m, res, False
        # stalled contraction (tangent roots converge only algebraically):
        # hand over to the root polish instead of exhausting max_iter
        if it % 500 == 499:
            if res > 0.5 * window_res:
                return m, res, False
            window_res = res
        prev = m
        m = tuple((1 - theta) * s + theta * c for s, c in zip(step, m))
    return m, res, False


def _polish_root(p: ModelParams, start, rhos, cfg: SolverConfig):
    """Newton-type solve of se_step(m) - m = 0; returns point or None."""

    def g(m):
        if not np.all(np.isfinite(m)):
            return np.full(len(m), 1e6)
        clipped = np.clip(m, 0.0, rhos)
        return np.asarray(_se_step(p, clipped)) - m

    sol = optimize.root(g, np.asarray(start, dtype=float), method="hybr",
                        options={"xtol": 1e-13})
    m = np.clip(sol.x, 0.0, rhos)
    if _residual(p, tuple(m)) <= cfg.tol:
        return tuple(float(c) for c in m)
    return None


def _label_basins(points):
    """uninformative = near zero; informative = largest first coordinate."""
    labels = ["other"] * len(points)
    best = -1
    best_mu = -np.inf
    for i, (pt, _res) in enumerate(points):
        if max(pt) <= DELTA_NONTRIVIAL:
            labels[i] = "uninformative"
        elif pt[0] > best_mu:
            best_mu, best = pt[0], i
    if best >= 0:
        labels[best] = "informative"
    return labels


def enumerate_gamma(p: ModelParams, cfg: SolverConfig | None = None) -> CriticalPointSet:
    """All located state-evolution fixed points, deduplicated and verified."""
    cfg = cfg or SolverConfig()
    rhos = np.asarray(p.rhos)
    axes = [np.linspace(0.0, r, cfg.init_grid) for r in p.rhos]
    starts = [tuple(float(c) for c in pt)
              for pt in np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, p.order)]

    found = []
    worst = 0.0
    for start in starts:
        pt, res, ok = _iterate(p, start, cfg)
        if ok:
            found.append(tuple(min(max(c, 0.0), r) for c, r in zip(pt, p.rhos)))
        else:
            worst = max(worst, res)
        # polish from the raw start as well: iteration is repelled from
        # unstable (middle-branch) roots that the root solver still reaches
        polished = _polish_root(p, start, rhos, cfg)
        if polished is not None:
            found.append(polished)

    if not found:
        raise SolverError(
            f"no initialization converged within {cfg.max_iter} iterations "
            f"(worst residual {worst:.3e})", worst_residual=worst)

    # dedup in max-norm, keeping the representative with smallest residual
    unique: list[tuple[tuple, float]] = []
    for pt in sorted(found):
        res = _residual(p, pt)          # independent re-verification
        if res > cfg.dedup_tol:
            continue
        for j, (qt, qres) in enumerate(unique):
            if max(abs(a - b) for a, b in zip(pt, qt)) < cfg.dedup_tol:
                if res < qres:
                    unique[j] = (pt, res)
                break
        else:
            unique.append((pt, res))

    if not unique:
        raise SolverError("all converged points failed residual verification",
                          worst_residual=worst)

    labels = _label_basins(unique)
    cps = tuple(CriticalPoint(pt, _potential(p, pt), res, lab)
                for (pt, res), lab in zip(unique, labels))
    return CriticalPointSet(points=cps)


def enumerate_gamma2(p: ModelParams, cfg: SolverConfig | None = None) -> CriticalPointSet:
    if p.order != 2:
        raise ValueError("enumerate_gamma2 requires an order-2 model")
    return enumerate_gamma(p, cfg)


def enumerate_gamma3(p: ModelParams, cfg: SolverConfig | None = None) -> CriticalPointSet:
    if p.order != 3:
        raise ValueError("enumerate_gamma3 requires an order-3 model")
    return enumerate_gamma(p, cfg)


def _gamma_inf(p: ModelParams, cfg: SolverConfig, method: str) -> RSResult:
    gamma = enumerate_gamma(p, cfg)
    best = min(cp.potential for cp in gamma)
    tie_tol = 1e-12 * max(1.0, abs(best))
    candidates = [cp for cp in gamma if cp.potential <= best + tie_tol]
    # deterministic tie-break toward the informative branch (larger m_u)
    winner = max(candidates, key=lambda cp: cp.point[0])
    return RSResult(
        free_energy=winner.potential,
        mutual_info_per_n=mutual_info_from_f(p, winner.potential),
        minimizer=winner.point,
        branch=winner.basin,
        method=method,
        gamma_count=len(gamma),
        tie=len(candidates) > 1)


def rs_free_energy2(p: ModelParams, cfg: SolverConfig | None = None) -> RSResult:
    """Theorem-route free energy: inf of the order-2 potential over Gamma_2."""
    if p.order != 2:
        raise ValueError("rs_free_energy2 requires an order-2 model")
    return _gamma_inf(p, cfg or SolverConfig(), "gamma-inf")


def rs_free_energy3(p: ModelParams, cfg: SolverConfig | None = None) -> RSResult:
    """Theorem-route free energy: inf of the order-3 potential over Gamma_3."""
    if p.order != 3:
        raise ValueError("rs_free_energy3 requires an order-3 model")
    return _gamma_inf(p, cfg or SolverConfig(), "gamma-inf")


# -- inf-sup routes --------------------------------------------------------

def _refined_min(F, lo: float, hi: float, n: int, levels: int):
    """Global min of F on [lo, hi]: grid scan + dyadic refinement.

    Refines around every sampled local minimum; F may have two competing
    wells near first-order transitions.
    """
    xs = np.linspace(lo, hi, n)
    vals = np.array([F(x) for x in xs])
    pads = np.concatenate(([np.inf], vals, [np.inf]))
    is_min = (vals <= pads[:-2]) & (vals <= pads[2:])
    best_x, best_v = None, np.inf
    for i in np.nonzero(is_min)[0]:
        a = xs[max(i - 1, 0)]
        b = xs[min(i + 1, n - 1)]
        x, v = xs[i], vals[i]
        for _ in range(levels):
            sub = np.linspace(a, b, 9)
            sv = np.array([F(s) for s in sub])
            j = int(np.argmin(sv))
            if sv[j] < v:
                x, v = sub[j], sv[j]
            a = sub[max(j - 1, 0)]
            b = sub[min(j + 1, 8)]
        if v < best_v:
            best_x, best_v = x, v
    return best_x, best_v


def _sup_mv(p: ModelParams, m_u: float):
    """argmax over m_v of the order-2 potential at fixed m_u.

    The potential is concave in m_v with derivative proportional to
    m_u - q_u(lam a_v m_v); the sup is the clamped root.
    """
    au, av = p.alphas
    rv = p.rhos[1]
    ch_u = p.channels[0]
    if p.lam == 0.0:
        return 0.0

    def h(m_v):
        return ch_u.overlap(p.lam * av * m_v) - m_u

    if h(rv) <= 0.0:
        return rv
    if h(0.0) >= 0.0:
        return 0.0
    # the sup is a smooth maximum: value error is second order in the
    # argument error, so a loose xtol loses nothing measurable
    return optimize.brentq(h, 0.0, rv, xtol=1e-9)


def inf_sup2(p: ModelParams, cfg: SolverConfig | None = None) -> RSResult:
    """Variational route: inf over m_u of sup over m_v of the potential."""
    if p.order != 2:
        raise ValueError("inf_sup2 requires an order-2 model")
    cfg = cfg or SolverConfig()
    ru = p.rhos[0]

    if p.lam == 0.0:
        return RSResult(0.0, mutual_info_from_f(p, 0.0), (0.0, 0.0),
                        "uninformative", "inf-sup")

    def F(m_u):
        return f_pot2(p, m_u, _sup_mv(p, m_u))

    m_u, value = _refined_min(F, 0.0, ru, cfg.outer_grid, cfg.grid_refine_levels)
    if m_u is None:
        raise SolverError("outer inf scan found no minimum")
    m_v = _sup_mv(p, m_u)
    branch = "uninformative" if max(m_u, m_v) <= DELTA_NONTRIVIAL else "informative"
    return RSResult(value, mutual_info_from_f(p, value), (m_u, m_v),
                    branch, "inf-sup")


def _sup_muv(p: ModelParams, m_w: float):
    """argmax over m_uv of the auxiliary potential at fixed m_w."""
    au, av, aw = p.alphas
    ru, rv, _ = p.rhos
    hi = ru * rv
    ch_w = p.channels[2]
    if p.lam == 0.0:
        return 0.0

    def h(m_uv):
        return ch_w.overlap(p.lam * au * av * m_uv) - m_w

    if h(hi) <= 0.0:
        return hi
    if h(0.0) >= 0.0:
        return 0.0
    return optimize.brentq(h, 0.0, hi, xtol=1e-9)


def inf_sup_aux3(p: ModelParams, cfg: SolverConfig | None = None) -> RSResult:
    """Auxiliary route: inf over m_w of sup over m_uv of f_aux3."""
    if p.order != 3:
        raise ValueError("inf_sup_aux3 requires an order-3 model")
    cfg = cfg or SolverConfig()
    rw = p.rhos[2]

    if p.lam == 0.0:
        return RSResult(0.0, mutual_info_from_f(p, 0.0), (0.0, 0.0),
                        "uninformative", "aux-inf-sup")

    def F(m_w):
        return f_aux3(p, m_w, _sup_muv(p, m_w), cfg)

    m_w, value = _refined_min(F, 0.0, rw, max(65, cfg.outer_grid // 2),
                              cfg.grid_refine_levels)
    if m_w is None:
        raise SolverError("outer inf scan found no minimum")
    m_uv = _sup_muv(p, m_w)
    branch = "uninformative" if max(m_w, m_uv) <= DELTA_NONTRIVIAL else "informative"
    return RSResult(value, mutual_info_from_f(p, value), (m_w, m_uv),
                    branch, "aux-inf-sup")


def rs_free_energy(p: ModelParams, cfg: SolverConfig | None = None) -> RSResult:
    return rs_free_energy2(p, cfg) if p.order == 2 else rs_free_energy3(p, cfg)


# -- threshold localization ------------------------------------------------

def _bisect_predicate(pred, lo: float, hi: float, width: float) -> float:
    """Smallest x in (lo, hi] with pred(x) true, assuming pred monotone."""
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def find_lambda_opt(p: ModelParams, lam_lo: float, lam_hi: float,
                    cfg: SolverConfig | None = None,
                    width: float = 1e-4) -> ThresholdResult:
    """Locate the information-theoretic threshold and the spinodal.

    lambda_emergence: smallest snr with any nontrivial critical point.
    lambda_opt: smallest snr whose global potential minimizer is nontrivial.
    kind: first-order if the minimizer jumps by more than DELTA_JUMP across
    lambda_opt, else continuous.
    """
    if not lam_lo < lam_hi:
        raise ValueError("need lam_lo < lam_hi")
    cfg = cfg or SolverConfig()
    # cheap enumeration settings: transitions only need the extreme basins,
    # and near-critical convergence is slow
    tcfg = replace(cfg, init_grid=min(cfg.init_grid, 3),
                   max_iter=max(cfg.max_iter, 1_000_000))

    def has_nontrivial(lam):
        return len(enumerate_gamma(p.with_lambda(lam), tcfg).nontrivial()) > 0

    def minimizer_nontrivial(lam):
        r = _gamma_inf(p.with_lambda(lam), tcfg, "gamma-inf")
        return max(r.minimizer) > DELTA_NONTRIVIAL

    if not minimizer_nontrivial(lam_hi) or minimizer_nontrivial(lam_lo):
        return ThresholdResult(found=False)

    if has_nontrivial(lam_lo):
        lam_emergence = lam_lo
    else:
        lam_emergence = _bisect_predicate(has_nontrivial, lam_lo, lam_hi, width)
    lam_opt = _bisect_predicate(minimizer_nontrivial, max(lam_lo, lam_emergence - width),
                                lam_hi, width)

    below = _gamma_inf(p.with_lambda(lam_opt - 5 * width), tcfg, "gamma-inf")
    above = _gamma_inf(p.with_lambda(lam_opt + 5 * width), tcfg, "gamma-inf")
    jump = max(abs(a - b) for a, b in zip(above.minimizer, below.minimizer))
    kind = "first-order" if jump > DELTA_JUMP else "continuous"
    return ThresholdResult(found=True, lambda_opt=lam_opt, kind=kind,
                           lambda_emergence=lam_emergence)
