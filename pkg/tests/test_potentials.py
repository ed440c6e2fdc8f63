import numpy as np
import pytest

from tensorinfo import potentials, priors
from tensorinfo.potentials import (ModelParams, f_aux3, f_pot2, f_pot3,
                                   make_params, mutual_info_from_f)
from tensorinfo.scalar_channel import DomainError, ScalarChannel

# f_pot3 for gaussian^3 at lambda = 4, m = (1/2, 1/2, 1/2):
# 4/8 + 3 (0.5 ln 2 - 0.5) computed independently
F_POT3_GAUSS_HALF = 0.03972077083991793


class TestMakeParams:
    def test_defaults(self):
        p = make_params(2, 1.5, ["rademacher", "gaussian:1.0"])
        assert p.alphas == (1.0, 1.0)
        assert p.rhos == (1.0, 1.0)
        assert len(p.channels) == 2

    def test_with_lambda(self):
        p = make_params(2, 1.0, ["rademacher"] * 2)
        q = p.with_lambda(3.0)
        assert q.lam == 3.0 and q.priors == p.priors

    def test_inner_matrix_params(self):
        p3 = make_params(3, 6.0, ["rademacher"] * 3, alphas=[1.0, 2.0, 3.0])
        sub = p3.inner_matrix_params(1.25)
        assert sub.order == 2
        assert sub.lam == 1.25
        assert sub.alphas == (1.0, 2.0)

    def test_inner_matrix_requires_order3(self):
        p2 = make_params(2, 1.0, ["rademacher"] * 2)
        with pytest.raises(ValueError):
            p2.inner_matrix_params(1.0)

    @pytest.mark.parametrize("kwargs", [
        dict(order=4, lam=1.0, alphas=(1.0,) * 4, priors=(priors.rademacher(),) * 4),
        dict(order=2, lam=-1.0, alphas=(1.0, 1.0), priors=(priors.rademacher(),) * 2),
        dict(order=2, lam=np.nan, alphas=(1.0, 1.0), priors=(priors.rademacher(),) * 2),
        dict(order=2, lam=1.0, alphas=(1.0,), priors=(priors.rademacher(),) * 2),
        dict(order=2, lam=1.0, alphas=(1.0, -2.0), priors=(priors.rademacher(),) * 2),
    ])
    def test_invalid_params(self, kwargs):
        with pytest.raises(ValueError):
            ModelParams(**kwargs)


class TestOrder2Potential:
    def test_zero_point(self):
        p = make_params(2, 2.0, ["rademacher"] * 2)
        assert f_pot2(p, 0.0, 0.0) == 0.0

    def test_against_direct_recomputation(self):
        p = make_params(2, 2.0, ["rademacher", "sparse_rademacher:0.25"],
                        alphas=[1.0, 1.5])
        ch_u = ScalarChannel(p.priors[0])
        ch_v = ScalarChannel(p.priors[1])
        m_u, m_v = 0.3, 0.6
        expected = (0.5 * 2.0 * 1.0 * 1.5 * m_u * m_v
                    + 1.0 * ch_u.free_energy(2.0 * 1.5 * m_v)
                    + 1.5 * ch_v.free_energy(2.0 * 1.0 * m_u))
        assert f_pot2(p, m_u, m_v) == pytest.approx(expected, abs=1e-14)

    def test_box_violation(self):
        p = make_params(2, 2.0, ["rademacher"] * 2)
        with pytest.raises(DomainError):
            f_pot2(p, 1.5, 0.5)
        with pytest.raises(DomainError):
            f_pot2(p, -0.5, 0.5)

    def test_box_edge_tolerated(self):
        p = make_params(2, 2.0, ["rademacher"] * 2)
        assert np.isfinite(f_pot2(p, 1.0 + 1e-12, 1.0))


class TestOrder3Potential:
    def test_trilinear_coefficient_is_lambda(self):
        # the coefficient asymmetry vs order 2 (lam, not lam/2) pinned to
        # an independently computed gaussian value
        p = make_params(3, 4.0, ["gaussian:1.0"] * 3)
        assert f_pot3(p, 0.5, 0.5, 0.5) == pytest.approx(F_POT3_GAUSS_HALF,
                                                         abs=1e-13)

    def test_against_direct_recomputation(self):
        p = make_params(3, 3.0, ["rademacher"] * 3, alphas=[1.0, 2.0, 0.5])
        ch = [ScalarChannel(pr) for pr in p.priors]
        au, av, aw = p.alphas
        mu, mv, mw = 0.2, 0.5, 0.8
        expected = (3.0 * au * av * aw * mu * mv * mw
                    + au * ch[0].free_energy(3.0 * av * aw * mv * mw)
                    + av * ch[1].free_energy(3.0 * au * aw * mu * mw)
                    + aw * ch[2].free_energy(3.0 * au * av * mu * mv))
        assert f_pot3(p, mu, mv, mw) == pytest.approx(expected, abs=1e-14)

    def test_zero_point(self):
        p = make_params(3, 4.0, ["rademacher"] * 3)
        assert f_pot3(p, 0.0, 0.0, 0.0) == 0.0


class TestAuxiliaryPotential:
    def test_matches_full_potential_at_consistent_point(self):
        # at lambda = 4, gaussian^3, (m_w, m_uv) = (1/2, 1/4) the inner
        # inf-sup saturates at m_u = m_v = 1/2 and f_aux3 equals f_pot3
        # at (1/2, 1/2, 1/2); value computed independently
        p = make_params(3, 4.0, ["gaussian:1.0"] * 3)
        assert f_aux3(p, 0.5, 0.25) == pytest.approx(F_POT3_GAUSS_HALF, abs=1e-9)

    def test_zero_point(self):
        p = make_params(3, 4.0, ["rademacher"] * 3)
        assert f_aux3(p, 0.0, 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_box_violation(self):
        p = make_params(3, 4.0, ["rademacher"] * 3)
        with pytest.raises(DomainError):
            f_aux3(p, 1.5, 0.5)
        with pytest.raises(DomainError):
            f_aux3(p, 0.5, 1.5)


class TestMutualInfo:
    def test_offset_constant(self):
        p = make_params(2, 3.0, ["rademacher"] * 2, alphas=[1.0, 2.0])
        assert mutual_info_from_f(p, 0.0) == pytest.approx(0.5 * 3.0 * 2.0,
                                                           abs=1e-14)

    def test_rejects_non_finite(self):
        p = make_params(2, 1.0, ["rademacher"] * 2)
        with pytest.raises(DomainError):
            mutual_info_from_f(p, np.inf)
