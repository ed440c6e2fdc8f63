import json

import numpy as np
import pytest

from tensorinfo import priors
from tensorinfo.priors import Prior, PriorError, construct_prior


class TestBuiltinFamilies:
    def test_rademacher_moments(self):
        p = priors.rademacher()
        assert p.kind == "discrete"
        assert p.mean == 0.0
        assert p.second_moment == 1.0
        assert p.support_bound == 1.0

    def test_sparse_rademacher_unit_second_moment(self):
        p = priors.sparse_rademacher(0.25)
        assert p.second_moment == pytest.approx(1.0, abs=1e-15)
        assert p.mean == 0.0
        assert p.support_bound == pytest.approx(2.0)
        assert len(p.atoms) == 3

    def test_sparse_rademacher_full_density_is_rademacher(self):
        assert priors.sparse_rademacher(1.0) == priors.rademacher()

    @pytest.mark.parametrize("s", [0.0, -0.1, 1.5, np.nan])
    def test_sparse_rademacher_bad_sparsity(self, s):
        with pytest.raises(PriorError, match="sparsity|s:"):
            priors.sparse_rademacher(s)

    def test_gaussian_moments(self):
        p = priors.gaussian(2.5)
        assert p.second_moment == 2.5
        assert p.mean == 0.0
        assert p.support_bound == np.inf

    @pytest.mark.parametrize("rho", [0.0, -1.0, np.inf, np.nan])
    def test_gaussian_bad_variance(self, rho):
        with pytest.raises(PriorError):
            priors.gaussian(rho)


class TestValidation:
    def test_empty_atoms(self):
        with pytest.raises(PriorError, match="empty"):
            Prior("discrete", atoms=())

    def test_duplicate_locations(self):
        with pytest.raises(PriorError, match="duplicate"):
            priors.discrete([(1.0, 0.5), (1.0, 0.5)])

    def test_negative_weight(self):
        with pytest.raises(PriorError, match="negative weight"):
            priors.discrete([(1.0, 1.5), (-1.0, -0.5)])

    def test_weights_must_sum_to_one(self):
        with pytest.raises(PriorError, match="sum"):
            priors.discrete([(1.0, 0.4), (-1.0, 0.4)])

    def test_support_bound_guard(self):
        with pytest.raises(PriorError, match="support bound"):
            priors.discrete([(2e3, 0.5), (-2e3, 0.5)])

    def test_unknown_kind(self):
        with pytest.raises(PriorError, match="kind"):
            Prior("poisson")

    def test_gaussian_takes_no_atoms(self):
        with pytest.raises(PriorError):
            Prior("gaussian", atoms=((1.0, 1.0),), variance=1.0)


class TestGaussianQuantization:
    def test_second_moment_matches_rho(self):
        for rho in (0.5, 1.0, 2.0):
            p = priors.gaussian_quantization(rho)
            assert p.second_moment == pytest.approx(rho, abs=1e-10)
            assert abs(p.mean) < 1e-12

    def test_weights_normalized(self):
        p = priors.gaussian_quantization(1.0)
        assert float(np.sum(p.weights)) == pytest.approx(1.0, abs=1e-14)

    def test_tail_cut_prunes_atoms(self):
        # tail_cut = 0 still drops weights that underflow to exactly 0
        full = priors.gaussian_quantization(1.0, tail_cut=0.0)
        cut = priors.gaussian_quantization(1.0)
        assert len(cut.atoms) < len(full.atoms) <= 2001

    def test_bad_arguments(self):
        with pytest.raises(PriorError):
            priors.gaussian_quantization(-1.0)
        with pytest.raises(PriorError):
            priors.gaussian_quantization(1.0, tail_cut=1e-3)


class TestConstructPrior:
    def test_shorthands(self):
        assert construct_prior("rademacher") == priors.rademacher()
        assert construct_prior("gaussian:2.0") == priors.gaussian(2.0)
        assert construct_prior("sparse_rademacher:0.25") == priors.sparse_rademacher(0.25)

    def test_descriptor_roundtrip(self):
        for p in (priors.rademacher(), priors.gaussian(1.5),
                  priors.sparse_rademacher(0.5)):
            assert construct_prior(p.descriptor()) == p

    def test_prior_passthrough(self):
        p = priors.rademacher()
        assert construct_prior(p) is p

    def test_file_descriptor(self, tmp_path):
        path = tmp_path / "prior.json"
        path.write_text(json.dumps(priors.rademacher().descriptor()))
        assert construct_prior(f"file:{path}") == priors.rademacher()

    def test_missing_file(self):
        with pytest.raises(PriorError, match="missing.json"):
            construct_prior("file:missing.json")

    def test_bad_shorthand(self):
        with pytest.raises(PriorError):
            construct_prior("cauchy")
        with pytest.raises(PriorError, match="variance"):
            construct_prior("gaussian:abc")

    def test_unsupported_type(self):
        with pytest.raises(PriorError):
            construct_prior(42)


class TestSampling:
    def test_discrete_sample_support(self):
        p = priors.sparse_rademacher(0.25)
        draws = p.sample(np.random.default_rng(0), size=1000)
        assert set(np.unique(draws)) <= set(p.locations)

    def test_deterministic_given_rng(self):
        p = priors.rademacher()
        a = p.sample(np.random.default_rng(7), size=100)
        b = p.sample(np.random.default_rng(7), size=100)
        np.testing.assert_array_equal(a, b)

    def test_gaussian_sample_moments(self):
        p = priors.gaussian(1.0)
        draws = p.sample(np.random.default_rng(1), size=200_000)
        assert np.mean(draws) == pytest.approx(0.0, abs=0.01)
        assert np.var(draws) == pytest.approx(1.0, abs=0.02)
