import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from windframe.errors import ConfigurationError, InvalidSpecError
from windframe.uncertainty import (
    RandomVariableSpec,
    Topology,
    default_catalog,
    moments_to_gamma,
    moments_to_lognormal,
    sample_realization,
    sample_variable,
    substream,
)


def make_topology():
    return Topology(sections=("W14X90", "W14X53"),
                    members={"c1": 4.0, "c2": 4.0, "b1": 5.66})


class TestMomentConversions:
    def test_degenerate_cov_limit(self):
        mu, sig = moments_to_lognormal(1.0, 1e-9)
        assert sig == pytest.approx(1e-9, rel=1e-3)
        assert mu == pytest.approx(0.0, abs=1e-15)

    def test_modulus_spec_values(self):
        mu, sig = moments_to_lognormal(200.0, 0.04)
        assert sig == pytest.approx(math.sqrt(math.log(1 + 0.04**2)), rel=1e-12)
        assert sig == pytest.approx(0.039984, abs=1e-6)
        assert mu == pytest.approx(math.log(200.0) - 0.000799, abs=1e-6)

    def test_high_cov_value(self):
        _, sig = moments_to_lognormal(0.01, 2.0)
        assert sig == pytest.approx(math.sqrt(math.log(5.0)), rel=1e-12)
        assert sig == pytest.approx(1.26864, abs=1e-5)

    def test_lognormal_moments_recovered_by_sampling(self):
        mu, sig = moments_to_lognormal(200.0, 0.04)
        rng = np.random.default_rng(11)
        draws = rng.lognormal(mu, sig, size=10**6)
        assert draws.mean() == pytest.approx(200.0, rel=0.005)
        assert draws.std() / draws.mean() == pytest.approx(0.04, rel=0.005)

    def test_invalid_inputs_raise(self):
        with pytest.raises(InvalidSpecError):
            moments_to_lognormal(-1.0, 0.1)
        with pytest.raises(InvalidSpecError):
            moments_to_lognormal(1.0, 0.0)

    def test_gamma_moment_matching(self):
        shape, scale = moments_to_gamma(0.24, 0.6)
        assert shape == pytest.approx(1 / 0.36, rel=1e-12)
        assert shape * scale == pytest.approx(0.24, rel=1e-12)
        rng = np.random.default_rng(5)
        draws = rng.gamma(shape, scale, size=200_000)
        assert draws.mean() == pytest.approx(0.24, rel=0.01)
        assert draws.std() / draws.mean() == pytest.approx(0.6, rel=0.02)

    @given(mean=st.floats(0.001, 1e6), cov=st.floats(0.001, 3.0))
    def test_lognormal_roundtrip_property(self, mean, cov):
        mu, sig = moments_to_lognormal(mean, cov)
        m = math.exp(mu + sig**2 / 2)
        v = (math.exp(sig**2) - 1) * math.exp(2 * mu + sig**2)
        assert m == pytest.approx(mean, rel=1e-9)
        assert math.sqrt(v) / m == pytest.approx(cov, rel=1e-9)


class TestSpecValidation:
    def test_truncated_normal_needs_ordered_bounds(self):
        with pytest.raises(InvalidSpecError):
            RandomVariableSpec("x", "truncated-normal", 1.0, 0.1,
                               lower_bound=2.0, upper_bound=1.0)

    def test_lognormal_needs_positive_mean(self):
        with pytest.raises(InvalidSpecError):
            RandomVariableSpec("x", "lognormal", -5.0, 0.1)

    def test_cov_must_be_positive(self):
        with pytest.raises(InvalidSpecError):
            RandomVariableSpec("x", "normal", 1.0, 0.0)


class TestSampling:
    def test_damping_ratio_moments(self):
        spec = default_catalog()["zeta"]
        rng = np.random.default_rng(42)
        draws = sample_variable(spec, rng, size=10**6)
        assert draws.mean() == pytest.approx(0.015, rel=0.005)
        assert draws.std() / draws.mean() == pytest.approx(0.4, rel=0.01)

    def test_r0_always_inside_bounds(self):
        spec = default_catalog()["R0"]
        rng = np.random.default_rng(3)
        draws = sample_variable(spec, rng, size=10**5)
        assert np.all(draws >= 15.0)
        assert np.all(draws <= 25.0)

    def test_wind_factors_positive(self):
        rng = np.random.default_rng(7)
        for name in ("w1", "w2", "w3"):
            draws = sample_variable(default_catalog()[name], rng, size=10**5)
            assert np.all(draws > 0)

    def test_determinism_same_seed(self):
        cat = default_catalog()
        a = sample_variable(cat["D"], np.random.default_rng(123))
        b = sample_variable(cat["D"], np.random.default_rng(123))
        assert a == b

    def test_realization_determinism(self):
        cat = default_catalog()
        topo = make_topology()
        r1 = sample_realization(cat, topo, 16, substream(99, 4))
        r2 = sample_realization(cat, topo, 16, substream(99, 4))
        assert r1.dead_factor == r2.dead_factor
        assert r1.materials == r2.materials
        assert r1.camber == r2.camber
        assert np.array_equal(r1.phases, r2.phases)

    def test_materials_shared_within_section_independent_across(self):
        cat = default_catalog()
        topo = make_topology()
        r = sample_realization(cat, topo, 4, substream(1, 0))
        assert set(r.materials) == {"W14X90", "W14X53"}
        assert r.materials["W14X90"].E != r.materials["W14X53"].E
        assert 15.0 <= r.materials["W14X90"].R0 <= 25.0

    def test_camber_per_member_and_scaled_by_length(self):
        cat = default_catalog()
        topo = make_topology()
        rng = np.random.default_rng(0)
        magnitudes = []
        for k in range(400):
            r = sample_realization(cat, topo, 1, substream(10, k))
            magnitudes.append(abs(r.camber["b1"]))
        # mean magnitude of |N(mu, 0.77 mu)| for mu = 0.000556 * 5.66
        mu = 0.000556 * 5.66
        assert np.mean(magnitudes) == pytest.approx(mu * 1.117, rel=0.15)

    def test_camber_signs_both_occur(self):
        cat = default_catalog()
        topo = make_topology()
        signs = {math.copysign(1, sample_realization(cat, topo, 1, substream(8, k)).camber["c1"])
                 for k in range(50)}
        assert signs == {-1.0, 1.0}

    def test_missing_catalog_entry_raises(self):
        cat = default_catalog()
        del cat["zeta"]
        with pytest.raises(ConfigurationError):
            sample_realization(cat, make_topology(), 4, substream(0, 0))

    def test_phase_vector_length_and_range(self):
        r = sample_realization(default_catalog(), make_topology(), 40, substream(2, 2))
        assert r.phases.shape == (40,)
        assert np.all((r.phases >= 0) & (r.phases < 2 * math.pi))

    def test_phase_streams_independent_across_seeds(self):
        # lag-1 circular correlation between phase vectors from different seeds
        n_pairs, n_phases = 10_000, 8
        acc = 0.0 + 0.0j
        count = 0
        for k in range(n_pairs):
            a = substream(1, k).uniform(0, 2 * math.pi, n_phases)
            b = substream(2, k).uniform(0, 2 * math.pi, n_phases)
            acc += np.exp(1j * (a - b)).sum()
            count += n_phases
        assert abs(acc / count) < 0.01

    def test_audit_dump_roundtrips_as_json(self):
        import json
        r = sample_realization(default_catalog(), make_topology(), 4, substream(3, 3))
        payload = json.loads(r.to_text())
        assert payload["damping_ratio"] == r.damping_ratio
        assert len(payload["phases"]) == 4


@settings(max_examples=30)
@given(mean=st.floats(0.01, 100), cov=st.floats(0.05, 1.5), seed=st.integers(0, 2**31))
def test_lognormal_sampling_matches_target_moments(mean, cov, seed):
    spec = RandomVariableSpec("x", "lognormal", mean, cov)
    draws = sample_variable(spec, np.random.default_rng(seed), size=100_000)
    n = len(draws)
    se_mean = mean * cov / math.sqrt(n)
    assert abs(draws.mean() - mean) < 5 * se_mean
