import math

import numpy as np
import pytest

from windframe.errors import InputError
from windframe.windsim import (
    TWO_PI,
    EnvelopeSpec,
    LoadEnsemble,
    SpectralLoadModel,
    SyntheticSpectrumSpec,
    apply_model_uncertainty,
    build_synthetic_catalog,
    estimate_xpsd,
    evaluate_series,
    model_from_xpsd,
    pod_decompose,
    read_ensemble_binary,
    read_ensemble_text,
    reconstruct_xpsd,
    scale_to_site,
    simulate_loads,
    synthetic_xpsd,
    torsion_to_frame_forces,
    write_ensemble_binary,
)


def noise_ensemble(n_ch=2, n=2**15, dt=0.05, seed=0, identical=False):
    rng = np.random.default_rng(seed)
    x = rng.normal(0, 1, size=(n_ch, n))
    if identical:
        x = np.tile(x[:1], (n_ch, 1))
    return LoadEnsemble(mean=np.zeros(n_ch), fluctuations=x, dt=dt, reference_speed=10.0)


def single_line_model(mean=3.0, d_omega=0.5, lam_domega=0.25):
    # one mode, fluctuation on the single line omega_1 = d_omega
    lam = np.array([[0.0], [lam_domega / d_omega]])
    psi = np.ones((2, 1, 1), dtype=complex)
    return SpectralLoadModel(d_omega=d_omega, eigenvalues=lam, eigenvectors=psi,
                             mean_loads=np.array([mean]), reference_speed=20.0)


class TestXpsdEstimation:
    def test_white_noise_parseval(self):
        ens = noise_ensemble(n_ch=1, n=2**16, seed=1)
        omega, s = estimate_xpsd(ens, segment_length=1024)
        var = np.trapezoid(s[:, 0, 0].real, omega)
        assert var == pytest.approx(1.0, rel=0.10)
        # flat within broad tolerance over the interior band
        interior = s[10:-10, 0, 0].real
        assert interior.max() < 3.0 * interior.mean()

    def test_identical_channels_unit_coherence(self):
        ens = noise_ensemble(n_ch=2, identical=True, seed=2)
        _, s = estimate_xpsd(ens, segment_length=512)
        coh = np.abs(s[1:, 0, 1]) ** 2 / (s[1:, 0, 0].real * s[1:, 1, 1].real)
        assert np.max(np.abs(coh - 1.0)) < 1e-6

    def test_independent_channels_low_coherence(self):
        ens = noise_ensemble(n_ch=2, n=200 * 256, seed=3)
        _, s = estimate_xpsd(ens, segment_length=256, overlap=0.0)
        coh = np.abs(s[1:, 0, 1]) ** 2 / (s[1:, 0, 0].real * s[1:, 1, 1].real)
        assert coh.mean() < 0.1

    def test_short_record_rejected(self):
        ens = noise_ensemble(n=128)
        with pytest.raises(InputError):
            estimate_xpsd(ens, segment_length=256)

    def test_hermitian_output(self):
        ens = noise_ensemble(n_ch=3, seed=4)
        _, s = estimate_xpsd(ens, segment_length=256)
        assert np.allclose(s, s.conj().transpose(0, 2, 1))


class TestPod:
    def test_diagonal_matrix(self):
        s = np.zeros((4, 3, 3))
        diag = np.array([2.0, 5.0, 1.0])
        s[:] = np.diag(diag)
        lam, psi = pod_decompose(s, 3)
        np.testing.assert_allclose(lam[0], [5.0, 2.0, 1.0])
        # eigenvectors are coordinate axes
        assert abs(psi[0, 1, 0]) == pytest.approx(1.0)
        assert abs(psi[0, 0, 1]) == pytest.approx(1.0)
        assert abs(psi[0, 2, 2]) == pytest.approx(1.0)

    def test_rank_one(self):
        a = np.array([1.0 + 1j, 2.0, -0.5j])
        s = 3.0 * np.outer(a, a.conj())[None, :, :]
        lam, psi = pod_decompose(s, 3)
        assert lam[0, 0] == pytest.approx(3.0 * np.linalg.norm(a) ** 2)
        np.testing.assert_allclose(lam[0, 1:], 0.0, atol=1e-9)

    def test_full_reconstruction(self):
        rng = np.random.default_rng(8)
        a = rng.normal(size=(5, 4, 4)) + 1j * rng.normal(size=(5, 4, 4))
        s = a @ a.conj().transpose(0, 2, 1)
        lam, psi = pod_decompose(s, 4)
        np.testing.assert_allclose(reconstruct_xpsd(lam, psi), s, atol=1e-8 * np.abs(s).max())

    def test_descending_order_and_unit_norm(self):
        rng = np.random.default_rng(9)
        a = rng.normal(size=(6, 5, 5))
        s = a @ a.transpose(0, 2, 1)
        lam, psi = pod_decompose(s, 5)
        assert np.all(np.diff(lam, axis=1) <= 1e-12)
        np.testing.assert_allclose(np.linalg.norm(psi, axis=1), 1.0, rtol=1e-12)

    def test_non_hermitian_rejected(self):
        s = np.ones((2, 3, 3))
        s[:, 0, 1] = 5.0
        with pytest.raises(InputError):
            pod_decompose(s, 2)


class TestScaling:
    def make_peaked_model(self):
        n_freq, peak = 64, 20
        omega = np.arange(n_freq) * 0.1
        s = np.zeros((n_freq, 1, 1))
        s[:, 0, 0] = np.exp(-0.5 * ((omega - omega[peak]) / 0.2) ** 2)
        return model_from_xpsd(omega, s, np.array([10.0]), reference_speed=20.0)

    def test_identity_at_reference(self):
        model = self.make_peaked_model()
        scaled = scale_to_site(model, 20.0)
        np.testing.assert_allclose(scaled.eigenvalues, model.eigenvalues)
        np.testing.assert_allclose(scaled.mean_loads, model.mean_loads)
        assert scaled.d_omega == model.d_omega

    def test_doubling_speed(self):
        model = self.make_peaked_model()
        scaled = scale_to_site(model, 40.0)
        np.testing.assert_allclose(scaled.mean_loads, 4.0 * model.mean_loads)
        np.testing.assert_allclose(scaled.channel_variance(),
                                   16.0 * model.channel_variance(), rtol=1e-12)
        peak0 = model.omega[np.argmax(model.target_onesided_psd()[:, 0, 0].real)]
        peak1 = scaled.omega[np.argmax(scaled.target_onesided_psd()[:, 0, 0].real)]
        assert peak1 == pytest.approx(2.0 * peak0, rel=1e-12)

    def test_invalid_speed(self):
        with pytest.raises(InputError):
            scale_to_site(self.make_peaked_model(), -5.0)


class TestSimulateLoads:
    def test_single_line_is_exact_cosine(self):
        model = single_line_model(mean=3.0)
        phases = np.zeros(2)
        real = simulate_loads(model, phases, duration=12.0, dt=0.05,
                              envelope=EnvelopeSpec(0.0, 0.0, 0.0))
        expected = 3.0 + np.cos(0.5 * real.t)
        np.testing.assert_allclose(real.forces[0], expected, atol=1e-10)

    def test_direct_evaluator_agrees_with_fft_path(self):
        model = single_line_model()
        rng = np.random.default_rng(0)
        phases = rng.uniform(0, TWO_PI, model.n_phases)
        real = simulate_loads(model, phases, duration=10.0, dt=0.1,
                              envelope=EnvelopeSpec(0.0, 0.0, 0.0))
        direct = evaluate_series(model, phases, real.t) + model.mean_loads[:, None]
        np.testing.assert_allclose(real.forces, direct, atol=1e-9)

    def test_zero_modes_gives_enveloped_mean(self):
        model = SpectralLoadModel(d_omega=0.1, eigenvalues=np.zeros((32, 0)),
                                  eigenvectors=np.zeros((32, 2, 0), dtype=complex),
                                  mean_loads=np.array([5.0, -2.0]), reference_speed=20.0)
        env = EnvelopeSpec(ramp_up=10.0, ramp_down=10.0, zero_tail=5.0)
        real = simulate_loads(model, np.zeros(0), duration=50.0, dt=0.1, envelope=env)
        steady = real.forces[:, real.steady_slice()]
        np.testing.assert_allclose(steady[0], 5.0)
        np.testing.assert_allclose(steady[1], -2.0)
        mid_ramp = np.searchsorted(real.t, 5.0)
        assert real.forces[0, mid_ramp] == pytest.approx(2.5, rel=0.05)

    def test_zero_tail_exactly_zero(self):
        model = single_line_model()
        real = simulate_loads(model, np.zeros(2), duration=10.0, dt=0.05,
                              envelope=EnvelopeSpec(2.0, 2.0, 3.0))
        tail = real.forces[:, real.t > real.zero_tail_start]
        assert tail.shape[1] > 0
        assert np.all(tail == 0.0)

    def test_envelope_continuity(self):
        model = single_line_model(mean=1.0, lam_domega=0.0)
        real = simulate_loads(model, np.zeros(2), duration=10.0, dt=0.05,
                              envelope=EnvelopeSpec(2.0, 2.0, 1.0))
        jumps = np.abs(np.diff(real.forces[0]))
        assert jumps.max() <= real.dt / 2.0 + 1e-12  # ramp increment bound

    def test_duration_beyond_period_rejected(self):
        model = single_line_model(d_omega=0.5)  # period ~12.57 s
        with pytest.raises(InputError):
            simulate_loads(model, np.zeros(2), duration=20.0, dt=0.05)

    def test_phase_length_mismatch(self):
        model = single_line_model()
        with pytest.raises(InputError):
            simulate_loads(model, np.zeros(5), duration=10.0, dt=0.05)

    def test_grid_resolves_cutoff(self):
        model = single_line_model(d_omega=0.5)
        real = simulate_loads(model, np.zeros(2), duration=10.0, dt=10.0,
                              envelope=EnvelopeSpec(0.0, 0.0, 0.0))
        assert real.dt <= math.pi / model.cutoff

    def test_ensemble_mean_and_variance(self):
        # moderately sized convergence sanity check; the full criterion lives
        # in the acceptance suite
        rng = np.random.default_rng(77)
        n_freq = 128
        omega = np.arange(n_freq) * 0.2
        s = np.zeros((n_freq, 1, 1))
        s[:, 0, 0] = 1.0 / (1.0 + (omega / 3.0) ** 2)
        model = model_from_xpsd(omega, s, np.array([7.0]), 20.0, n_modes=1)
        target_var = model.channel_variance()[0]
        acc = []
        for k in range(100):
            phases = rng.uniform(0, TWO_PI, model.n_phases)
            real = simulate_loads(model, phases, duration=25.0, dt=0.2,
                                  envelope=EnvelopeSpec(2.0, 2.0, 0.0))
            sl = real.steady_slice()
            acc.append(real.forces[0, sl])
        data = np.concatenate(acc)
        assert data.mean() == pytest.approx(7.0, abs=3 * math.sqrt(target_var / 100))
        assert data.var() == pytest.approx(target_var, rel=0.15)


class TestUncertaintyAndTorsion:
    def make_real(self):
        model = single_line_model()
        return simulate_loads(model, np.zeros(2), duration=10.0, dt=0.05,
                              envelope=EnvelopeSpec(0, 0, 0))

    def test_identity_factors(self):
        real = self.make_real()
        out = apply_model_uncertainty(real, 1.0, 1.0, 1.0)
        np.testing.assert_array_equal(out.forces, real.forces)

    def test_scalar_multiplication(self):
        real = self.make_real()
        out = apply_model_uncertainty(real, 1.1, 1.0, 1.0)
        np.testing.assert_allclose(out.forces, 1.1 * real.forces, rtol=1e-15)

    def test_variance_scaling(self):
        real = self.make_real()
        out = apply_model_uncertainty(real, 1.1, 0.9, 1.05)
        f = (1.1 * 0.9 * 1.05) ** 2
        assert out.forces[0].var() == pytest.approx(f * real.forces[0].var(), rel=1e-12)

    def test_nonpositive_factor_rejected(self):
        with pytest.raises(InputError):
            apply_model_uncertainty(self.make_real(), 0.0, 1.0, 1.0)

    def test_zero_torsion_unchanged(self):
        shear = np.array([1.0, 2.0])
        out = torsion_to_frame_forces(shear, np.zeros(2), 40.0)
        np.testing.assert_array_equal(out, shear)

    def test_torsion_arithmetic(self):
        out = torsion_to_frame_forces(np.zeros(1), np.array([400e3]), 40.0)
        assert out[0] == pytest.approx(5e3, rel=1e-12)

    def test_width_doubling_halves_contribution(self):
        t = np.array([100.0])
        a = torsion_to_frame_forces(np.zeros(1), t, 20.0)
        b = torsion_to_frame_forces(np.zeros(1), t, 40.0)
        assert a[0] == pytest.approx(2 * b[0], rel=1e-12)

    def test_bad_width(self):
        with pytest.raises(InputError):
            torsion_to_frame_forces(np.zeros(1), np.zeros(1), 0.0)


class TestSyntheticSpectrum:
    SPEC = SyntheticSpectrumSpec(
        floor_heights=tuple(4.0 * i for i in range(1, 9)),
        building_width=24.0, reference_speed=60.0, mean_coefficient=800.0,
        n_freq=512, d_omega=0.02,
    )

    def test_mean_follows_cosine(self):
        _, _, mean0 = synthetic_xpsd(self.SPEC, 0.0)
        _, _, mean90 = synthetic_xpsd(self.SPEC, math.pi / 2)
        _, _, mean180 = synthetic_xpsd(self.SPEC, math.pi)
        assert mean0[7] > 0
        np.testing.assert_allclose(mean90[:8], 0.0, atol=1e-9 * abs(mean0[7]))
        np.testing.assert_allclose(mean180[:8], -mean0[:8], rtol=1e-12)

    def test_acrosswind_peak_at_shedding_frequency(self):
        omega, s, _ = synthetic_xpsd(self.SPEC, math.pi / 2)
        top = s[:, 7, 7]
        omega_s = TWO_PI * self.SPEC.strouhal * self.SPEC.reference_speed / self.SPEC.building_width
        assert omega[np.argmax(top)] == pytest.approx(omega_s, rel=0.1)

    def test_psd_valid_hermitian(self):
        _, s, _ = synthetic_xpsd(self.SPEC, 1.0)
        assert np.allclose(s, s.transpose(0, 2, 1))
        lam, _ = pod_decompose(s, 4)
        assert np.all(lam >= 0)

    def test_catalog_snapping(self):
        catalog = build_synthetic_catalog(self.SPEC, directions_deg=np.arange(0, 360, 10),
                                          n_modes=3)
        m = catalog.model_for(math.radians(14.0))
        assert m.direction == pytest.approx(math.radians(10.0))
        m2 = catalog.model_for(math.radians(356.0))
        assert m2.direction == pytest.approx(0.0)

    def test_variance_increases_with_speed_after_scaling(self):
        catalog = build_synthetic_catalog(self.SPEC, directions_deg=[0.0], n_modes=3)
        model = catalog.models[0]
        v1 = scale_to_site(model, 30.0).channel_variance().sum()
        v2 = scale_to_site(model, 60.0).channel_variance().sum()
        assert v2 == pytest.approx(16.0 * v1, rel=1e-9)


class TestEnsembleIO:
    def test_binary_roundtrip(self, tmp_path):
        ens = noise_ensemble(n_ch=3, n=512, seed=5)
        path = tmp_path / "loads.bin"
        write_ensemble_binary(path, ens)
        back = read_ensemble_binary(path)
        np.testing.assert_array_equal(back.fluctuations, ens.fluctuations)
        np.testing.assert_array_equal(back.mean, ens.mean)
        assert back.dt == ens.dt
        assert back.reference_speed == ens.reference_speed

    def test_binary_magic_checked(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(InputError):
            read_ensemble_binary(path)

    def test_text_reader(self, tmp_path):
        path = tmp_path / "loads.txt"
        rows = ["f1 f2"] + [f"{1.0 + 0.1 * i} {-2.0}" for i in range(10)]
        path.write_text("\n".join(rows) + "\n")
        ens = read_ensemble_text(path, dt=0.5, reference_speed=12.0)
        assert ens.fluctuations.shape == (2, 10)
        assert ens.mean[0] == pytest.approx(1.45)
        np.testing.assert_allclose(ens.fluctuations.mean(axis=1), 0.0, atol=1e-12)
