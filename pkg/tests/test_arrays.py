import math

import numpy as np
import pytest

from gridless_doa.arrays import (
    ArrayGeometry,
    MeasurementSet,
    SourceScene,
    load_geometry,
    perturbed_nua,
    sample_covariance,
    save_geometry,
    snr_of,
    steering_matrix,
    steering_vector,
    synthesize,
    theta_to_z,
    ula_positions,
    z_to_theta,
)


class TestUlaPositions:
    def test_unit_spacing(self):
        geom = ula_positions(3, 1.0, 0.0)
        assert np.array_equal(geom.positions, [0.0, 1.0, 2.0])
        assert geom.is_ula

    def test_scaled_shifted(self):
        geom = ula_positions(4, 2.0, 1.0)
        assert np.array_equal(geom.positions, [1.0, 3.0, 5.0, 7.0])

    def test_benchmark_size(self):
        geom = ula_positions(20)
        assert np.array_equal(geom.positions, np.arange(20.0))

    @pytest.mark.parametrize("m,alpha", [(1, 1.0), (2, 0.0), (2, -1.0)])
    def test_invalid_args(self, m, alpha):
        with pytest.raises(ValueError):
            ula_positions(m, alpha)

    def test_ula_invariant_enforced(self):
        with pytest.raises(ValueError):
            ArrayGeometry(np.array([0.0, 1.0, 2.5]), "ula", alpha=1.0, beta=0.0)


class TestPerturbedNua:
    def test_offsets_bounded(self):
        for seed in range(30):
            geom = perturbed_nua(16, seed)
            offsets = geom.positions - np.arange(16)
            assert np.all(offsets >= -0.5) and np.all(offsets < 0.5)
            assert geom.kind == "nua"

    def test_zero_spread_matches_grid(self):
        geom = perturbed_nua(8, 0, spread=0.0)
        assert np.array_equal(geom.positions, np.arange(8.0))

    def test_deterministic(self):
        a = perturbed_nua(12, 99)
        b = perturbed_nua(12, 99)
        assert np.array_equal(a.positions, b.positions)


class TestSteering:
    def test_broadside_all_ones(self, rng):
        geom = perturbed_nua(7, rng)
        assert np.allclose(steering_vector(geom, 0.0), np.ones(7))

    def test_two_element_endfire(self):
        v = steering_vector([0.0, 1.0], np.pi / 2)
        assert np.allclose(v, [1.0, -1.0])

    def test_single_position(self):
        assert np.allclose(steering_vector([0.0], 0.7), [1.0])

    def test_unit_modulus(self, rng):
        geom = perturbed_nua(11, rng)
        for theta in rng.uniform(-np.pi / 2, np.pi / 2, size=20):
            assert np.max(np.abs(np.abs(steering_vector(geom, theta)) - 1)) < 1e-12

    def test_matrix_single_column(self, rng):
        geom = perturbed_nua(5, rng)
        a = steering_matrix(geom, [0.3])
        assert a.shape == (5, 1)
        assert np.allclose(a[:, 0], steering_vector(geom, 0.3))

    def test_matrix_broadside_ones(self):
        a = steering_matrix(ula_positions(3), [0.0])
        assert np.allclose(a, np.ones((3, 1)))

    def test_vandermonde_elementwise_oracle(self, rng):
        # independent oracle: element (i, k) = z_k ** position_i, evaluated
        # one scalar at a time
        positions = np.array([0.0, 1.0, 2.0])
        thetas = rng.uniform(-1.2, 1.2, size=2)
        a = steering_matrix(positions, thetas)
        for k, theta in enumerate(thetas):
            z = complex(np.exp(-1j * np.pi * np.sin(theta)))
            for i, p in enumerate(positions):
                assert a[i, k] == pytest.approx(z ** p, abs=1e-12)


class TestThetaZMaps:
    def test_zero(self):
        assert theta_to_z(0.0) == pytest.approx(1.0)
        assert z_to_theta(1.0 + 0j) == pytest.approx(0.0)

    def test_thirty_degrees(self):
        z = theta_to_z(np.pi / 6)
        assert z == pytest.approx(-1j)
        assert z_to_theta(z) == pytest.approx(np.pi / 6)

    def test_figure_one_angle(self):
        z = theta_to_z(np.deg2rad(-7.2))
        assert np.angle(z) == pytest.approx(np.pi * np.sin(np.deg2rad(7.2)))

    def test_round_trip_grid(self):
        thetas = np.linspace(-np.pi / 2 + 1e-3, np.pi / 2 - 1e-3, 301)
        assert np.max(np.abs(z_to_theta(theta_to_z(thetas)) - thetas)) < 1e-12

    def test_round_trip_near_endfire(self):
        # asin conditioning blows up at the interval ends; accuracy degrades
        # gracefully there
        thetas = np.array([-np.pi / 2 + 1e-6, np.pi / 2 - 1e-6])
        assert np.max(np.abs(z_to_theta(theta_to_z(thetas)) - thetas)) < 1e-9

    def test_branch_cut_maps_to_negative_endfire(self):
        assert z_to_theta(-1.0 + 0j) == pytest.approx(-np.pi / 2)


class TestSynthesize:
    def setup_method(self):
        self.geom = ula_positions(8)
        self.scene = SourceScene(
            thetas=np.deg2rad([-20.0, 35.0]), amplitudes=np.array([1.0, 2.5])
        )

    def test_noiseless(self):
        meas = synthesize(self.geom, self.scene, 4, math.inf, 0)
        assert np.all(meas.N == 0)
        assert np.array_equal(meas.Y, meas.Z)
        assert meas.snr_db == math.inf

    def test_zero_db_equal_energy(self):
        meas = synthesize(self.geom, self.scene, 4, 0.0, 1)
        assert np.linalg.norm(meas.Z) == pytest.approx(np.linalg.norm(meas.N))

    def test_single_source_energy(self):
        scene = SourceScene(thetas=np.array([0.4]), amplitudes=np.array([1.0]))
        meas = synthesize(self.geom, scene, 1, math.inf, 2)
        assert np.linalg.norm(meas.Z) == pytest.approx(np.sqrt(8))

    @pytest.mark.parametrize("snr", [-10.0, 0.0, 17.3, 40.0])
    def test_snr_exact(self, snr):
        meas = synthesize(self.geom, self.scene, 5, snr, 3)
        assert snr_of(meas.Z, meas.N) == pytest.approx(snr, abs=1e-9)

    def test_deterministic(self):
        a = synthesize(self.geom, self.scene, 6, 10.0, 42)
        b = synthesize(self.geom, self.scene, 6, 10.0, 42)
        assert np.array_equal(a.Y, b.Y)

    def test_coherent_sources_rank_one(self):
        meas = synthesize(self.geom, self.scene, 10, math.inf, 5, coherent=True)
        s = np.linalg.svd(meas.Z, compute_uv=False)
        assert s[1] < 1e-10 * s[0]

    def test_incoherent_sources_full_rank(self):
        meas = synthesize(self.geom, self.scene, 10, math.inf, 5)
        s = np.linalg.svd(meas.Z, compute_uv=False)
        assert s[1] > 1e-3 * s[0]

    def test_bad_snapshot_count(self):
        with pytest.raises(ValueError):
            synthesize(self.geom, self.scene, 0, 10.0, 0)


class TestSampleCovariance:
    def test_rank_one_column(self, rng):
        a = np.exp(1j * rng.uniform(0, 2 * np.pi, size=6))
        r = sample_covariance(a[:, None])
        assert np.allclose(r, np.outer(a, a.conj()))
        assert np.trace(r).real == pytest.approx(6.0)

    def test_scaled_identity(self):
        y = np.sqrt(5) * np.eye(5, dtype=complex)
        assert np.allclose(sample_covariance(y), np.eye(5))

    def test_double_loop_oracle(self, rng):
        y = rng.standard_normal((4, 7)) + 1j * rng.standard_normal((4, 7))
        r = sample_covariance(y)
        for m1 in range(4):
            for m2 in range(4):
                expected = sum(y[m1, l] * np.conj(y[m2, l]) for l in range(7)) / 7
                assert r[m1, m2] == pytest.approx(expected, abs=1e-12)

    def test_hermitian_psd(self, rng):
        y = rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3))
        r = sample_covariance(y)
        assert np.linalg.norm(r - r.conj().T) < 1e-12
        assert np.linalg.eigvalsh(r).min() >= -1e-10 * np.trace(r).real


class TestSnrOf:
    def test_equal_norms(self, rng):
        z = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        assert snr_of(z, z) == pytest.approx(0.0)

    def test_factor_ten_amplitude(self, rng):
        z = rng.standard_normal((3, 3)) + 0j
        assert snr_of(10 * z, z) == pytest.approx(20.0)

    def test_sentinels(self):
        z = np.ones((2, 2))
        assert snr_of(z, np.zeros((2, 2))) == math.inf
        assert snr_of(np.zeros((2, 2)), z) == -math.inf


class TestGeometryIO:
    def test_nua_round_trip(self, tmp_path, rng):
        geom = perturbed_nua(9, rng)
        path = tmp_path / "geom.txt"
        save_geometry(path, geom)
        loaded = load_geometry(path)
        assert loaded.kind == "nua"
        assert np.array_equal(loaded.positions, geom.positions)

    def test_ula_detection(self, tmp_path):
        path = tmp_path / "geom.txt"
        save_geometry(path, ula_positions(6, 1.5, 2.0))
        loaded = load_geometry(path)
        assert loaded.is_ula
        assert loaded.alpha == pytest.approx(1.5)
        assert loaded.beta == pytest.approx(2.0)

    def test_too_short(self, tmp_path):
        path = tmp_path / "geom.txt"
        path.write_text("1.0\n")
        with pytest.raises(ValueError):
            load_geometry(path)


class TestDomainTypes:
    def test_scene_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            SourceScene(thetas=np.array([np.pi / 2]), amplitudes=np.array([1.0]))
        with pytest.raises(ValueError):
            SourceScene(thetas=np.array([0.1]), amplitudes=np.array([0.0]))

    def test_measurement_set_consistency(self):
        z = np.ones((2, 2), dtype=complex)
        n = 0.5 * np.ones((2, 2), dtype=complex)
        with pytest.raises(ValueError):
            MeasurementSet(Y=z, Z=z, N=n, snr_db=snr_of(z, n))
        ok = MeasurementSet(Y=z + n, Z=z, N=n, snr_db=snr_of(z, n))
        assert ok.m == 2 and ok.l == 2

    def test_geometry_immutable(self):
        geom = ula_positions(4)
        with pytest.raises(ValueError):
            geom.positions[0] = 5.0
