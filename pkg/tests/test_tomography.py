import numpy as np
import pytest
from scipy.linalg import expm

from tomochaos.dynamics import kicked_top_unitary, symmetry_broken_kicked_top
from tomochaos.operator_space import (
    QuantumState,
    SpinSystem,
    angular_momentum,
    bloch_compose,
    hermitian_basis,
    hs_norm,
    random_pure_ket,
)
from tomochaos.tomography import (
    InverseCovariance,
    MeasurementModel,
    MeasurementRecord,
    design_matrix,
    inverse_covariance,
    ml_estimate,
    positivity_projection,
    reconstruct,
    simplex_projection,
    simulate_record,
)


@pytest.fixture(scope="module")
def j1():
    sys = SpinSystem(1)
    _, _, jz = angular_momentum(sys)
    o = jz / hs_norm(jz)
    return sys, o, hermitian_basis(3)


class TestSimulateRecord:
    def test_noiseless_matches_expm_oracle(self, j1):
        sys, o, _ = j1
        lam, alpha = 3.0, 1.4
        u = kicked_top_unitary(sys, lam, alpha)
        rho0 = np.diag([1.0, 0.0, 0.0]).astype(complex)
        rec = simulate_record(rho0, o, u, MeasurementModel(0.0, 3), np.random.default_rng(0))
        jx, _, jz = angular_momentum(sys)
        u_oracle = expm(-1j * lam / (2 * sys.j) * jz @ jz) @ expm(-1j * alpha * jx)
        cur = o.astype(complex)
        expected = []
        for _ in range(3):
            cur = u_oracle.conj().T @ cur @ u_oracle
            expected.append(np.trace(cur @ rho0).real)
        assert np.max(np.abs(rec.values - expected)) < 1e-12

    def test_static_observable(self, j1):
        sys, o, _ = j1
        rho0 = np.eye(3) / 3
        rec = simulate_record(rho0, o, np.eye(3), MeasurementModel(0.0, 8), np.random.default_rng(1))
        assert np.max(np.abs(rec.values - rec.values[0])) < 1e-14

    def test_noise_statistics_and_determinism(self, j1):
        sys, o, basis = j1
        u = kicked_top_unitary(sys, 7.0, 1.4)
        state = QuantumState.from_ket(random_pure_ket(3, np.random.default_rng(5)), basis)
        a = simulate_record(state.rho, o, u, MeasurementModel(0.01, 50), 77)
        b = simulate_record(state.rho, o, u, MeasurementModel(0.01, 50), 77)
        assert np.array_equal(a.values, b.values)
        assert a.provenance["seed"] == 77
        clean = simulate_record(state.rho, o, u, MeasurementModel(0.0, 50), 77)
        assert np.std(a.values - clean.values) < 0.05

    def test_dimension_mismatch(self, j1):
        _, o, _ = j1
        with pytest.raises(ValueError):
            simulate_record(np.eye(2) / 2, o, np.eye(3), MeasurementModel(0.0, 2), 0)


class TestDesignMatrix:
    def test_static_rows_identical(self, j1):
        _, o, basis = j1
        dm = design_matrix(o, np.eye(3), 6, basis)
        assert np.max(np.abs(dm.rows - dm.rows[0])) < 1e-14

    def test_row_norms_conserved(self, j1):
        sys, o, basis = j1
        u = kicked_top_unitary(sys, 7.0, 1.4)
        dm = design_matrix(o, u, 40, basis)
        norms = np.sum(dm.rows**2, axis=1)
        assert np.max(np.abs(norms - 1.0)) < 1e-9  # ||O||^2 = 1 for unit-norm O

    def test_hand_assembled_rows(self, j1):
        sys, o, basis = j1
        u = kicked_top_unitary(sys, 3.0, 1.4)
        dm = design_matrix(o, u, 2, basis)
        cur = o.astype(complex)
        for k in range(2):
            cur = u.matrix.conj().T @ cur @ u.matrix
            for a in range(8):
                val = 0.0
                for i in range(3):
                    for m in range(3):
                        val += cur[i, m] * basis[a][m, i]
                assert abs(dm.rows[k, a] - val.real) < 1e-12

    def test_tracelessizes_observable(self, j1):
        sys, _, basis = j1
        _, _, jz = angular_momentum(sys)
        shifted = jz + 0.4 * np.eye(3)
        u = kicked_top_unitary(sys, 7.0, 1.4)
        a = design_matrix(jz, u, 5, basis)
        b = design_matrix(shifted, u, 5, basis)
        assert np.max(np.abs(a.rows - b.rows)) < 1e-12


class TestInverseCovariance:
    def test_orthonormal_rows_give_identity(self):
        rows = np.eye(8)
        cinv = inverse_covariance(type("D", (), {"rows": rows})())
        assert np.allclose(cinv.matrix, np.eye(8))

    def test_trace_identity(self, j1):
        sys, o, basis = j1
        u = kicked_top_unitary(sys, 7.0, 1.4)
        n = 37
        cinv = inverse_covariance(design_matrix(o, u, n, basis))
        assert abs(np.trace(cinv.matrix) - n * 1.0) < 1e-8

    def test_eigenvalues_match_dense_solver(self, j1):
        sys, o, basis = j1
        u = kicked_top_unitary(sys, 3.0, 1.4)
        dm = design_matrix(o, u, 5, basis)
        cinv = inverse_covariance(dm)
        from scipy.linalg import eigh
        oracle = eigh(dm.rows.T @ dm.rows, eigvals_only=True)
        assert np.max(np.abs(np.sort(cinv.eigenvalues()) - np.sort(oracle))) < 1e-10

    def test_symmetric_psd(self, j1):
        sys, o, basis = j1
        u = kicked_top_unitary(sys, 7.0, 1.4)
        cinv = inverse_covariance(design_matrix(o, u, 12, basis))
        assert np.max(np.abs(cinv.matrix - cinv.matrix.T)) < 1e-10
        assert cinv.eigenvalues()[0] > -1e-10

    def test_default_relative_regularization(self, j1):
        sys, o, basis = j1
        u = kicked_top_unitary(sys, 7.0, 1.4)
        cinv = inverse_covariance(design_matrix(o, u, 16, basis))
        assert abs(cinv.epsilon - 1e-8 * np.trace(cinv.matrix) / 8) < 1e-20

    def test_rejects_negative_epsilon(self, j1):
        sys, o, basis = j1
        u = kicked_top_unitary(sys, 7.0, 1.4)
        with pytest.raises(ValueError):
            inverse_covariance(design_matrix(o, u, 4, basis), epsilon=-1.0)

    def test_monotone_eigenvalues_in_n(self, j1):
        # adding a row adds a PSD rank-1 term: Weyl monotonicity
        sys, o, basis = j1
        u = kicked_top_unitary(sys, 7.0, 1.4)
        prev = np.zeros(8)
        dm = design_matrix(o, u, 12, basis)
        for k in range(1, 13):
            gram = dm.rows[:k].T @ dm.rows[:k]
            w = np.sort(np.linalg.eigvalsh(gram))
            assert np.all(w - prev > -1e-10)
            prev = w

    def test_gm_am_bound(self, j1):
        sys, o, basis = j1
        u = kicked_top_unitary(sys, 7.0, 1.4)
        cinv = inverse_covariance(design_matrix(o, u, 60, basis))
        w = cinv.regularized_eigenvalues()
        gm = np.exp(np.mean(np.log(w)))
        am = np.mean(w)
        assert gm <= am * (1 + 1e-12)


class TestMLEstimate:
    def test_noiseless_full_rank_exact(self, j1):
        sys, o, basis = j1
        u = symmetry_broken_kicked_top(sys)
        rng = np.random.default_rng(3)
        state = QuantumState.from_ket(random_pure_ket(3, rng), basis)
        rec = simulate_record(state.rho, o, u, MeasurementModel(0.0, 20), rng)
        dm = design_matrix(o, u, 20, basis)
        r_ml = ml_estimate(rec, dm)
        # exact on the measured sector: residual of the linear model is zero
        assert np.max(np.abs(dm.rows @ r_ml - rec.values)) < 1e-10

    def test_noiseless_consistency(self, j1):
        # the design applied to the true Bloch vector reproduces the record
        sys, o, basis = j1
        u = kicked_top_unitary(sys, 7.0, 1.4)
        rng = np.random.default_rng(4)
        state = QuantumState.from_ket(random_pure_ket(3, rng), basis)
        rec = simulate_record(state.rho, o, u, MeasurementModel(0.0, 15), rng)
        dm = design_matrix(o, u, 15, basis)
        assert np.max(np.abs(dm.rows @ state.bloch - rec.values)) < 1e-12

    def test_rank_deficient_projects_onto_row_space(self, j1):
        sys, o, basis = j1
        rng = np.random.default_rng(5)
        state = QuantumState.from_ket(random_pure_ket(3, rng), basis)
        rec = simulate_record(state.rho, o, np.eye(3), MeasurementModel(0.0, 10), rng)
        dm = design_matrix(o, np.eye(3), 10, basis)
        r_ml = ml_estimate(rec, dm)
        row = dm.rows[0]
        oracle = row * (row @ state.bloch) / (row @ row)
        assert np.max(np.abs(r_ml - oracle)) < 1e-10

    def test_least_squares_optimality(self, j1):
        sys, o, basis = j1
        u = kicked_top_unitary(sys, 7.0, 1.4)
        rng = np.random.default_rng(6)
        state = QuantumState.from_ket(random_pure_ket(3, rng), basis)
        rec = simulate_record(state.rho, o, u, MeasurementModel(0.05, 12), rng)
        dm = design_matrix(o, u, 12, basis)
        r_ml = ml_estimate(rec, dm)
        best = np.linalg.norm(rec.values - dm.rows @ r_ml)
        for _ in range(100):
            v = r_ml + 0.3 * rng.standard_normal(8)
            assert best <= np.linalg.norm(rec.values - dm.rows @ v) + 1e-12

    def test_length_mismatch(self, j1):
        sys, o, basis = j1
        dm = design_matrix(o, np.eye(3), 4, basis)
        with pytest.raises(ValueError):
            ml_estimate(np.zeros(5), dm)

    def test_zero_design_rejected(self, j1):
        _, _, basis = j1
        dm = type("D", (), {"rows": np.zeros((3, 8)), "n": 3})()
        with pytest.raises(ValueError):
            ml_estimate(np.zeros(3), dm)


def bisection_simplex(w):
    """Independent water-level oracle for the simplex projection."""
    lo, hi = w.min() - 1.0, w.max()
    for _ in range(200):
        mid = (lo + hi) / 2
        if np.sum(np.maximum(w - mid, 0)) > 1:
            lo = mid
        else:
            hi = mid
    return np.maximum(w - (lo + hi) / 2, 0)


class TestPositivityProjection:
    def test_simplex_projection_against_bisection(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            w = rng.standard_normal(6)
            assert np.max(np.abs(simplex_projection(w) - bisection_simplex(w))) < 1e-9

    def test_physical_input_is_fixed_point(self, j1):
        _, _, basis = j1
        rng = np.random.default_rng(1)
        state = QuantumState.from_ket(random_pure_ket(3, rng), basis)
        r = 0.9 * state.bloch  # strictly inside the physical set
        cinv = InverseCovariance(matrix=np.eye(8), epsilon=0.0)
        r_bar, rho_bar = positivity_projection(r, cinv, basis)
        assert np.max(np.abs(r_bar - r)) < 1e-8

    def test_output_always_feasible(self, j1):
        _, _, basis = j1
        rng = np.random.default_rng(2)
        for _ in range(10):
            r = rng.standard_normal(8) * 0.8
            cinv = InverseCovariance(matrix=np.abs(rng.standard_normal()) * np.eye(8), epsilon=1e-6)
            _, rho_bar = positivity_projection(r, cinv, basis)
            assert np.linalg.eigvalsh(rho_bar)[0] >= -1e-9
            assert abs(np.trace(rho_bar) - 1) < 1e-10

    def test_identity_weight_equals_spectral_projection(self, j1):
        _, _, basis = j1
        rng = np.random.default_rng(3)
        for _ in range(20):
            r = rng.standard_normal(8)
            r = r / np.linalg.norm(r) * 1.4  # outside the physical set
            cinv = InverseCovariance(matrix=np.eye(8), epsilon=0.0)
            _, rho_bar = positivity_projection(r, cinv, basis)
            rho_ml = bloch_compose(r, basis)
            w, v = np.linalg.eigh(rho_ml)
            oracle = (v * bisection_simplex(w)) @ v.conj().T
            assert np.max(np.abs(rho_bar - oracle)) < 1e-8

    def test_beats_random_feasible_probes(self, j1):
        _, _, basis = j1
        rng = np.random.default_rng(4)
        b = rng.standard_normal((8, 8))
        cinv = InverseCovariance(matrix=b.T @ b, epsilon=1e-8)
        r_ml = rng.standard_normal(8) * 0.9
        r_bar, _ = positivity_projection(r_ml, cinv, basis)
        a = cinv.regularized

        def objective(r):
            dr = r - r_ml
            return dr @ a @ dr

        f_star = objective(r_bar)
        for _ in range(1000):
            g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
            rho = g @ g.conj().T
            rho /= np.trace(rho)
            probe = np.einsum("ij,aji->a", rho, basis.elements).real
            assert f_star <= objective(probe) + 1e-9


class TestReconstruct:
    def test_noiseless_chaotic_high_fidelity(self, j1):
        # end-to-end oracle on the full-rank-sector dynamics; the unmeasured
        # direction is pinned by positivity for most (not all) pure states
        sys, o, _ = j1
        u = symmetry_broken_kicked_top(sys)
        model = MeasurementModel(0.0, 20)
        rng = np.random.default_rng(42)
        fids = []
        for i in range(20):
            ket = random_pure_ket(3, rng)
            state = QuantumState.from_ket(ket)
            res = reconstruct(state.rho, o, u, model, rng=np.random.default_rng(1000 + i))
            fids.append(float((ket.conj() @ res.rho_bar @ ket).real))
        fids = np.array(fids)
        assert fids.mean() > 0.9
        assert np.sum(fids > 0.99) >= 14
        assert res.diagnostics["rank"] == 7

    def test_static_dynamics_reconstructs_worse(self, j1):
        sys, o, _ = j1
        u = symmetry_broken_kicked_top(sys)
        model = MeasurementModel(0.0, 20)
        chaotic, static = [], []
        for i in range(10):
            ket = random_pure_ket(3, np.random.default_rng(300 + i))
            state = QuantumState.from_ket(ket)
            res_c = reconstruct(state.rho, o, u, model, rng=np.random.default_rng(i))
            res_s = reconstruct(state.rho, o, np.eye(3), model, rng=np.random.default_rng(i))
            chaotic.append(float((ket.conj() @ res_c.rho_bar @ ket).real))
            static.append(float((ket.conj() @ res_s.rho_bar @ ket).real))
        assert np.mean(static) < np.mean(chaotic)

    def test_deterministic(self, j1):
        sys, o, _ = j1
        u = kicked_top_unitary(sys, 7.0, 1.4)
        state = QuantumState.from_ket(random_pure_ket(3, np.random.default_rng(8)))
        model = MeasurementModel(0.01, 15)
        a = reconstruct(state.rho, o, u, model, rng=123)
        b = reconstruct(state.rho, o, u, model, rng=123)
        assert np.array_equal(a.record.values, b.record.values)
        assert np.max(np.abs(a.rho_bar - b.rho_bar)) < 1e-12

    def test_diagnostics_filled(self, j1):
        sys, o, _ = j1
        u = kicked_top_unitary(sys, 7.0, 1.4)
        state = QuantumState.from_ket(random_pure_ket(3, np.random.default_rng(9)))
        res = reconstruct(state.rho, o, u, MeasurementModel(0.01, 10), rng=5)
        for key in ("fidelity", "shannon_entropy", "fisher", "mutual_info", "rank", "hs_distance"):
            assert key in res.diagnostics
        assert isinstance(res.record, MeasurementRecord)
