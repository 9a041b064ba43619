import numpy as np
import pytest

from tomochaos.dynamics import kicked_top_unitary, symmetry_broken_kicked_top
from tomochaos.metrics import (
    effective_rank,
    fidelity,
    fisher_information,
    hs_distance,
    mutual_information,
    report,
    shannon_entropy,
)
from tomochaos.operator_space import (
    QuantumState,
    SpinSystem,
    angular_momentum,
    hermitian_basis,
    hs_norm,
    random_pure_ket,
)
from tomochaos.tomography import InverseCovariance, design_matrix, inverse_covariance


def gram_at(j, lam, n, chaotic_reference=False, epsilon=None):
    sys = SpinSystem(j)
    _, _, jz = angular_momentum(sys)
    o = jz / hs_norm(jz)
    u = symmetry_broken_kicked_top(sys, lam=lam) if chaotic_reference \
        else kicked_top_unitary(sys, lam, 1.4)
    return inverse_covariance(design_matrix(o, u, n, hermitian_basis(sys.d)), epsilon=epsilon)


class TestFidelity:
    def test_pure_state_self(self):
        psi = random_pure_ket(3, np.random.default_rng(0))
        assert abs(fidelity(psi, np.outer(psi, psi.conj())) - 1) < 1e-12

    def test_maximally_mixed(self):
        psi = random_pure_ket(4, np.random.default_rng(1))
        assert abs(fidelity(psi, np.eye(4) / 4) - 0.25) < 1e-12

    def test_entrywise_oracle(self):
        rng = np.random.default_rng(2)
        psi = random_pure_ket(3, rng)
        g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        rho = g @ g.conj().T
        rho /= np.trace(rho)
        oracle = 0.0
        for i in range(3):
            for k in range(3):
                oracle += (psi[i].conjugate() * rho[i, k] * psi[k]).real
        assert abs(fidelity(psi, rho) - oracle) < 1e-12

    def test_requires_normalized(self):
        with pytest.raises(ValueError):
            fidelity(np.array([1.0, 1.0]), np.eye(2) / 2)


class TestShannonEntropy:
    def test_flat_spectrum_maximal(self):
        cinv = InverseCovariance(matrix=3.7 * np.eye(8), epsilon=0.0)
        assert abs(shannon_entropy(cinv) - np.log(8)) < 1e-12

    def test_rank_one_zero(self):
        m = np.zeros((8, 8))
        m[0, 0] = 2.0
        assert shannon_entropy(InverseCovariance(matrix=m, epsilon=0.0)) == 0.0

    def test_chaotic_exceeds_regular(self):
        # comparison oracle at j=5 where the dynamics-dependent spread is visible
        s_reg = shannon_entropy(gram_at(5, 0.5, 100))
        s_cha = shannon_entropy(gram_at(5, 7.0, 100))
        assert s_cha > s_reg

    def test_bounded_by_log_rank(self):
        cinv = gram_at(1, 7.0, 30, epsilon=0.0)
        rank = effective_rank(cinv)
        assert 0.0 <= shannon_entropy(cinv) <= np.log(rank) + 1e-9

    def test_invariant_under_observable_rescaling(self):
        # relative regularization makes the normalized spectrum scale-free
        sys = SpinSystem(1)
        _, _, jz = angular_momentum(sys)
        u = kicked_top_unitary(sys, 7.0, 1.4)
        basis = hermitian_basis(3)
        a = inverse_covariance(design_matrix(jz, u, 25, basis))
        b = inverse_covariance(design_matrix(3.0 * jz, u, 25, basis))
        assert abs(np.trace(b.matrix) - 9 * np.trace(a.matrix)) < 1e-8
        assert abs(shannon_entropy(a) - shannon_entropy(b)) < 1e-12

    def test_zero_matrix_rejected(self):
        with pytest.raises(ValueError):
            shannon_entropy(InverseCovariance(matrix=np.zeros((4, 4)), epsilon=0.0))


class TestFisherInformation:
    def test_identity_weight(self):
        assert abs(fisher_information(InverseCovariance(np.eye(8), epsilon=0.0)) - 1 / 8) < 1e-15

    def test_homogeneity(self):
        rng = np.random.default_rng(3)
        b = rng.standard_normal((6, 6))
        m = b.T @ b
        f1 = fisher_information(InverseCovariance(m.copy(), epsilon=None))
        f3 = fisher_information(InverseCovariance(3.0 * m, epsilon=None))
        assert abs(f3 - 3 * f1) < 1e-12 * abs(f3)

    def test_increases_with_record_length(self):
        # PSD accumulation: eigenvalues nondecreasing in n
        assert fisher_information(gram_at(5, 7.0, 200)) > fisher_information(gram_at(5, 7.0, 100))

    def test_singular_without_regularization(self):
        m = np.zeros((4, 4))
        m[0, 0] = 1.0
        with pytest.raises(ValueError):
            fisher_information(InverseCovariance(matrix=m, epsilon=0.0))


class TestMutualInformation:
    def test_identity_weight_zero(self):
        assert abs(mutual_information(InverseCovariance(np.eye(8), epsilon=0.0))) < 1e-14

    def test_exp_squared_identity(self):
        cinv = InverseCovariance(np.e**2 * np.eye(8), epsilon=0.0)
        assert abs(mutual_information(cinv) - 8.0) < 1e-12

    def test_chaotic_exceeds_regular(self):
        assert mutual_information(gram_at(5, 7.0, 100)) > mutual_information(gram_at(5, 0.5, 100))

    def test_gm_am_upper_bound(self):
        cinv = gram_at(1, 7.0, 50)
        k = 8
        bound = (k / 2) * np.log(np.trace(cinv.matrix) / k + cinv.epsilon)
        assert mutual_information(cinv) <= bound + 1e-10


class TestEffectiveRank:
    def test_static_dynamics_rank_one(self):
        sys = SpinSystem(1)
        _, _, jz = angular_momentum(sys)
        cinv = inverse_covariance(design_matrix(jz, np.eye(3), 10, hermitian_basis(3)))
        assert effective_rank(cinv) == 1

    def test_one_direction_per_step(self):
        # generic chaotic dynamics adds one independent direction per kick
        for n in range(1, 8):
            assert effective_rank(gram_at(1, 7.0, n, chaotic_reference=True)) == n

    def test_saturates_at_reachable_bound(self):
        assert effective_rank(gram_at(1, 7.0, 200, chaotic_reference=True)) == 7

    def test_threshold_validation(self):
        cinv = InverseCovariance(np.eye(3), epsilon=0.0)
        with pytest.raises(ValueError):
            effective_rank(cinv, threshold=2.0)


class TestHSDistance:
    def test_identical_states(self):
        rho = np.eye(3) / 3
        assert hs_distance(rho, rho) == 0.0

    def test_pure_vs_maximally_mixed(self):
        psi = random_pure_ket(5, np.random.default_rng(4))
        rho0 = np.outer(psi, psi.conj())
        assert abs(hs_distance(rho0, np.eye(5) / 5) - (1 - 1 / 5)) < 1e-12

    def test_expansion_identity_for_pure_target(self):
        # Tr[(rho0 - rho)^2] = 1 + Tr rho^2 - 2 F for pure rho0
        rng = np.random.default_rng(5)
        psi = random_pure_ket(3, rng)
        rho0 = np.outer(psi, psi.conj())
        g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        rho = g @ g.conj().T
        rho /= np.trace(rho)
        lhs = hs_distance(rho0, rho)
        rhs = 1 + np.trace(rho @ rho).real - 2 * fidelity(psi, rho)
        assert abs(lhs - rhs) < 1e-10


class TestReport:
    def test_assembles_all_metrics(self):
        sys = SpinSystem(1)
        basis = hermitian_basis(3)
        state = QuantumState.from_ket(random_pure_ket(3, np.random.default_rng(6)), basis)
        cinv = gram_at(1, 7.0, 20)
        rep = report(cinv, state.rho, np.eye(3) / 3)
        assert abs(rep.fidelity - 1 / 3) < 1e-12
        assert abs(rep.hs_distance - 2 / 3) < 1e-12
        assert rep.rank == effective_rank(cinv)
        assert set(rep.as_dict()) == {"fidelity", "shannon_entropy", "fisher",
                                      "mutual_info", "rank", "hs_distance"}
