"""Dynamical chaos quantifiers: OTOCs, echoes, and Krylov operator spreading."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import as_matrix, effective_error_unitary
from .operator_space import hs_inner, hs_norm
from .rmt import haar_unitary

__all__ = [
    "KrylovBasis",
    "SchmidtSpectrum",
    "AverageOtoc",
    "otoc",
    "operator_schmidt",
    "average_otoc",
    "loschmidt_echo",
    "operator_echo",
    "error_otoc",
    "krylov_basis",
    "krylov_complexity",
]


def _evolved(op: np.ndarray, um: np.ndarray, n: int) -> np.ndarray:
    """Heisenberg-evolved operator U^dag^n O U^n via one matrix power."""
    if n == 0:
        return op
    un = np.linalg.matrix_power(um, n)
    return un.conj().T @ op @ un


def otoc(w, v, u, n: int, rho=None) -> float:
    """Squared-commutator correlator Tr(rho [W(n), V]^dag [W(n), V]).

    rho defaults to the maximally mixed state.  The value is nonnegative for
    any state since the commutator square is positive semidefinite.
    """
    w = np.asarray(w, dtype=complex)
    v = np.asarray(v, dtype=complex)
    um = as_matrix(u)
    if w.shape != v.shape or w.shape != um.shape:
        raise ValueError(f"dimension mismatch: W {w.shape}, V {v.shape}, U {um.shape}")
    if n < 0:
        raise ValueError("n must be nonnegative")
    wn = _evolved(w, um, n)
    comm = wn @ v - v @ wn
    if rho is None:
        d = w.shape[0]
        return float(np.einsum("ij,ij->", comm.conj(), comm).real / d)
    rho = np.asarray(rho)
    return float(np.einsum("ij,ji->", rho @ comm.conj().T, comm).real)


@dataclass(frozen=True)
class SchmidtSpectrum:
    """Operator Schmidt coefficients of a bipartite unitary, nonincreasing."""

    coefficients: np.ndarray
    dims: tuple

    @property
    def total(self) -> float:
        return float(np.sum(self.coefficients))


def operator_schmidt(u, d_a: int, d_b: int) -> SchmidtSpectrum:
    """Schmidt coefficients lambda_j = squared singular values of the realignment.

    The realignment regroups U[(a,b),(a',b')] as R[(a,a'),(b,b')]; the sum of
    coefficients equals Tr(U^dag U) = d.
    """
    um = as_matrix(u)
    d = um.shape[0]
    if d_a * d_b != d:
        raise ValueError(f"dimension {d} does not factor as {d_a} x {d_b}")
    r = um.reshape(d_a, d_b, d_a, d_b).transpose(0, 2, 1, 3).reshape(d_a * d_a, d_b * d_b)
    lam = np.linalg.svd(r, compute_uv=False) ** 2
    total = float(np.sum(lam))
    if abs(total - d) > 1e-8 * max(d, 1):
        raise ValueError(f"Schmidt coefficients sum to {total}, expected {d}")
    return SchmidtSpectrum(coefficients=np.sort(lam)[::-1], dims=(d_a, d_b))


@dataclass(frozen=True)
class AverageOtoc:
    analytic: float
    monte_carlo: float
    stderr: float


def average_otoc(u, d_a: int, d_b: int, mc_samples: int, rng: np.random.Generator) -> AverageOtoc:
    """Haar-averaged local-unitary OTOC: analytic value vs Monte Carlo.

    The analytic value is 1 - sum_j lambda_j^2 / d^2 from the Schmidt
    spectrum.  Each Monte Carlo sample evaluates
    1 - Re Tr(W^dag V^dag W V)/d with W = U^dag (a x I) U and V = I x b for
    Haar-random a, b; this normalization is the one under which the Schmidt
    identity is exact for unitary probes.
    """
    if mc_samples < 2:
        raise ValueError("need at least 2 Monte Carlo samples")
    um = as_matrix(u)
    d = um.shape[0]
    spectrum = operator_schmidt(um, d_a, d_b)
    analytic = 1.0 - float(np.sum(spectrum.coefficients**2)) / d**2
    eye_a = np.eye(d_a)
    eye_b = np.eye(d_b)
    vals = np.empty(mc_samples)
    for i in range(mc_samples):
        a = haar_unitary(d_a, rng)
        b = haar_unitary(d_b, rng)
        w = um.conj().T @ np.kron(a, eye_b) @ um
        v = np.kron(eye_a, b)
        four_point = np.einsum("ij,ji->", w.conj().T @ v.conj().T, w @ v)
        vals[i] = 1.0 - four_point.real / d
    stderr = float(vals.std(ddof=1) / np.sqrt(mc_samples))
    return AverageOtoc(analytic=analytic, monte_carlo=float(vals.mean()), stderr=stderr)


def loschmidt_echo(psi0, u, u_prime, n: int) -> float:
    """Fidelity |<psi0| (U'^dag)^n U^n |psi0>|^2 of imperfect time reversal."""
    psi = np.asarray(psi0, dtype=complex).ravel()
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"psi0 must be normalized, norm = {norm}")
    if n < 0:
        raise ValueError("n must be nonnegative")
    um = as_matrix(u)
    upm = as_matrix(u_prime)
    fwd = psi.copy()
    bwd = psi.copy()
    for _ in range(n):
        fwd = um @ fwd
        bwd = upm @ bwd
    return float(abs(np.vdot(bwd, fwd)) ** 2)


def operator_echo(o, u, u_prime, n: int) -> float:
    """Overlap Tr(O_n^dag O'_n) / Tr(O^2) of the two evolution trajectories."""
    o = np.asarray(o, dtype=complex)
    norm2 = hs_inner(o, o).real
    if norm2 <= 0:
        raise ValueError("observable must be nonzero")
    if n < 0:
        raise ValueError("n must be nonnegative")
    o_n = _evolved(o, as_matrix(u), n)
    o_n_prime = _evolved(o, as_matrix(u_prime), n)
    return float(hs_inner(o_n, o_n_prime).real / norm2)


def error_otoc(o, u, u_prime, n: int, j: float) -> float:
    """Error-scrambling correlator Tr(|[O, E_n^dag O E_n]|^2) / (2 j^4).

    E_n = (U')^n (U^dag)^n is the effective error unitary; the value vanishes
    identically when U' = U.
    """
    o = np.asarray(o, dtype=complex)
    err = effective_error_unitary(u, u_prime, n)
    if err.shape != o.shape:
        raise ValueError(f"dimension mismatch: O {o.shape}, error unitary {err.shape}")
    o_err = err.conj().T @ o @ err
    comm = o @ o_err - o_err @ o
    return float(np.einsum("ij,ij->", comm.conj(), comm).real / (2.0 * j**4))


@dataclass(frozen=True)
class KrylovBasis:
    """Orthonormal operators spanning the stroboscopic conjugation orbit."""

    elements: np.ndarray
    dim: int
    residual_norms: np.ndarray


def krylov_basis(o, u, max_dim: int | None = None, drop_tol: float = 1e-10) -> KrylovBasis:
    """Ordered orthonormal basis of the orbit {O_0, O_1, ...}.

    Exploration first walks the orbit with an incrementally refreshed QR
    basis, dropping candidates whose residual Hilbert-Schmidt norm falls
    below drop_tol * ||O||, and stops after d^2 consecutive drops or once
    max_dim directions are tentatively retained.  Directions can enter the
    orbit with amplitudes near the conditioning limit of any single-pass
    orthogonalization, so the definitive span is then taken from an SVD of
    the whole explored stack (where slow directions have accumulated weight)
    and the basis is rebuilt by ordered Gram-Schmidt inside that span, which
    annihilates out-of-span rounding phantoms while preserving the
    first-reach ordering (the first element is parallel to O).
    """
    if drop_tol <= 0:
        raise ValueError("drop_tol must be positive")
    o = np.asarray(o, dtype=complex)
    um = as_matrix(u)
    d = o.shape[0]
    if max_dim is None:
        max_dim = d * d
    norm0 = hs_norm(o)
    if norm0 <= 0:
        raise ValueError("observable must be nonzero")

    stack = []
    q = np.zeros((d * d, 0), dtype=complex)
    tentative = 0
    cur = o.ravel().copy()
    udag = um.conj().T
    drops = 0
    while tentative < max_dim and drops < d * d:
        stack.append(cur.copy())
        res = cur - q @ (q.conj().T @ cur)
        rn = float(np.linalg.norm(res))
        if rn < drop_tol * norm0:
            drops += 1
        else:
            tentative += 1
            drops = 0
            q = np.concatenate([q, res.reshape(-1, 1) / rn], axis=1)
        cur = (udag @ cur.reshape(d, d) @ um).ravel()

    stack = np.array(stack)
    u_svd, s, vt = np.linalg.svd(stack, full_matrices=False)
    rank = min(int(np.sum(s > drop_tol * norm0)), max_dim)
    coords = u_svd[:, :rank] * s[:rank]  # candidates in true-span coordinates

    basis_c = []
    residuals = []
    for x in coords:
        res = x.copy()
        for _ in range(2):
            for k in basis_c:
                res -= np.vdot(k, res) * k
        rn = float(np.linalg.norm(res))
        if rn >= drop_tol * norm0:
            basis_c.append(res / rn)
            residuals.append(rn)
            if len(basis_c) == rank:
                break
    elements = (np.array(basis_c) @ vt[:rank]).reshape(len(basis_c), d, d)
    return KrylovBasis(elements=elements, dim=len(basis_c),
                       residual_norms=np.array(residuals))


def krylov_complexity(o, u, basis: KrylovBasis, n: int) -> float:
    """Position-weighted spread K_c(n) = sum_i (i-1) |(K_i | O_n)|^2.

    Requires the unit-norm observable the basis was built from, so the
    amplitudes form a probability distribution over basis positions.
    """
    o = np.asarray(o, dtype=complex)
    if abs(hs_norm(o) - 1.0) > 1e-6:
        raise ValueError("observable must have unit Hilbert-Schmidt norm")
    if basis.dim == 0 or basis.elements.shape[1:] != o.shape:
        raise ValueError("basis does not match the observable dimensions")
    if abs(abs(np.vdot(basis.elements[0].ravel(), o.ravel())) - 1.0) > 1e-6:
        raise ValueError("basis was not built from this observable")
    o_n = _evolved(o, as_matrix(u), n)
    amps = np.einsum("kij,ij->k", basis.elements.conj(), o_n)
    weights = np.arange(basis.dim, dtype=float)
    return float(np.sum(weights * np.abs(amps) ** 2))
