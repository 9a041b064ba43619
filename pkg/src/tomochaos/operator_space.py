"""Spin algebra, orthonormal Hermitian operator bases, and Bloch-vector geometry.

Everything downstream (dynamics, tomography, scrambling) is built on the
conventions fixed here: the J_z eigenbasis is ordered m = j, j-1, ..., -j,
and the traceless operator basis is the generalized Gell-Mann set in a fixed
block order (symmetric, antisymmetric, diagonal).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

ALGEBRA_TOL = 1e-12
POSITIVITY_TOL = 1e-9

__all__ = [
    "SpinSystem",
    "OperatorBasis",
    "QuantumState",
    "angular_momentum",
    "hermitian_basis",
    "operator_coords",
    "bloch_decompose",
    "bloch_compose",
    "hs_inner",
    "hs_norm",
    "tracelessize",
    "random_pure_ket",
    "random_pure_state",
    "random_hermitian",
]


@dataclass(frozen=True)
class SpinSystem:
    """Spin-j system with Hilbert space dimension d = 2j + 1."""

    j: float

    def __post_init__(self):
        two_j = round(2 * float(self.j))
        if not np.isfinite(self.j) or abs(2 * self.j - two_j) > 1e-9 or two_j < 1:
            raise ValueError(f"j must be a positive half-integer, got {self.j!r}")
        object.__setattr__(self, "j", two_j / 2.0)

    @property
    def d(self) -> int:
        return round(2 * self.j) + 1


@dataclass(frozen=True)
class OperatorBasis:
    """Orthonormal, traceless Hermitian basis stored as a (d^2-1, d, d) stack."""

    elements: np.ndarray

    @property
    def d(self) -> int:
        return self.elements.shape[1]

    def __len__(self) -> int:
        return self.elements.shape[0]

    def __getitem__(self, idx):
        return self.elements[idx]


def angular_momentum(sys: SpinSystem):
    """Return (Jx, Jy, Jz) in the J_z eigenbasis ordered m = j, ..., -j.

    Built from the standard ladder construction, so [Jx, Jy] = i Jz holds to
    machine precision.
    """
    j, d = sys.j, sys.d
    m = j - np.arange(d)
    jz = np.diag(m).astype(complex)
    # <j, m+1 | J+ | j, m> = sqrt(j(j+1) - m(m+1)); |j, m+1> sits one row up.
    amp = np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1))
    jp = np.zeros((d, d), dtype=complex)
    jp[np.arange(d - 1), np.arange(1, d)] = amp
    jx = (jp + jp.conj().T) / 2
    jy = (jp - jp.conj().T) / 2j
    return jx, jy, jz


@functools.lru_cache(maxsize=None)
def hermitian_basis(d: int) -> OperatorBasis:
    """Generalized Gell-Mann basis of d^2 - 1 traceless Hermitian matrices.

    Ordering is fixed for reproducibility: first the symmetric pair elements
    (|i><k| + |k><i|)/sqrt(2) for i < k in lexicographic order, then the
    antisymmetric pairs -i(|i><k| - |k><i|)/sqrt(2), then the d - 1 diagonal
    elements.  All elements have unit Hilbert-Schmidt norm.
    """
    if d < 2:
        raise ValueError(f"basis requires dimension >= 2, got {d}")
    mats = []
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for i in range(d):
        for k in range(i + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[i, k] = inv_sqrt2
            e[k, i] = inv_sqrt2
            mats.append(e)
    for i in range(d):
        for k in range(i + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[i, k] = -1j * inv_sqrt2
            e[k, i] = 1j * inv_sqrt2
            mats.append(e)
    for l in range(1, d):
        e = np.zeros((d, d), dtype=complex)
        e[np.arange(l), np.arange(l)] = 1.0
        e[l, l] = -l
        mats.append(e / np.sqrt(l * (l + 1)))
    elements = np.stack(mats)
    elements.setflags(write=False)
    return OperatorBasis(elements)


def hs_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product Tr(A^dag B)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.einsum("ij,ij->", a.conj(), b))


def hs_norm(a: np.ndarray) -> float:
    return float(np.sqrt(hs_inner(a, a).real))


def tracelessize(a: np.ndarray) -> np.ndarray:
    """Remove the identity component: A - Tr(A)/d * I."""
    a = np.asarray(a)
    d = a.shape[0]
    return a - (np.trace(a) / d) * np.eye(d)


def operator_coords(a: np.ndarray, basis: OperatorBasis) -> np.ndarray:
    """Coordinates Tr(A E_alpha) of a Hermitian A in the traceless basis."""
    return np.einsum("ij,aji->a", np.asarray(a), basis.elements).real


def bloch_decompose(rho: np.ndarray, basis: OperatorBasis, tol: float = ALGEBRA_TOL) -> np.ndarray:
    """Bloch vector r_alpha = Tr(rho E_alpha) of a unit-trace Hermitian matrix."""
    rho = np.asarray(rho)
    if abs(np.trace(rho) - 1.0) > max(tol, 1e-10):
        raise ValueError(f"density matrix must have unit trace, got {np.trace(rho)}")
    return operator_coords(rho, basis)


def bloch_compose(r: np.ndarray, basis: OperatorBasis) -> np.ndarray:
    """Rebuild I/d + sum_alpha r_alpha E_alpha.  Positivity is not guaranteed."""
    r = np.asarray(r, dtype=float)
    if r.shape != (len(basis),):
        raise ValueError(f"expected {len(basis)} coordinates, got shape {r.shape}")
    d = basis.d
    return np.eye(d, dtype=complex) / d + np.tensordot(r, basis.elements, axes=([0], [0]))


@dataclass(frozen=True)
class QuantumState:
    """Density matrix with its dual Bloch-vector view."""

    rho: np.ndarray
    bloch: np.ndarray

    @property
    def d(self) -> int:
        return self.rho.shape[0]

    @classmethod
    def from_rho(cls, rho, basis: OperatorBasis | None = None,
                 tol: float = ALGEBRA_TOL, pos_tol: float = POSITIVITY_TOL) -> "QuantumState":
        rho = np.asarray(rho, dtype=complex)
        if np.max(np.abs(rho - rho.conj().T)) > max(tol, 1e-10):
            raise ValueError("density matrix must be Hermitian")
        if abs(np.trace(rho) - 1.0) > max(tol, 1e-10):
            raise ValueError(f"density matrix must have unit trace, got {np.trace(rho)}")
        if np.linalg.eigvalsh(rho)[0] < -pos_tol:
            raise ValueError("density matrix has a negative eigenvalue beyond tolerance")
        if basis is None:
            basis = hermitian_basis(rho.shape[0])
        return cls(rho=rho, bloch=operator_coords(rho, basis))

    @classmethod
    def from_ket(cls, ket, basis: OperatorBasis | None = None) -> "QuantumState":
        ket = np.asarray(ket, dtype=complex).ravel()
        norm = np.linalg.norm(ket)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"state vector must be normalized, norm = {norm}")
        rho = np.outer(ket, ket.conj())
        if basis is None:
            basis = hermitian_basis(ket.size)
        return cls(rho=rho, bloch=operator_coords(rho, basis))

    @classmethod
    def from_bloch(cls, r, basis: OperatorBasis, pos_tol: float = POSITIVITY_TOL) -> "QuantumState":
        rho = bloch_compose(r, basis)
        if np.linalg.eigvalsh(rho)[0] < -pos_tol:
            raise ValueError("Bloch vector lies outside the physical set")
        return cls(rho=rho, bloch=np.asarray(r, dtype=float))


def random_pure_ket(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed pure state vector (normalized complex Gaussian)."""
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_pure_state(d: int, rng: np.random.Generator,
                      basis: OperatorBasis | None = None) -> QuantumState:
    """Haar-random pure QuantumState; deterministic given the generator state."""
    return QuantumState.from_ket(random_pure_ket(d, rng), basis=basis)


def random_hermitian(d: int, rng: np.random.Generator,
                     traceless: bool = True, unit_norm: bool = True) -> np.ndarray:
    """GUE-style random Hermitian matrix, optionally traceless and unit HS norm."""
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = (g + g.conj().T) / 2
    if traceless:
        h = tracelessize(h)
    if unit_norm:
        h = h / hs_norm(h)
    return h
