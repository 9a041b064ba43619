"""Information-theoretic quantifiers computed from the inverse covariance.

The eigenvalues of the (regularized) Gram matrix are the signal-to-noise
ratios of the measured operator directions; entropy, Fisher information, and
mutual information summarize how evenly and how far the probed observable
has spread.  Rank is the one quantity computed from the raw spectrum, so it
reflects the dynamics rather than the regularizer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tomography import InverseCovariance

DEFAULT_RANK_THRESHOLD = 1e-10

__all__ = [
    "MetricReport",
    "fidelity",
    "shannon_entropy",
    "fisher_information",
    "mutual_information",
    "effective_rank",
    "hs_distance",
    "report",
]


def fidelity(psi0, rho_bar) -> float:
    """Reconstruction fidelity <psi0| rho_bar |psi0> for a pure target."""
    psi = np.asarray(psi0, dtype=complex).ravel()
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"psi0 must be normalized, norm = {norm}")
    val = complex(psi.conj() @ np.asarray(rho_bar) @ psi)
    if abs(val.imag) > 1e-8:
        raise ValueError(f"fidelity has a large imaginary part ({val.imag:.3e}); rho_bar not Hermitian?")
    return float(val.real)


def shannon_entropy(cinv: InverseCovariance) -> float:
    """Entropy -sum p ln p of the normalized regularized spectrum, in nats."""
    w = np.maximum(cinv.regularized_eigenvalues(), 0.0)
    total = w.sum()
    if total <= 0:
        raise ValueError("inverse covariance is identically zero")
    p = w / total
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def fisher_information(cinv: InverseCovariance) -> float:
    """Collective Fisher information 1 / Tr[C] = 1 / sum_i 1/mu_i."""
    w = cinv.regularized_eigenvalues()
    if np.any(w <= 0):
        raise ValueError("spectrum is singular; regularization required")
    return float(1.0 / np.sum(1.0 / w))


def mutual_information(cinv: InverseCovariance) -> float:
    """Record-state mutual information (1/2) sum_i ln mu_i = -(1/2) ln det C."""
    w = cinv.regularized_eigenvalues()
    if np.any(w <= 0):
        raise ValueError("spectrum is singular; regularization required")
    return float(0.5 * np.sum(np.log(w)))


def effective_rank(cinv: InverseCovariance, threshold: float = DEFAULT_RANK_THRESHOLD) -> int:
    """Count of raw eigenvalues above threshold * largest."""
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    w = cinv.eigenvalues()
    top = w[-1]
    if top <= 0:
        return 0
    return int(np.sum(w > threshold * top))


def hs_distance(rho0, rho_bar) -> float:
    """Hilbert-Schmidt distance Tr[(rho0 - rho_bar)^2]."""
    diff = np.asarray(rho0) - np.asarray(rho_bar)
    return float(np.linalg.norm(diff) ** 2)


@dataclass
class MetricReport:
    fidelity: float
    shannon_entropy: float
    fisher: float
    mutual_info: float
    rank: int
    hs_distance: float

    def as_dict(self) -> dict:
        return {
            "fidelity": self.fidelity,
            "shannon_entropy": self.shannon_entropy,
            "fisher": self.fisher,
            "mutual_info": self.mutual_info,
            "rank": self.rank,
            "hs_distance": self.hs_distance,
        }


def report(cinv: InverseCovariance, rho0, rho_bar,
           rank_threshold: float = DEFAULT_RANK_THRESHOLD) -> MetricReport:
    """Assemble every metric for one reconstruction.

    Fidelity is computed as Tr(rho0 rho_bar), which equals <psi0|rho_bar|psi0>
    whenever rho0 is pure.
    """
    rho0 = np.asarray(rho0)
    rho_bar = np.asarray(rho_bar)
    fid = float(np.einsum("ij,ji->", rho0, rho_bar).real)
    return MetricReport(
        fidelity=fid,
        shannon_entropy=shannon_entropy(cinv),
        fisher=fisher_information(cinv),
        mutual_info=mutual_information(cinv),
        rank=effective_rank(cinv, rank_threshold),
        hs_distance=hs_distance(rho0, rho_bar),
    )
