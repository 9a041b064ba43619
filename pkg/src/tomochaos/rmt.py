"""Random-matrix ensembles and spectral statistics.

Gaussian ensembles are sampled with diagonal variance 1 and off-diagonal
component variance 1/2; circular ensembles are exactly Haar (QR with phase
fixing).  Spacing samples are always normalized to unit mean, which makes
every comparison against the surmise and Poisson laws scale-free.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gamma, lgamma

import numpy as np
from scipy.special import gammainc

GAUSSIAN_KINDS = ("GOE", "GUE", "GSE")
CIRCULAR_KINDS = ("CUE", "COE")
_BETA = {"GOE": 1, "GUE": 2, "GSE": 4, "COE": 1, "CUE": 2}

__all__ = [
    "EnsembleSpec",
    "SpacingSample",
    "haar_unitary",
    "sample_gaussian",
    "sample_circular",
    "level_spacings",
    "kramers_unique",
    "surmise_pdf",
    "surmise_cdf",
    "poisson_pdf",
    "joint_eigen_density",
    "spectral_form_factor",
    "spacing_ratios",
    "ks_distance",
]


@dataclass(frozen=True)
class EnsembleSpec:
    """Ensemble kind plus matrix dimension; the Dyson index follows the kind."""

    kind: str
    d: int

    def __post_init__(self):
        if self.kind not in _BETA:
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        if self.d < 2:
            raise ValueError("ensemble dimension must be >= 2")
        if self.kind == "GSE" and self.d % 2 != 0:
            raise ValueError("GSE requires an even (Kramers-doubled) dimension")

    @property
    def beta(self) -> int:
        return _BETA[self.kind]


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix.

    The R-diagonal phases are divided out so the distribution is exactly Haar
    rather than merely unitary.
    """
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


def sample_gaussian(spec: EnsembleSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw one matrix from GOE, GUE, or GSE.

    GSE output is the complex-doubled form of a (d/2)-dimensional
    quaternion-real Hermitian matrix, so its spectrum is doubly degenerate.
    """
    if spec.kind not in GAUSSIAN_KINDS:
        raise ValueError(f"{spec.kind} is not a Gaussian ensemble")
    d = spec.d
    if spec.kind == "GOE":
        a = rng.standard_normal((d, d))
        return (a + a.T) / 2
    if spec.kind == "GUE":
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        return (g + g.conj().T) / 2
    n = d // 2
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    a = (g + g.conj().T) / 2
    f = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    b = (f - f.T) / 2
    return np.block([[a, b], [-b.conj(), a.conj()]])


def sample_circular(spec: EnsembleSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw one matrix from CUE (Haar) or COE (u^T u for Haar u)."""
    if spec.kind not in CIRCULAR_KINDS:
        raise ValueError(f"{spec.kind} is not a circular ensemble")
    u = haar_unitary(spec.d, rng)
    if spec.kind == "CUE":
        return u
    return u.T @ u


@dataclass(frozen=True)
class SpacingSample:
    """Nearest-neighbor spacings normalized to unit mean."""

    spacings: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.spacings, dtype=float)
        if s.size == 0 or np.any(s < 0):
            raise ValueError("spacings must be nonempty and nonnegative")
        if abs(s.mean() - 1.0) > 1e-9:
            raise ValueError(f"spacings must have unit mean, got {s.mean()}")
        object.__setattr__(self, "spacings", s)


def level_spacings(levels, circular: bool = False) -> SpacingSample:
    """Unit-mean nearest-neighbor spacings of a spectrum.

    Circular spectra (eigenphases) are sorted on the circle and include the
    wrap-around gap.  Gaussian spectra keep only the central 50% of sorted
    levels as a crude local-density unfolding before differencing.
    """
    levels = np.sort(np.asarray(levels, dtype=float))
    if levels.size < 10:
        raise ValueError("need at least 10 levels for spacing statistics")
    if circular:
        phases = np.sort(np.mod(levels, 2 * np.pi))
        gaps = np.diff(phases)
        wrap = phases[0] + 2 * np.pi - phases[-1]
        s = np.concatenate([gaps, [wrap]])
    else:
        n = levels.size
        kept = levels[n // 4 : n - n // 4]
        s = np.diff(kept)
    return SpacingSample(spacings=s / s.mean())


def kramers_unique(levels, rtol: float = 1e-6) -> np.ndarray:
    """Collapse a doubly degenerate (Kramers) spectrum, one value per pair."""
    levels = np.sort(np.asarray(levels, dtype=float))
    if levels.size % 2 != 0:
        raise ValueError("Kramers spectrum must have even length")
    a, b = levels[0::2], levels[1::2]
    scale = max(np.max(np.abs(levels)), 1.0)
    if np.max(np.abs(a - b)) > rtol * scale:
        raise ValueError("spectrum is not doubly degenerate within tolerance")
    return (a + b) / 2


def surmise_coefficient(beta: int) -> float:
    """A_beta = [Gamma((beta+2)/2) / Gamma((beta+1)/2)]^2."""
    if beta not in (1, 2, 4):
        raise ValueError("beta must be one of 1, 2, 4")
    return (gamma((beta + 2) / 2) / gamma((beta + 1) / 2)) ** 2


def surmise_pdf(s, beta: int):
    """Wigner surmise P(s) = C s^beta exp(-A_beta s^2), unit mass and unit mean."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("spacings are nonnegative")
    a = surmise_coefficient(beta)
    c = 2.0 * a ** ((beta + 1) / 2) / gamma((beta + 1) / 2)
    out = c * s**beta * np.exp(-a * s**2)
    return out if out.ndim else float(out)


def surmise_cdf(s, beta: int):
    """Closed-form CDF of the surmise via the regularized incomplete gamma."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("spacings are nonnegative")
    a = surmise_coefficient(beta)
    out = gammainc((beta + 1) / 2, a * s**2)
    return out if out.ndim else float(out)


def poisson_pdf(s):
    """Integrable-spectrum spacing law P(s) = exp(-s)."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("spacings are nonnegative")
    out = np.exp(-s)
    return out if out.ndim else float(out)


def joint_eigen_density(lams, beta: int, normalized: bool = False) -> float:
    """Joint eigenvalue density exp(-sum(l^2)/2) prod |l_j - l_k|^beta.

    Input must be sorted in descending order (ties allowed; any tie makes the
    density zero).  With normalized=True the value is divided by
    N_beta = (2 pi)^(d/2) prod_j Gamma(1 + j beta/2) / Gamma(1 + beta/2).
    """
    lams = np.asarray(lams, dtype=float)
    if beta not in (1, 2, 4):
        raise ValueError("beta must be one of 1, 2, 4")
    if np.any(np.diff(lams) > 0):
        raise ValueError("eigenvalues must be in descending order")
    d = lams.size
    val = np.exp(-0.5 * np.sum(lams**2))
    for j in range(d):
        for k in range(j + 1, d):
            val *= abs(lams[j] - lams[k]) ** beta
    if normalized:
        log_n = (d / 2) * np.log(2 * np.pi) + sum(
            lgamma(1 + (j + 1) * beta / 2) - lgamma(1 + beta / 2) for j in range(d)
        )
        val /= np.exp(log_n)
    return float(val)


def spectral_form_factor(samples, t: float) -> float:
    """Ensemble average of |Tr exp(-i H t)|^2 from eigenvalues.

    Each sample may be a Hermitian matrix or a precomputed 1-D spectrum
    (eigenphases for circular ensembles).
    """
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    samples = list(samples)
    if not samples:
        raise ValueError("need at least one ensemble sample")
    total = 0.0
    for h in samples:
        h = np.asarray(h)
        eigs = np.linalg.eigvalsh(h) if h.ndim == 2 else h.astype(float)
        total += abs(np.sum(np.exp(-1j * eigs * t))) ** 2
    return total / len(samples)


def spacing_ratios(levels) -> np.ndarray:
    """Consecutive-gap ratios r_n = min(s_n, s_n+1)/max(s_n, s_n+1) in [0, 1]."""
    levels = np.sort(np.asarray(levels, dtype=float))
    if levels.size < 3:
        raise ValueError("need at least 3 levels for spacing ratios")
    s = np.diff(levels)
    lo = np.minimum(s[:-1], s[1:])
    hi = np.maximum(s[:-1], s[1:])
    return np.divide(lo, hi, out=np.zeros_like(lo), where=hi > 0)


def ks_distance(samples, cdf) -> float:
    """Kolmogorov-Smirnov distance between a sample and a reference CDF."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("empty sample")
    f = np.asarray(cdf(x), dtype=float)
    lo = np.arange(n) / n
    hi = np.arange(1, n + 1) / n
    return float(np.max(np.maximum(hi - f, f - lo)))
