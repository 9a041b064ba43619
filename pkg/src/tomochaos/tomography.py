"""Continuous weak-measurement records and regularized state reconstruction.

The simulated record is M_n = Tr[O_n rho_0] + W_n with O_n the stroboscopic
Heisenberg orbit of the probed observable and W_n Gaussian shot noise.  The
Bloch vector is recovered by pseudoinverse least squares and then projected
onto the physical (positive semidefinite, unit trace) set by an accelerated
projected-gradient solve of the covariance-weighted quadratic.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .dynamics import as_matrix, heisenberg_sequence
from .errors import ConvergenceWarning
from .operator_space import (
    OperatorBasis,
    QuantumState,
    bloch_compose,
    hermitian_basis,
    operator_coords,
    tracelessize,
)

DEFAULT_EPSILON_SCALE = 1e-8
DEFAULT_PINV_TOL = 1e-10
GRAM_NOISE_FLOOR = 1e-14

__all__ = [
    "MeasurementModel",
    "MeasurementRecord",
    "DesignMatrix",
    "InverseCovariance",
    "ReconstructionResult",
    "simulate_record",
    "design_matrix",
    "inverse_covariance",
    "ml_estimate",
    "positivity_projection",
    "simplex_projection",
    "reconstruct",
]


@dataclass(frozen=True)
class MeasurementModel:
    """Record length and Gaussian noise spread (sigma/N_s in record units)."""

    noise_spread: float
    n_steps: int

    def __post_init__(self):
        if self.noise_spread < 0 or not np.isfinite(self.noise_spread):
            raise ValueError("noise_spread must be finite and nonnegative")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")


@dataclass(frozen=True)
class MeasurementRecord:
    """Noisy record values M_1..M_n with the model and provenance that made them."""

    values: np.ndarray
    model: MeasurementModel
    provenance: dict


@dataclass(frozen=True)
class DesignMatrix:
    """Stacked Bloch rows of the evolved observable, shape (n, d^2 - 1)."""

    rows: np.ndarray

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def k(self) -> int:
        return self.rows.shape[1]


@dataclass(eq=False)
class InverseCovariance:
    """Gram matrix of the design rows plus its Tikhonov regularization.

    `matrix` is the raw Gram; `epsilon=None` resolves to the relative default
    1e-8 * Tr / (d^2 - 1) at construction.  Spectral quantities are cached so
    every metric shares one eigendecomposition.
    """

    matrix: np.ndarray
    epsilon: float | None = None

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        k = self.matrix.shape[0]
        if self.epsilon is None:
            self.epsilon = DEFAULT_EPSILON_SCALE * float(np.trace(self.matrix)) / k
        if self.epsilon < 0:
            raise ValueError("regularization must be nonnegative")

    @property
    def k(self) -> int:
        return self.matrix.shape[0]

    @property
    def regularized(self) -> np.ndarray:
        return self.matrix + self.epsilon * np.eye(self.k)

    @cached_property
    def eigensystem(self):
        """Ascending eigenvalues and eigenvectors of the raw Gram matrix."""
        w, v = np.linalg.eigh(self.matrix)
        return w, v

    def eigenvalues(self) -> np.ndarray:
        return self.eigensystem[0]

    def regularized_eigenvalues(self) -> np.ndarray:
        return self.eigensystem[0] + self.epsilon


def simulate_record(rho0, observable, u, model: MeasurementModel, rng) -> MeasurementRecord:
    """Measurement record M_n = Tr[O_n rho_0] + W_n for n = 1..n_steps.

    `rng` may be a numpy Generator or an integer seed; a seed is kept in the
    provenance map.
    """
    rho = rho0.rho if isinstance(rho0, QuantumState) else np.asarray(rho0)
    o = np.asarray(observable, dtype=complex)
    um = as_matrix(u)
    if rho.shape != o.shape or rho.shape != um.shape:
        raise ValueError(f"dimension mismatch: rho {rho.shape}, O {o.shape}, U {um.shape}")
    seed = None
    if not isinstance(rng, np.random.Generator):
        seed = int(rng)
        rng = np.random.default_rng(seed)
    orbit = heisenberg_sequence(o, um, model.n_steps)[1:]
    signal = np.einsum("nij,ji->n", orbit, rho).real
    noise = rng.normal(0.0, model.noise_spread, size=model.n_steps)
    provenance = {
        "seed": seed,
        "n_steps": model.n_steps,
        "noise_spread": model.noise_spread,
        "dimension": rho.shape[0],
    }
    if hasattr(u, "params"):
        provenance.update(u.params)
    return MeasurementRecord(values=signal + noise, model=model, provenance=provenance)


def design_matrix(observable, u, n: int, basis: OperatorBasis) -> DesignMatrix:
    """Rows Tr[O_k E_alpha] for k = 1..n, with O auto-tracelessized first.

    The identity component of the observable is unmeasurable in the Bloch
    parameterization, so it is removed before the rows are built.
    """
    if n < 1:
        raise ValueError("need at least one measurement step")
    o = tracelessize(np.asarray(observable, dtype=complex))
    orbit = heisenberg_sequence(o, u, n)[1:]
    rows = np.einsum("nij,aji->na", orbit, basis.elements).real
    return DesignMatrix(rows=rows)


def inverse_covariance(design: DesignMatrix, epsilon: float | None = None) -> InverseCovariance:
    """Gram matrix O^T O of the design rows with recorded regularization."""
    gram = design.rows.T @ design.rows
    gram = (gram + gram.T) / 2
    return InverseCovariance(matrix=gram, epsilon=epsilon)


def ml_estimate(record, design: DesignMatrix, tol: float = DEFAULT_PINV_TOL) -> np.ndarray:
    """Least-squares Bloch estimate via SVD pseudoinversion of the design.

    Singular values below tol * s_max are zeroed, so the estimate has no
    component outside the measured row space.
    """
    m = record.values if isinstance(record, MeasurementRecord) else np.asarray(record, dtype=float)
    if m.shape[0] != design.n:
        raise ValueError(f"record length {m.shape[0]} != design rows {design.n}")
    u_svd, s, vt = np.linalg.svd(design.rows, full_matrices=False)
    if s.size == 0 or s[0] <= 0:
        raise ValueError("design matrix is identically zero")
    inv_s = np.where(s > tol * s[0], 1.0 / np.where(s > 0, s, 1.0), 0.0)
    return vt.T @ (inv_s * (u_svd.T @ m))


def gram_support_mask(w: np.ndarray, tol: float = DEFAULT_PINV_TOL) -> np.ndarray:
    """Measured-direction mask for ascending Gram eigenvalues.

    Gram eigenvalues square the design singular values, and the numerical
    noise floor of the Gram itself sits near machine epsilon times the top
    eigenvalue, so both cutoffs apply.
    """
    w = np.asarray(w, dtype=float)
    top = w[-1] if w.size else 0.0
    if top <= 0:
        return np.zeros_like(w, dtype=bool)
    return w > max(tol * tol, GRAM_NOISE_FLOOR) * top


def simplex_projection(w: np.ndarray) -> np.ndarray:
    """Euclidean projection of a real vector onto the probability simplex."""
    w = np.asarray(w, dtype=float)
    u = np.sort(w)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, w.size + 1)
    mask = u + (1.0 - css) / k > 0
    k_star = k[mask][-1]
    tau = (1.0 - css[mask][-1]) / k_star
    return np.maximum(w + tau, 0.0)


def _project_physical(r: np.ndarray, basis: OperatorBasis):
    """Nearest density matrix (HS metric) to the state parameterized by r."""
    rho = bloch_compose(r, basis)
    w, v = np.linalg.eigh(rho)
    p = simplex_projection(w)
    rho_p = (v * p) @ v.conj().T
    return operator_coords(rho_p, basis), rho_p


def _completion_start(r_ml: np.ndarray, cinv: InverseCovariance, basis: OperatorBasis,
                      max_iter: int = 200, tol: float = 1e-12):
    """Feasible point holding the measured coordinates of r_ml.

    Alternates the spectral projection onto density matrices with resetting
    the measured-subspace coordinates to those of r_ml.  The weighted
    objective is nearly flat along unmeasured directions, so this completion
    is where its minimizer lives; handing it to the gradient solver as the
    starting point avoids an astronomically slow walk along those directions.
    """
    w, v = cinv.eigensystem
    v_meas = v[:, gram_support_mask(w)]
    x_feas, _ = _project_physical(r_ml, basis)
    for _ in range(max_iter):
        delta = v_meas.T @ (r_ml - x_feas)
        if v_meas.size == 0 or np.max(np.abs(delta)) < tol:
            break
        prev = x_feas
        x_feas, _ = _project_physical(x_feas + v_meas @ delta, basis)
        if np.max(np.abs(x_feas - prev)) < tol:  # empty intersection fixed point
            break
    return x_feas


def positivity_projection(r_ml: np.ndarray, cinv: InverseCovariance, basis: OperatorBasis,
                          start: np.ndarray | None = None,
                          max_iter: int = 10_000, rel_tol: float = 1e-10):
    """Closest physical Bloch vector to r_ml in the C^-1-weighted metric.

    Minimizes (r - r_ml)^T Cinv_reg (r - r_ml) over the convex set of Bloch
    vectors of density matrices by accelerated projected gradient with step
    1/L (L the largest regularized eigenvalue), projecting each candidate
    through eigenvalue simplex projection.  Returns (r_bar, rho_bar).

    Stops when the relative objective decrease falls below rel_tol.  Hitting
    the iteration cap is reported as a ConvergenceWarning carrying the final
    objective and gradient norm; the last (always feasible) iterate is
    returned since on nearly flat directions progress per step stays tiny
    but nonzero for astronomically many iterations.
    """
    r_ml = np.asarray(r_ml, dtype=float)
    a = cinv.regularized
    lam_max = float(cinv.regularized_eigenvalues()[-1])
    if lam_max <= 0:
        raise ValueError("weight matrix must be positive semidefinite with regularization")
    step = 1.0 / lam_max

    def objective(r):
        dr = r - r_ml
        return float(dr @ a @ dr)

    if start is None:
        start = _completion_start(r_ml, cinv, basis)
    x, rho_x = _project_physical(start, basis)
    f_x = objective(x)
    x_prev = x
    t = 1.0
    for _ in range(max_iter):
        t_next = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
        y = x + ((t - 1.0) / t_next) * (x - x_prev)
        cand, rho_cand = _project_physical(y - step * (a @ (y - r_ml)), basis)
        f_cand = objective(cand)
        if f_cand > f_x:
            # momentum overshot; restart from the last feasible point
            cand, rho_cand = _project_physical(x - step * (a @ (x - r_ml)), basis)
            f_cand = objective(cand)
            t_next = 1.0
        converged = (f_x - f_cand) <= rel_tol * max(abs(f_x), 1e-300)
        x_prev, x, rho_x, f_x, t = x, cand, rho_cand, f_cand, t_next
        if converged:
            return x, rho_x
    grad_norm = float(np.linalg.norm(2.0 * (a @ (x - r_ml))))
    warnings.warn(
        f"positivity projection stopped at the {max_iter}-iteration cap: "
        f"objective {f_x:.6e}, gradient norm {grad_norm:.6e}",
        ConvergenceWarning,
        stacklevel=2,
    )
    return x, rho_x


@dataclass
class ReconstructionResult:
    """ML estimate, physical estimate, and the metrics computed from them."""

    r_ml: np.ndarray
    r_bar: np.ndarray
    rho_bar: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    record: MeasurementRecord | None = None


def reconstruct(rho0, observable, u, model: MeasurementModel, rng,
                epsilon: float | None = None, tol: float = DEFAULT_PINV_TOL) -> ReconstructionResult:
    """Full pipeline: record -> design -> Gram -> ML estimate -> physical state."""
    rho = rho0.rho if isinstance(rho0, QuantumState) else np.asarray(rho0)
    basis = hermitian_basis(rho.shape[0])
    record = simulate_record(rho, observable, u, model, rng)
    design = design_matrix(observable, u, model.n_steps, basis)
    cinv = inverse_covariance(design, epsilon=epsilon)
    r_ml = ml_estimate(record, design, tol=tol)
    r_bar, rho_bar = positivity_projection(r_ml, cinv, basis)
    from .metrics import report  # deferred: metrics depends on this module's types

    diag = report(cinv, rho, rho_bar).as_dict()
    return ReconstructionResult(r_ml=r_ml, r_bar=r_bar, rho_bar=rho_bar,
                                diagnostics=diag, record=record)
