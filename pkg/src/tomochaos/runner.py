"""Batch orchestration: seeded tasks, CSV/JSON emission, manifest, figures.

Every task derives its own seed from the master seed, so a config fixes
every output byte of the CSV files.  Tasks may run in parallel (thread count
from TOMOCHAOS_THREADS); results are merged in task order and written by a
single writer, so the output does not depend on scheduling.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, derive_seed
from .dynamics import PerturbationSpec, kicked_top_unitary, perturb
from .metrics import (
    effective_rank,
    fisher_information,
    mutual_information,
    shannon_entropy,
)
from .operator_space import (
    QuantumState,
    SpinSystem,
    angular_momentum,
    hermitian_basis,
    hs_norm,
    random_hermitian,
    random_pure_ket,
)
from .rmt import (
    CIRCULAR_KINDS,
    EnsembleSpec,
    ks_distance,
    kramers_unique,
    level_spacings,
    poisson_pdf,
    sample_circular,
    sample_gaussian,
    spacing_ratios,
    spectral_form_factor,
    surmise_cdf,
    surmise_pdf,
)
from .scrambling import krylov_basis, krylov_complexity
from .tomography import (
    InverseCovariance,
    MeasurementModel,
    design_matrix,
    gram_support_mask,
    positivity_projection,
    simulate_record,
)

ECHO_DELTA = 0.01  # default kick-strength perturbation for echo studies

__all__ = ["RunManifest", "TaskResult", "run", "build_observable", "tomography_state_series"]


@dataclass
class TaskResult:
    name: str
    seed: int
    summary: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    state_seeds: list = field(default_factory=list)
    plot: dict | None = None
    error: str | None = None


@dataclass
class RunManifest:
    config: dict
    version: str
    tasks: list
    outputs: list

    def as_dict(self) -> dict:
        return {"config": self.config, "version": self.version,
                "tasks": self.tasks, "outputs": self.outputs}


# ---------------------------------------------------------------------------
# small utilities

def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if not isinstance(v, str) else v for v in row) + "\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _n_threads() -> int:
    try:
        return max(1, int(os.environ.get("TOMOCHAOS_THREADS", "1")))
    except ValueError:
        return 1


def _map_ordered(fn, items):
    threads = _n_threads()
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def build_observable(name: str, sys: SpinSystem, rng: np.random.Generator) -> np.ndarray:
    """Raw observable matrix: an angular momentum component or a random one.

    Angular momentum components are returned unscaled (they are already
    traceless); the random observable is traceless with unit HS norm.
    """
    jx, jy, jz = angular_momentum(sys)
    if name == "Jx":
        return jx
    if name == "Jy":
        return jy
    if name == "Jz":
        return jz
    if name == "random-hermitian":
        return random_hermitian(sys.d, rng)
    raise ValueError(f"unknown observable {name!r}")


def _params_string(**kwargs) -> str:
    return ";".join(f"{k}={v:g}" if isinstance(v, (int, float)) else f"{k}={v}"
                    for k, v in kwargs.items())


# ---------------------------------------------------------------------------
# tomography

def _prefix_series(design, records, kets, basis, epsilon):
    """Per-step reconstruction series for a batch of states sharing one design.

    The Gram spectrum (entropy, Fisher, mutual information, rank, trace) is
    state-independent and computed once per prefix.
    """
    rows = design.rows
    n, k_dim = rows.shape
    n_states = len(records)
    gram = np.zeros((k_dim, k_dim))
    b = np.zeros((n_states, k_dim))
    fid = np.zeros((n_states, n))
    entropy = np.zeros(n)
    fisher = np.zeros(n)
    mutual = np.zeros(n)
    rank = np.zeros(n, dtype=int)
    trace = np.zeros(n)
    rho_final = [None] * n_states
    for step in range(n):
        gram += np.outer(rows[step], rows[step])
        cinv = InverseCovariance(matrix=gram.copy(), epsilon=epsilon)
        w, v = cinv.eigensystem
        entropy[step] = shannon_entropy(cinv)
        fisher[step] = fisher_information(cinv)
        mutual[step] = mutual_information(cinv)
        rank[step] = effective_rank(cinv)
        trace[step] = float(np.trace(gram))
        inv_w = np.where(gram_support_mask(w), 1.0 / np.where(w > 0, w, 1.0), 0.0)
        for si in range(n_states):
            b[si] += rows[step] * records[si].values[step]
            r_ml = v @ (inv_w * (v.T @ b[si]))
            r_bar, rho_bar = positivity_projection(r_ml, cinv, basis)
            fid[si, step] = float((kets[si].conj() @ rho_bar @ kets[si]).real)
            if step == n - 1:
                rho_final[si] = rho_bar
    return {
        "fidelity_per_state": fid,
        "entropy": entropy,
        "fisher": fisher,
        "mutual_info": mutual,
        "rank": rank,
        "trace": trace,
        "rho_final": rho_final,
    }


def _tomography_state_inputs(config, lam, task_seed):
    sys = SpinSystem(config.j)
    basis = hermitian_basis(sys.d)
    u = kicked_top_unitary(sys, lam, config.alpha)
    obs_raw = build_observable(config.observable, sys,
                               np.random.default_rng(derive_seed(task_seed, 0)))
    obs = obs_raw / hs_norm(obs_raw)
    model = MeasurementModel(config.noise_spread, config.n_steps)
    return sys, basis, u, obs, model


def tomography_state_series(config: ExperimentConfig, lam: float, task_seed: int,
                            state_seed: int) -> dict:
    """Recompute one state's per-step series from its derived seed.

    This is the exact per-state computation `run` performs, so averaged CSV
    columns equal the mean of these series.
    """
    sys, basis, u, obs, model = _tomography_state_inputs(config, lam, task_seed)
    rng = np.random.default_rng(state_seed)
    ket = random_pure_ket(sys.d, rng)
    state = QuantumState.from_ket(ket, basis)
    record = simulate_record(state.rho, obs, u, model, rng)
    design = design_matrix(obs, u, config.n_steps, basis)
    series = _prefix_series(design, [record], [ket], basis, config.epsilon)
    return {
        "record": record.values,
        "fidelity": series["fidelity_per_state"][0],
        "entropy": series["entropy"],
        "fisher": series["fisher"],
        "mutual_info": series["mutual_info"],
        "rank": series["rank"],
        "trace": series["trace"],
    }


def _tomography_task(config, lam, task_seed) -> TaskResult:
    sys, basis, u, obs, model = _tomography_state_inputs(config, lam, task_seed)
    state_seeds = [derive_seed(task_seed, 1 + s) for s in range(config.n_states)]
    kets, records = [], []
    for seed in state_seeds:
        rng = np.random.default_rng(seed)
        ket = random_pure_ket(sys.d, rng)
        state = QuantumState.from_ket(ket, basis)
        records.append(simulate_record(state.rho, obs, u, model, rng))
        kets.append(ket)
    design = design_matrix(obs, u, config.n_steps, basis)
    series = _prefix_series(design, records, kets, basis, config.epsilon)
    fid_mean = series["fidelity_per_state"].mean(axis=0)
    m_mean = np.mean([r.values for r in records], axis=0)
    steps = np.arange(1, config.n_steps + 1)
    header = ["step", "M_n", "fidelity", "shannon_entropy", "fisher",
              "mutual_info", "rank", "trace_Cinv"]
    rows = [
        [int(steps[i]), m_mean[i], fid_mean[i], series["entropy"][i], series["fisher"][i],
         series["mutual_info"][i], int(series["rank"][i]), series["trace"][i]]
        for i in range(config.n_steps)
    ]
    purity = np.mean([float(np.einsum("ij,ji->", r, r).real) for r in series["rho_final"]])
    hs = np.mean([
        float(np.linalg.norm(np.outer(k, k.conj()) - r) ** 2)
        for k, r in zip(kets, series["rho_final"])
    ])
    summary = {
        "lambda": lam,
        "final_fidelity": float(fid_mean[-1]),
        "final_shannon_entropy": float(series["entropy"][-1]),
        "final_fisher": float(series["fisher"][-1]),
        "final_mutual_info": float(series["mutual_info"][-1]),
        "final_rank": int(series["rank"][-1]),
        "trace_Cinv": float(series["trace"][-1]),
        "hs_distance": float(hs),
        "one_minus_purity_minus_2f": float(1.0 - purity - 2.0 * fid_mean[-1]),
    }
    plot = {"kind": "tomography", "lambda": lam, "steps": steps,
            "fidelity": fid_mean, "entropy": series["entropy"], "fisher": series["fisher"]}
    return TaskResult(
        name=f"tomography_lambda{lam:g}", seed=task_seed, summary=summary,
        tables={f"tomography_lambda{lam:g}.csv": (header, rows)},
        state_seeds=state_seeds, plot=plot,
    )


# ---------------------------------------------------------------------------
# rmt

def _rmt_task(config, task_seed) -> TaskResult:
    d = SpinSystem(config.j).d
    spec = EnsembleSpec(config.ensemble, d)
    circular = spec.kind in CIRCULAR_KINDS
    sample_seeds = [derive_seed(task_seed, i) for i in range(config.n_states)]
    spectra = []
    for seed in sample_seeds:
        rng = np.random.default_rng(seed)
        if circular:
            eigs = np.angle(np.linalg.eigvals(sample_circular(spec, rng)))
        else:
            eigs = np.linalg.eigvalsh(sample_gaussian(spec, rng))
            if spec.kind == "GSE":
                eigs = kramers_unique(eigs)
        spectra.append(eigs)
    spacings = np.concatenate([level_spacings(e, circular=circular).spacings for e in spectra])
    density, edges = np.histogram(spacings, bins=50, range=(0.0, 4.0), density=True)
    mids = (edges[:-1] + edges[1:]) / 2
    spacing_rows = [
        [edges[i], edges[i + 1], mids[i], density[i],
         surmise_pdf(mids[i], spec.beta), poisson_pdf(mids[i])]
        for i in range(mids.size)
    ]
    t_grid = np.arange(config.n_steps + 1, dtype=float)
    sff_vals = np.array([spectral_form_factor(spectra, t) for t in t_grid])
    ks_w = ks_distance(spacings, lambda s: surmise_cdf(s, spec.beta))
    ks_p = ks_distance(spacings, lambda s: 1.0 - np.exp(-np.asarray(s)))
    ratios = np.concatenate([spacing_ratios(e) for e in spectra])
    summary = {
        "ensemble": spec.kind, "d": d, "beta": spec.beta, "samples": config.n_states,
        "n_spacings": int(spacings.size),
        "ks_surmise": float(ks_w), "ks_poisson": float(ks_p),
        "mean_spacing_ratio": float(ratios.mean()),
        "sff_t0": float(sff_vals[0]),
    }
    plot = {"kind": "rmt", "spacings": spacings, "beta": spec.beta,
            "t": t_grid, "sff": sff_vals, "d": d}
    return TaskResult(
        name="rmt", seed=task_seed, summary=summary,
        tables={
            "rmt_spacings.csv": (["s_left", "s_right", "s_mid", "density",
                                  "wigner_surmise", "poisson"], spacing_rows),
            "rmt_sff.csv": (["t", "sff"], [[t_grid[i], sff_vals[i]] for i in range(t_grid.size)]),
        },
        state_seeds=sample_seeds, plot=plot,
    )


# ---------------------------------------------------------------------------
# scrambling curves

def _otoc_task(config, lam, task_seed) -> TaskResult:
    sys = SpinSystem(config.j)
    u = kicked_top_unitary(sys, lam, config.alpha)
    obs = build_observable(config.observable, sys,
                           np.random.default_rng(derive_seed(task_seed, 0)))
    if config.observable != "random-hermitian":
        obs = obs / sys.j  # classical-limit normalization J/j
    um = u.matrix
    d = sys.d
    values = np.zeros(config.n_steps + 1)
    wn = obs.astype(complex)
    for n in range(config.n_steps + 1):
        comm = wn @ obs - obs @ wn
        values[n] = float(np.einsum("ij,ij->", comm.conj(), comm).real / d)
        wn = um.conj().T @ wn @ um
    params = _params_string(j=sys.j, **{"lambda": lam}, alpha=config.alpha,
                            observable=config.observable)
    rows = [[n, values[n], params, task_seed] for n in range(config.n_steps + 1)]
    summary = {"lambda": lam, "final_otoc": float(values[-1]), "max_otoc": float(values.max())}
    plot = {"kind": "curve", "lambda": lam, "n": np.arange(config.n_steps + 1), "values": values}
    return TaskResult(
        name=f"otoc_lambda{lam:g}", seed=task_seed, summary=summary,
        tables={f"otoc_lambda{lam:g}.csv": (["n", "value", "parameters", "seed"], rows)},
        plot=plot,
    )


def _echo_task(config, lam, task_seed) -> TaskResult:
    sys = SpinSystem(config.j)
    u = kicked_top_unitary(sys, lam, config.alpha)
    u_prime = perturb(u, PerturbationSpec("lambda", ECHO_DELTA))
    um, upm = u.matrix, u_prime.matrix
    obs_raw = build_observable(config.observable, sys,
                               np.random.default_rng(derive_seed(task_seed, 0)))
    obs_unit = obs_raw / hs_norm(obs_raw)
    n_grid = np.arange(config.n_steps + 1)

    state_seeds = [derive_seed(task_seed, 1 + s) for s in range(config.n_states)]
    loschmidt = np.zeros((config.n_states, config.n_steps + 1))
    for si, seed in enumerate(state_seeds):
        psi = random_pure_ket(sys.d, np.random.default_rng(seed))
        fwd, bwd = psi.copy(), psi.copy()
        for n in n_grid:
            loschmidt[si, n] = abs(np.vdot(bwd, fwd)) ** 2
            fwd = um @ fwd
            bwd = upm @ bwd
    loschmidt_mean = loschmidt.mean(axis=0)

    op_echo = np.zeros(config.n_steps + 1)
    o_n, o_n_prime = obs_unit.astype(complex), obs_unit.astype(complex)
    for n in n_grid:
        op_echo[n] = float(np.einsum("ij,ij->", o_n.conj(), o_n_prime).real)
        o_n = um.conj().T @ o_n @ um
        o_n_prime = upm.conj().T @ o_n_prime @ upm

    err_vals = np.zeros(config.n_steps + 1)
    err = np.eye(sys.d, dtype=complex)
    for n in n_grid:
        o_err = err.conj().T @ obs_raw @ err
        comm = obs_raw @ o_err - o_err @ obs_raw
        err_vals[n] = float(np.einsum("ij,ij->", comm.conj(), comm).real / (2.0 * sys.j**4))
        err = upm @ err @ um.conj().T

    params = _params_string(j=sys.j, **{"lambda": lam}, alpha=config.alpha,
                            delta_lambda=ECHO_DELTA, observable=config.observable)
    header = ["n", "value", "parameters", "seed"]
    tables = {
        f"echo_loschmidt_lambda{lam:g}.csv":
            (header, [[n, loschmidt_mean[n], params, task_seed] for n in n_grid]),
        f"echo_operator_lambda{lam:g}.csv":
            (header, [[n, op_echo[n], params, task_seed] for n in n_grid]),
        f"echo_error_otoc_lambda{lam:g}.csv":
            (header, [[n, err_vals[n], params, task_seed] for n in n_grid]),
    }
    summary = {
        "lambda": lam, "delta_lambda": ECHO_DELTA,
        "final_loschmidt": float(loschmidt_mean[-1]),
        "final_operator_echo": float(op_echo[-1]),
        "final_error_otoc": float(err_vals[-1]),
    }
    plot = {"kind": "echo", "lambda": lam, "n": n_grid,
            "loschmidt": loschmidt_mean, "operator": op_echo, "error_otoc": err_vals}
    return TaskResult(
        name=f"echo_lambda{lam:g}", seed=task_seed, summary=summary,
        tables=tables, state_seeds=state_seeds, plot=plot,
    )


def _krylov_task(config, lam, task_seed) -> TaskResult:
    sys = SpinSystem(config.j)
    basis = hermitian_basis(sys.d)
    u = kicked_top_unitary(sys, lam, config.alpha)
    obs_raw = build_observable(config.observable, sys,
                               np.random.default_rng(derive_seed(task_seed, 0)))
    obs = obs_raw / hs_norm(obs_raw)
    kb = krylov_basis(obs, u)
    n_grid = np.arange(config.n_steps + 1)
    values = np.array([krylov_complexity(obs, u, kb, int(n)) for n in n_grid])
    design = design_matrix(obs, u, config.n_steps, basis)
    gram = InverseCovariance(matrix=design.rows.T @ design.rows, epsilon=config.epsilon)
    params = _params_string(j=sys.j, **{"lambda": lam}, alpha=config.alpha,
                            observable=config.observable)
    rows = [[int(n), values[n], params, task_seed] for n in n_grid]
    summary = {
        "lambda": lam,
        "krylov_dim": int(kb.dim),
        "spread_bound": sys.d**2 - sys.d + 1,
        "covariance_rank": int(effective_rank(gram)),
        "final_complexity": float(values[-1]),
    }
    plot = {"kind": "curve", "lambda": lam, "n": n_grid, "values": values}
    return TaskResult(
        name=f"krylov_lambda{lam:g}", seed=task_seed, summary=summary,
        tables={f"krylov_lambda{lam:g}.csv": (["n", "value", "parameters", "seed"], rows)},
        plot=plot,
    )


# ---------------------------------------------------------------------------
# run

_TASK_BUILDERS = {
    "tomography": _tomography_task,
    "otoc": _otoc_task,
    "echo": _echo_task,
    "krylov": _krylov_task,
}


def _task_specs(config: ExperimentConfig):
    subs = (["tomography", "otoc", "echo", "krylov"] if config.subcommand == "sweep"
            else [config.subcommand])
    specs = []
    index = 0
    for sub in subs:
        if sub == "rmt":
            specs.append(("rmt", derive_seed(config.seed, index), partial(_rmt_task, config)))
            index += 1
            continue
        for lam in config.lambdas:
            name = f"{sub}_lambda{lam:g}"
            specs.append((name, derive_seed(config.seed, index),
                          partial(_TASK_BUILDERS[sub], config, lam)))
            index += 1
    return specs


def _execute(spec) -> TaskResult:
    name, seed, fn = spec
    try:
        return fn(seed)
    except Exception as exc:  # record and let the other tasks proceed
        return TaskResult(name=name, seed=seed, error=f"{type(exc).__name__}: {exc}")


def _render_figures(outdir: Path, results) -> list:
    from . import plots  # deferred so library use never touches matplotlib

    written = []
    groups = {}
    for res in results:
        if res.error or res.plot is None:
            continue
        groups.setdefault(res.plot["kind"], []).append(res)
    if "tomography" in groups:
        path = outdir / "tomography.png"
        plots.render_tomography(path, [r.plot for r in groups["tomography"]])
        written.append(path)
    if "rmt" in groups:
        path = outdir / "rmt.png"
        plots.render_rmt(path, groups["rmt"][0].plot)
        written.append(path)
    if "echo" in groups:
        path = outdir / "echo.png"
        panels = [
            ("Loschmidt echo", [(f"lambda={r.plot['lambda']:g}", r.plot["n"], r.plot["loschmidt"])
                                for r in groups["echo"]], False),
            ("operator echo", [(f"lambda={r.plot['lambda']:g}", r.plot["n"], r.plot["operator"])
                               for r in groups["echo"]], False),
            ("error OTOC", [(f"lambda={r.plot['lambda']:g}", r.plot["n"], r.plot["error_otoc"])
                            for r in groups["echo"]], False),
        ]
        plots.render_curve_panels(path, panels)
        written.append(path)
    if "curve" in groups:
        by_sub = {}
        for res in groups["curve"]:
            sub = res.name.split("_lambda")[0]
            by_sub.setdefault(sub, []).append(res)
        for sub, items in by_sub.items():
            path = outdir / f"{sub}.png"
            curves = [(f"lambda={r.plot['lambda']:g}", r.plot["n"], r.plot["values"])
                      for r in items]
            plots.render_curve_panels(path, [(sub, curves, False)])
            written.append(path)
    return written


def run(config: ExperimentConfig) -> RunManifest:
    """Dispatch the configured tasks and write CSV, figures, summary, manifest.

    A failing task is recorded in the manifest and does not abort the others.
    Rerunning an identical config produces byte-identical CSV files.
    """
    config.validate()
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    specs = _task_specs(config)
    results = _map_ordered(_execute, specs)

    written = []
    for res in results:
        for fname, (header, rows) in res.tables.items():
            path = outdir / fname
            _write_csv(path, header, rows)
            written.append(path)
    written.extend(_render_figures(outdir, results))

    summary = {
        "config": config.as_dict(),
        "version": __version__,
        "tasks": {res.name: (res.summary if res.error is None else {"error": res.error})
                  for res in results},
    }
    summary_path = outdir / "summary.json"
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    written.append(summary_path)

    manifest = RunManifest(
        config=config.as_dict(),
        version=__version__,
        tasks=[{"name": res.name, "seed": res.seed, "state_seeds": res.state_seeds,
                "error": res.error} for res in results],
        outputs=[{"path": p.name, "sha256": _sha256(p)} for p in written],
    )
    (outdir / "manifest.json").write_text(
        json.dumps(manifest.as_dict(), indent=2, sort_keys=True) + "\n")
    return manifest
