"""Experiment orchestration: sweep grids, Monte-Carlo trials, JSONL records.

Each trial's RNG seed derives from (master seed, experiment id, grid index,
trial index) through 64-bit FNV-1a over their decimal rendering joined with
'|', so any single point of a sweep can be re-run in isolation.  Records are
plain dicts, one JSON object per line; timing fields are dropped when
``include_timing`` is off so that repeated runs are byte-identical.
"""

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .density import (
    build_ise_quadratic,
    estimate_density,
    ise_against,
    paper_mixture_components,
    paper_mixture_pdf,
    parzen,
    sample_paper_mixture,
)
from .linops import add_noise_snr, operator_norm, pauli_operator
from .matrixproj import (
    lambda_bracketing_solve,
    project_psd_traceball,
    project_rank_trace,
    random_low_rank_state,
)
from .portfolio import (
    generate_regression_instance,
    solve_hyperplane_baseline,
    solve_sparse_update,
)
from .projections import ConstraintSpec, gshp, gssp
from .solver import SolverConfig, solve_pgd

__all__ = [
    "ExperimentSpec",
    "fnv1a64",
    "trial_seed",
    "run_quantum_experiment",
    "run_density_experiment",
    "run_portfolio_experiment",
    "run_projection_bench",
    "run_experiment",
    "write_records",
    "record_lines",
    "pivot_median",
    "pivot_csv",
    "QUANTUM_METHODS",
]

_TIMING_FIELDS = ("wall_ms", "per_iter_ms")

QUANTUM_METHODS = ("convex1", "convex2", "nonconvex-rand", "nonconvex-cvx")


def fnv1a64(text):
    """64-bit FNV-1a hash of a string's UTF-8 bytes."""
    h = 0xCBF29CE484222325
    for b in text.encode("utf-8"):
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def trial_seed(master_seed, experiment_id, grid_index, trial_index):
    """Deterministic per-trial seed; decimal renderings joined with '|'."""
    return fnv1a64(f"{master_seed}|{experiment_id}|{grid_index}|{trial_index}")


@dataclass
class ExperimentSpec:
    """Configuration for one experiment run.

    ``which`` selects the experiment; the remaining fields are interpreted
    by the matching runner and ignored otherwise.  Desk-scale defaults run
    in minutes; pass ``paper_scale=True`` at the CLI for the full-size
    setups.
    """

    which: str = "quantum"
    seed: int = 0
    trials: int = 10
    include_timing: bool = True
    workers: int = 1
    # quantum
    qubits: int = 6
    rank: int = 2
    m_multipliers: tuple = (2.0, 2.8, 3.6, 4.4, 5.0)
    snr_db: float | None = 30.0
    methods: tuple = QUANTUM_METHODS
    max_iters: int = 1500
    tol: float = 1e-5
    convex_max_iters: int = 2000
    convex_tol: float = 1e-6
    bracket_grid: int = 12
    bracket_bisects: int = 6
    bracket_inner_iters: int = 500
    qubit_cap: int = 8
    # density
    n_samples: int = 1000
    sigma: float = 1.0
    k_grid: tuple = (3, 5, 8, 10, 15)
    density_max_iters: int = 3000
    density_tol: float = 1e-5
    # portfolio
    p: int = 500
    k: int = 50
    m_over_p: tuple = (0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    portfolio_max_iters: int = 3000
    portfolio_tol: float = 1e-5
    # bench
    bench_p_grid: tuple = (10_000, 100_000, 1_000_000)
    bench_k: int = 10
    bench_repeats: int = 20

    def __post_init__(self):
        if self.which not in ("quantum", "density", "portfolio", "bench"):
            raise ValueError(f"unknown experiment {self.which!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


def _finish(record, wall_s, include_timing, per_iter_s=None):
    if include_timing:
        record["wall_ms"] = wall_s * 1e3
        if per_iter_s is not None:
            record["per_iter_ms"] = per_iter_s * 1e3
    return record


# --- quantum ----------------------------------------------------------------


def _quantum_trial(spec, grid_index, mult, trial_index):
    seed = trial_seed(spec.seed, "quantum", grid_index, trial_index)
    rng = np.random.default_rng(seed)
    d = 2**spec.qubits
    m = int(round(mult * d * spec.rank))
    m = min(m, 4**spec.qubits)
    x_star = random_low_rank_state(d, spec.rank, rng.integers(2**63))
    A = pauli_operator(spec.qubits, m, seed=rng.integers(2**63))
    y = A.apply(x_star.astype(complex))
    if spec.snr_db is not None:
        y = add_noise_snr(y, spec.snr_db, seed=rng.integers(2**63))
    nrm = operator_norm(A)
    x_norm = np.linalg.norm(x_star)

    records = []
    convex2_solution = None

    def emit(method, estimate, iters, wall_s, status="ok", extra=None):
        rel = float(np.linalg.norm(estimate - x_star) / x_norm)
        rec = {
            "experiment": "quantum",
            "method": method,
            "grid_index": grid_index,
            "m_multiplier": mult,
            "m": m,
            "trial": trial_index,
            "seed": seed,
            "rel_error": rel,
            "iters": iters,
            "status": status,
        }
        if extra:
            rec.update(extra)
        per_iter = wall_s / max(iters, 1)
        records.append(_finish(rec, wall_s, spec.include_timing, per_iter))

    if "convex1" in spec.methods:
        cfg = SolverConfig(
            step_scale=1.0,
            momentum=True,
            max_iters=spec.convex_max_iters,
            tol=spec.convex_tol,
            operator_norm_value=nrm,
        )
        t0 = time.perf_counter()
        est, lam = lambda_bracketing_solve(
            A,
            y,
            spec.rank,
            cfg,
            grid_points=spec.bracket_grid,
            bisect_steps=spec.bracket_bisects,
            inner_max_iters=spec.bracket_inner_iters,
        )
        wall = time.perf_counter() - t0
        emit(
            "convex1",
            est.matrix,
            est.total_iterations,
            wall,
            extra={"lambda": lam, "rank_matched": est.rank_matched},
        )

    if "convex2" in spec.methods or "nonconvex-cvx" in spec.methods:
        cfg = SolverConfig(
            step_scale=1.0,
            momentum=True,
            max_iters=spec.convex_max_iters,
            tol=spec.convex_tol,
            operator_norm_value=nrm,
        )
        x2, tr = solve_pgd(A, y, project_psd_traceball, cfg)
        convex2_solution = x2
        if "convex2" in spec.methods:
            emit("convex2", x2, tr.iterations, tr.wall_s)

    rank_projector = lambda W: project_rank_trace(W, spec.rank).matrix

    if "nonconvex-rand" in spec.methods:
        init = random_low_rank_state(d, spec.rank, rng.integers(2**63)).astype(
            complex
        )
        cfg = SolverConfig(
            step_scale=3.0,
            max_iters=spec.max_iters,
            tol=spec.tol,
            init="warm",
            warm_start=init,
            operator_norm_value=nrm,
        )
        xh, tr = solve_pgd(A, y, rank_projector, cfg)
        emit("nonconvex-rand", xh, tr.iterations, tr.wall_s)

    if "nonconvex-cvx" in spec.methods:
        cfg = SolverConfig(
            step_scale=3.0,
            max_iters=spec.max_iters,
            tol=spec.tol,
            init="warm",
            warm_start=convex2_solution,
            operator_norm_value=nrm,
        )
        xh, tr = solve_pgd(A, y, rank_projector, cfg)
        emit("nonconvex-cvx", xh, tr.iterations, tr.wall_s)

    return records


def run_quantum_experiment(spec):
    """Low-rank state recovery sweep over measurement budgets.

    Grid points are multipliers of d*r; each trial generates a fresh rank-r
    state and Pauli ensemble, optionally adds noise at ``spec.snr_db``, and
    runs the configured methods.  Returns one record per (point, trial,
    method) with the relative Frobenius error.
    """
    if spec.qubits > spec.qubit_cap:
        raise ValueError(
            f"{spec.qubits} qubits exceeds the cap of {spec.qubit_cap}; "
            "raise qubit_cap explicitly if you really want this"
        )
    jobs = [
        (gi, mult, t)
        for gi, mult in enumerate(spec.m_multipliers)
        for t in range(spec.trials)
    ]
    return _run_jobs(spec, _quantum_trial, jobs)


# --- density ----------------------------------------------------------------


def _density_trial(spec, grid_index, _level, trial_index):
    # one trial covers the whole k sweep (shared sample and gram matrix)
    seed = trial_seed(spec.seed, "density", grid_index, trial_index)
    rng = np.random.default_rng(seed)
    samples = sample_paper_mixture(spec.n_samples, rng.integers(2**63))
    lo = samples.min() - 5.0 * spec.sigma
    hi = samples.max() + 5.0 * spec.sigma
    grid = np.linspace(lo, hi, 2001)
    true_means, _ = paper_mixture_components()
    records = []

    def emit(method, model, n_iter, wall_s, k=None):
        weights = np.sort(model.weights)[::-1]
        top5 = model.centers[np.argsort(-model.weights)[:5]]
        cluster = [float(np.abs(true_means - c).min()) for c in top5]
        rec = {
            "experiment": "density",
            "method": method,
            "grid_index": grid_index,
            "k": k,
            "trial": trial_index,
            "seed": seed,
            "ise": ise_against(model, paper_mixture_pdf, grid),
            "nnz": int(np.count_nonzero(model.weights)),
            "mass_outside_top5": float(weights[5:].sum()),
            "max_top5_center_distance": float(max(cluster)),
            "iters": n_iter,
            "status": "ok",
        }
        records.append(_finish(rec, wall_s, spec.include_timing))

    t0 = time.perf_counter()
    model = parzen(samples, spec.sigma)
    emit("parzen", model, 0, time.perf_counter() - t0)

    t0 = time.perf_counter()
    convex, it = estimate_density(
        samples,
        spec.sigma,
        ConstraintSpec("simplex_convex", level=1.0),
        max_iters=spec.density_max_iters,
        tol=spec.density_tol,
    )
    emit("convex-qp", convex, it, time.perf_counter() - t0)

    # sparsity sweep by continuation: each level refines the previous one
    prev = None
    for k in spec.k_grid:
        t0 = time.perf_counter()
        model, it = estimate_density(
            samples,
            spec.sigma,
            ConstraintSpec("simplex_sparse", k=int(k), level=1.0),
            max_iters=spec.density_max_iters,
            tol=spec.density_tol,
            init=prev,
        )
        emit(f"sparse-k{k}", model, it, time.perf_counter() - t0, k=int(k))
        prev = model.weights
    return records


def run_density_experiment(spec):
    """Mixture benchmark: Parzen vs convex QP vs the k-sparse sweep.

    The sparse levels run in ascending-k continuation (each level starts
    from the previous solution; the first level uses the quantile-stratified
    initializer).  Records ISE against the true density, weight sparsity,
    mass outside the top five weights, and top-weight distances to the true
    component means.
    """
    jobs = [(0, None, t) for t in range(spec.trials)]
    return _run_jobs(spec, _density_trial, jobs)


# --- portfolio ---------------------------------------------------------------


def _portfolio_trial(spec, grid_index, frac, trial_index):
    seed = trial_seed(spec.seed, "portfolio", grid_index, trial_index)
    rng = np.random.default_rng(seed)
    m = max(1, int(round(frac * spec.p)))
    instance = generate_regression_instance(
        spec.p, m, spec.k, seed=rng.integers(2**63)
    )
    config = SolverConfig(
        max_iters=spec.portfolio_max_iters, tol=spec.portfolio_tol
    )
    records = []
    bstar_norm = np.linalg.norm(instance.beta_star)

    def emit(method, beta, trace, wall_s):
        rec = {
            "experiment": "portfolio",
            "method": method,
            "grid_index": grid_index,
            "m_over_p": frac,
            "m": m,
            "trial": trial_index,
            "seed": seed,
            "rel_error": float(np.linalg.norm(beta - instance.beta_star) / bstar_norm),
            "sparsity": int(np.count_nonzero(beta)),
            "sum_violation": float(abs(beta.sum() - instance.level)),
            "iters": trace.iterations,
            "status": "ok",
        }
        records.append(_finish(rec, wall_s, spec.include_timing))

    t0 = time.perf_counter()
    baseline, tr_b = solve_hyperplane_baseline(instance, config)
    wall_b = time.perf_counter() - t0
    emit("baseline-stacked", baseline, tr_b, wall_b)

    t0 = time.perf_counter()
    refined, tr_g = solve_sparse_update(instance, config, warm_start=baseline)
    emit("gshp", refined, tr_g, time.perf_counter() - t0)
    return records


def run_portfolio_experiment(spec):
    """Planted sparse-update recovery over a grid of sample fractions m/p."""
    jobs = [
        (gi, frac, t)
        for gi, frac in enumerate(spec.m_over_p)
        for t in range(spec.trials)
    ]
    return _run_jobs(spec, _portfolio_trial, jobs)


# --- projection bench --------------------------------------------------------


def _bench_trial(spec, grid_index, p, repeat):
    seed = trial_seed(spec.seed, "bench", grid_index, repeat)
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(int(p))
    records = []
    for op_name, fn in (
        ("gssp", lambda: gssp(w, spec.bench_k, 1.0)),
        ("gshp", lambda: gshp(w, spec.bench_k, 0.5)),
    ):
        t0 = time.perf_counter()
        fn()
        wall = time.perf_counter() - t0
        rec = {
            "experiment": "bench",
            "method": op_name,
            "grid_index": grid_index,
            "p": int(p),
            "trial": repeat,
            "seed": seed,
            "status": "ok",
        }
        records.append(_finish(rec, wall, spec.include_timing))
    return records


def run_projection_bench(spec):
    """Wall-clock scaling of the two sparse projections across dimensions."""
    jobs = [
        (gi, p, r)
        for gi, p in enumerate(spec.bench_p_grid)
        for r in range(spec.bench_repeats)
    ]
    return _run_jobs(spec, _bench_trial, jobs)


_RUNNERS = {
    "quantum": run_quantum_experiment,
    "density": run_density_experiment,
    "portfolio": run_portfolio_experiment,
    "bench": run_projection_bench,
}


def run_experiment(spec):
    """Dispatch to the runner selected by ``spec.which``."""
    return _RUNNERS[spec.which](spec)


def _run_one(args):
    spec, fn, job = args
    gi, point, trial = job
    try:
        return fn(spec, gi, point, trial)
    except Exception as exc:  # failed trials are recorded, never dropped
        return [
            {
                "experiment": spec.which,
                "method": "error",
                "grid_index": gi,
                "trial": trial,
                "seed": trial_seed(spec.seed, spec.which, gi, trial),
                "status": "error",
                "error": f"{type(exc).__name__}: {exc}",
            }
        ]


def _run_jobs(spec, fn, jobs):
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            chunks = list(pool.map(_run_one, [(spec, fn, j) for j in jobs]))
    else:
        chunks = [_run_one((spec, fn, j)) for j in jobs]
    records = []
    for chunk in chunks:  # jobs are ordered (grid, trial); keep that order
        records.extend(chunk)
    return records


# --- record emission ---------------------------------------------------------


def record_lines(records, include_timing=True):
    lines = []
    for rec in records:
        if not include_timing:
            rec = {k: v for k, v in rec.items() if k not in _TIMING_FIELDS}
        lines.append(json.dumps(rec, sort_keys=True))
    return lines


def write_records(records, path, include_timing=True):
    """Write records as JSON-lines (atomically: temp file, then rename)."""
    from .storage import atomic_write_text

    text = "\n".join(record_lines(records, include_timing))
    atomic_write_text(path, text + "\n" if text else "")


def pivot_median(records, metric, row_key="grid_index", col_key="method"):
    """Median of ``metric`` per (row, column); returns (rows, cols, table).

    Failed trials (missing the metric) are excluded from the medians.
    """
    cells = {}
    for rec in records:
        if metric not in rec:
            continue
        key = (rec.get(row_key), rec.get(col_key))
        cells.setdefault(key, []).append(rec[metric])
    rows = sorted({k[0] for k in cells}, key=lambda v: (v is None, v))
    cols = sorted({k[1] for k in cells}, key=lambda v: (v is None, v))
    table = np.full((len(rows), len(cols)), np.nan)
    for (r, c), vals in cells.items():
        table[rows.index(r), cols.index(c)] = float(np.median(vals))
    return rows, cols, table


def pivot_csv(records, metric, row_key="grid_index", col_key="method"):
    rows, cols, table = pivot_median(records, metric, row_key, col_key)
    lines = [",".join([row_key] + [str(c) for c in cols])]
    for i, r in enumerate(rows):
        vals = ["" if math.isnan(v) else repr(v) for v in table[i]]
        lines.append(",".join([str(r)] + vals))
    return "\n".join(lines) + "\n"
