"""Synthetic-data protocol, Monte-Carlo phase-transition grids with bound
overlays, and ROC evaluation of foreground detection."""

import os
from dataclasses import dataclass, field

import numpy as np

from .bounds import (
    RHO_L1,
    RHO_L1L1,
    RHO_NL1,
    BoundInputs,
    bound_l1,
    bound_l1l1,
    bound_nl1,
    noisy_bound,
)
from .prox import SideInfoSet, update_weights
from .solvers import (
    DivergenceError,
    MeasurementModel,
    SolverConfig,
    bootstrap_prior,
    corpca_step,
)

SUCCESS_REL_ERR = 1e-2

METHODS = ("nl1", "l1l1", "l1")


@dataclass
class SynthConfig:
    """Synthetic sequence protocol: n-dimensional columns, rank-r low-rank
    part over d training plus q test instances, sparse part with target
    support s0 drifting by `drift` coordinates per step and reset whenever
    the support exceeds s0 + cap."""

    n: int = 500
    r: int = 5
    d: int = 100
    q: int = 100
    s0: int = 10
    drift: int | None = None
    cap: int = 15
    seed: int = 0

    def validate(self):
        if self.r > min(self.n, self.d + self.q):
            raise ValueError("rank exceeds matrix dimensions")
        if self.s0 + self.cap > self.n:
            raise ValueError("support ceiling exceeds dimension")
        if self.s0 < 1 or self.n < 1 or self.d < 0 or self.q < 1:
            raise ValueError("sizes must be positive")

    @property
    def drift_count(self):
        return self.s0 // 2 if self.drift is None else self.drift


def lowrank_from_factors(u, vt_cols):
    """Low-rank matrix from explicit factors: u (n x r) times vt_cols
    (r x T)."""
    return np.asarray(u, dtype=float) @ np.asarray(vt_cols, dtype=float)


def gen_sequence(cfg: SynthConfig, rng=None):
    """Generate (low_rank, sparse) matrices of shape n x (d + q).

    The low-rank part is a product of standard-normal factors. The first
    sparse column is standard normal on a uniformly random support of size
    s0; each later column redraws `drift` uniformly chosen coordinates, and
    whenever the support exceeds s0 + cap it is reset to exactly s0 by
    zeroing uniformly chosen nonzero positions.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    cols = cfg.d + cfg.q
    low = lowrank_from_factors(
        rng.standard_normal((cfg.n, cfg.r)),
        rng.standard_normal((cols, cfg.r)).T,
    )

    sparse = np.zeros((cfg.n, cols))
    x = np.zeros(cfg.n)
    support = rng.choice(cfg.n, size=cfg.s0, replace=False)
    x[support] = rng.standard_normal(cfg.s0)
    sparse[:, 0] = x
    for t in range(1, cols):
        x = x.copy()
        if cfg.drift_count > 0:
            moved = rng.choice(cfg.n, size=cfg.drift_count, replace=False)
            x[moved] = rng.standard_normal(cfg.drift_count)
        nnz = np.flatnonzero(x)
        if nnz.size > cfg.s0 + cfg.cap:
            drop = rng.choice(nnz, size=nnz.size - cfg.s0, replace=False)
            x[drop] = 0.0
        sparse[:, t] = x
    return low, sparse


@dataclass
class PhaseGrid:
    """Monte-Carlo success counts over a (support size, measurement count)
    grid, with the three measurement-bound curves per support size."""

    s0_values: list
    m_values: list
    trials: int
    successes: np.ndarray        # (len(s0), len(m)) int counts
    bound_nl1: np.ndarray        # per s0
    bound_l1l1: np.ndarray
    bound_l1: np.ndarray
    method: str = "nl1"

    def validate(self):
        if self.successes.shape != (len(self.s0_values), len(self.m_values)):
            raise ValueError("success grid shape mismatch")
        if np.any(self.successes < 0) or np.any(self.successes > self.trials):
            raise ValueError("success counts outside [0, trials]")

    def rows(self):
        """CSV data rows: s0, m, trials, successes, and the three bounds."""
        out = []
        for i, s0 in enumerate(self.s0_values):
            for k, m in enumerate(self.m_values):
                out.append((
                    s0, m, self.trials, int(self.successes[i, k]),
                    float(self.bound_nl1[i]), float(self.bound_l1l1[i]),
                    float(self.bound_l1[i]),
                ))
        return out


def _method_side_info(method, n, j):
    if method == "nl1":
        return SideInfoSet.uniform(np.zeros((j, n)))
    if method == "l1l1":
        return SideInfoSet.uniform(np.zeros((1, n)))
    if method == "l1":
        return SideInfoSet.uniform(np.zeros((0, n)))
    raise ValueError(f"unknown method {method!r}")


def _trial_bounds(x_true, priors, z_latest, eps, n):
    """Bound triple for one test instance, using the true signal and its
    actual prior vectors (oracle weights)."""
    si = update_weights(x_true, SideInfoSet.uniform(priors), eps)
    inp = BoundInputs.from_signal(x_true, priors, si.beta, eps, rho=RHO_NL1)
    b_nl1 = bound_nl1(inp, noisy=True)
    b_l1l1 = noisy_bound(bound_l1l1(n, x_true, z_latest), RHO_L1L1)
    s0 = int(np.sum(np.abs(x_true) > 1e-12))
    b_l1 = noisy_bound(bound_l1(n, s0), RHO_L1)
    return b_nl1, b_l1l1, b_l1


def run_cell_trial(cfg: SynthConfig, m, j, method, solver_cfg, rng,
                   grade_all=False, want_bounds=True):
    """One Monte-Carlo trial: fresh sequence, batch bootstrap on the
    training columns, online separation over the test columns.

    Returns (graded successes, graded instances, bound triple or None).
    Solver failures count as unrecovered instances, not aborts.
    """
    low, sparse = gen_sequence(cfg, rng=rng)
    signal = low + sparse
    if m == cfg.n:
        meas_proto = None
    else:
        meas_proto = MeasurementModel.gaussian(cfg.n, m, rng)

    prior, si = bootstrap_prior(signal[:, :cfg.d], j=j)
    if method != "nl1":
        si = _method_side_info(method, cfg.n, j)

    good = 0
    graded = 0
    bounds_out = None
    for t in range(cfg.d, cfg.d + cfg.q):
        x_true = sparse[:, t]
        col = signal[:, t]
        if meas_proto is None:
            meas = MeasurementModel.identity(col)
        else:
            meas = meas_proto.with_signal(col)
        try:
            res, si, prior = corpca_step(meas, si, prior, solver_cfg)
            err = np.linalg.norm(res.x_hat - x_true)
            err /= max(np.linalg.norm(x_true), np.finfo(float).tiny)
            ok = err <= SUCCESS_REL_ERR
        except DivergenceError:
            ok = False
        last = t == cfg.d + cfg.q - 1
        if grade_all or last:
            graded += 1
            good += int(ok)
        if last and want_bounds:
            priors_true = sparse[:, t - j:t].T
            bounds_out = _trial_bounds(
                x_true, priors_true, sparse[:, t - 1], solver_cfg.eps, cfg.n
            )
    return good, graded, bounds_out


def run_phase_grid(cfg: SynthConfig, s0_list, m_list, trials, seed,
                   j=3, method="nl1", grade_all=False, solver_cfg=None):
    """Monte-Carlo success grid over (s0, m) cells with bound overlays.

    Each cell runs `trials` independent trials with per-trial RNG substreams
    spawned from the master seed, so results are deterministic and
    independent of any trial-level parallelism. Bound curves are averaged
    over the cell's trials at the smallest m (they do not depend on m).
    """
    if not s0_list or not m_list or trials < 1:
        raise ValueError("s0_list, m_list must be nonempty and trials >= 1")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    root = np.random.SeedSequence(seed)
    streams = root.spawn(len(s0_list) * len(m_list) * trials)

    successes = np.zeros((len(s0_list), len(m_list)), dtype=int)
    graded_per_cell = None
    bsum = np.zeros((len(s0_list), 3))
    bcount = np.zeros(len(s0_list), dtype=int)

    workers = int(os.environ.get("CORPCA_THREADS", "1"))
    jobs = []
    for i, s0 in enumerate(s0_list):
        for k, m in enumerate(m_list):
            for t in range(trials):
                idx = (i * len(m_list) + k) * trials + t
                jobs.append((i, k, t, s0, m, idx))

    def _run(job):
        i, k, t, s0, m, idx = job
        cell_cfg = SynthConfig(
            n=cfg.n, r=cfg.r, d=cfg.d, q=cfg.q, s0=s0,
            drift=cfg.drift, cap=cfg.cap, seed=cfg.seed,
        )
        scfg = solver_cfg or SolverConfig(
            lam=1.0 / np.sqrt(cfg.n), tol=2e-10, max_iter=1000,
            adaptive_weights=(method == "nl1"),
        )
        rng = np.random.default_rng(streams[idx])
        want = k == 0
        return job, run_cell_trial(cell_cfg, m, j, method, scfg, rng,
                                   grade_all=grade_all, want_bounds=want)

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run, jobs))
    else:
        results = [_run(job) for job in jobs]

    for (i, k, t, s0, m, idx), (good, graded, btriple) in results:
        successes[i, k] += good
        if graded_per_cell is None:
            graded_per_cell = graded
        if btriple is not None:
            bsum[i] += np.asarray(btriple)
            bcount[i] += 1

    bavg = bsum / np.maximum(bcount, 1)[:, None]
    grid = PhaseGrid(
        s0_values=list(s0_list), m_values=list(m_list),
        trials=graded_per_cell * trials,
        successes=successes,
        bound_nl1=bavg[:, 0], bound_l1l1=bavg[:, 1], bound_l1=bavg[:, 2],
        method=method,
    )
    grid.validate()
    return grid


def roc_eval(x_hat, mask_true, thresholds):
    """ROC points for magnitude-thresholded foreground detection.

    For each threshold, a coordinate is detected when |x_hat| exceeds it;
    returns (fpr, tpr) pairs sorted by threshold descending. Raises
    ValueError when the true mask is empty (true-positive rate undefined).
    """
    x_hat = np.asarray(x_hat, dtype=float)
    mask_true = np.asarray(mask_true, dtype=bool)
    if x_hat.shape != mask_true.shape:
        raise ValueError("estimate and mask lengths differ")
    pos = int(mask_true.sum())
    if pos == 0:
        raise ValueError("true mask is empty; TPR undefined")
    neg = mask_true.size - pos
    mags = np.abs(x_hat)
    out = []
    for theta in sorted(thresholds, reverse=True):
        detected = mags > theta
        tp = int(np.sum(detected & mask_true))
        fp = int(np.sum(detected & ~mask_true))
        fpr = fp / neg if neg else 0.0
        out.append((fpr, tp / pos))
    return out


def best_f1(x_hat, mask_true):
    """Best achievable F1 of magnitude thresholding over all cutoffs."""
    mags = np.abs(np.asarray(x_hat, dtype=float))
    mask = np.asarray(mask_true, dtype=bool)
    pos = int(mask.sum())
    if pos == 0:
        raise ValueError("true mask is empty")
    order = np.argsort(-mags, kind="stable")
    tp = np.cumsum(mask[order])
    k = np.arange(1, mags.size + 1)
    f1 = 2.0 * tp / (k + pos)
    return float(f1.max())
