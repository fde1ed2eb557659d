"""Online sparse + low-rank separation from compressive measurements.

The per-instance solver alternates accelerated proximal steps on the sparse
vector (multi-prior weighted-l1 prox) and on the low-rank column (incremental
SVD followed by singular value thresholding), with continuation on the
proximal scale. A standalone accelerated solver for the sparse-only problem
and a batch principal-component-pursuit solver for bootstrapping the
low-rank prior round out the module.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import ORTHO_DRIFT_TOL, ThinSvd, append_core, thin_svd
from .prox import SideInfoSet, prox_nl1, soft_threshold, update_weights


class DivergenceError(RuntimeError):
    """Raised when an iterate or objective stops being finite."""


@dataclass
class MeasurementModel:
    """A linear measurement operator together with the vector it produced.

    phi is the m x n projection matrix, or None for the identity (full
    observation, m = n). Instances created from the same projection via
    with_signal share a cache holding the spectral norm and the
    row-orthonormalizing factorization.
    """

    phi: np.ndarray | None
    y: np.ndarray
    m: int
    n: int
    _cache: dict = None

    @classmethod
    def from_phi(cls, phi, y, sigma_max=None):
        y = np.asarray(y, dtype=float)
        cache = {}
        if phi is None:
            return cls(None, y, y.size, y.size, cache)
        phi = np.asarray(phi, dtype=float)
        if phi.ndim != 2 or phi.shape[0] != y.size:
            raise ValueError(
                f"projection shape {phi.shape} incompatible with {y.size} "
                "measurements"
            )
        if phi.shape[0] > phi.shape[1]:
            raise ValueError("expected m <= n")
        if sigma_max is not None:
            cache["sigma_max"] = float(sigma_max)
        return cls(phi, y, phi.shape[0], phi.shape[1], cache)

    @classmethod
    def gaussian(cls, n, m, rng, signal=None):
        """Fresh projection with N(0, 1/m) entries; when a signal is given,
        also forms y = phi @ signal."""
        phi = rng.standard_normal((m, n)) / np.sqrt(m)
        y = np.zeros(m) if signal is None else phi @ signal
        return cls.from_phi(phi, y)

    @classmethod
    def identity(cls, signal):
        """Full observation: y is the signal itself."""
        return cls.from_phi(None, signal)

    @property
    def sigma_max(self):
        if self.phi is None:
            return 1.0
        if "sigma_max" not in self._cache:
            self._cache["sigma_max"] = float(np.linalg.norm(self.phi, 2))
        return self._cache["sigma_max"]

    def with_signal(self, signal):
        """Same projection applied to a new signal."""
        y = signal if self.phi is None else self.phi @ signal
        return MeasurementModel(self.phi, np.asarray(y, dtype=float),
                                self.m, self.n, self._cache)

    def whitened(self):
        """Equivalent system with orthonormal measurement rows.

        Factoring phi = R^T Q^T (QR of phi^T) turns y = phi s into
        R^-T y = Q^T s without changing the solution set, and the
        orthonormal rows make phi^T phi a projector, which is the
        conditioning the fixed-step proximal iteration is built around.
        """
        if self.phi is None:
            return self
        if "white" not in self._cache:
            q, r = np.linalg.qr(self.phi.T)
            rinv_t = np.linalg.inv(r).T
            self._cache["white"] = (q.T.copy(), rinv_t, {"sigma_max": 1.0})
        phi_w, rinv_t, wcache = self._cache["white"]
        return MeasurementModel(phi_w, rinv_t @ self.y, self.m, self.n,
                                wcache)

    def apply(self, u):
        return u if self.phi is None else self.phi @ u

    def adjoint(self, r):
        return r if self.phi is None else self.phi.T @ r


def data_gradient(meas, x, v):
    """Gradient of 0.5 ||phi(x + v) - y||^2 with respect to either block
    (the two partial gradients coincide)."""
    return meas.adjoint(meas.apply(x + v) - meas.y)


@dataclass
class SolverConfig:
    """Knobs of the accelerated proximal solvers.

    lam scales the sparse penalty (None: 1/sqrt(n)). eps in (0, 1) is both
    the continuation factor and the weight-smoothing constant. mu_init is
    the starting proximal scale (None: warm start at the peak gradient
    correlation so iterates leave zero progressively; 0 reproduces the
    schedule where the scale sits at mu_bar from the first update on).
    mu_bar is the continuation floor (None: 3e-4 * the warm start value).
    step is the gradient step (None: 1/(2 sigma_max(phi)^2), which is the
    fixed 1/2 step on a whitened system). tol scales the squared
    subgradient-norm stopping test. adaptive_weights turns the
    per-iteration reweighting on (multi-prior mode) or off (plain l1 /
    l1-l1 modes). whiten row-orthonormalizes the measurement system before
    iterating; the raw system is kept for reporting.
    """

    lam: float | None = None
    eps: float = 0.8
    mu_bar: float | None = None
    mu_init: float | None = None
    step: float | None = None
    tol: float = 2e-7
    max_iter: int = 400
    j: int = 3
    adaptive_weights: bool = True
    whiten: bool = True

    def validate(self):
        if not (0.0 < self.eps < 1.0):
            raise ValueError("eps must lie in (0, 1)")
        for name in ("lam", "mu_bar", "mu_init", "step"):
            val = getattr(self, name)
            if val is not None and val < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.tol <= 0 or self.max_iter < 1:
            raise ValueError("tol and max_iter must be positive")

    def resolve(self, meas, resid=None):
        """Concrete (lam, step, mu0, mu_bar) for a measurement instance.

        The warm start puts the first sparse-prox threshold lam * mu0 * step
        at the peak of |phi^T resid| * step (resid defaults to y), so
        iterates leave zero progressively as the scale anneals instead of
        starting dense.
        """
        self.validate()
        lam = 1.0 / np.sqrt(meas.n) if self.lam is None else self.lam
        step = self.step
        if step is None:
            step = 1.0 / (2.0 * meas.sigma_max**2)
        resid = meas.y if resid is None else resid
        warm = 0.99 * float(np.max(np.abs(meas.adjoint(resid)))) / lam
        mu0 = warm if self.mu_init is None else self.mu_init
        # The floor fixes the final shrinkage bias; scaling it by lam keeps
        # that bias proportional to the requested penalty strength.
        mu_bar = 3e-4 * lam * np.sqrt(meas.n) * warm \
            if self.mu_bar is None else self.mu_bar
        if mu_bar <= 0:
            # The continuation floor is also the final proximal scale, so it
            # must stay strictly positive even for an all-zero y.
            mu_bar = np.finfo(float).tiny
        return lam, step, mu0, mu_bar


@dataclass
class SolverState:
    """Iterates and schedule scalars of the accelerated proximal loop."""

    x_prev: np.ndarray
    x_cur: np.ndarray
    v_prev: np.ndarray
    v_cur: np.ndarray
    xi_prev: float
    xi_cur: float
    mu: float
    k: int


@dataclass
class LowRankPrior:
    """Low-rank history summary: an n x d matrix with its thin SVD.

    v_last carries the most recent low-rank column estimate when the prior
    comes out of the online recursion; it warm-starts the next instance
    (the low-rank part changes slowly between instances).
    """

    b: np.ndarray
    svd: ThinSvd
    d: int
    v_last: np.ndarray | None = None

    @classmethod
    def from_matrix(cls, b):
        b = np.asarray(b, dtype=float)
        return cls(b, thin_svd(b), b.shape[1])


@dataclass
class SeparationResult:
    x_hat: np.ndarray
    v_hat: np.ndarray
    iterations: int
    converged: bool
    objective: float


def momentum_next(xi):
    """Accelerated-gradient extrapolation schedule."""
    return (1.0 + np.sqrt(1.0 + 4.0 * xi**2)) / 2.0


def mu_next(mu, eps, mu_bar):
    """Geometric continuation with a floor."""
    return max(eps * mu, mu_bar)


# Directions of the low-rank prior whose singular value is below this
# fraction of the largest are left out of the warm-start fit.
WARM_RANK_RTOL = 0.02


def separation_objective(meas, si, prior, lam, mu, x, v):
    """Value of the separation objective at (x, v): data fit plus
    lam*mu-scaled multi-prior weighted l1 plus mu-scaled nuclear norm of the
    prior matrix widened by v."""
    fit = 0.5 * float(np.sum((meas.apply(x + v) - meas.y) ** 2))
    resid = np.abs(x[None, :] - si.stacked())
    sparse_pen = float(np.dot(si.beta, (si.w * resid).sum(axis=1)))
    _, _, cs, _ = append_core(prior.svd.u, prior.svd.s, v)
    return fit + lam * mu * sparse_pen + mu * float(cs.sum())


def _check_finite(arr, k):
    if not np.all(np.isfinite(arr)):
        raise DivergenceError(f"non-finite iterate at iteration {k}")


def corpca_step(meas, si, prior, cfg, update_low_rank=True):
    """Separate one measurement vector into sparse and low-rank parts and
    roll the priors forward.

    Runs the accelerated proximal loop: joint momentum extrapolation, shared
    data gradient, incremental-SVD + singular-value-thresholding update of
    the low-rank column, multi-prior weighted-l1 prox of the sparse vector,
    per-iteration weight refresh (when adaptive), and continuation on the
    proximal scale. Stops when the squared norm of the prox-residual
    subgradient falls below tol * ||(x, v)||^2.

    Returns (result, new side info with the newest sparse estimate appended,
    new low-rank prior truncated back to d columns). With
    update_low_rank=False the low-rank column is pinned at zero and the
    prior is returned unchanged (sparse-only mode).
    """
    if si.n != meas.n:
        raise ValueError(f"prior length {si.n} != signal length {meas.n}")
    if prior.b.shape != (meas.n, prior.d):
        raise ValueError(
            f"low-rank prior shape {prior.b.shape} != {(meas.n, prior.d)}"
        )
    work = meas.whitened() if cfg.whiten else meas
    ub, sb = prior.svd.u, prior.svd.s

    n = meas.n
    v_init = np.zeros(n)
    if update_low_rank:
        # Seed the low-rank column so the remaining transient is at the
        # sparse part's scale and the annealing threshold covers it: use
        # the previous instance's estimate when chained, otherwise a
        # least-squares fit over the prior's dominant directions
        # (restricting the fit keeps it from absorbing sparse energy).
        y_scale = float(np.linalg.norm(work.y))
        if prior.v_last is not None:
            v_init = prior.v_last
        elif sb.size and sb[0] > 1e-6 * max(1.0, y_scale):
            r_eff = int(np.sum(sb >= WARM_RANK_RTOL * sb[0]))
            r_eff = min(r_eff, max(1, meas.m // 10), prior.d)
            u_r = ub[:, :r_eff]
            phi_u = u_r if work.phi is None else work.phi @ u_r
            coef, *_ = np.linalg.lstsq(phi_u, work.y, rcond=None)
            v_init = u_r @ coef
    lam, step, mu, mu_bar = cfg.resolve(work, work.y - work.apply(v_init))
    si_work = si.with_uniform_weights()

    state = SolverState(
        x_prev=np.zeros(n), x_cur=np.zeros(n),
        v_prev=v_init.copy(), v_cur=v_init,
        xi_prev=1.0, xi_cur=1.0, mu=mu, k=0,
    )
    core = None
    converged = False

    for k in range(cfg.max_iter):
        gamma = (state.xi_prev - 1.0) / state.xi_cur
        xt = state.x_cur + gamma * (state.x_cur - state.x_prev)
        vt = state.v_cur + gamma * (state.v_cur - state.v_prev)
        grad = data_gradient(work, xt, vt)

        if update_low_rank:
            w_col = vt - step * grad
            core = append_core(ub, sb, w_col)
            d_unit, cu, cs, cv = core
            shrunk = np.maximum(cs - state.mu * step, 0.0)
            # Last column of the thresholded widened matrix, assembled from
            # the small factors without forming the big left factor.
            coeff = cu @ (shrunk * cv[-1, :])
            v_new = ub @ coeff[:-1]
            if d_unit is not None:
                v_new += coeff[-1] * d_unit
        else:
            v_new = state.v_cur

        x_new = prox_nl1(xt - step * grad, si_work, state.mu * step * lam)
        _check_finite(x_new, k)
        _check_finite(v_new, k)

        if cfg.adaptive_weights:
            si_work = update_weights(x_new, si_work, cfg.eps)

        grad_new = data_gradient(work, x_new, v_new)
        gx = (xt - x_new) / step + grad_new - grad
        lhs = float(np.sum(gx**2))
        if update_low_rank:
            gv = (vt - v_new) / step + grad_new - grad
            lhs += float(np.sum(gv**2))
        rhs = cfg.tol * float(np.sum(x_new**2) + np.sum(v_new**2))

        state = SolverState(
            x_prev=state.x_cur, x_cur=x_new,
            v_prev=state.v_cur, v_cur=v_new,
            xi_prev=state.xi_cur, xi_cur=momentum_next(state.xi_cur),
            mu=mu_next(state.mu, cfg.eps, mu_bar), k=k + 1,
        )
        # Do not stop before continuation has annealed down to the floor.
        if state.mu <= mu_bar * (1.0 + 1e-12) and (
            lhs < rhs or (rhs == 0.0 and lhs == 0.0)
        ):
            converged = True
            break

    x_hat, v_hat = state.x_cur, state.v_cur

    if si.j > 0:
        z_new = np.vstack([si.z[1:], x_hat[None, :]])
    else:
        z_new = si.z
    si_next = SideInfoSet(z_new, si_work.w, si_work.beta)

    if update_low_rank and core is not None:
        prior_next = _truncate_prior(ub, core, state.mu * step, prior.d)
        prior_next.v_last = v_hat
    else:
        prior_next = prior

    objective = separation_objective(meas, si_work, prior, lam, state.mu,
                                     x_hat, v_hat)
    if not np.isfinite(objective):
        raise DivergenceError(f"non-finite objective at iteration {state.k}")
    result = SeparationResult(x_hat, v_hat, state.k, converged, objective)
    return result, si_next, prior_next


def _truncate_prior(ub, core, tau, d):
    """New low-rank prior: the d largest thresholded singular directions of
    the widened matrix, stored as (left factor) * (shrunk singular values)
    with an identity right factor."""
    d_unit, cu, cs, _ = core
    keep = min(d, cs.size)
    u_top = ub @ cu[:-1, :keep]
    if d_unit is not None:
        u_top += np.outer(d_unit, cu[-1, :keep])
    shrunk = np.maximum(cs[:keep] - tau, 0.0)
    b_new = u_top * shrunk
    if b_new.shape[1] < d:       # degenerate append on a thin prior
        b_new = np.pad(b_new, ((0, 0), (0, d - b_new.shape[1])))
        u_top = np.pad(u_top, ((0, 0), (0, d - u_top.shape[1])))
        shrunk = np.pad(shrunk, (0, d - shrunk.size))
    drift = np.max(np.abs(u_top.T @ u_top - np.eye(d)))
    if drift > ORTHO_DRIFT_TOL:
        return LowRankPrior.from_matrix(b_new)
    return LowRankPrior(b_new, ThinSvd(u_top, shrunk, np.eye(d)), d)


def ramsia_solve(y, phi, si, cfg):
    """Sparse recovery from y = phi x with multiple weighted-l1 prior terms.

    Accelerated proximal iteration on 0.5||phi x - y||^2 plus the multi-prior
    penalty, with per-iteration weight refresh when adaptive and the same
    continuation schedule as the separation solver. With no priors and
    frozen weights this is plain l1 recovery; with one prior, frozen unit
    weights, and equal mixture weights it is l1-l1 recovery.
    """
    meas = MeasurementModel.from_phi(phi, y)
    if si.n != meas.n:
        raise ValueError(f"prior length {si.n} != signal length {meas.n}")
    work = meas.whitened() if cfg.whiten else meas
    lam, step, mu, mu_bar = cfg.resolve(work)
    si_work = si.with_uniform_weights()

    n = meas.n
    x_prev = np.zeros(n)
    x_cur = np.zeros(n)
    xi_prev = xi_cur = 1.0

    for k in range(cfg.max_iter):
        gamma = (xi_prev - 1.0) / xi_cur
        xt = x_cur + gamma * (x_cur - x_prev)
        grad = work.adjoint(work.apply(xt) - work.y)
        x_new = prox_nl1(xt - step * grad, si_work, mu * step * lam)
        _check_finite(x_new, k)
        if cfg.adaptive_weights:
            si_work = update_weights(x_new, si_work, cfg.eps)

        grad_new = work.adjoint(work.apply(x_new) - work.y)
        gx = (xt - x_new) / step + grad_new - grad
        lhs = float(np.sum(gx**2))
        rhs = cfg.tol * float(np.sum(x_new**2))

        x_prev, x_cur = x_cur, x_new
        xi_prev, xi_cur = xi_cur, momentum_next(xi_cur)
        mu = mu_next(mu, cfg.eps, mu_bar)
        if mu <= mu_bar * (1.0 + 1e-12) and (
            lhs < rhs or (rhs == 0.0 and lhs == 0.0)
        ):
            break

    return x_cur


def batch_pcp(m, lam=None, tol=1e-6, max_iter=2000):
    """Batch decomposition of a matrix into low-rank plus sparse parts.

    Accelerated proximal gradient on mu*(||L||_* + lam ||S||_1)
    + 0.5||M - L - S||_F^2 with geometric continuation on mu, run until the
    decomposition reproduces M to tol in relative Frobenius norm.
    """
    m = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains non-finite entries")
    if lam is None:
        lam = 1.0 / np.sqrt(max(m.shape))
    if lam <= 0:
        raise ValueError("lam must be positive")
    m_norm = float(np.linalg.norm(m))
    if m_norm == 0.0:
        return np.zeros_like(m), np.zeros_like(m)

    mu = 0.99 * float(np.linalg.norm(m, 2))
    mu_bar = 1e-9 * mu
    eta = 0.9

    low = np.zeros_like(m)
    spr = np.zeros_like(m)
    low_prev = low.copy()
    spr_prev = spr.copy()
    xi_prev = xi_cur = 1.0

    for k in range(max_iter):
        gamma = (xi_prev - 1.0) / xi_cur
        yl = low + gamma * (low - low_prev)
        ys = spr + gamma * (spr - spr_prev)
        resid = yl + ys - m
        u, s, vt = np.linalg.svd(yl - 0.5 * resid, full_matrices=False)
        low_new = (u * np.maximum(s - 0.5 * mu, 0.0)) @ vt
        spr_new = soft_threshold(ys - 0.5 * resid, 0.5 * lam * mu)
        if not (np.all(np.isfinite(low_new)) and np.all(np.isfinite(spr_new))):
            raise DivergenceError(f"non-finite iterate at iteration {k}")

        low_prev, low = low, low_new
        spr_prev, spr = spr, spr_new
        xi_prev, xi_cur = xi_cur, momentum_next(xi_cur)
        mu = mu_next(mu, eta, mu_bar)
        if float(np.linalg.norm(m - low - spr)) <= tol * m_norm:
            return low, spr

    raise DivergenceError(
        f"decomposition residual above {tol} after {max_iter} iterations"
    )


def bootstrap_prior(training, lam=None, d=None, j=3):
    """Initial priors from a batch of training columns.

    Decomposes the n x d training matrix into low-rank plus sparse parts;
    the low-rank part (with its thin SVD) seeds the low-rank prior and the
    sparse priors start as j zero vectors with uniform weights.
    """
    training = np.asarray(training, dtype=float)
    if d is None:
        d = training.shape[1]
    if training.shape[1] != d:
        raise ValueError(
            f"training has {training.shape[1]} columns, expected {d}"
        )
    low, _ = batch_pcp(training, lam=lam)
    prior = LowRankPrior.from_matrix(low)
    prior.v_last = low[:, -1].copy()
    si = SideInfoSet.uniform(np.zeros((j, training.shape[0])))
    return prior, si
