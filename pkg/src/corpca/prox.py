"""Proximal operators for sparse recovery with multiple weighted-l1 prior
terms, and the adaptive weight updates that go with them."""

import numpy as np

# Tolerances for the side-information invariants: mixture weights sum to 1,
# each per-prior weight vector sums to n.
BETA_SUM_TOL = 1e-12
W_SUM_TOL = 1e-9


class SideInfoSet:
    """Sparse-prior side information: J prior vectors z_j (the zero vector is
    always an implicit extra prior), per-prior positive diagonal weights
    w_j summing to n, and mixture weights beta_j summing to 1."""

    __slots__ = ("z", "w", "beta")

    def __init__(self, z, w, beta):
        self.z = np.asarray(z, dtype=float)
        self.w = np.asarray(w, dtype=float)
        self.beta = np.asarray(beta, dtype=float)

    @classmethod
    def uniform(cls, z, n=None):
        """Build a set from prior vectors with uniform weights.

        z may be a list of vectors or a (J, n) array; J = 0 (no priors
        beyond the implicit zero vector) needs n to fix the dimension
        unless z already carries it as a (0, n) array.
        """
        z = np.asarray(z, dtype=float)
        if z.size == 0 and z.ndim != 2:
            if n is None:
                raise ValueError("n is required when no priors are given")
            z = np.zeros((0, int(n)))
        else:
            z = np.atleast_2d(z)
        j = z.shape[0]
        n = z.shape[1]
        w = np.ones((j + 1, n))
        beta = np.full(j + 1, 1.0 / (j + 1))
        return cls(z, w, beta)

    @property
    def j(self):
        return self.z.shape[0]

    @property
    def n(self):
        return self.z.shape[1]

    def stacked(self):
        """All prior vectors including the implicit zero one, as (J+1, n)."""
        return np.vstack([np.zeros((1, self.n)), self.z])

    def with_uniform_weights(self):
        return SideInfoSet.uniform(self.z, self.n)

    def validate(self):
        if self.w.shape != (self.j + 1, self.n):
            raise ValueError(
                f"weight shape {self.w.shape} != {(self.j + 1, self.n)}"
            )
        if self.beta.shape != (self.j + 1,):
            raise ValueError(
                f"beta shape {self.beta.shape} != {(self.j + 1,)}"
            )
        if abs(self.beta.sum() - 1.0) > BETA_SUM_TOL:
            raise ValueError(f"mixture weights sum to {self.beta.sum()!r}, not 1")
        if np.any(self.beta < 0):
            raise ValueError("mixture weights must be nonnegative")
        if np.any(self.w <= 0):
            raise ValueError("diagonal weights must be positive")
        sums = self.w.sum(axis=1)
        if np.max(np.abs(sums - self.n)) > W_SUM_TOL:
            raise ValueError(f"per-prior weight sums {sums} != n = {self.n}")


def soft_threshold(x, tau):
    """Entrywise shrinkage sign(x) * max(|x| - tau, 0): the proximal operator
    of tau * l1 norm."""
    if tau < 0:
        raise ValueError("threshold must be nonnegative")
    return np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)


def prox_nl1(x, si, tau):
    """Exact minimizer of tau * sum_j beta_j ||W_j (u - z_j)||_1 + 0.5||u - x||^2.

    The objective separates per coordinate into a convex piecewise quadratic
    whose breakpoints are the prior values at that coordinate. Each of the
    J+2 inter-breakpoint intervals has its quadratic minimum at x_i shifted
    by the net signed pull of the l1 terms; clipping that shift into the
    interval and keeping the best candidate gives the exact minimizer.
    """
    if tau < 0:
        raise ValueError("threshold must be nonnegative")
    si.validate()
    x = np.asarray(x, dtype=float)
    if x.shape != (si.n,):
        raise ValueError(f"input length {x.shape} != prior length {si.n}")
    if tau == 0.0:
        return x.copy()

    b = si.stacked()                       # (K, n) breakpoints
    c = tau * si.beta[:, None] * si.w      # (K, n) per-coordinate l1 slopes
    order = np.argsort(b, axis=0)
    bs = np.take_along_axis(b, order, axis=0)
    cs = np.take_along_axis(c, order, axis=0)

    k = bs.shape[0]
    prefix = np.zeros((k + 1, x.size))
    np.cumsum(cs, axis=0, out=prefix[1:])
    drift = 2.0 * prefix - prefix[-1]      # net l1 slope on each interval
    cand = x[None, :] - drift
    inf = np.full((1, x.size), np.inf)
    np.clip(cand, np.vstack([-inf, bs]), np.vstack([bs, inf]), out=cand)

    vals = 0.5 * (cand - x[None, :]) ** 2
    vals += np.sum(
        cs[None, :, :] * np.abs(cand[:, None, :] - bs[None, :, :]), axis=1
    )
    best = vals.argmin(axis=0)
    return cand[best, np.arange(x.size)]


def update_weights(x, si, eps):
    """Refresh the diagonal and mixture weights around the current estimate.

    w_ji is proportional to 1/(|x_i - z_ji| + eps), rescaled so each row sums
    to n; beta_j is proportional to 1/(||W_j (x - z_j)||_1 + eps), rescaled
    to sum to 1. The prior vectors are unchanged.
    """
    if eps <= 0:
        raise ValueError("smoothing constant must be positive")
    x = np.asarray(x, dtype=float)
    resid = np.abs(x[None, :] - si.stacked())
    inv = 1.0 / (resid + eps)
    w = si.n * inv / inv.sum(axis=1, keepdims=True)
    inv_l1 = 1.0 / ((w * resid).sum(axis=1) + eps)
    beta = inv_l1 / inv_l1.sum()
    return SideInfoSet(si.z, w, beta)
