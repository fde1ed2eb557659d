"""Dense linear-algebra primitives: thin SVD, rank-one-append incremental SVD,
and singular value thresholding."""

import numpy as np

# A direction delta with norm below this (relative to the appended column) is
# treated as lying in the span of the existing factors.
DEFICIENCY_RTOL = 1e-10

# Re-factor from scratch when accumulated products drift this far from
# orthonormality.
ORTHO_DRIFT_TOL = 1e-6


class ThinSvd:
    """Thin SVD factors (u, s, v) with u, v orthonormal-column matrices and
    s the nonincreasing nonnegative singular values, so that the factored
    matrix is u @ diag(s) @ v.T."""

    __slots__ = ("u", "s", "v")

    def __init__(self, u, s, v):
        self.u = u
        self.s = s
        self.v = v

    @property
    def rank(self):
        return self.s.size

    def matrix(self):
        """Reconstruct the factored matrix."""
        return (self.u * self.s) @ self.v.T

    def ortho_drift(self):
        """Worst-case deviation of u and v from orthonormal columns."""
        du = np.max(np.abs(self.u.T @ self.u - np.eye(self.u.shape[1])))
        dv = np.max(np.abs(self.v.T @ self.v - np.eye(self.v.shape[1])))
        return max(du, dv)


def _fix_signs(u, v):
    """Make the largest-magnitude entry of each u column nonnegative.

    SVD factor pairs are sign-ambiguous; pinning the sign makes results
    comparable across code paths.
    """
    flip = u[np.abs(u).argmax(axis=0), np.arange(u.shape[1])] < 0
    u[:, flip] *= -1.0
    v[:, flip] *= -1.0
    return u, v


def thin_svd(a):
    """Thin SVD of a dense matrix.

    Returns a ThinSvd with min(n, c) singular triples for an n x c input.
    Raises ValueError on non-finite entries.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"expected a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    u, v = _fix_signs(u, vt.T.copy())
    return ThinSvd(u, s, v)


def append_core(u, s, w):
    """Core pieces of the SVD update for appending column w to a factored
    matrix with left factor u (n x r, orthonormal) and singular values s.

    Writes the widened matrix as [u d_unit] @ core @ blkdiag(v, 1).T where
    core = [[diag(s), e], [0, |delta|]], e = u.T w, delta = w - u e, and
    returns (d_unit, cu, cs, cv) from the small (r+1) x (r+1) core SVD
    core = cu @ diag(cs) @ cv.T.

    When delta is negligible (w in the span of u) the returned d_unit is
    None, the zero bottom-right entry is used instead of |delta|, and the
    trailing zero singular direction is dropped, so cu is (r+1) x r and the
    result keeps rank r.
    """
    r = s.size
    e = u.T @ w
    delta = w - u @ e
    dnorm = float(np.linalg.norm(delta))
    deficient = dnorm <= DEFICIENCY_RTOL * max(1.0, float(np.linalg.norm(w)))

    core = np.zeros((r + 1, r + 1))
    core[:r, :r] = np.diag(s)
    core[:r, r] = e
    core[r, r] = 0.0 if deficient else dnorm
    cu, cs, cvt = np.linalg.svd(core)
    cv = cvt.T
    if deficient:
        # The zero last row of the core forces the dropped direction's left
        # vector onto the appended axis, so the kept cu columns have zero
        # last entry and the assembled left factor stays orthonormal.
        return None, cu[:, :r], cs[:r], cv[:, :r]
    return delta / dnorm, cu, cs, cv


def inc_svd(prior, w):
    """SVD of [b w] from the thin SVD of b (n x d) and a new column w.

    Only a ((d+1) x (d+1)) dense SVD is computed; the large factors are
    updated by multiplication. Raises ValueError on dimension mismatch or
    non-finite input.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size != prior.u.shape[0]:
        raise ValueError(
            f"appended column has length {w.size}, expected {prior.u.shape[0]}"
        )
    if not np.all(np.isfinite(w)):
        raise ValueError("appended column contains non-finite entries")

    d_unit, cu, cs, cv = append_core(prior.u, prior.s, w)
    c = prior.v.shape[0]
    if d_unit is None:
        u_new = prior.u @ cu[:-1, :]
        v_ext = np.zeros((c + 1, prior.v.shape[1] + 1))
        v_ext[:c, :-1] = prior.v
        v_ext[c, -1] = 1.0
        v_new = v_ext @ cv
    else:
        u_new = prior.u @ cu[:-1, :] + np.outer(d_unit, cu[-1, :])
        v_ext = np.zeros((c + 1, cv.shape[0]))
        v_ext[:c, : prior.v.shape[1]] = prior.v
        v_ext[c, -1] = 1.0
        v_new = v_ext @ cv
    u_new, v_new = _fix_signs(u_new, v_new)
    return ThinSvd(u_new, cs, v_new)


def svt(a, tau):
    """Singular value thresholding: shrink the singular values of a by tau.

    Exact proximal operator of tau * nuclear norm at a.
    """
    if tau < 0:
        raise ValueError("threshold must be nonnegative")
    f = thin_svd(a)
    return (f.u * np.maximum(f.s - tau, 0.0)) @ f.v.T
