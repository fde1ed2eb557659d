"""Closed-form minimum-measurement calculators for sparse recovery: plain l1,
l1 with a single side-information signal, and weighted multi-prior l1."""

from dataclasses import dataclass, field

import numpy as np

# Entries at or below this magnitude count as zero when measuring supports.
SUPPORT_ATOL = 1e-12

# Default noise-robustness factors for the three bound families, chosen to
# place the curves inside the empirically observed transition regions.
RHO_NL1 = 0.8 / 3
RHO_L1L1 = 0.6 / 3
RHO_L1 = 0.4 / 3


@dataclass
class BoundInputs:
    """Inputs of the multi-prior bound: ambient dimension, per-prior support
    sizes s_j = ||x - z_j||_0, mixture weights, the diagonal weights
    restricted to each difference's support, the smoothing constant, and the
    smallest per-prior weight scale eta_hat."""

    n: int
    s: list
    beta: np.ndarray
    w_support: list
    eps: float
    eta_hat: float
    rho: float | None = None

    def validate(self):
        if abs(float(np.sum(self.beta)) - 1.0) > 1e-12:
            raise ValueError("mixture weights must sum to 1")
        if any(sj < 0 or sj > self.n for sj in self.s):
            raise ValueError("support sizes must lie in [0, n]")
        if self.eta_hat <= 0:
            raise ValueError("eta_hat must be positive")
        if self.rho is not None and not (0.0 < self.rho < 1.0):
            raise ValueError("rho must lie in (0, 1)")

    @classmethod
    def from_signal(cls, x, z, beta, eps, rho=None):
        """Evaluate the bound inputs for a signal and its prior vectors.

        x may be the true signal (oracle weights) or a solver estimate; the
        formulas are the same either way.
        """
        alpha, eta_hat, s, w_support = _alpha_eta_parts(x, z, beta, eps)
        del alpha
        return cls(
            n=int(np.asarray(x).size),
            s=s,
            beta=np.asarray(beta, dtype=float),
            w_support=w_support,
            eps=float(eps),
            eta_hat=eta_hat,
            rho=rho,
        )


def _stack_priors(x, z):
    x = np.asarray(x, dtype=float)
    z = np.atleast_2d(np.asarray(z, dtype=float)) if len(z) else \
        np.zeros((0, x.size))
    return x, np.vstack([np.zeros((1, x.size)), z])


def _alpha_eta_parts(x, z, beta, eps):
    if eps <= 0:
        raise ValueError("smoothing constant must be positive")
    x, zfull = _stack_priors(x, z)
    beta = np.asarray(beta, dtype=float)
    if beta.size != zfull.shape[0]:
        raise ValueError(
            f"{beta.size} mixture weights for {zfull.shape[0]} priors"
        )
    resid = np.abs(x[None, :] - zfull)
    eta = x.size / (1.0 / (resid + eps)).sum(axis=1)
    eta_hat = float(eta.min())
    s = []
    w_support = []
    for jrow, etaj in zip(resid, eta):
        on = jrow > SUPPORT_ATOL
        s.append(int(on.sum()))
        w_support.append(etaj / (jrow[on] + eps))
    alpha = (eps / eta_hat) ** 2 * sum(
        bj * float(np.sum(wj**2)) for bj, wj in zip(beta, w_support)
    )
    return alpha, eta_hat, s, w_support


def compute_alpha_eta(x, z, beta, eps):
    """Weight-scale summary (alpha, eta_hat, support sizes) for a signal and
    its priors.

    For each prior j the weight scale is eta_j = n / sum_i 1/(|x_i-z_ji|+eps),
    the on-support weights are eta_j/(|x_i-z_ji|+eps), and
    alpha = (eps/eta_hat)^2 * sum_j beta_j * sum of squared on-support weights
    with eta_hat the smallest eta_j.
    """
    alpha, eta_hat, s, _ = _alpha_eta_parts(x, z, beta, eps)
    return alpha, eta_hat, s


def _check_sbar(n, sbar):
    if sbar <= 0 or sbar >= n:
        raise ValueError(
            f"effective support {sbar} outside (0, {n}); log term undefined"
        )


def bound_nl1(inp: BoundInputs, noisy=False):
    """Minimum measurement count for weighted multi-prior l1 recovery.

    Noiseless: 2*alpha*log(n/sbar) + 1.4*sbar + 1 with sbar the
    beta-weighted mean support size. Noisy (slowly-changing low-rank part):
    divide the log and support terms by rho and use a 3/(2 rho) constant.
    Returned as a real; callers round up to an integer measurement count.
    """
    inp.validate()
    sbar = float(np.dot(inp.beta, inp.s))
    _check_sbar(inp.n, sbar)
    alpha = (inp.eps / inp.eta_hat) ** 2 * sum(
        bj * float(np.sum(wj**2)) for bj, wj in zip(inp.beta, inp.w_support)
    )
    base = 2.0 * alpha * np.log(inp.n / sbar) + 1.4 * sbar
    if not noisy:
        return base + 1.0
    rho = RHO_NL1 if inp.rho is None else inp.rho
    if not (0.0 < rho < 1.0):
        raise ValueError("rho must lie in (0, 1)")
    return (base + 1.5) / rho


def bound_l1(n, s0):
    """Minimum measurement count for plain l1 recovery of an s0-sparse
    signal in dimension n: 2*s0*log(n/s0) + 1.4*s0 + 1."""
    _check_sbar(n, s0)
    return 2.0 * s0 * np.log(n / s0) + 1.4 * s0 + 1.0


def bound_l1l1(n, x, z):
    """Minimum measurement count for l1 recovery aided by one side-information
    signal z, driven by how well z predicts the signs and support of x.

    With bad = |{i: z_i != x_i = 0}| - |{i: z_i = x_i != 0}| and
    good = |{i: x_i > 0, x_i > z_i} union {i: x_i < 0, x_i < z_i}|, the bound
    is 2*good*log(n/(s0 + bad/2)) + 1.4*(s0 + bad/2) + 1.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.shape != z.shape:
        raise ValueError("signal and side information must have equal length")
    xz = np.abs(x - z) <= SUPPORT_ATOL      # z_i == x_i
    xnz = np.abs(x) > SUPPORT_ATOL
    s0 = int(xnz.sum())
    xi = int((~xz & ~xnz).sum()) - int((xz & xnz).sum())
    hbar = int(np.sum(((x > SUPPORT_ATOL) & (x > z))
                      | ((x < -SUPPORT_ATOL) & (x < z))))
    seff = s0 + xi / 2.0
    _check_sbar(n, seff)
    return 2.0 * hbar * np.log(n / seff) + 1.4 * seff + 1.0


def noisy_bound(noiseless_value, rho):
    """Noise-robust variant of a noiseless bound: (value - 1 + 3/2) / rho."""
    if not (0.0 < rho < 1.0):
        raise ValueError("rho must lie in (0, 1)")
    return (noiseless_value + 0.5) / rho
