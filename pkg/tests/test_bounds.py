import numpy as np
import pytest

from corpca.bounds import (
    BoundInputs,
    bound_l1,
    bound_l1l1,
    bound_nl1,
    compute_alpha_eta,
    noisy_bound,
)
from corpca.prox import SideInfoSet, update_weights


def oracle_beta(x, z, eps):
    si = update_weights(x, SideInfoSet.uniform(z), eps)
    return si.beta


class TestBoundL1:
    def test_reference_value(self):
        assert bound_l1(500, 10) == pytest.approx(93.24, abs=0.01)

    def test_unit_case(self):
        assert bound_l1(np.e, 1) == pytest.approx(4.4, abs=1e-9)

    def test_monotone_in_support(self):
        n = 500
        vals = [bound_l1(n, s) for s in np.linspace(1, n / np.e, 60)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            bound_l1(100, 0)
        with pytest.raises(ValueError):
            bound_l1(100, 100)


class TestAlphaEta:
    def test_perfect_prior(self):
        x = np.zeros(6)
        x[:2] = (1.0, -2.0)
        alpha, eta_hat, s = compute_alpha_eta(x, [x.copy()], [0.0, 1.0], 0.8)
        # the matched prior has zero residual everywhere: eta_j = eps
        assert eta_hat == pytest.approx(0.8)
        assert s == [2, 0]
        assert alpha == pytest.approx(0.0)

    def test_hand_evaluation(self):
        x = np.array([1.0, 0.0, 0.0, 0.0])
        alpha, eta_hat, s = compute_alpha_eta(x, [np.zeros(4)], [0.0, 1.0], 1.0)
        # eta = 4 / (1/2 + 3) = 8/7, on-support weight = (8/7)/2 = 4/7
        assert s == [1, 1]
        assert eta_hat == pytest.approx(8.0 / 7.0)
        assert alpha == pytest.approx((1.0 / eta_hat) ** 2 * (4.0 / 7.0) ** 2)

    def test_eps_sweep_is_continuous(self):
        rng = np.random.default_rng(0)
        x = np.zeros(50)
        x[rng.choice(50, 5, replace=False)] = rng.standard_normal(5)
        z = [x + 0.1 * rng.standard_normal(50)]
        beta = np.array([0.4, 0.6])
        values = []
        for eps in np.linspace(0.2, 2.0, 40):
            inp = BoundInputs.from_signal(x, z, beta, eps)
            values.append(bound_nl1(inp))
        steps = np.abs(np.diff(values))
        assert steps.max() <= 0.25 * (1 + np.abs(values[0]))


class TestBoundNl1:
    def test_collapses_to_l1_bound(self):
        # one term, unit weights on the support, eps/eta = 1
        n, s0 = 500, 10
        inp = BoundInputs(
            n=n, s=[s0], beta=np.array([1.0]),
            w_support=[np.ones(s0)], eps=1.0, eta_hat=1.0,
        )
        assert bound_nl1(inp) == pytest.approx(bound_l1(n, s0), abs=1e-9)

    def test_noisy_limit_matches_algebra(self):
        inp = BoundInputs(
            n=500, s=[10], beta=np.array([1.0]),
            w_support=[np.ones(10)], eps=1.0, eta_hat=1.0,
            rho=1 - 1e-9,
        )
        noiseless = bound_nl1(inp)
        assert bound_nl1(inp, noisy=True) - (noiseless + 0.5) <= 1e-5

    def test_rho_identity(self):
        rng = np.random.default_rng(3)
        x = np.zeros(200)
        x[rng.choice(200, 12, replace=False)] = rng.standard_normal(12)
        z = [x + 0.2 * rng.standard_normal(200), np.zeros(200)]
        beta = oracle_beta(x, z, 0.8)
        for rho in (0.1, 0.4, 0.9):
            inp = BoundInputs.from_signal(x, z, beta, 0.8, rho=rho)
            noiseless = bound_nl1(inp)
            noisy = bound_nl1(inp, noisy=True)
            assert noisy == pytest.approx((noiseless - 1) / rho + 1.5 / rho, abs=1e-9)
            assert noisy == pytest.approx(noisy_bound(noiseless, rho), abs=1e-9)

    def test_perfect_prior_beats_l1(self):
        rng = np.random.default_rng(4)
        n = 500
        for s0 in (10, 30, 50):
            x = np.zeros(n)
            x[rng.choice(n, s0, replace=False)] = rng.standard_normal(s0)
            beta = oracle_beta(x, [x.copy()], 0.8)
            inp = BoundInputs.from_signal(x, [x.copy()], beta, 0.8)
            assert bound_nl1(inp) < bound_l1(n, s0)

    def test_domain_error_when_support_exceeds_n(self):
        inp = BoundInputs(
            n=10, s=[10], beta=np.array([1.0]),
            w_support=[np.ones(10)], eps=1.0, eta_hat=1.0,
        )
        with pytest.raises(ValueError):
            bound_nl1(inp)


def count_sets_reference(x, z, atol=1e-12):
    """Independent set-counting for the single-side-information bound."""
    xi = 0
    hbar = 0
    s0 = 0
    for xv, zv in zip(x, z):
        x_zero = abs(xv) <= atol
        eq = abs(xv - zv) <= atol
        if not x_zero:
            s0 += 1
        if (not eq) and x_zero:
            xi += 1
        if eq and not x_zero:
            xi -= 1
        if (xv > atol and xv > zv) or (xv < -atol and xv < zv):
            hbar += 1
    return s0, xi, hbar


class TestBoundL1L1:
    def test_perfect_side_information(self):
        rng = np.random.default_rng(5)
        n, s0 = 300, 12
        x = np.zeros(n)
        x[rng.choice(n, s0, replace=False)] = rng.standard_normal(s0)
        assert bound_l1l1(n, x, x.copy()) == pytest.approx(1.4 * (s0 / 2) + 1)

    def test_zero_side_information_collapses_to_l1(self):
        rng = np.random.default_rng(6)
        n, s0 = 300, 12
        x = np.zeros(n)
        x[rng.choice(n, s0, replace=False)] = rng.standard_normal(s0)
        assert bound_l1l1(n, x, np.zeros(n)) == pytest.approx(bound_l1(n, s0))

    def test_against_independent_counting(self):
        rng = np.random.default_rng(7)
        n, s0 = 500, 30
        x = np.zeros(n)
        sup = rng.choice(n, s0, replace=False)
        x[sup] = rng.standard_normal(s0)
        z = x.copy()
        z[sup[:10]] += rng.standard_normal(10)
        s0_ref, xi, hbar = count_sets_reference(x, z)
        expected = 2 * hbar * np.log(n / (s0_ref + xi / 2)) \
            + 1.4 * (s0_ref + xi / 2) + 1
        assert bound_l1l1(n, x, z) == pytest.approx(expected, abs=1e-9)

    def test_domain_error(self):
        x = np.zeros(4)
        z = np.ones(4)  # s0 = 0, xi = 4 -> seff = 2 ok; make degenerate:
        with pytest.raises(ValueError):
            bound_l1l1(4, np.zeros(2), np.zeros(2))  # seff = 0


class TestNoisyBound:
    def test_rejects_bad_rho(self):
        for rho in (0.0, 1.0, -0.2, 2.0):
            with pytest.raises(ValueError):
                noisy_bound(10.0, rho)
