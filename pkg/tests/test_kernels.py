"""Backend equivalence and algebraic invariants of the computational core."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskfusion import _kernels as K
from riskfusion._kernels import pure

def test_compiled_backend_is_active():
    # the build always compiles the extension; pure is only an import-time net
    assert K.BACKEND == "compiled"


def hazards(rng, n=94, scale=0.02):
    return rng.uniform(0.0, scale, n)


# ---------------------------------------------------------------------------
# transmission table


def test_transmission_rows_normalize():
    T = pure.TRANSMISSION
    assert T.shape == (4, 4, 4)
    np.testing.assert_allclose(T.sum(axis=0), np.ones((4, 4)), atol=1e-15)


def test_transmission_backends_identical():
    np.testing.assert_array_equal(np.asarray(K.TRANSMISSION), pure.TRANSMISSION)


def test_transmission_noncarrier_parents_give_noncarrier_child():
    assert pure.TRANSMISSION[0, 0, 0] == 1.0
    assert pure.TRANSMISSION[1, 0, 0] == 0.0


def test_transmission_matches_per_locus_product():
    # child inherits each locus independently; carrier push is m/2 + f/2 - mf/4
    T = pure.TRANSMISSION

    def t1(c, m, f):
        p = 1.0 - (1.0 - m / 2.0) * (1.0 - f / 2.0)
        return p if c else 1.0 - p

    for c in range(4):
        for m in range(4):
            for f in range(4):
                want = t1(c & 1, m & 1, f & 1) * t1(c >> 1, m >> 1, f >> 1)
                assert T[c, m, f] == pytest.approx(want, abs=1e-15)


# ---------------------------------------------------------------------------
# peel_posterior: pure vs compiled on random inputs


def random_peel_inputs(rng, n_members=6):
    prior = rng.dirichlet(np.ones(4))
    prior_partner = rng.dirichlet(np.ones(4))
    L = rng.uniform(0.01, 1.0, (n_members, 4))
    codes = [
        pure.G_PROBAND,
        pure.G_MOTHER,
        pure.G_FATHER,
        pure.G_SIBLING,
        pure.G_CHILD,
        pure.G_MAT_GRANDMOTHER,
        pure.G_MAT_GRANDFATHER,
        pure.G_MAT_AUNT_UNCLE,
        pure.G_PAT_GRANDMOTHER,
        pure.G_PAT_GRANDFATHER,
        pure.G_PAT_AUNT_UNCLE,
    ]
    groups = rng.choice(codes, n_members).astype(np.int64)
    groups[0] = pure.G_PROBAND
    flags = (
        bool(rng.random() < 0.7),
        bool(rng.random() < 0.5),
        bool(rng.random() < 0.5),
    )
    return prior, prior_partner, L, groups, flags


def test_peel_backends_agree():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(300):
        prior, prw, L, groups, (mp, mm, pp) = random_peel_inputs(rng)
        a = pure.peel_posterior(prior, prw, L, groups, mp, mm, pp)
        b = K.peel_posterior(prior, prw, L, groups, mp, mm, pp)
        worst = max(worst, float(np.max(np.abs(a - b))))
    assert worst < 1e-14


def test_peel_accepts_readonly_inputs():
    rng = np.random.default_rng(8)
    prior, prw, L, groups, (mp, mm, pp) = random_peel_inputs(rng)
    for arr in (prior, prw, L, groups):
        arr.flags.writeable = False
    a = pure.peel_posterior(prior, prw, L, groups, mp, mm, pp)
    b = K.peel_posterior(prior, prw, L, groups, mp, mm, pp)
    np.testing.assert_allclose(a, b, atol=1e-15)


def test_peel_uniform_likelihood_returns_prior():
    prior = np.array([0.7, 0.15, 0.1, 0.05])
    L = np.ones((1, 4))
    groups = np.array([pure.G_PROBAND], dtype=np.int64)
    for backend in (pure, K):
        post = backend.peel_posterior(prior, prior, L, groups, False, False, False)
        np.testing.assert_allclose(post, prior, atol=1e-15)


def test_peel_zero_likelihood_raises():
    prior = np.array([1.0, 0.0, 0.0, 0.0])
    L = np.array([[0.0, 1.0, 1.0, 1.0]])
    groups = np.array([pure.G_PROBAND], dtype=np.int64)
    for backend in (pure, K):
        with pytest.raises(ValueError):
            backend.peel_posterior(prior, prior, L, groups, False, False, False)


# ---------------------------------------------------------------------------
# cumulative_risk


def test_cumulative_backends_agree():
    rng = np.random.default_rng(11)
    for _ in range(200):
        hb = hazards(rng)
        hd = hazards(rng, scale=0.01)
        a = int(rng.integers(0, 80))
        tau = int(rng.integers(1, 94 - a + 1))
        x = pure.cumulative_risk(hb, hd, a, tau)
        y = K.cumulative_risk(hb, hd, a, tau)
        assert x == pytest.approx(y, abs=1e-15)


def test_cumulative_risk_accepts_readonly():
    hb = np.full(94, 0.01)
    hd = np.full(94, 0.002)
    hb.flags.writeable = False
    hd.flags.writeable = False
    assert K.cumulative_risk(hb, hd, 40, 10) == pytest.approx(
        pure.cumulative_risk(hb, hd, 40, 10), abs=1e-16
    )


def test_cumulative_risk_closed_form_constant_hazard():
    # constant hazards make the sum a finite geometric series
    hb = np.full(94, 0.03)
    hd = np.full(94, 0.01)
    a, tau = 30, 12
    q = 1.0 - 0.03 - 0.01
    want = 0.03 * (1.0 - q**tau) / (1.0 - q)
    for backend in (pure, K):
        assert backend.cumulative_risk(hb, hd, a, tau) == pytest.approx(want, rel=1e-13)


@given(
    seed=st.integers(0, 10_000),
    a=st.integers(0, 80),
    tau=st.integers(1, 14),
)
@settings(max_examples=120, deadline=None)
def test_cumulative_risk_properties(seed, a, tau):
    rng = np.random.default_rng(seed)
    hb = hazards(rng)
    hd = hazards(rng, scale=0.01)
    r = K.cumulative_risk(hb, hd, a, tau)
    assert 0.0 <= r <= 1.0
    if tau > 1:
        assert r >= K.cumulative_risk(hb, hd, a, tau - 1) - 1e-15
    # all-cause mass never exceeds 1
    dead = pure.cumulative_risk(hd, hb, a, tau)
    assert r + dead <= 1.0 + 1e-12


def test_cumulative_batch_matches_scalar():
    rng = np.random.default_rng(13)
    hb = hazards(rng)
    hd = hazards(rng, scale=0.01)
    ages = np.arange(20, 60, dtype=np.int64)
    for backend in (pure, K):
        got = backend.cumulative_risk_batch(hb, hd, ages, 8)
        want = [backend.cumulative_risk(hb, hd, int(a), 8) for a in ages]
        np.testing.assert_allclose(got, want, atol=1e-16)


# ---------------------------------------------------------------------------
# modified_risk


def test_modified_backends_agree():
    rng = np.random.default_rng(17)
    for _ in range(200):
        hb = hazards(rng)
        hd = hazards(rng, scale=0.005)
        a = int(rng.integers(0, 80))
        tau = int(rng.integers(1, 94 - a + 1))
        ru = float(rng.uniform(0.2, 4.0))
        ro = float(rng.uniform(0.2, 4.0))
        x = pure.modified_risk(hb, hd, a, tau, ru, ro)
        y = K.modified_risk(hb, hd, a, tau, ru, ro)
        assert x == pytest.approx(y, abs=1e-15)


def test_modified_risk_unit_scale_reduces_to_cumulative():
    rng = np.random.default_rng(19)
    hb = hazards(rng)
    hd = hazards(rng, scale=0.005)
    for backend in (pure, K):
        assert backend.modified_risk(hb, hd, 35, 20, 1.0, 1.0) == pytest.approx(
            backend.cumulative_risk(hb, hd, 35, 20), abs=1e-14
        )


def test_modified_risk_band_switch_at_fifty():
    # r0_over applies from the year a person turns 50, not before
    hb = np.full(94, 0.02)
    hd = np.zeros(94)
    huge = 30.0
    r_before = pure.modified_risk(hb, hd, 48, 1, huge, 1.0)
    r_after = pure.modified_risk(hb, hd, 49, 1, 1.0, huge)
    assert r_before == pytest.approx(1.0 - (1.0 - 0.02) ** huge, abs=1e-12)
    assert r_after == pytest.approx(1.0 - (1.0 - 0.02) ** huge, abs=1e-12)
    assert pure.modified_risk(hb, hd, 49, 1, huge, 1.0) == pytest.approx(
        0.02, abs=1e-12
    )


def test_modified_risk_nonpositive_survivor_raises():
    hb = np.full(94, 0.5)
    hd = np.full(94, 0.6)
    for backend in (pure, K):
        with pytest.raises(ValueError, match="survivor"):
            backend.modified_risk(hb, hd, 40, 5, 1.0, 1.0)


def test_modified_risk_final_year_survivor_not_checked():
    # the survivor term only matters when another year follows
    hb = np.full(94, 0.5)
    hd = np.full(94, 0.6)
    for backend in (pure, K):
        assert backend.modified_risk(hb, hd, 40, 1, 1.0, 1.0) == pytest.approx(0.5)


def test_modified_batch_matches_scalar():
    rng = np.random.default_rng(23)
    hb = hazards(rng)
    hd = hazards(rng, scale=0.005)
    ages = np.arange(25, 70, dtype=np.int64)
    ru = rng.uniform(0.3, 3.0, len(ages))
    ro = rng.uniform(0.3, 3.0, len(ages))
    for backend in (pure, K):
        got = backend.modified_risk_batch(hb, hd, ages, 6, ru, ro)
        want = [
            backend.modified_risk(hb, hd, int(a), 6, float(u), float(o))
            for a, u, o in zip(ages, ru, ro)
        ]
        np.testing.assert_allclose(got, want, atol=1e-16)


@given(seed=st.integers(0, 10_000), a=st.integers(20, 70), tau=st.integers(1, 20))
@settings(max_examples=120, deadline=None)
def test_modified_risk_monotone_in_scale(seed, a, tau):
    rng = np.random.default_rng(seed)
    hb = hazards(rng)
    hd = hazards(rng, scale=0.002)
    lo = K.modified_risk(hb, hd, a, tau, 0.5, 0.5)
    hi = K.modified_risk(hb, hd, a, tau, 2.0, 2.0)
    assert 0.0 <= lo <= hi <= 1.0
