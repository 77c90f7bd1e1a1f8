import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from hyperkernel.errors import DomainError, PoleError, TruncationError
from hyperkernel.hypfun import (
    HALF,
    THREE_HALVES,
    PFQParams,
    hyp1f1,
    hyp2f1,
    hyp2f2,
    hyp3f3,
    pcf_dneg,
    pfq,
    sph_bessel_i,
    sph_bessel_i_all,
    tricomi_u,
)
from hyperkernel.mpnum import PrecisionContext, to_mpf
from hyperkernel.oracle import integrate_semi_infinite, oracle_context
from hyperkernel.orthopoly import pochhammer


def test_pfq_head_and_terminating(ctx):
    assert pfq(PFQParams((1, 2), (3, 4), 0), ctx) == 1
    assert abs(hyp2f1(-1, 2, 3, "0.6", ctx) - to_mpf(ctx, "0.6")) < ctx.tol


def test_hyp1f1_closed_form(ctx):
    mp = ctx.mp
    z = to_mpf(ctx, "0.8")
    assert abs(hyp1f1(1, 2, z, ctx) / ((mp.exp(z) - 1) / z) - 1) < ctx.tol


def test_pfq_against_mpmath(ctx):
    mp = ctx.mp
    cases = [
        ((Fraction(7, 2), Fraction(9, 4)), (Fraction(5, 2),), "0.81"),
        ((Fraction(-3, 2), 4), (Fraction(1, 2), Fraction(9, 2)), "3.5"),
        ((1, 1, 6), (4, Fraction(7, 2), Fraction(9, 2)), "12.5"),
        ((Fraction(-5, 2),), (Fraction(1, 2),), "40"),
    ]
    for up, lo, z in cases:
        v = pfq(PFQParams(up, lo, z), ctx)
        ref = mp.hyper([to_mpf(ctx, a) for a in up], [to_mpf(ctx, b) for b in lo], to_mpf(ctx, z))
        assert abs(v / ref - 1) < ctx.tol


def test_pfq_errors(ctx):
    with pytest.raises(PoleError):
        hyp1f1(1, -2, "0.5", ctx)
    with pytest.raises(DomainError):
        hyp2f1(1, 1, 2, "1.5", ctx)
    with pytest.raises(DomainError):
        pfq(PFQParams((1, 1, 1), (2,), "0.1"), ctx)
    with pytest.raises(TruncationError):
        hyp1f1(1, 2, 50, PrecisionContext(128, max_series_terms=20))


def test_terminating_lower_pole_is_allowed(ctx):
    # the series stops at j = 2 before the lower parameter -3 bites
    v = hyp1f1(-2, -3, 1, ctx)
    assert abs(v - to_mpf(ctx, Fraction(11, 6))) < ctx.tol


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 6), st.fractions(min_value=Fraction(1, 2), max_value=5, max_denominator=8),
       st.fractions(min_value=-3, max_value=3, max_denominator=16))
def test_terminating_equals_exact_sum(n, b, z):
    c = PrecisionContext(128)
    exact = sum(pochhammer(-n, j) / (pochhammer(b, j) * math.factorial(j)) * z ** j for j in range(n + 1))
    v = hyp1f1(-n, b, z, c)
    assert abs(v - to_mpf(c, exact)) <= c.mp.ldexp(1, -100) * max(1, abs(v))


@settings(max_examples=25, deadline=None)
@given(st.fractions(min_value=Fraction(-5, 2), max_value=6, max_denominator=4),
       st.fractions(min_value=Fraction(1, 4), max_value=6, max_denominator=4),
       st.fractions(min_value=-4, max_value=4, max_denominator=8))
def test_contiguous_relation(a, b, z):
    c = PrecisionContext(160)
    lhs = hyp1f1(a, b, z, c) - hyp1f1(a - 1, b, z, c)
    rhs = to_mpf(c, z) / to_mpf(c, b) * hyp1f1(a, b + 1, z, c)
    scale = max(abs(hyp1f1(a, b, z, c)), 1)
    assert abs(lhs - rhs) <= c.mp.ldexp(1, -130) * scale


def test_tricomi_examples(ctx):
    mp = ctx.mp
    for z in ("0.1", "3", "25"):
        assert abs(tricomi_u(0, HALF, z, ctx) - 1) < ctx.tol
    z = to_mpf(ctx, "0.4")
    lhs = tricomi_u(1, THREE_HALVES, z, ctx)
    rhs = tricomi_u(HALF, HALF, z, ctx) / mp.sqrt(z)
    assert abs(lhs / rhs - 1) < ctx.tol
    with pytest.raises(DomainError):
        tricomi_u(1, 2, 1, ctx)
    with pytest.raises(DomainError):
        tricomi_u(1, HALF, 0, ctx)


def test_tricomi_integral_representation(ctx):
    # U(a, b, z) = 1/Gamma(a) int_0^inf e^{-zt} t^{a-1} (1+t)^{b-a-1} dt, here b - a - 1 = -7/2
    oc = oracle_context(ctx)
    om = oc.mp
    z = om.mpf("0.25")
    q = integrate_semi_infinite(lambda t: om.exp(-z * t) * t * t * om.power(1 + t, om.mpf(-7) / 2), ctx=oc)
    assert q.converged
    assert abs(tricomi_u(3, HALF, "0.25", ctx) / (q.value / 2) - 1) < ctx.tol


def test_tricomi_routes_agree(ctx):
    mp = ctx.mp
    for a in (Fraction(7, 3), Fraction(5, 2), 4):
        for z in ("300", "420"):
            k = tricomi_u(a, HALF, z, ctx, method="kummer")
            s = tricomi_u(a, HALF, z, ctx, method="asymptotic")
            ref = mp.hyperu(to_mpf(ctx, a), mp.mpf(1) / 2, to_mpf(ctx, z))
            assert abs(k / s - 1) < ctx.tol and abs(k / ref - 1) < ctx.tol


def test_tricomi_asymptotic_refuses_short_series(ctx):
    # at z = 22 the divergent series bottoms out near e^-22, far above 2^-256
    with pytest.raises(TruncationError):
        tricomi_u(Fraction(7, 3), HALF, 22, ctx, method="asymptotic")
    v = tricomi_u(Fraction(7, 3), HALF, 22, ctx)
    ref = ctx.mp.hyperu(ctx.mp.mpf(7) / 3, ctx.mp.mpf(1) / 2, 22)
    assert abs(v / ref - 1) < ctx.tol


def test_pcf_examples(ctx):
    mp = ctx.mp
    z = mp.mpf(1)
    ref = mp.exp(z * z / 4) * mp.sqrt(mp.pi / 2) * mp.erfc(z / mp.sqrt(2))
    assert abs(pcf_dneg(0, 1, ctx) / ref - 1) < ctx.tol
    with pytest.raises(DomainError):
        pcf_dneg(-1, 1, ctx)
    with pytest.raises(DomainError):
        pcf_dneg(2, 0, ctx)


def test_pcf_against_tricomi(ctx):
    # D_{-n-1}(z) = 2^{-(n+1)/2} e^{-z^2/4} U((n+1)/2, 1/2, z^2/2)
    mp = ctx.mp
    n, z = 3, mp.mpf("0.8")
    ref = mp.power(2, -mp.mpf(n + 1) / 2) * mp.exp(-z * z / 4) * tricomi_u(Fraction(n + 1, 2), HALF, z * z / 2, ctx)
    assert abs(pcf_dneg(n, z, ctx) / ref - 1) < ctx.tol


def test_pcf_integral_representation(ctx):
    oc = oracle_context(ctx)
    om = oc.mp
    z = om.mpf("0.5")
    q = integrate_semi_infinite(lambda t: t * t * om.exp(-t * t / 2 - z * t), ctx=oc)
    ref = om.exp(-z * z / 4) * q.value / 2
    assert abs(pcf_dneg(2, "0.5", ctx) / ref - 1) < ctx.tol


def test_pcf_large_argument(ctx):
    mp = ctx.mp
    for n in (0, 4, 9):
        z = mp.mpf(30)
        assert abs(pcf_dneg(n, z, ctx) / mp.pcfd(-n - 1, z) - 1) < ctx.tol


def test_bessel_closed_forms(ctx):
    mp = ctx.mp
    z = mp.mpf(2)
    assert abs(sph_bessel_i(0, z, ctx) / (mp.sqrt(2 / (mp.pi * z)) * mp.sinh(z)) - 1) < ctx.tol
    z = mp.mpf(1)
    ref = mp.sqrt(2 / (mp.pi * z)) * (mp.cosh(z) - mp.sinh(z) / z)
    assert abs(sph_bessel_i(1, z, ctx) / ref - 1) < ctx.tol


def test_bessel_dual_route_small_argument(ctx):
    s = sph_bessel_i(4, "0.01", ctx, method="series")
    c = sph_bessel_i(4, "0.01", ctx, method="closed")
    assert abs(s / c - 1) < ctx.mp.mpf("1e-25")


def test_bessel_errors(ctx):
    with pytest.raises(DomainError):
        sph_bessel_i(-1, 1, ctx)
    with pytest.raises(DomainError):
        sph_bessel_i(1, 0, ctx)
    with pytest.raises(ValueError):
        sph_bessel_i(1, 1, ctx, method="magic")


@pytest.mark.parametrize("z", ["0.3", "0.99", "1.7", "12", "80"])
def test_bessel_recurrence(ctx, z):
    zz = to_mpf(ctx, z)
    for m in range(1, 9):
        lhs = sph_bessel_i(m - 1, zz, ctx) - sph_bessel_i(m + 1, zz, ctx)
        rhs = (2 * m + 1) / zz * sph_bessel_i(m, zz, ctx)
        assert abs(lhs / rhs - 1) < ctx.tol


def test_hyp2f2_hyp3f3_wrappers(ctx):
    mp = ctx.mp
    z = to_mpf(ctx, "0.7")
    assert abs(hyp2f2(1, 2, 3, 4, z, ctx) - mp.hyp2f2(1, 2, 3, 4, z)) < ctx.tol
    assert abs(hyp3f3(1, 1, 2, 3, 4, 5, z, ctx) - mp.hyper([1, 1, 2], [3, 4, 5], z)) < ctx.tol


@pytest.mark.parametrize("z", ["1e-6", "0.3", "2", "40"])
def test_sph_bessel_all_orders(ctx128, z):
    vals = sph_bessel_i_all(8, z, ctx128)
    assert len(vals) == 9
    for m, v in enumerate(vals):
        assert abs(v / sph_bessel_i(m, z, ctx128) - 1) < ctx128.tol
    assert sph_bessel_i_all(0, z, ctx128) == [sph_bessel_i(0, z, ctx128)]
