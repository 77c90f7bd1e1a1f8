import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from hyperkernel.errors import DomainError
from hyperkernel.mpnum import PrecisionContext, to_mpf
from hyperkernel.orthopoly import (
    double_factorial,
    eval_poly,
    gauss_jacobi,
    gauss_legendre,
    hermite,
    hermite_coeffs,
    hermite_imag,
    jacobi,
    laguerre,
    laguerre_coeff,
    legendre,
    legendre_all,
    pochhammer,
)

H = Fraction(1, 2)


def test_pochhammer():
    assert pochhammer(3, 2) == 12
    assert pochhammer(Fraction(7, 3), 0) == 1
    assert pochhammer(H, 3) == Fraction(15, 8)
    assert pochhammer(-2, 3) == 0
    with pytest.raises(DomainError):
        pochhammer(1, -1)


def test_double_factorial():
    assert [double_factorial(n) for n in (-1, 0, 1, 5, 6)] == [1, 1, 1, 15, 48]
    with pytest.raises(DomainError):
        double_factorial(-2)


def test_laguerre_coeff_examples(ctx):
    assert laguerre_coeff(2, 5, 0) == 21
    assert laguerre_coeff(1, 0, 1) == -1
    x = to_mpf(ctx, "0.7")
    s = sum(to_mpf(ctx, laguerre_coeff(3, 5, i)) * x ** i for i in range(4))
    assert abs(s - laguerre(3, 5, x, ctx)) < ctx.tol
    with pytest.raises(DomainError):
        laguerre_coeff(2, 1, 3)


def test_laguerre_coeffs_match_recurrence(ctx):
    for n in range(9):
        for k in range(7):
            for xs in ("0.05", "1.3", "7.5"):
                x = to_mpf(ctx, xs)
                s = sum(to_mpf(ctx, laguerre_coeff(n, k, i)) * x ** i for i in range(n + 1))
                ref = laguerre(n, k, x, ctx)
                assert abs(s - ref) <= ctx.tol * max(1, abs(ref)) * 10 ** 3


def test_eval_poly_examples(ctx):
    assert eval_poly("legendre", 0, "0.37", ctx) == 1
    assert eval_poly("hermite", 2, 1, ctx) == 2
    assert eval_poly("laguerre", 1, 2, ctx, k=3) == 2
    with pytest.raises(ValueError):
        eval_poly("chebyshev", 1, 0, ctx)


def _jacobi_series(n, a, b, x):
    # (a+1)_n / n! * 2F1(-n, n+a+b+1; a+1; (1-x)/2), exactly in rationals
    z = (1 - x) / 2
    total = Fraction(0)
    for j in range(n + 1):
        total += (pochhammer(-n, j) * pochhammer(n + a + b + 1, j)
                  / (pochhammer(a + 1, j) * math.factorial(j))) * z ** j
    return pochhammer(a + 1, n) / math.factorial(n) * total


def test_jacobi_against_series(ctx):
    ref = _jacobi_series(2, H, Fraction(3, 2), Fraction(3, 10))
    val = eval_poly("jacobi", 2, "0.3", ctx, a=H, b=Fraction(3, 2))
    assert abs(val / to_mpf(ctx, ref) - 1) < ctx.tol
    for n in range(7):
        for a, b in [(H, H), (Fraction(5, 2), H), (1, 1), (Fraction(3, 2), Fraction(3, 2))]:
            ref = to_mpf(ctx, _jacobi_series(n, a, b, Fraction(-2, 7)))
            assert abs(jacobi(n, a, b, to_mpf(ctx, Fraction(-2, 7)), ctx) - ref) < ctx.tol * max(1, abs(ref))
    with pytest.raises(DomainError):
        jacobi(2, -1, 0, 0, ctx)


def test_hermite_families(ctx):
    assert hermite_coeffs(3) == (0, -12, 0, 8)
    x = to_mpf(ctx, "0.6")
    for n in range(8):
        ref = sum(c * x ** d for d, c in enumerate(hermite_coeffs(n)))
        assert abs(hermite(n, x, ctx) - ref) < ctx.tol * max(1, abs(ref))
        # (-i)^n H_n(i x) from mpmath's complex Hermite
        h = ctx.mp.hermite(n, 1j * x) * (-1j) ** n
        assert abs(hermite_imag(n, x, ctx) - h.real) < ctx.tol * max(1, abs(h))


def test_legendre_all_matches_single(ctx):
    x = to_mpf(ctx, "-0.41")
    vals = legendre_all(9, x, ctx)
    assert len(vals) == 10
    for n, v in enumerate(vals):
        assert v == legendre(n, x, ctx)
    assert legendre_all(0, x, ctx) == [1]


def test_legendre_orthogonality(ctx):
    xs, ws = gauss_legendre(12, ctx)
    for m in range(9):
        for n in range(9):
            s = sum(w * legendre(m, x, ctx) * legendre(n, x, ctx) for x, w in zip(xs, ws))
            ref = Fraction(2, 2 * n + 1) if m == n else 0
            assert abs(s - to_mpf(ctx, ref)) < ctx.tol


@pytest.mark.parametrize("a,b", [(H, H), (H, Fraction(5, 2)), (Fraction(5, 2), Fraction(3, 2)), (1, 1),
                                 (Fraction(3, 2), Fraction(3, 2))])
def test_jacobi_orthogonality(ctx, a, b):
    xs, ws = gauss_jacobi(8, a, b, ctx)
    mp = ctx.mp
    A, B = to_mpf(ctx, a), to_mpf(ctx, b)
    for m in range(7):
        for n in range(7):
            s = sum(w * jacobi(m, a, b, x, ctx) * jacobi(n, a, b, x, ctx) for x, w in zip(xs, ws))
            if m != n:
                assert abs(s) < ctx.tol
            else:
                norm = (mp.power(2, A + B + 1) / (2 * n + A + B + 1) * mp.gamma(n + A + 1)
                        * mp.gamma(n + B + 1) / (mp.gamma(n + A + B + 1) * mp.factorial(n)))
                assert abs(s / norm - 1) < ctx.tol


def test_gauss_jacobi_symmetry_and_moments(ctx):
    mp = ctx.mp
    xs, ws = gauss_jacobi(9, Fraction(3, 2), Fraction(3, 2), ctx)
    assert xs[4] == 0 or abs(xs[4]) < mp.ldexp(1, -240)
    for i in range(9):
        assert xs[i] == -xs[8 - i] and ws[i] == ws[8 - i]
    # zeroth moment of (1-x)^a (1+x)^b is 2^(a+b+1) B(a+1, b+1)
    xs, ws = gauss_jacobi(5, H, Fraction(5, 2), ctx)
    ref = mp.power(2, 4) * mp.beta(mp.mpf(3) / 2, mp.mpf(7) / 2)
    assert abs(mp.fsum(ws) / ref - 1) < ctx.tol
    with pytest.raises(DomainError):
        gauss_jacobi(4, -1, 0, ctx)
    with pytest.raises(DomainError):
        gauss_jacobi(0, 0, 0, ctx)


def test_single_node_rule(ctx):
    xs, ws = gauss_jacobi(1, 0, 0, ctx)
    assert xs[0] == 0 and ws[0] == 2


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 8), st.integers(0, 6),
       st.fractions(min_value=0, max_value=20, max_denominator=97))
def test_laguerre_sum_property(n, k, x):
    c = PrecisionContext(128)
    exact = sum(laguerre_coeff(n, k, i) * x ** i for i in range(n + 1))
    v = laguerre(n, k, x, c)
    assert abs(v - to_mpf(c, exact)) <= c.mp.ldexp(1, -100) * max(1, abs(v), float(x) ** n * 10 ** n)
