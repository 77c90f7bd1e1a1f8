import mpmath
import pytest
from fractions import Fraction
from hypothesis import given, settings, strategies as st

from hyperkernel.errors import DomainError, PoleError
from hyperkernel.mpnum import (
    PrecisionContext,
    elementary,
    erfc_fn,
    erfcx_fn,
    gamma_fn,
    guarded,
    is_integer,
    is_nonpositive_integer,
    lost_bits,
    to_mpf,
)
from hyperkernel.oracle import integrate_finite, integrate_semi_infinite, oracle_context


def test_context_validation():
    with pytest.raises(ValueError):
        PrecisionContext(32)
    with pytest.raises(ValueError):
        PrecisionContext(128, "0")
    with pytest.raises(ValueError):
        PrecisionContext(128, "1e-10", max_series_terms=0)
    c = PrecisionContext(100, "1e-20")
    assert c.tol_bits == 67
    assert c.extra(28).work_bits == 128
    assert c.with_bits(300).target_rel_tol == "1e-20"


def test_contexts_do_not_leak(ctx, ctx128):
    a = ctx.mp.mpf(1) / 3
    b = ctx128.mp.mpf(1) / 3
    assert a != b
    assert ctx.mp.prec == 256 and ctx128.mp.prec == 128


def test_to_mpf_parses_strings_exactly(ctx):
    assert to_mpf(ctx, "0.3") * 10 == 3
    assert to_mpf(ctx, Fraction(1, 3)) == ctx.mp.mpf(1) / 3
    with pytest.raises(DomainError):
        to_mpf(ctx, 1j)


def test_integer_predicates():
    assert is_integer(3) and is_integer(Fraction(4, 2)) and is_integer("5") and is_integer(2.0)
    assert not is_integer(True) and not is_integer("2.5") and not is_integer(Fraction(1, 2))
    assert is_nonpositive_integer(0) and is_nonpositive_integer("-3")
    assert not is_nonpositive_integer(1) and not is_nonpositive_integer(-0.5)


def test_elementary_examples(ctx):
    mp = ctx.mp
    assert elementary(ctx, "exp", 0) == 1
    assert elementary(ctx, "sqrt", 4) == 2
    e = elementary(ctx, "exp", 1)
    s = elementary(ctx, "sinh", 1)
    assert abs(s - (e - 1 / e) / 2) / s < mp.ldexp(1, -240)
    assert elementary(ctx, "pow", 2, 10) == 1024


@pytest.mark.parametrize("f,x", [("ln", -1), ("ln", 0), ("sqrt", -2)])
def test_elementary_domain(ctx, f, x):
    with pytest.raises(DomainError):
        elementary(ctx, f, x)


def test_elementary_pow_domain(ctx):
    with pytest.raises(DomainError):
        elementary(ctx, "pow", -2, "0.5")
    with pytest.raises(DomainError):
        elementary(ctx, "pow", 0, -1)
    with pytest.raises(ValueError):
        elementary(ctx, "tan", 1)


def test_gamma_examples(ctx):
    mp = ctx.mp
    assert gamma_fn(ctx, 6) == 120
    assert abs(gamma_fn(ctx, Fraction(1, 2)) - mp.sqrt(mp.pi)) < mp.ldexp(1, -250)
    x = to_mpf(ctx, "3.7")
    lhs = gamma_fn(ctx, x + mp.mpf(1) / 2) * gamma_fn(ctx, x)
    rhs = mp.power(2, 1 - 2 * x) * mp.sqrt(mp.pi) * gamma_fn(ctx, 2 * x)
    assert abs(lhs / rhs - 1) < mp.mpf("1e-70")
    for pole in (0, -1, -7):
        with pytest.raises(PoleError):
            gamma_fn(ctx, pole)


def test_erfc_examples(ctx):
    mp = ctx.mp
    assert erfc_fn(ctx, 0) == 1
    x = to_mpf(ctx, "1.3")
    assert abs(erfc_fn(ctx, -x) + erfc_fn(ctx, x) - 2) < mp.ldexp(1, -250)


def test_erfc_against_quadrature(ctx):
    oc = oracle_context(ctx)
    om = oc.mp
    q = integrate_semi_infinite(lambda t: om.exp(-t * t), ctx=oc, a=2)
    assert q.converged
    ref = 2 / om.sqrt(om.pi) * q.value
    assert abs(erfc_fn(ctx, 2) / ref - 1) < ctx.tol


def test_erfcx_large_argument(ctx):
    mp = ctx.mp
    # asymptotic 1/(x sqrt(pi)) (1 - 1/(2x^2) + 3/(4x^4))
    x = mp.mpf(10) ** 6
    approx = 1 / (x * mp.sqrt(mp.pi)) * (1 - 1 / (2 * x * x) + 3 / (4 * x ** 4))
    assert abs(erfcx_fn(ctx, x) / approx - 1) < mp.mpf("1e-30")


def test_lost_bits_and_guarded(ctx):
    assert lost_bits(0, 1) == 0.0
    assert lost_bits(1, 0) == float("inf")
    assert abs(lost_bits(1024, 1) - 10) < 1e-12

    def compute(e):
        mp = e.mp
        big = mp.mpf(10) ** 40
        one_third = mp.mpf(1) / 3
        return (big + one_third) - big, big

    value, bits, lost = guarded(ctx, compute)
    assert abs(value * 3 - 1) < ctx.mp.ldexp(1, -250)
    assert bits - lost >= ctx.work_bits


def test_guarded_exact_zero(ctx):
    value, _, _ = guarded(ctx, lambda e: (e.mp.mpf(5) - 5, e.mp.mpf(5)))
    assert value == 0


def test_precision_raise_keeps_leading_digits():
    lo, hi = PrecisionContext(128), PrecisionContext(256)
    for f, x in [("exp", "1.7"), ("ln", "3.3"), ("sinh", "0.2"), ("cosh", "4")]:
        a, b = elementary(lo, f, x), elementary(hi, f, x)
        assert abs(a / b - 1) < mpmath.mpf(2) ** -120
    assert abs(gamma_fn(lo, "7.25") / gamma_fn(hi, "7.25") - 1) < mpmath.mpf(2) ** -120


@settings(max_examples=40, deadline=None)
@given(st.fractions(min_value=Fraction(1, 10), max_value=50, max_denominator=1000))
def test_gamma_recurrence(x):
    c = PrecisionContext(192)
    assert abs(gamma_fn(c, x + 1) / (to_mpf(c, x) * gamma_fn(c, x)) - 1) < c.mp.ldexp(1, -180)


def test_finite_oracle_smoke(ctx):
    r = integrate_finite(lambda t: ctx.mp.sqrt(1 - t * t), -1, 1, ctx=ctx)
    assert abs(r.value - ctx.mp.pi / 2) < ctx.tol


def test_to_mpf_constants_use_target_precision():

    hi = PrecisionContext(256)
    v = to_mpf(hi, mpmath.pi)
    assert abs(v - hi.mp.pi) < hi.mp.mpf(2) ** -250
    assert to_mpf(PrecisionContext(64), hi.mp.e) == PrecisionContext(64).mp.e
