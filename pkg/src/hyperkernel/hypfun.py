"""Generalized hypergeometric series and the special functions built on them.

Everything here is real-valued. The hypergeometric sum is evaluated with a
cancellation guard: the largest term is tracked and, when the alternating
series destroys more bits than the guard provides, the sum is recomputed at
a precision raised by the measured loss.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import DomainError, PoleError, TruncationError
from .mpnum import (
    PrecisionContext,
    erfcx_fn,
    guarded,
    is_integer,
    is_nonpositive_integer,
    resolve,
    to_mpf,
)
from .orthopoly import hermite, hermite_imag


@dataclass(frozen=True)
class PFQParams:
    upper: tuple
    lower: tuple
    z: object

    def __init__(self, upper: Sequence, lower: Sequence, z):
        object.__setattr__(self, "upper", tuple(upper))
        object.__setattr__(self, "lower", tuple(lower))
        object.__setattr__(self, "z", z)

    def terminating_index(self):
        """Index of the last nonzero term when an upper parameter is -n, else None."""
        ns = [-int(_exact(a)) for a in self.upper if is_nonpositive_integer(_exact(a))]
        return min(ns) if ns else None

    def validate(self, ctx: PrecisionContext):
        stop = self.terminating_index()
        for b in self.lower:
            b = _exact(b)
            if is_nonpositive_integer(b) and (stop is None or stop > -int(b)):
                raise PoleError(f"lower parameter {b} is a pole of the series")
        if stop is None:
            p, q = len(self.upper), len(self.lower)
            if p > q + 1:
                raise DomainError(f"{p}F{q} diverges for every nonzero z")
            if p == q + 1 and abs(to_mpf(ctx, self.z)) >= 1:
                raise DomainError(f"{p}F{q} series needs |z| < 1, got z = {self.z}")


def _exact(x):
    # exact-integer tests must see the parameter as given, not a rounded float
    if isinstance(x, float) and x.is_integer():
        return int(x)
    return x


def _series(params: PFQParams, ectx: PrecisionContext, max_terms: int):
    mp = ectx.mp
    a = [to_mpf(ectx, u) for u in params.upper]
    b = [to_mpf(ectx, v) for v in params.lower]
    z = to_mpf(ectx, params.z)
    stop = params.terminating_index()
    eps = mp.ldexp(1, -ectx.work_bits)
    two_f_one = len(a) == len(b) + 1
    # ratios are erratic until j passes every negative parameter
    jmin = 0
    for c in a + b:
        if c < 0:
            jmin = max(jmin, int(-c) + 2)
    term = mp.one
    total = mp.one
    biggest = mp.one
    small = 0
    j = 0
    while True:
        if stop is not None and j >= stop:
            break
        if z == 0:
            break
        num = mp.one
        for c in a:
            num *= c + j
        den = mp.mpf(j + 1)
        for c in b:
            den *= c + j
        ratio = num * z / den
        term *= ratio
        total += term
        mag = abs(term)
        if mag > biggest:
            biggest = mag
        j += 1
        if stop is not None:
            continue
        if j > jmin and mag <= eps * abs(total):
            small += 1
        else:
            small = 0
        if small >= 3:
            rho = abs(ratio)
            if two_f_one:
                rho = max(rho, abs(z))
            if rho < 1 and mag * rho / (1 - rho) <= eps * abs(total):
                break
        if j >= max_terms:
            raise TruncationError(
                f"hypergeometric series did not converge in {max_terms} terms",
                last_term=mag,
            )
    return total, biggest, j


def pfq(params: PFQParams, ctx: PrecisionContext | None = None):
    """Sum pFq(upper; lower; z) to the working precision of ``ctx``."""
    ctx = resolve(ctx)
    params.validate(ctx)
    value, _, _ = guarded(
        ctx, lambda e: _series(params, e, ctx.max_series_terms)[:2], guard=24
    )
    return value


def hyp1f1(a, b, z, ctx=None):
    return pfq(PFQParams((a,), (b,), z), ctx)


def hyp2f1(a, b, c, z, ctx=None):
    return pfq(PFQParams((a, b), (c,), z), ctx)


def hyp2f2(a1, a2, b1, b2, z, ctx=None):
    return pfq(PFQParams((a1, a2), (b1, b2), z), ctx)


def hyp3f3(a1, a2, a3, b1, b2, b3, z, ctx=None):
    return pfq(PFQParams((a1, a2, a3), (b1, b2, b3), z), ctx)


HALF = Fraction(1, 2)
THREE_HALVES = Fraction(3, 2)


def _as_half(ctx, b):
    v = to_mpf(ctx, b)
    if v == 0.5:
        return HALF
    if v == 1.5:
        return THREE_HALVES
    raise DomainError(f"tricomi_u supports b = 1/2 or 3/2 only, got {b}")


def _tricomi_asymptotic(a, b, z, ctx: PrecisionContext):
    """Large-z expansion z^-a sum (a)_s (a-b+1)_s / s! (-z)^-s, or None.

    Returns None when the divergent series bottoms out before reaching the
    working precision. Terminates exactly when a or a-b+1 is a nonpositive
    integer.
    """
    mp = ctx.mp
    eps = mp.ldexp(1, -ctx.work_bits - 8)
    c = a - b + 1
    term = mp.one
    total = mp.one
    last = mp.inf
    s = 0
    while True:
        f = (a + s) * (c + s)
        if f == 0:
            break
        term *= -f / ((s + 1) * z)
        mag = abs(term)
        total += term
        s += 1
        if mag <= eps * abs(total):
            break
        if mag >= last or s > ctx.max_series_terms:
            return None
        last = mag
    return total * mp.power(z, -a)


def _tricomi_kummer(a, z, ectx: PrecisionContext):
    # U(a, 1/2, z) = sqrt(pi) [M(a,1/2,z)/G(a+1/2) - 2 sqrt(z) M(a+1/2,3/2,z)/G(a)]
    mp = ectx.mp
    root_pi = mp.sqrt(mp.pi)
    r1, r2 = mp.rgamma(a + HALF), mp.rgamma(a)
    t1 = r1 * hyp1f1(a, HALF, z, ectx) if r1 != 0 else mp.zero
    t2 = r2 * hyp1f1(a + HALF, THREE_HALVES, z, ectx) if r2 != 0 else mp.zero
    t1 *= root_pi
    t2 *= 2 * root_pi * mp.sqrt(z)
    return t1 - t2, max(abs(t1), abs(t2))


def tricomi_u(a, b, z, ctx: PrecisionContext | None = None, method: str = "auto"):
    """Confluent hypergeometric function of the second kind, b in {1/2, 3/2}.

    ``method`` is ``"kummer"`` (two 1F1 values), ``"asymptotic"`` (large z)
    or ``"auto"``, which tries the asymptotic series first for z >= 20 and
    falls back to the Kummer decomposition.
    """
    ctx = resolve(ctx)
    b = _as_half(ctx, b)
    z = to_mpf(ctx, z)
    if not z > 0:
        raise DomainError(f"tricomi_u needs z > 0, got {z}")
    if b == THREE_HALVES:
        # U(a, 3/2, z) = z^{-1/2} U(a - 1/2, 1/2, z)
        a_shift = a - HALF if isinstance(a, (int, Fraction)) else to_mpf(ctx, a) - HALF
        return tricomi_u(a_shift, HALF, z, ctx, method) / ctx.mp.sqrt(z)
    if method not in ("auto", "kummer", "asymptotic"):
        raise ValueError(f"unknown method {method!r}")
    if method in ("auto", "asymptotic"):
        a_m = to_mpf(ctx.extra(16), a)
        terminates = is_nonpositive_integer(a) or is_nonpositive_integer(a_m + HALF)
        if method == "asymptotic" or z >= 20 or terminates:
            value = _tricomi_asymptotic(a_m, HALF, to_mpf(ctx.extra(16), z), ctx.extra(16))
            if value is not None:
                return +ctx.mp.convert(value)
            if method == "asymptotic":
                raise TruncationError("asymptotic series cannot reach working precision")

    def compute(ectx):
        return _tricomi_kummer(to_mpf(ectx, a), to_mpf(ectx, z), ectx)

    value, _, _ = guarded(ctx, compute, guard=32)
    return value


def pcf_dneg(n: int, z, ctx: PrecisionContext | None = None):
    """Parabolic cylinder function D_{-n-1}(z) for integer n >= 0 and z > 0.

    Uses the finite Hermite representation with every imaginary factor folded
    into the real modified Hermite polynomial:

        n! D_{-n-1}(z) = e^{-z^2/4} [ 2^{(1-n)/2} sum_s (-1)^{n+s} C(n,s) H_{s-1}(y) h_{n-s}(y)
                                     + (-1)^n sqrt(pi) 2^{-(n+1)/2} erfcx(y) h_n(y) ],
    with y = z/sqrt(2) and h_k(y) = (-i)^k H_k(i y).
    """
    ctx = resolve(ctx)
    if n < 0 or not is_integer(n):
        raise DomainError("pcf_dneg needs an integer n >= 0")
    z = to_mpf(ctx, z)
    if not z > 0:
        raise DomainError(f"pcf_dneg needs z > 0, got {z}")

    def compute(ectx):
        mp = ectx.mp
        zz = to_mpf(ectx, z)
        y = zz / mp.sqrt(2)
        terms = []
        for s in range(1, n + 1):
            c = (-1) ** (n + s) * math.comb(n, s)
            terms.append(c * hermite(s - 1, y, ectx) * hermite_imag(n - s, y, ectx))
        head = mp.power(2, mp.mpf(1 - n) / 2) * mp.fsum(terms)
        tail = (-1) ** n * mp.sqrt(mp.pi) * mp.power(2, -mp.mpf(n + 1) / 2)
        tail *= erfcx_fn(ectx, y) * hermite_imag(n, y, ectx)
        scale = max([abs(tail)] + [abs(t) * mp.power(2, mp.mpf(1 - n) / 2) for t in terms])
        return head + tail, scale

    bracket, _, _ = guarded(ctx, compute, guard=32)
    mp = ctx.mp
    return mp.exp(-z * z / 4) * bracket / mp.factorial(n)


def _bessel_series(m: int, z, ctx: PrecisionContext):
    mp = ctx.mp
    mu = m + mp.mpf(1) / 2
    eps = mp.ldexp(1, -ctx.work_bits - 4)
    term = mp.power(z / 2, mu) * mp.rgamma(mu + 1)
    total = term
    q = z * z / 4
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + mu))
        total += term
        if term <= eps * total and k > q:
            break
        if k > ctx.max_series_terms:
            raise TruncationError("Bessel series exhausted its term budget", last_term=term)
    return total


def _bessel_closed(m: int, z, ectx: PrecisionContext):
    # I_{m+1/2}(z) = [e^z sum (-1)^k a_k z^-k - (-1)^m e^-z sum a_k z^-k] / sqrt(2 pi z)
    mp = ectx.mp
    ez, emz = mp.exp(z), mp.exp(-z)
    pos, neg, scale = mp.zero, mp.zero, mp.zero
    zinv = 1 / z
    zk = mp.one
    for k in range(m + 1):
        ak = Fraction(math.factorial(m + k), 2**k * math.factorial(k) * math.factorial(m - k))
        t = mp.mpf(ak.numerator) / ak.denominator * zk
        pos += (-1) ** k * t
        neg += t
        scale = max(scale, t * ez)
        zk *= zinv
    value = ez * pos - (-1) ** m * emz * neg
    return value / mp.sqrt(2 * mp.pi * z), scale / mp.sqrt(2 * mp.pi * z)


def sph_bessel_i(m: int, z, ctx: PrecisionContext | None = None, method: str = "auto"):
    """Modified Bessel function I_{m+1/2}(z) of half-integer order, z > 0.

    ``method``: ``"series"`` (ascending series, all terms positive),
    ``"closed"`` (finite exponential form, guarded against cancellation) or
    ``"auto"`` (series below z = 1).
    """
    ctx = resolve(ctx)
    if m < 0 or not is_integer(m):
        raise DomainError("sph_bessel_i needs an integer m >= 0")
    m = int(m)
    z = to_mpf(ctx, z)
    if not z > 0:
        raise DomainError(f"sph_bessel_i needs z > 0, got {z}")
    if method == "auto":
        method = "series" if z < 1 else "closed"
    if method == "series":
        return +ctx.mp.convert(_bessel_series(m, to_mpf(ctx.extra(16), z), ctx.extra(16)))
    if method == "closed":
        value, _, _ = guarded(ctx, lambda e: _bessel_closed(m, to_mpf(e, z), e), guard=24)
        return value
    raise ValueError(f"unknown method {method!r}")


def sph_bessel_i_all(mmax: int, z, ctx: PrecisionContext | None = None) -> list:
    """[I_{1/2}(z), I_{3/2}(z), ..., I_{mmax+1/2}(z)] for z > 0.

    The two highest orders are evaluated directly; the rest follow from
    I_{m-1/2} = I_{m+3/2} + (2m+1)/z I_{m+1/2}, where every term is positive.
    """
    ctx = resolve(ctx)
    if mmax < 0 or not is_integer(mmax):
        raise DomainError("sph_bessel_i_all needs an integer mmax >= 0")
    mmax = int(mmax)
    if mmax == 0:
        return [sph_bessel_i(0, z, ctx)]
    ectx = ctx.extra(8)
    z = to_mpf(ectx, z)
    out = [None] * (mmax + 1)
    out[mmax] = sph_bessel_i(mmax, z, ectx)
    out[mmax - 1] = sph_bessel_i(mmax - 1, z, ectx)
    for m in range(mmax - 1, 0, -1):
        out[m - 1] = out[m + 1] + (2 * m + 1) / z * out[m]
    return [+ctx.mp.convert(v) for v in out]

