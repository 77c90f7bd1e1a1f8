"""Exact combinatorial coefficients and classical orthogonal polynomials.

Coefficients are carried as :class:`fractions.Fraction` and only turned into
floating point where a value is finally evaluated. Polynomial values use the
usual three-term recurrences in the working precision of the supplied
context. Hermite polynomials follow the physicists' convention.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import special as sp

from .errors import DomainError
from .mpnum import PrecisionContext, resolve, to_mpf


def _rat(a) -> Fraction:
    return a if isinstance(a, Fraction) else Fraction(a)


def pochhammer(a, n: int) -> Fraction:
    """Rising factorial (a)_n = a (a+1) ... (a+n-1), exactly."""
    if n < 0:
        raise DomainError("pochhammer needs n >= 0")
    a = _rat(a)
    out = Fraction(1)
    for j in range(n):
        out *= a + j
    return out


def double_factorial(n: int) -> int:
    """n!! with the conventions (-1)!! = 0!! = 1."""
    if n < -1:
        raise DomainError(f"double factorial undefined for {n}")
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


@lru_cache(maxsize=None)
def laguerre_coeff(n: int, k: int, i: int) -> Fraction:
    """Coefficient of x**i in the generalized Laguerre polynomial L_n^(k)."""
    if not 0 <= i <= n:
        raise DomainError(f"need 0 <= i <= n, got i={i}, n={n}")
    num = pochhammer(n - i + 1, k + i) * (-1) ** i
    return num / (math.factorial(k + i) * math.factorial(i))


@lru_cache(maxsize=None)
def hermite_coeffs(n: int) -> tuple:
    """Integer coefficients of H_n, lowest degree first."""
    prev, cur = (1,), (0, 2)
    if n == 0:
        return prev
    for j in range(1, n):
        nxt = [0] * (j + 2)
        for d, c in enumerate(cur):
            nxt[d + 1] += 2 * c
        for d, c in enumerate(prev):
            nxt[d] -= 2 * j * c
        prev, cur = cur, tuple(nxt)
    return cur


@lru_cache(maxsize=None)
def hermite_imag_coeffs(n: int) -> tuple:
    """Coefficients of (-i)^n H_n(i x): same magnitudes as H_n, all >= 0."""
    return tuple(abs(c) for c in hermite_coeffs(n))


def jacobi(n: int, a, b, x, ctx: PrecisionContext | None = None):
    """Jacobi polynomial P_n^(a,b)(x)."""
    ctx = resolve(ctx)
    a, b, x = to_mpf(ctx, a), to_mpf(ctx, b), to_mpf(ctx, x)
    if not (a > -1 and b > -1):
        raise DomainError("Jacobi parameters must exceed -1")
    p0 = ctx.mp.one
    if n == 0:
        return p0
    p1 = (a + 1) + (a + b + 2) * (x - 1) / 2
    for j in range(2, n + 1):
        s = 2 * j + a + b
        c1 = 2 * j * (j + a + b) * (s - 2)
        c2 = (s - 1) * (s * (s - 2) * x + a * a - b * b)
        c3 = 2 * (j + a - 1) * (j + b - 1) * s
        p0, p1 = p1, (c2 * p1 - c3 * p0) / c1
    return p1


def laguerre(n: int, k, x, ctx: PrecisionContext | None = None):
    """Generalized Laguerre polynomial L_n^(k)(x)."""
    ctx = resolve(ctx)
    k, x = to_mpf(ctx, k), to_mpf(ctx, x)
    p0 = ctx.mp.one
    if n == 0:
        return p0
    p1 = 1 + k - x
    for j in range(1, n):
        p0, p1 = p1, ((2 * j + 1 + k - x) * p1 - (j + k) * p0) / (j + 1)
    return p1


def legendre(n: int, x, ctx: PrecisionContext | None = None):
    ctx = resolve(ctx)
    x = to_mpf(ctx, x)
    p0, p1 = ctx.mp.one, x
    if n == 0:
        return p0
    for j in range(1, n):
        p0, p1 = p1, ((2 * j + 1) * x * p1 - j * p0) / (j + 1)
    return p1


def legendre_all(nmax: int, x, ctx: PrecisionContext | None = None) -> list:
    """[P_0(x), ..., P_nmax(x)] from a single recurrence pass."""
    ctx = resolve(ctx)
    x = to_mpf(ctx, x)
    out = [ctx.mp.one, x][: nmax + 1]
    for j in range(1, nmax):
        out.append(((2 * j + 1) * x * out[j] - j * out[j - 1]) / (j + 1))
    return out


def hermite(n: int, x, ctx: PrecisionContext | None = None):
    """Physicists' Hermite polynomial H_n(x)."""
    ctx = resolve(ctx)
    x = to_mpf(ctx, x)
    p0, p1 = ctx.mp.one, 2 * x
    if n == 0:
        return p0
    for j in range(1, n):
        p0, p1 = p1, 2 * x * p1 - 2 * j * p0
    return p1


def hermite_imag(n: int, x, ctx: PrecisionContext | None = None):
    """Real-valued modified Hermite polynomial (-i)^n H_n(i x).

    Obeys h_{n+1} = 2 x h_n + 2 n h_{n-1}; every coefficient is nonnegative.
    """
    ctx = resolve(ctx)
    x = to_mpf(ctx, x)
    p0, p1 = ctx.mp.one, 2 * x
    if n == 0:
        return p0
    for j in range(1, n):
        p0, p1 = p1, 2 * x * p1 + 2 * j * p0
    return p1


_FAMILIES = {
    "jacobi": lambda n, x, ctx, a, b: jacobi(n, a, b, x, ctx),
    "laguerre": lambda n, x, ctx, k: laguerre(n, k, x, ctx),
    "legendre": lambda n, x, ctx: legendre(n, x, ctx),
    "hermite": lambda n, x, ctx: hermite(n, x, ctx),
}


def eval_poly(family: str, n: int, x, ctx: PrecisionContext | None = None, **params):
    """Dispatch by family name: ``eval_poly("jacobi", 2, x, ctx, a=0.5, b=1.5)``."""
    try:
        fn = _FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown polynomial family {family!r}") from None
    return fn(n, x, resolve(ctx), **params)


def _jacobi_pair(coeffs, x, p1_start):
    """P_n and P_{n-1} at x from precomputed recurrence coefficients."""
    p0 = x * 0 + 1
    p1 = p1_start(x)
    for u, v, w in coeffs:
        p0, p1 = p1, (u * x + v) * p1 - w * p0
    return p1, p0


@lru_cache(maxsize=64)
def _gauss_jacobi_cached(n: int, a: Fraction, b: Fraction, bits: int):
    ctx = PrecisionContext(work_bits=bits)
    mp = ctx.mp
    af, bf = float(a), float(b)
    guesses, _ = sp.roots_jacobi(n, af, bf)
    A, B = to_mpf(ctx, a), to_mpf(ctx, b)
    s = 2 * n + A + B
    # P_j = (u_j x + v_j) P_{j-1} - w_j P_{j-2}, coefficients exact in Fraction first
    coeffs = []
    for j in range(2, n + 1):
        sj = 2 * j + a + b
        c1 = 2 * j * (j + a + b) * (sj - 2)
        coeffs.append(tuple(to_mpf(ctx, q) for q in (
            (sj - 1) * sj * (sj - 2) / c1,
            (sj - 1) * (a * a - b * b) / c1,
            2 * (j + a - 1) * (j + b - 1) * sj / c1,
        )))
    h1, h0 = (A + B + 2) / 2, (A - B) / 2

    def first(x):
        return h1 * x + h0

    def derivative(x, pn, pm):
        # (2n+a+b)(1-x^2) P_n' = n[(a-b) - (2n+a+b)x] P_n + 2(n+a)(n+b) P_{n-1}
        return (n * ((A - B) - s * x) * pn + 2 * (n + A) * (n + B) * pm) / (s * (1 - x * x))

    eps = mp.ldexp(1, -bits + 8)
    symmetric = a == b
    nodes = []
    for i, g in enumerate(np.sort(guesses)):
        if symmetric and i >= (n + 1) // 2:
            nodes.append(-nodes[n - 1 - i])
            continue
        x = mp.mpf(float(g))
        for _ in range(60):
            pn, pm = _jacobi_pair(coeffs, x, first) if n > 1 else (first(x), x * 0 + 1)
            dx = pn / derivative(x, pn, pm)
            x -= dx
            if abs(dx) < eps:
                break
        nodes.append(x)
    logc = (
        mp.loggamma(n + A + 1) + mp.loggamma(n + B + 1) - mp.loggamma(n + A + B + 1)
        - mp.loggamma(n + 1) + (A + B + 1) * mp.ln(2)
    )
    const = mp.exp(logc)
    weights = []
    for i, x in enumerate(nodes):
        if symmetric and i >= (n + 1) // 2:
            weights.append(weights[n - 1 - i])
            continue
        pn, pm = _jacobi_pair(coeffs, x, first) if n > 1 else (first(x), x * 0 + 1)
        dp = derivative(x, pn, pm)
        weights.append(const / ((1 - x * x) * dp * dp))
    return tuple(nodes), tuple(weights)


def gauss_jacobi(n: int, a, b, ctx: PrecisionContext | None = None):
    """Nodes and weights of the n-point Gauss rule for (1-x)^a (1+x)^b on [-1, 1].

    Double-precision roots from scipy seed a Newton refinement carried out
    at the working precision of ``ctx``. Results are cached per
    (n, a, b, precision).
    """
    ctx = resolve(ctx)
    a, b = _rat(a), _rat(b)
    if not (a > -1 and b > -1):
        raise DomainError("Gauss-Jacobi exponents must exceed -1")
    if n < 1:
        raise DomainError("need at least one node")
    return _gauss_jacobi_cached(n, a, b, ctx.work_bits)


def gauss_legendre(n: int, ctx: PrecisionContext | None = None):
    return gauss_jacobi(n, 0, 0, ctx)
