"""Gaussian-weighted Laguerre and Bessel kernels.

Two families of one-dimensional integrals are handled here.

``L(k; n1, n2; gamma) = int_0^inf exp(-gamma x^2 - x) x^k L_n1^(k)(x) L_n2^(k)(x) dx``
is evaluated either term by term through J(nu, gamma) (the expansion route)
or through the scaled-erfc form with the integer polynomials T and S.

``K(m, p; beta, kappa) = int_0^inf x^p exp(-beta x^2 - x) I_{m+1/2}(kappa x^2) dx``
is evaluated by a positive series in kappa (good for small kappa/beta), by a
closed form built from three auxiliary hypergeometric sums F1, F2, F3 (good
for moderate kappa/beta, but it subtracts large numbers), or by quadrature
of the defining integral as a last resort.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable, Optional

from .errors import DomainError, NumericalError, PoleError, TruncationError
from .hypfun import HALF, THREE_HALVES, hyp1f1, hyp2f1, hyp2f2, hyp3f3, sph_bessel_i, sph_bessel_i_all, tricomi_u
from .mpnum import (
    PrecisionContext,
    erfcx_fn,
    gamma_fn,
    guarded,
    is_integer,
    resolve,
    to_mpf,
)
from .orthopoly import double_factorial, hermite_coeffs, hermite_imag_coeffs, laguerre_coeff

METHODS = ("series", "closed_form", "quadrature_fallback")
SWITCH_LOW = 0.05
SWITCH_HIGH = 0.999


def _exact(x):
    """Keep rational inputs rational so parity tests and series parameters stay exact."""
    if isinstance(x, bool):
        raise DomainError("expected a number, got a bool")
    if isinstance(x, (int, Fraction)):
        return x
    if isinstance(x, float):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except ValueError:
            raise DomainError(f"cannot parse {x!r} as a real number") from None
    return x


def _as_int(x):
    x = _exact(x)
    if isinstance(x, Fraction) and x.denominator == 1:
        return int(x)
    if isinstance(x, int):
        return x
    if is_integer(x):
        return int(x)
    return None


def _frac(c: Fraction, mp):
    return mp.mpf(c.numerator) / c.denominator


# -- parameter records ----------------------------------------------------------

@dataclass(frozen=True)
class KernelParams:
    """Arguments of K(m, p; beta, kappa); mu = m + 1/2 is the Bessel order."""

    m: int
    p: Any
    beta: Any
    kappa: Any

    def __post_init__(self):
        m = _as_int(self.m)
        if m is None or m < 0:
            raise DomainError(f"m must be a nonnegative integer, got {self.m!r}")
        object.__setattr__(self, "m", m)
        for name in ("p", "beta", "kappa"):
            object.__setattr__(self, name, _exact(getattr(self, name)))
        probe = PrecisionContext(256)
        p, beta, kappa = self.values(probe)
        if not beta > 0:
            raise DomainError(f"beta must be positive, got {self.beta}")
        if not kappa > 0:
            raise DomainError(f"kappa must be positive, got {self.kappa}")
        if kappa > beta:
            raise DomainError(f"kappa = {self.kappa} exceeds beta = {self.beta}; the integral diverges")
        if not p > -2 * m - 2:
            raise DomainError(f"p = {self.p} must exceed -2m-2 = {-2 * m - 2}")

    def values(self, ctx: PrecisionContext):
        return to_mpf(ctx, self.p), to_mpf(ctx, self.beta), to_mpf(ctx, self.kappa)

    def ratio(self, ctx: PrecisionContext | None = None):
        ctx = resolve(ctx)
        return to_mpf(ctx, self.kappa) / to_mpf(ctx, self.beta)

    @property
    def p_int(self) -> Optional[int]:
        return _as_int(self.p)

    @property
    def branch(self) -> str:
        """Case of the closed form: ``even`` (p even <= 2m), ``odd`` (p odd < 2m) or ``otherwise``."""
        p = self.p_int
        if p is not None and p % 2 == 0 and p <= 2 * self.m:
            return "even"
        if p is not None and p % 2 == 1 and p < 2 * self.m:
            return "odd"
        return "otherwise"


@dataclass(frozen=True)
class LaguerreKernelParams:
    k: int
    n1: int
    n2: int
    gamma: Any

    def __post_init__(self):
        for name in ("k", "n1", "n2"):
            v = _as_int(getattr(self, name))
            if v is None or v < 0:
                raise DomainError(f"{name} must be a nonnegative integer")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "gamma", _exact(self.gamma))
        if to_mpf(PrecisionContext(128), self.gamma) < 0:
            raise DomainError("gamma must be nonnegative")


@dataclass(frozen=True)
class EvalReport:
    """Value of a kernel with the bookkeeping of how it was obtained.

    ``cancellation_ratio`` is the largest intermediate summand over the
    result (1 for sums of positive terms). ``terms`` is the number of series
    terms, and ``escalations`` counts precision doublings.
    """

    value: Any
    method: str
    est_rel_err: Any
    work_bits_used: int
    cancellation_ratio: Any
    terms: Optional[int] = None
    escalations: int = 0
    branch: Optional[str] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.est_rel_err < 0 or self.cancellation_ratio < 1:
            raise ValueError("inconsistent report")


# -- J and the Laguerre kernel ----------------------------------------------------

def j_integral(nu, gamma, ctx: PrecisionContext | None = None):
    """J(nu, gamma) = int_0^inf exp(-gamma x^2 - x) x^nu dx.

    For gamma > 0 this is Gamma(nu+1) (4 gamma)^(-(nu+1)/2) U((nu+1)/2, 1/2, 1/(4 gamma)),
    which never forms the overflowing factor exp(1/(8 gamma)).
    """
    ctx = resolve(ctx)
    nu, gamma = _exact(nu), _exact(gamma)
    nu_m, g = to_mpf(ctx, nu), to_mpf(ctx, gamma)
    if not nu_m > -1:
        raise DomainError(f"J needs nu > -1, got {nu}")
    if g < 0:
        raise DomainError(f"J needs gamma >= 0, got {gamma}")
    if g == 0:
        return gamma_fn(ctx, nu_m + 1)
    mp = ctx.mp
    a = (nu + 1) / Fraction(2) if isinstance(nu, (int, Fraction)) else (nu_m + 1) / 2
    ectx = ctx.extra(16)
    g = to_mpf(ectx, gamma)
    nu_e = to_mpf(ectx, nu)
    u = tricomi_u(a, HALF, 1 / (4 * g), ectx)
    emp = ectx.mp
    value = emp.gamma(nu_e + 1) * emp.power(4 * g, -(nu_e + 1) / 2) * u
    return +mp.convert(value)


def _lag_pairs(k, n1, n2):
    for i in range(n1 + 1):
        for j in range(n2 + 1):
            yield i, j, laguerre_coeff(n1, k, i) * laguerre_coeff(n2, k, j)


def laguerre_kernel_expansion(params: LaguerreKernelParams, ctx: PrecisionContext | None = None):
    """sum_ij C_i C_j J(k+i+j, gamma) with exact Laguerre coefficients."""
    ctx = resolve(ctx)
    k, n1, n2 = params.k, params.n1, params.n2

    def compute(ectx):
        mp = ectx.mp
        jv = {}
        terms = []
        for i, j, c in _lag_pairs(k, n1, n2):
            nu = k + i + j
            if nu not in jv:
                jv[nu] = j_integral(nu, params.gamma, ectx)
            terms.append(_frac(c, mp) * jv[nu])
        return mp.fsum(terms), max(abs(t) for t in terms)

    value, _, _ = guarded(ctx, compute, guard=16)
    return value


def _poly_mul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


@lru_cache(maxsize=None)
def _q_poly(n: int) -> tuple:
    """sum_{s=1}^{n} C(n,s) (-1)^s h_{n-s}(y) H_{s-1}(y) as integer coefficients in y."""
    acc = [0] * max(n, 1)
    for s in range(1, n + 1):
        prod = _poly_mul(hermite_imag_coeffs(n - s), hermite_coeffs(s - 1))
        c = math.comb(n, s) * (-1) ** s
        for d, v in enumerate(prod):
            acc[d] += c * v
    return tuple(acc)


@lru_cache(maxsize=None)
def ts_coefficients(k: int, n1: int, n2: int):
    """Exact coefficient lists (lowest power of gamma first) of T and S.

    With y = 1/(2 sqrt(gamma)), M = n1+n2+k, N = i+j+k and |C| the Laguerre
    coefficient magnitudes,
        T = n1! n2! (2 gamma)^M sum |C_i C_j| y^N h_N(y),
        S = -n1! n2! (2 gamma)^M / sqrt(gamma) sum |C_i C_j| y^N Q_N(y),
    where h is the modified Hermite polynomial and Q_N the combination in
    :func:`_q_poly`. Both expand into polynomials in gamma.
    """
    M = n1 + n2 + k
    fact = math.factorial(n1) * math.factorial(n2)
    T = [Fraction(0)] * (M + 1)
    S = [Fraction(0)] * (M + 1)
    for i, j, c in _lag_pairs(k, n1, n2):
        c = abs(c) * fact
        N = i + j + k
        # y^N h_N(y): h_N has powers N-2l, so y^(2N-2l) = (4 gamma)^-(N-l)
        for d, h in enumerate(hermite_imag_coeffs(N)):
            if h:
                e = N + d  # even
                power = M - e // 2
                T[power] += c * h * Fraction(2) ** (M - e)
        # y^N Q_N(y) / sqrt(gamma): odd total powers e give 2^-e gamma^-(e+1)/2
        for d, q in enumerate(_q_poly(N) if N > 0 else ()):
            if q:
                e = N + d
                power = M - (e + 1) // 2
                S[power] -= c * q * Fraction(2) ** (M - e)
    while len(T) > 1 and T[-1] == 0:
        T.pop()
    while len(S) > 1 and S[-1] == 0:
        S.pop()
    return tuple(T), tuple(S)


def _horner(coeffs, x):
    acc = 0 * x
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def ts_polynomials(k: int, n1: int, n2: int, gamma, ctx: PrecisionContext | None = None):
    """(T, S) at ``gamma``; exact Fractions for int/Fraction input, else ``ctx`` reals."""
    T, S = ts_coefficients(k, n1, n2)
    if isinstance(gamma, (int, Fraction)) and not isinstance(gamma, bool):
        g = Fraction(gamma)
        return _horner(T, g), _horner(S, g)
    ctx = resolve(ctx)
    mp = ctx.mp
    g = to_mpf(ctx, gamma)
    return (_horner([_frac(c, mp) for c in T], g), _horner([_frac(c, mp) for c in S], g))


def laguerre_kernel_erfc(params: LaguerreKernelParams, ctx: PrecisionContext | None = None):
    """The Laguerre kernel through the scaled erfc and the T/S polynomials.

    (-1)^k / (n1! n2! (2 gamma)^M) [ (1/2) sqrt(pi/gamma) erfcx(1/(2 sqrt gamma)) T - S ].
    The bracket cancels to order gamma^M for small gamma; the guard raises the
    precision accordingly.
    """
    ctx = resolve(ctx)
    k, n1, n2 = params.k, params.n1, params.n2
    if not to_mpf(ctx, params.gamma) > 0:
        raise DomainError("the erfc route needs gamma > 0")
    M = n1 + n2 + k
    T, S = ts_coefficients(k, n1, n2)

    def compute(ectx):
        mp = ectx.mp
        g = to_mpf(ectx, params.gamma)
        root = mp.sqrt(g)
        a = mp.sqrt(mp.pi) / (2 * root) * erfcx_fn(ectx, 1 / (2 * root))
        t = _horner([_frac(c, mp) for c in T], g)
        s = _horner([_frac(c, mp) for c in S], g)
        pref = (-1) ** k / (math.factorial(n1) * math.factorial(n2) * mp.power(2 * g, M))
        return pref * (a * t - s), abs(pref) * max(abs(a * t), abs(s))

    value, _, _ = guarded(ctx, compute, guard=32)
    return value


# -- Legendre products ------------------------------------------------------------

@lru_cache(maxsize=None)
def neumann_adams_coeffs(l1: int, l2: int) -> tuple:
    """Exact A^r, r = 0..l1, with P_l1 P_l2 = sum_r A^r P_{l1+l2-2r}; needs l1 <= l2."""
    if l1 < 0 or l2 < 0:
        raise DomainError("degrees must be nonnegative")
    if l1 > l2:
        raise DomainError("neumann_adams_coeffs expects l1 <= l2; swap the arguments")
    out = []
    df = double_factorial
    for r in range(l1 + 1):
        num = (df(2 * l1 - 2 * r - 1) * df(2 * r - 1) * df(2 * l2 - 2 * r - 1)
               * math.factorial(l1 + l2 - r) * (2 * l1 + 2 * l2 - 4 * r + 1))
        den = (math.factorial(l1 - r) * math.factorial(r) * math.factorial(l2 - r)
               * df(2 * l1 + 2 * l2 - 2 * r + 1))
        out.append(Fraction(num, den))
    return tuple(out)


def legendre_pair_integral(l1: int, l2: int, w, ctx: PrecisionContext | None = None):
    """int_{-1}^{1} exp(-lam w) P_l1(lam) P_l2(lam) dlam for w > 0.

    Equals sqrt(2 pi / w) sum_r A^r (-1)^L I_{L+1/2}(w) with L = l1+l2-2r; the
    sign comes from int exp(-lam w) P_L dlam = (-1)^L sqrt(2 pi/w) I_{L+1/2}(w).
    All terms share the sign (-1)^(l1+l2), so the sum is cancellation free.
    """
    ctx = resolve(ctx)
    if l1 > l2:
        l1, l2 = l2, l1
    ectx = ctx.extra(16)
    mp = ectx.mp
    w = to_mpf(ectx, w)
    if not w > 0:
        raise DomainError(f"w must be positive, got {w}")
    total = mp.zero
    for r, a in enumerate(neumann_adams_coeffs(l1, l2)):
        L = l1 + l2 - 2 * r
        total += _frac(a, mp) * sph_bessel_i(L, w, ectx)
    value = (-1) ** (l1 + l2) * mp.sqrt(2 * mp.pi / w) * total
    return +ctx.mp.convert(value)


# -- K: series route --------------------------------------------------------------

class _JLadder:
    """J(base + i, beta) for i = 0, 1, ..., extended on demand by the upward recurrence."""

    def __init__(self, base, beta, ectx):
        self.base, self.beta, self.ectx = base, beta, ectx
        self.b = to_mpf(ectx, beta)
        self.vals = [j_integral(base, beta, ectx), j_integral(base + 1, beta, ectx)]
        self.nu = to_mpf(ectx, base)

    def __getitem__(self, i):
        vals = self.vals
        while len(vals) <= i:
            n = len(vals) - 2
            vals.append(((self.nu + n + 1) * vals[-2] - vals[-1]) / (2 * self.b))
        return vals[i]

    def drift(self):
        """Relative deviation of the last recurred value from a direct evaluation."""
        top = len(self.vals) - 1
        direct = j_integral(self.base + top, self.beta, self.ectx)
        return abs(self.vals[top] / direct - 1)


def _nu_class(nu0):
    # pairs whose exponents differ by integers share one ladder
    if isinstance(nu0, (int, Fraction)):
        f = Fraction(nu0)
        return ("exact", f - math.floor(f))
    return ("real", nu0)


def k_series_many(pairs, beta, kappa, ctx: PrecisionContext | None = None) -> dict:
    """Series route for every (m, p) in ``pairs`` at a shared (beta, kappa).

    Term k of K(m, p) is (kappa/2)^(mu+2k) / (Gamma(k+mu+1) k!) J(p+2m+1+4k, beta);
    all terms are positive. J values come from the upward recurrence
    2 beta J(nu+2) = (nu+1) J(nu) - J(nu+1), shared by all pairs whose
    exponents differ by integers. J is the minimal solution, so the
    recurrence runs with extra bits sized to the growth of the dominant
    solution (about 2 sqrt(nu/(2 beta)) / ln 2) and its last value is checked
    against a direct evaluation. Summation stops once a geometric bound on
    the tail, with ratio max(observed, (kappa/beta)^2), drops below the
    tolerance.
    """
    ctx = resolve(ctx)
    mp0 = ctx.mp
    beta, kappa = _exact(beta), _exact(kappa)
    plist = [KernelParams(m, p, beta, kappa) for m, p in pairs]
    b0, k0 = to_mpf(ctx, beta), to_mpf(ctx, kappa)
    ratio = k0 / b0
    if not ratio < 1:
        raise DomainError("the series needs kappa < beta")
    tol = ctx.tol / 16
    r2 = ratio * ratio
    k_est = int(math.ceil(float(mp0.ln(tol) / mp0.ln(r2)))) + 16
    if k_est > ctx.max_series_terms:
        raise TruncationError(
            f"series would need about {k_est} terms (kappa/beta = {mp0.nstr(ratio, 6)})",
            estimates={"terms": k_est},
        )
    groups = {}
    for prm in plist:
        nu0 = prm.p + 2 * prm.m + 1
        groups.setdefault(_nu_class(nu0), []).append((prm, nu0))
    extra = 48
    for attempt in range(4):
        nu_max = max(float(to_mpf(ctx, nu0)) for g in groups.values() for _, nu0 in g) + 4 * k_est
        growth = 2 * math.sqrt(max(nu_max, 1.0) / (2 * float(b0))) / math.log(2)
        ectx = ctx.extra(int(growth) + extra)
        mp = ectx.mp
        kap = to_mpf(ectx, kappa)
        q = kap * kap / 4
        out = {}
        worst = mp.zero
        kmax = 0
        for members in groups.values():
            base = min((nu0 for _, nu0 in members), key=lambda v: to_mpf(ectx, v))
            ladder = _JLadder(base, beta, ectx)
            for prm, nu0 in members:
                off = int(to_mpf(ectx, nu0 - base))
                mu = prm.m + mp.mpf(1) / 2
                coef = mp.power(kap / 2, mu) * mp.rgamma(mu + 1)
                term = coef * ladder[off]
                total = last = term
                rho = r2
                k = 0
                while True:
                    k += 1
                    coef *= q / (k * (k + mu))
                    term = coef * ladder[off + 4 * k]
                    total += term
                    rho = max(term / last, r2)
                    last = term
                    if rho < 1 and term * rho / (1 - rho) <= tol * total:
                        break
                    if k >= ctx.max_series_terms:
                        raise TruncationError("series exhausted max_series_terms", last_term=term)
                kmax = max(kmax, k)
                tail = term * rho / (1 - rho) / total
                out[(prm.m, prm.p)] = EvalReport(
                    value=+mp0.convert(total),
                    method="series",
                    est_rel_err=+mp0.convert(max(tail, mp0.ldexp(1, -ctx.work_bits))),
                    work_bits_used=ectx.work_bits,
                    cancellation_ratio=mp0.one,
                    terms=k + 1,
                    branch=prm.branch,
                )
            worst = max(worst, ladder.drift())
        if worst < mp.ldexp(1, -ctx.work_bits - 8):
            return out
        extra += int(growth) + 32
        k_est = max(k_est, kmax)
    raise TruncationError("J recurrence lost too many bits", last_term=worst)


def k_series(params: KernelParams, ctx: PrecisionContext | None = None) -> EvalReport:
    """K by expanding the Bessel factor in powers of kappa (see :func:`k_series_many`)."""
    return k_series_many([(params.m, params.p)], params.beta, params.kappa, ctx)[(params.m, params.p)]


# -- K: closed form -----------------------------------------------------------------

def _half(x):
    return x / Fraction(2) if isinstance(x, (int, Fraction)) else x / 2


def _f1(s, params: KernelParams, ectx):
    mp = ectx.mp
    m = params.m
    q = _half(params.p + s)
    top = m - q
    top_i = _as_int(top)
    if top_i is None or top_i < 0:
        raise DomainError(f"F1 needs m - (p+s)/2 to be a nonnegative integer, got {top}")
    _, beta, kappa = params.values(ectx)
    qm = to_mpf(ectx, q)
    pref = 2 * mp.sqrt(mp.pi) * mp.power(kappa / (2 * beta), m + 1)
    pref /= mp.gamma(m + mp.mpf(3) / 2) * mp.power(beta, qm)
    z = (kappa / beta) ** 2
    total = mp.zero
    for n in range(top_i + 1):
        a1 = Fraction(n + m + 1, 2) + _half(q)
        a2 = Fraction(n + m + 2, 2) + _half(q)
        h = hyp2f1(a1, a2, m + THREE_HALVES, z, ectx)
        total += mp.gamma(m + n + 1 + qm) / (mp.factorial(2 * n + s) * mp.power(beta, n)) * h
    value = pref * total
    return value, abs(value)


def _f2(params: KernelParams, ectx):
    mp = ectx.mp
    m = params.m
    top = _as_int(2 * m + 2 - params.p)
    if top is None or top < 0:
        raise DomainError("F2 needs 2m + 2 - p to be a nonnegative integer")
    _, beta, kappa = params.values(ectx)
    if beta == kappa:
        raise PoleError("F2 has a pole at beta = kappa")
    p = params.p
    c = (beta + kappa) / (2 * kappa)
    zp = 1 / (4 * (beta + kappa))
    zm = 1 / (4 * (beta - kappa))
    lo1 = m + _half(3 - p)
    lo2 = m + 2 - _half(p)
    w1 = mp.power(-1 / (beta + kappa), m + 1)
    w2 = mp.factorial(2 * m + 1) / mp.power(beta - kappa, m + 1)
    norm = 1 / mp.factorial(top)
    terms = []
    for k in range(m + 1):
        h = hyp2f2(1, 1 - k + m, lo1, lo2, zp, ectx)
        terms.append(w1 * norm * mp.factorial(m + k) * mp.power(c, k) / mp.factorial(k) * h)
    for k in range(m + 1):
        h = hyp3f3(1, 1, 2 + 2 * m, 2 + k + m, lo1, lo2, zm, ectx)
        t = mp.power(-c, k) / (mp.factorial(k) * mp.factorial(m - k) * (m + k + 1)) * h
        terms.append(w2 * norm * t)
    return mp.fsum(terms), max(abs(t) for t in terms)


def _f3(s, params: KernelParams, ectx):
    """F3(s) = Minus(s) - Plus(s).

    Plus(s) = (-1)^m (beta+kappa)^-q sum_k (m+k)! Gamma(q-k) c^k / ((m-k)! k!) 1F1(q-k; s+1/2; 1/(4(beta+kappa)))
    Minus(s) = Gamma(q-m) Gamma(q+m+1) (beta-kappa)^-q sum_k (m+k)! (-c)^k / ((m-k)! k! Gamma(q+k+1))
               * 2F2(q-m, q+m+1; s+1/2, q+k+1; 1/(4(beta-kappa)))
    with q = (p+s)/2 and c = (beta+kappa)/(2 kappa). The Plus part enters with
    a minus sign; quadrature of the defining integral confirms this sign.
    """
    mp = ectx.mp
    m = params.m
    q = _half(params.p + s)
    _, beta, kappa = params.values(ectx)
    if beta == kappa:
        raise PoleError("F3 has a pole at beta = kappa")
    qm = to_mpf(ectx, q)
    c = (beta + kappa) / (2 * kappa)
    lower = s + HALF
    zp = 1 / (4 * (beta + kappa))
    zm = 1 / (4 * (beta - kappa))
    terms = []
    wp = (-1) ** m * mp.power(beta + kappa, -qm)
    for k in range(m + 1):
        g = gamma_fn(ectx, qm - k)
        h = hyp1f1(q - k, lower, zp, ectx)
        t = mp.factorial(m + k) * g / (mp.factorial(m - k) * mp.factorial(k)) * mp.power(c, k) * h
        terms.append(-wp * t)
    wm = gamma_fn(ectx, qm - m) * gamma_fn(ectx, qm + m + 1) * mp.power(beta - kappa, -qm)
    for k in range(m + 1):
        r = mp.rgamma(qm + k + 1)
        if r == 0:
            raise PoleError("F3 lower parameter q+k+1 hits a pole")
        h = hyp2f2(q - m, q + m + 1, lower, q + k + 1, zm, ectx)
        t = mp.factorial(m + k) * (-1) ** k / (mp.factorial(m - k) * mp.factorial(k)) * r * mp.power(c, k) * h
        terms.append(wm * t)
    return mp.fsum(terms), max(abs(t) for t in terms)


def _aux(fn, *args, ctx=None):
    ctx = resolve(ctx)
    value, _ = fn(*args, ctx.extra(16))
    return +ctx.mp.convert(value)


def f1_aux(s: int, p, m: int, beta, kappa, ctx: PrecisionContext | None = None):
    """F1(s): finite sum of 2F1 values in (kappa/beta)^2 with a kappa^(m+1) prefactor."""
    if s not in (0, 1):
        raise DomainError("s must be 0 or 1")
    return _aux(_f1, s, _aux_params(m, p, beta, kappa), ctx=ctx)


def f2_aux(p, m: int, beta, kappa, ctx: PrecisionContext | None = None):
    """F2: one 2F2 sum at 1/(4(beta+kappa)) and one 3F3 sum at 1/(4(beta-kappa))."""
    return _aux(_f2, _aux_params(m, p, beta, kappa, allow_equal=False), ctx=ctx)


def f3_aux(s: int, p, m: int, beta, kappa, ctx: PrecisionContext | None = None):
    """F3(s): a 1F1 sum at 1/(4(beta+kappa)) against a 2F2 sum at 1/(4(beta-kappa))."""
    if s not in (0, 1):
        raise DomainError("s must be 0 or 1")
    return _aux(_f3, s, _aux_params(m, p, beta, kappa, allow_equal=False), ctx=ctx)


def _aux_params(m, p, beta, kappa, allow_equal=True):
    if not allow_equal and to_mpf(PrecisionContext(256), _exact(beta)) == to_mpf(PrecisionContext(256), _exact(kappa)):
        raise PoleError("beta = kappa is a pole of the auxiliary functions")
    return KernelParams(m, p, beta, kappa)


def _closed_sum(params: KernelParams, ectx):
    """Scaled closed form sqrt(8 pi kappa) K and the largest summand involved."""
    branch = params.branch
    if branch == "even":
        parts = [(1, _f1(0, params, ectx)), (1, _f2(params, ectx)), (-1, _f3(1, params, ectx))]
    elif branch == "odd":
        parts = [(-1, _f1(1, params, ectx)), (-1, _f2(params, ectx)), (1, _f3(0, params, ectx))]
    else:
        parts = [(1, _f3(0, params, ectx)), (-1, _f3(1, params, ectx))]
    value = ectx.mp.fsum(sign * v for sign, (v, _) in parts)
    scale = max(sc for _, (_, sc) in parts)
    return value, scale


def k_closed(params: KernelParams, ctx: PrecisionContext | None = None,
             max_escalations: int = 4) -> EvalReport:
    """K from the F1/F2/F3 closed form, with automatic precision escalation.

    The branches subtract quantities much larger than the result. When
    work_bits - log2(cancellation_ratio) falls short of the bits the target
    tolerance needs, the whole evaluation is repeated at twice the
    precision; after ``max_escalations`` doublings a TruncationError is
    raised so the caller can fall back.
    """
    ctx = resolve(ctx)
    _, beta0, kappa0 = params.values(ctx)
    if not kappa0 < beta0:
        raise DomainError("the closed form needs kappa < beta")
    need = ctx.tol_bits + 16
    bits = ctx.work_bits
    ratio = None
    for esc in range(max_escalations + 1):
        ectx = ctx.with_bits(bits)
        mp = ectx.mp
        value, scale = _closed_sum(params, ectx)
        if value == 0:
            ratio = mp.inf
        else:
            ratio = max(scale / abs(value), mp.one)
        surviving = bits - float(mp.log(ratio, 2)) if ratio != mp.inf else -math.inf
        if surviving >= need:
            _, _, kappa = params.values(ectx)
            result = value / mp.sqrt(8 * mp.pi * kappa)
            mp0 = ctx.mp
            est = max(ratio * mp.ldexp(1, 6 - bits), mp0.ldexp(1, -ctx.work_bits))
            return EvalReport(
                value=+mp0.convert(result),
                method="closed_form",
                est_rel_err=+mp0.convert(est),
                work_bits_used=bits,
                cancellation_ratio=+mp0.convert(ratio),
                escalations=esc,
                branch=params.branch,
            )
        bits *= 2
    raise TruncationError(
        "cancellation in the closed form exceeds the escalation budget",
        last_term=ratio,
        estimates={"bits": bits // 2},
    )


# -- K: quadrature fallback and dispatcher -----------------------------------------------

def k_quadrature_many(pairs, beta, kappa, ctx: PrecisionContext | None = None) -> dict:
    """Quadrature of the defining integral for several (m, p) at shared nodes."""
    from .oracle import QuadratureSpec, integrate_semi_infinite

    ctx = resolve(ctx)
    ectx = ctx.extra(32)
    mp = ectx.mp
    beta_e, kappa_e = to_mpf(ectx, _exact(beta)), to_mpf(ectx, _exact(kappa))
    pairs = [(int(m), _exact(p)) for m, p in pairs]
    orders = sorted({m for m, _ in pairs})

    mmax = orders[-1]
    pkeys = sorted(set(p for _, p in pairs))

    def f(x):
        w = kappa_e * x * x
        g = mp.exp(-beta_e * x * x - x)
        bes = sph_bessel_i_all(mmax, w, ectx)
        xp = {p: mp.power(x, to_mpf(ectx, p)) * g for p in pkeys}
        return [xp[p] * bes[m] for m, p in pairs]

    spec = QuadratureSpec(rel_tol=ctx.tol, max_levels=14)
    res = integrate_semi_infinite(f, spec, ectx)
    if not res.converged:
        raise TruncationError("quadrature of the defining integral did not converge",
                              estimates={"error": res.error})
    out = {}
    mp0 = ctx.mp
    for (m, p), v, e in zip(pairs, res.value, res.error):
        rel = e / abs(v) if v != 0 else e
        out[(m, p)] = EvalReport(
            value=+mp0.convert(v),
            method="quadrature_fallback",
            est_rel_err=+mp0.convert(max(rel, mp0.ldexp(1, -ctx.work_bits))),
            work_bits_used=ectx.work_bits,
            cancellation_ratio=mp0.one,
        )
    return out


def k_quadrature(params: KernelParams, ctx: PrecisionContext | None = None) -> EvalReport:
    rep = k_quadrature_many([(params.m, params.p)], params.beta, params.kappa, ctx)
    r = next(iter(rep.values()))
    return EvalReport(r.value, r.method, r.est_rel_err, r.work_bits_used,
                      r.cancellation_ratio, branch=params.branch)


def choose_method(ratio, switch_low=SWITCH_LOW, switch_high=SWITCH_HIGH) -> str:
    if ratio < switch_low:
        return "series"
    if ratio <= switch_high and ratio < 1:
        return "closed_form"
    return "quadrature_fallback"


def k_eval(params: KernelParams, ctx: PrecisionContext | None = None,
           switch_low=SWITCH_LOW, switch_high=SWITCH_HIGH) -> EvalReport:
    """K through whichever route suits kappa/beta.

    Below ``switch_low`` the series is used, up to ``switch_high`` the closed
    form (falling back to the series, then to quadrature, if its
    cancellation cannot be contained), and above that quadrature.
    """
    ctx = resolve(ctx)
    ratio = params.ratio(ctx)
    if ratio > 1:
        raise DomainError("kappa > beta")
    method = choose_method(ratio, switch_low, switch_high)
    if method == "series":
        try:
            return k_series(params, ctx)
        except TruncationError:
            pass
    elif method == "closed_form":
        try:
            return k_closed(params, ctx)
        except NumericalError:
            try:
                return k_series(params, ctx)
            except NumericalError:
                pass
    return k_quadrature(params, ctx)


def k_eval_many(pairs, beta, kappa, ctx: PrecisionContext | None = None,
                switch_low=SWITCH_LOW, switch_high=SWITCH_HIGH) -> dict:
    """:func:`k_eval` for several (m, p) at one (beta, kappa), sharing work where possible."""
    ctx = resolve(ctx)
    pairs = list(dict.fromkeys((int(m), _exact(p)) for m, p in pairs))
    ratio = to_mpf(ctx, _exact(kappa)) / to_mpf(ctx, _exact(beta))
    if ratio > 1:
        raise DomainError("kappa > beta")
    method = choose_method(ratio, switch_low, switch_high)
    out = {}
    todo = pairs
    if method == "closed_form":
        todo = []
        for m, p in pairs:
            try:
                out[(m, p)] = k_closed(KernelParams(m, p, beta, kappa), ctx)
            except NumericalError:
                todo.append((m, p))
    if todo and method != "quadrature_fallback":
        try:
            out.update(k_series_many(todo, beta, kappa, ctx))
            todo = []
        except TruncationError:
            pass
    if todo:
        out.update(k_quadrature_many(todo, beta, kappa, ctx))
    return out


# -- B: the x and lambda double integral ----------------------------------------------

def b_kernel(k: int, n1: int, n2: int, l1: int, l2: int, beta, kappa,
             ctx: PrecisionContext | None = None, kernel: Callable | None = None):
    """int_0^inf dx exp(-beta x^2 - x) x^k L_n1^(k) L_n2^(k) int_{-1}^{1} exp(-lam kappa x^2) P_l1 P_l2 dlam.

    Reduced to sqrt(2 pi/kappa) sum_r A^r (-1)^L sum_ij C_i C_j K(L, i+j+k-1; beta, kappa)
    with L = l1+l2-2r. ``kernel(m, p, ectx)`` may supply K values (for
    caching); by default they come from :func:`k_eval`. At kappa = 0 the
    lambda integral is 2 delta_{l1 l2}/(2 l1 + 1), which is returned exactly.
    """
    ctx = resolve(ctx)
    if l1 > l2:
        l1, l2 = l2, l1
    beta, kappa = _exact(beta), _exact(kappa)
    if to_mpf(ctx, kappa) == 0:
        if l1 != l2:
            return ctx.mp.zero
        lag = laguerre_kernel_expansion(LaguerreKernelParams(k, n1, n2, beta), ctx)
        return 2 * lag / (2 * l1 + 1)
    coeffs = neumann_adams_coeffs(l1, l2)
    if kernel is None:
        def kernel(m, p, ectx):
            return k_eval(KernelParams(m, p, beta, kappa), ectx).value

    def compute(ectx):
        mp = ectx.mp
        terms = []
        for r, a in enumerate(coeffs):
            L = l1 + l2 - 2 * r
            for i, j, c in _lag_pairs(k, n1, n2):
                kv = kernel(L, i + j + k - 1, ectx)
                terms.append((-1) ** L * _frac(a * c, mp) * kv)
        root = mp.sqrt(2 * mp.pi / to_mpf(ectx, kappa))
        return root * mp.fsum(terms), root * max(abs(t) for t in terms)

    value, _, _ = guarded(ctx, compute, guard=16)
    return value
