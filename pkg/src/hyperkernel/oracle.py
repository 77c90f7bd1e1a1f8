"""Brute-force quadrature used to check every closed form in the package.

Two independent 1D engines are provided: double-exponential (tanh-sinh on
finite intervals, exp-sinh on half lines) and adaptive Gauss-Legendre by
bisection. Integrands may return a scalar or a list; lists are integrated
component-wise with a shared set of nodes and every component must meet the
tolerance. Nothing here calls the closed-form machinery of ``kernels`` or
``matelem``; the defining integrands are written out directly, with Bessel
values taken from mpmath rather than from :mod:`hyperkernel.hypfun`.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Any, Callable, NamedTuple, Sequence

from .errors import DomainError
from .mpnum import PrecisionContext, _mp_context, resolve, to_mpf
from .orthopoly import gauss_legendre, jacobi, laguerre_coeff, legendre

SCHEMES = ("tanh_sinh", "gauss_legendre_adaptive")


@dataclass(frozen=True)
class QuadratureSpec:
    """Scheme name, tolerances and refinement budget.

    For tanh-sinh ``max_levels`` is the number of step halvings; adaptive
    Gauss-Legendre may bisect up to ``8 * max_levels`` times.
    """

    scheme: str = "tanh_sinh"
    abs_tol: Any = "1e-300"
    rel_tol: Any = "1e-30"
    max_levels: int = 12

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown quadrature scheme {self.scheme!r}")
        if self.max_levels < 1:
            raise ValueError("max_levels must be >= 1")
        probe = PrecisionContext(64)
        if not (to_mpf(probe, self.abs_tol) > 0 and to_mpf(probe, self.rel_tol) > 0):
            raise ValueError("quadrature tolerances must be positive")

    def tightened(self, factor=10) -> "QuadratureSpec":
        probe = PrecisionContext(128)
        return replace(
            self,
            abs_tol=to_mpf(probe, self.abs_tol) / factor,
            rel_tol=to_mpf(probe, self.rel_tol) / factor,
        )


class QuadResult(NamedTuple):
    value: Any
    error: Any
    converged: bool


def _vec(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _pack(values, scalar):
    return values[0] if scalar else values


def _accurate(vals, errs, rel_tol, abs_tol):
    return all(e <= rel_tol * abs(v) + abs_tol for v, e in zip(vals, errs))


# -- double exponential ---------------------------------------------------------

def _de_sum(node, f, spec, ectx):
    """Shared driver: ``node(t)`` yields (x, weight) or None when degenerate."""
    mp = ectx.mp
    rel_tol = to_mpf(ectx, spec.rel_tol)
    abs_tol = to_mpf(ectx, spec.abs_tol)
    eps = mp.ldexp(1, -ectx.work_bits)
    cache = {}
    scalar = [None]

    def contrib(t):
        if t in cache:
            return cache[t]
        xw = node(t)
        if xw is None:
            out = None
        else:
            fx = f(xw[0])
            if scalar[0] is None:
                scalar[0] = not isinstance(fx, (list, tuple))
            out = [xw[1] * v for v in _vec(fx)]
        cache[t] = out
        return out

    # level 0: unit step, walk outward until contributions are negligible
    c0 = contrib(mp.zero)
    if c0 is None:
        raise DomainError("integrand undefined at the interval centre")
    peak = [abs(v) for v in c0]
    total = list(c0)
    bounds = []
    for direction in (1, -1):
        quiet = 0
        j = 0
        while True:
            j += 1
            if j > 40:
                break
            c = contrib(mp.mpf(direction * j))
            if c is None:
                break
            for i, v in enumerate(c):
                total[i] += v
                peak[i] = max(peak[i], abs(v))
            if all(abs(v) <= eps * p + abs_tol * eps for v, p in zip(c, peak)):
                quiet += 1
                if quiet >= 2:
                    break
            else:
                quiet = 0
        bounds.append(j)
    t_hi, t_lo = bounds[0], -bounds[1]
    h = mp.one
    prev = None
    errs = [mp.inf] * len(total)
    for level in range(1, spec.max_levels + 1):
        h /= 2
        add = [mp.zero] * len(total)
        n = int(round((t_hi - t_lo) / h))
        for k in range(1, n, 2):
            c = contrib(t_lo + k * h)
            if c is None:
                continue
            for i, v in enumerate(c):
                add[i] += v
        prev = [v * 2 * h for v in total]  # value at step 2h
        total = [v + a for v, a in zip(total, add)]
        values = [v * h for v in total]
        errs = [abs(a - b) for a, b in zip(values, prev)]
        if level >= 3 and _accurate(values, errs, rel_tol, abs_tol):
            return QuadResult(_pack(values, scalar[0]), _pack(errs, scalar[0]), True)
    values = [v * h for v in total]
    return QuadResult(_pack(values, scalar[0]), _pack(errs, scalar[0]), False)


@lru_cache(maxsize=1 << 18)
def _ts_node(bits, a_key, b_key, t_key):
    mp = _mp_context(bits)
    a, b, t = mp.make_mpf(a_key), mp.make_mpf(b_key), mp.make_mpf(t_key)
    half = (b - a) / 2
    halfpi = mp.pi / 2
    u = halfpi * mp.sinh(t)
    ch = mp.cosh(u)
    w = half * halfpi * mp.cosh(t) / (ch * ch)
    # distance to the nearer endpoint, computed without cancellation
    d = half * mp.exp(-abs(u)) / ch
    x = b - d if u > 0 else a + d
    if not a < x < b or w == 0:
        return None
    return x._mpf_, w._mpf_


@lru_cache(maxsize=1 << 18)
def _es_node(bits, a_key, t_key):
    mp = _mp_context(bits)
    a, t = mp.make_mpf(a_key), mp.make_mpf(t_key)
    halfpi = mp.pi / 2
    s = halfpi * mp.sinh(t)
    if s > 3000:
        return None
    e = mp.exp(s)
    x = a + e
    if not x > a:
        return None
    return x._mpf_, (halfpi * mp.cosh(t) * e)._mpf_


def _cached_nodes(table, ectx, *ends):
    # nested integrals revisit the same inner intervals, so abscissae and
    # weights are memoized per precision, interval and step point
    mp = ectx.mp
    keys = tuple(e._mpf_ for e in ends)

    def node(t):
        xw = table(ectx.work_bits, *keys, t._mpf_)
        return None if xw is None else (mp.make_mpf(xw[0]), mp.make_mpf(xw[1]))

    return node


def _tanh_sinh(f, a, b, spec, ectx):
    return _de_sum(_cached_nodes(_ts_node, ectx, a, b), f, spec, ectx)


def _exp_sinh(f, a, spec, ectx):
    return _de_sum(_cached_nodes(_es_node, ectx, a), f, spec, ectx)


# -- adaptive Gauss-Legendre ----------------------------------------------------

def _gl_adaptive(f, a, b, spec, ectx):
    mp = ectx.mp
    n = max(20, ectx.work_bits // 10)
    xs, ws = gauss_legendre(n, ectx)
    rel_tol = to_mpf(ectx, spec.rel_tol)
    abs_tol = to_mpf(ectx, spec.abs_tol)
    scalar = [None]

    def rule(lo, hi):
        half, mid = (hi - lo) / 2, (hi + lo) / 2
        acc = None
        for x, w in zip(xs, ws):
            fx = f(mid + half * x)
            if scalar[0] is None:
                scalar[0] = not isinstance(fx, (list, tuple))
            fx = _vec(fx)
            if acc is None:
                acc = [mp.zero] * len(fx)
            for i, v in enumerate(fx):
                acc[i] += w * v
        return [half * v for v in acc]

    whole = rule(a, b)
    length = b - a
    max_depth = 8 * spec.max_levels
    values = [mp.zero] * len(whole)
    errs = [mp.zero] * len(whole)
    converged = True
    stack = [(a, b, whole, 0)]
    while stack:
        lo, hi, est, depth = stack.pop()
        mid = (lo + hi) / 2
        left, right = rule(lo, mid), rule(mid, hi)
        both = [u + v for u, v in zip(left, right)]
        err = [abs(u - v) for u, v in zip(both, est)]
        share = (hi - lo) / length
        ok = all(
            e <= (rel_tol * abs(g) + abs_tol) * share for e, g in zip(err, whole)
        )
        if ok or depth >= max_depth:
            if not ok:
                converged = False
            values = [v + u for v, u in zip(values, both)]
            errs = [v + e for v, e in zip(errs, err)]
        else:
            stack.append((lo, mid, left, depth + 1))
            stack.append((mid, hi, right, depth + 1))
    return QuadResult(_pack(values, scalar[0]), _pack(errs, scalar[0]), converged)


# -- public engines -------------------------------------------------------------

def _combine(parts):
    scalar = not isinstance(parts[0].value, list)
    vals = [_vec(p.value) for p in parts]
    errs = [_vec(p.error) for p in parts]
    value = [sum(col) for col in zip(*vals)]
    error = [sum(col) for col in zip(*errs)]
    return QuadResult(_pack(value, scalar), _pack(error, scalar), all(p.converged for p in parts))


def integrate_finite(f: Callable, a, b, spec: QuadratureSpec | None = None,
                     ctx: PrecisionContext | None = None, points: Sequence = ()) -> QuadResult:
    """Integrate ``f`` over [a, b], optionally split at interior ``points``."""
    ctx = resolve(ctx)
    spec = spec or QuadratureSpec(rel_tol=ctx.tol)
    a, b = to_mpf(ctx, a), to_mpf(ctx, b)
    if not a < b:
        raise DomainError("need a < b")
    cuts = [a] + sorted(to_mpf(ctx, c) for c in points if a < to_mpf(ctx, c) < b) + [b]
    parts = []
    for lo, hi in zip(cuts, cuts[1:]):
        if spec.scheme == "tanh_sinh":
            parts.append(_tanh_sinh(f, lo, hi, spec, ctx))
        else:
            parts.append(_gl_adaptive(f, lo, hi, spec, ctx))
    return parts[0] if len(parts) == 1 else _combine(parts)


def integrate_semi_infinite(f: Callable, spec: QuadratureSpec | None = None,
                            ctx: PrecisionContext | None = None, a=0) -> QuadResult:
    """Integrate ``f`` over (a, inf) with the exp-sinh substitution x = a + exp(pi/2 sinh t)."""
    ctx = resolve(ctx)
    spec = spec or QuadratureSpec(rel_tol=ctx.tol)
    if spec.scheme != "tanh_sinh":
        raise DomainError("half-line integrals use the double-exponential scheme")
    return _exp_sinh(f, to_mpf(ctx, a), spec, ctx)


def integrate_nested(dims: int, integrand: Callable, region: Sequence,
                     spec: QuadratureSpec | None = None,
                     ctx: PrecisionContext | None = None) -> QuadResult:
    """Iterated integral of ``integrand(x0, x1, ...)`` over a product region.

    ``region[d]`` is ``(lo, hi)``, ``(lo, c1, ..., hi)`` with interior
    breakpoints, or ``(lo, None)`` for a half line. The innermost variable is
    the last one. Each inner level uses tolerances ten times tighter than the
    level enclosing it.
    """
    ctx = resolve(ctx)
    spec = spec or QuadratureSpec(rel_tol=ctx.tol)
    if dims not in (1, 2, 3) or len(region) != dims:
        raise DomainError("region must list one interval per dimension (1 to 3)")
    flags = []

    def run(d, outer, sp):
        lims = region[d]
        if d == dims - 1:
            g = lambda x: integrand(*outer, x)
        else:
            inner_spec = sp.tightened()

            def g(x):
                r = run(d + 1, outer + (x,), inner_spec)
                flags.append(r.converged)
                return r.value
        if lims[-1] is None:
            return integrate_semi_infinite(g, sp, ctx, a=lims[0])
        return integrate_finite(g, lims[0], lims[-1], sp, ctx, points=lims[1:-1])

    res = run(0, (), spec)
    return QuadResult(res.value, res.error, res.converged and all(flags))


# -- defining integrands of the kernels -------------------------------------------

def oracle_context(ctx: PrecisionContext | None = None, factor: int = 2) -> PrecisionContext:
    """Context for certifying values computed in ``ctx``: ``factor`` times the bits."""
    ctx = resolve(ctx)
    return ctx.with_bits(factor * ctx.work_bits)


def k_defining_integrals(pairs: Sequence, beta, kappa, spec: QuadratureSpec | None = None,
                         ctx: PrecisionContext | None = None) -> QuadResult:
    """int_0^inf x^p exp(-beta x^2 - x) I_{m+1/2}(kappa x^2) dx for every (m, p) in ``pairs``.

    All pairs share one set of nodes; each Bessel order is evaluated once per
    node through mpmath.
    """
    ctx = resolve(ctx)
    mp = ctx.mp
    beta, kappa = to_mpf(ctx, beta), to_mpf(ctx, kappa)
    pairs = [(int(m), to_mpf(ctx, p)) for m, p in pairs]
    orders = sorted({m for m, _ in pairs})
    half = mp.mpf(1) / 2

    def f(x):
        w = kappa * x * x
        bes = {m: mp.besseli(m + half, w) for m in orders}
        g = mp.exp(-beta * x * x - x)
        return [mp.power(x, p) * g * bes[m] for m, p in pairs]

    return integrate_semi_infinite(f, spec, ctx)


def k_defining_integral(m: int, p, beta, kappa, spec=None, ctx=None) -> QuadResult:
    r = k_defining_integrals([(m, p)], beta, kappa, spec, ctx)
    return QuadResult(r.value[0], r.error[0], r.converged)


def j_defining_integral(nu, gamma, spec=None, ctx=None) -> QuadResult:
    ctx = resolve(ctx)
    mp = ctx.mp
    nu, gamma = to_mpf(ctx, nu), to_mpf(ctx, gamma)
    return integrate_semi_infinite(lambda x: mp.exp(-gamma * x * x - x) * mp.power(x, nu), spec, ctx)


def _laguerre_value(n, k, x, mp):
    # explicit power sum, independent of the recurrence in orthopoly
    total = mp.zero
    for i in range(n + 1):
        c = laguerre_coeff(n, k, i)
        total += mp.mpf(c.numerator) / c.denominator * mp.power(x, i)
    return total


def laguerre_defining_integral(k: int, n1: int, n2: int, gamma, spec=None, ctx=None) -> QuadResult:
    """int_0^inf exp(-gamma x^2 - x) x^k L_n1^(k)(x) L_n2^(k)(x) dx."""
    ctx = resolve(ctx)
    mp = ctx.mp
    gamma = to_mpf(ctx, gamma)

    def f(x):
        return (mp.exp(-gamma * x * x - x) * mp.power(x, k)
                * _laguerre_value(n1, k, x, mp) * _laguerre_value(n2, k, x, mp))

    return integrate_semi_infinite(f, spec, ctx)


def legendre_pair_defining(l1: int, l2: int, w, spec=None, ctx=None) -> QuadResult:
    """int_{-1}^{1} exp(-lam w) P_l1(lam) P_l2(lam) dlam, by adaptive Gauss-Legendre."""
    ctx = resolve(ctx)
    mp = ctx.mp
    w = to_mpf(ctx, w)
    spec = spec or QuadratureSpec("gauss_legendre_adaptive", rel_tol=ctx.tol)
    return integrate_finite(
        lambda lam: mp.exp(-lam * w) * legendre(l1, lam, ctx) * legendre(l2, lam, ctx),
        -1, 1, spec, ctx,
    )


def b_defining_integral(k, n1, n2, l1, l2, beta, kappa, spec=None, ctx=None) -> QuadResult:
    """Double integral over x in (0, inf) and lam in [-1, 1] of
    exp(-beta x^2 - x - lam kappa x^2) x^k L_n1^(k)(x) L_n2^(k)(x) P_l1(lam) P_l2(lam).
    """
    ctx = resolve(ctx)
    mp = ctx.mp
    beta, kappa = to_mpf(ctx, beta), to_mpf(ctx, kappa)

    def f(x, lam):
        return (mp.exp(-(beta + lam * kappa) * x * x - x) * mp.power(x, k)
                * _laguerre_value(n1, k, x, mp) * _laguerre_value(n2, k, x, mp)
                * legendre(l1, lam, ctx) * legendre(l2, lam, ctx))

    return integrate_nested(2, f, [(0, None), (-1, 1)], spec, ctx)


# -- matrix-element oracles -------------------------------------------------------

def _laguerre_table(nmax, k, x, mp):
    return [_laguerre_value(n, k, x, mp) for n in range(nmax + 1)]


def _nn_keys(chans):
    return sorted({(ch.n1, ch.n2) for ch in chans})


@lru_cache(maxsize=1 << 16)
def _x_factors(bits, k, nn, x_key):
    # x^k e^-x L_n1^(k)(x) L_n2^(k)(x) does not depend on tau or lam; the
    # abscissae repeat across inner integrals, so it is computed once per node
    mp = _mp_context(bits)
    x = mp.make_mpf(x_key)
    base = mp.exp(-x) * mp.power(x, k)
    lag = _laguerre_table(max(max(key) for key in nn), k, x, mp)
    return tuple(base * lag[a] * lag[b] for a, b in nn)


def i2_defining_integrals(channels: Sequence, zeta_over_alpha2, k: int = 5,
                          spec: QuadratureSpec | None = None,
                          ctx: PrecisionContext | None = None) -> QuadResult:
    """Nested (tau, x) integral for every ChannelIndices in ``channels`` at once.

    The tau integrand carries its Jacobi weight (1-tau)^(l1+1/2) (1+tau)^(l2+1/2)
    explicitly; tanh-sinh absorbs the endpoint behaviour. The x integral is
    done once per distinct (n1, n2) and shared between channels.
    """
    ctx = resolve(ctx)
    mp = ctx.mp
    c = to_mpf(ctx, zeta_over_alpha2)
    chans = list(channels)
    nn = _nn_keys(chans)
    nn_key = tuple(nn)
    slot = {key: i for i, key in enumerate(nn)}
    half = mp.mpf(1) / 2
    outer_spec = spec or QuadratureSpec(rel_tol=ctx.tol)
    inner_spec = outer_spec.tightened()

    def inner(tau):
        g = c * (1 + tau)

        def fx(x):
            gauss = mp.exp(-g * x * x)
            return [gauss * v for v in _x_factors(ctx.work_bits, k, nn_key, x._mpf_)]

        return integrate_semi_infinite(fx, inner_spec, ctx)

    flags = []

    def ftau(tau):
        r = inner(tau)
        flags.append(r.converged)
        out = []
        for ch in chans:
            a1, a2 = ch.l1 + half, ch.l2 + half
            wt = mp.power(1 - tau, a1) * mp.power(1 + tau, a2)
            lval = r.value[slot[(ch.n1, ch.n2)]]
            out.append(wt * jacobi(ch.mu1, a1, a2, tau, ctx) * jacobi(ch.mu2, a1, a2, tau, ctx) * lval)
        return out

    res = integrate_finite(ftau, -1, 1, outer_spec, ctx)
    return QuadResult(res.value, res.error, res.converged and all(flags))


def i3_defining_integrals(channels: Sequence, zeta_over_alpha2, k: int = 5,
                          spec: QuadratureSpec | None = None,
                          ctx: PrecisionContext | None = None) -> QuadResult:
    """Nested (tau, x, lam) integral for every ChannelIndices in ``channels``.

    tau is split at 1/2, where the inner Gaussian exp(-(beta + lam kappa) x^2)
    loses its decay at lam = -1. The lam integral over [-1, 1] is done by
    tanh-sinh and the x integral by exp-sinh; both inner levels are shared
    by channels with equal (l1, l2, n1, n2).
    """
    ctx = resolve(ctx)
    mp = ctx.mp
    c = to_mpf(ctx, zeta_over_alpha2)
    chans = list(channels)
    nn = _nn_keys(chans)
    nn_key = tuple(nn)
    nslot = {key: i for i, key in enumerate(nn)}
    ll = sorted({(ch.l1, ch.l2, ch.n1, ch.n2) for ch in chans})
    lslot = {key: i for i, key in enumerate(ll)}
    lmax = max(max(ch.l1, ch.l2) for ch in chans)
    half = mp.mpf(1) / 2
    outer_spec = spec or QuadratureSpec(rel_tol=ctx.tol)
    mid_spec = outer_spec.tightened()
    inner_spec = mid_spec.tightened()
    three = mp.sqrt(3)
    flags = []

    def ftau(tau):
        beta = c * (1 - tau / 2)
        kappa = c / 2 * three * mp.sqrt(1 - tau * tau)

        def flam(lam):
            leg = [legendre(l, lam, ctx) for l in range(lmax + 1)]
            g = beta + lam * kappa

            def fx(x):
                gauss = mp.exp(-g * x * x)
                return [gauss * v for v in _x_factors(ctx.work_bits, k, nn_key, x._mpf_)]

            r = integrate_semi_infinite(fx, inner_spec, ctx)
            flags.append(r.converged)
            return [r.value[nslot[(n1, n2)]] * leg[l1] * leg[l2] for l1, l2, n1, n2 in ll]

        r = integrate_finite(flam, -1, 1, mid_spec, ctx)
        flags.append(r.converged)
        out = []
        for ch in chans:
            p1 = jacobi(ch.mu1, ch.l1 + half, ch.l1 + half, tau, ctx)
            p2 = jacobi(ch.mu2, ch.l2 + half, ch.l2 + half, tau, ctx)
            out.append((1 - tau * tau) * p1 * p2 * r.value[lslot[(ch.l1, ch.l2, ch.n1, ch.n2)]])
        return out

    res = integrate_finite(ftau, -1, 1, outer_spec, ctx, points=[half])
    return QuadResult(res.value, res.error, res.converged and all(flags))
