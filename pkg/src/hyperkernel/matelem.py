"""Matrix elements of Gaussian pair potentials between hyperspherical states.

For three equal-mass particles with hyperradius rho, tau = cos 2 phi and the
angle cosine lam between the Jacobi vectors, a Gaussian exp(-zeta r_ij^2)
reduces to two integrals over tau:

* ``I2`` (pair 1-2) weights the Laguerre kernel L(5; n1, n2; gamma(tau)) by
  (1-tau)^(l1+1/2) (1+tau)^(l2+1/2) and two Jacobi polynomials;
* ``I3`` (pairs 1-3 and 2-3) weights the kernel B(beta(tau), kappa(tau)) by
  (1-tau^2) and two Jacobi polynomials.

Both outer integrals use Gauss-Jacobi rules whose weight absorbs the
endpoint factors, with the order doubled until two successive orders agree.
B is smooth but not analytic at tau = 1/2, where kappa = beta; the I3 rule is
therefore split there so that the bad point sits at an end of each piece.
Values are unnormalized: the hyperradial constants C_{alpha,n} and the
hyperangular constants N^{l1,l2}_mu are left out.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Sequence

from .errors import DomainError, TruncationError
from .kernels import (
    LaguerreKernelParams,
    _exact,
    b_kernel,
    k_eval_many,
    laguerre_kernel_erfc,
    laguerre_kernel_expansion,
)
from .mpnum import PrecisionContext, resolve, to_mpf
from .orthopoly import gauss_jacobi, jacobi

ORDERS = (16, 32, 64, 128, 256, 512)
DEFAULT_K = 5
# At a tau node all (m, p) kernels share one J ladder in the series route,
# which then beats the per-pair closed form up to kappa/beta ~ 0.99; above
# that, shared-node quadrature is faster than the escalating closed form.
NODE_SWITCH_LOW = 0.99
NODE_SWITCH_HIGH = 0.99


@dataclass(frozen=True)
class GaussianPotential:
    """sum_k A_k exp(-zeta_k r^2) with the hyperradial scale alpha."""

    channels: tuple
    alpha: Any

    def __init__(self, channels: Iterable, alpha):
        chans = tuple((_exact(a), _exact(z)) for a, z in channels)
        if not chans:
            raise DomainError("a potential needs at least one channel")
        probe = PrecisionContext(128)
        for _, z in chans:
            if not to_mpf(probe, z) > 0:
                raise DomainError(f"channel range zeta must be positive, got {z}")
        alpha = _exact(alpha)
        if not to_mpf(probe, alpha) > 0:
            raise DomainError("alpha must be positive")
        object.__setattr__(self, "channels", chans)
        object.__setattr__(self, "alpha", alpha)


@dataclass(frozen=True)
class ChannelIndices:
    l1: int
    l2: int
    mu1: int
    mu2: int
    n1: int
    n2: int

    def __post_init__(self):
        for name in ("l1", "l2", "mu1", "mu2", "n1", "n2"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise DomainError(f"{name} must be a nonnegative integer, got {v!r}")

    def swapped(self) -> "ChannelIndices":
        return ChannelIndices(self.l2, self.l1, self.mu2, self.mu1, self.n2, self.n1)


@dataclass(frozen=True)
class PairGeometry:
    rho: Any
    tau: Any
    lam: Any

    def __post_init__(self):
        probe = PrecisionContext(128)
        if not to_mpf(probe, self.rho) > 0:
            raise DomainError("rho must be positive")
        if abs(to_mpf(probe, self.tau)) > 1 or abs(to_mpf(probe, self.lam)) > 1:
            raise DomainError("tau and lam must lie in [-1, 1]")


def pair_distances(g: PairGeometry, ctx: PrecisionContext | None = None):
    """Squared distances (r12^2, r13^2, r23^2) for equal masses."""
    ctx = resolve(ctx)
    mp = ctx.mp
    rho, tau, lam = (to_mpf(ctx, _exact(v)) for v in (g.rho, g.tau, g.lam))
    r2 = rho * rho
    cross = lam * mp.sqrt(3 * (1 - tau * tau))
    return r2 * (1 + tau), r2 / 2 * (2 - tau + cross), r2 / 2 * (2 - tau - cross)


def _ratio(zeta, alpha):
    zeta, alpha = _exact(zeta), _exact(alpha)
    if isinstance(zeta, (int, Fraction)) and isinstance(alpha, (int, Fraction)):
        return Fraction(zeta) / Fraction(alpha) ** 2
    return None


def channel_params(pot_channel, alpha, tau, ctx: PrecisionContext | None = None):
    """(gamma, beta, kappa) at ``tau``; depends on zeta and alpha only via zeta/alpha^2."""
    ctx = resolve(ctx)
    mp = ctx.mp
    _, zeta = pot_channel
    c = _ratio(zeta, alpha)
    c = to_mpf(ctx, c) if c is not None else to_mpf(ctx, _exact(zeta)) / to_mpf(ctx, _exact(alpha)) ** 2
    return _params_from_ratio(c, to_mpf(ctx, _exact(tau)), mp)


def _params_from_ratio(c, tau, mp):
    if abs(tau) > 1:
        raise DomainError("tau must lie in [-1, 1]")
    gamma = c * (1 + tau)
    beta = c * (1 - tau / 2)
    kappa = c / 2 * mp.sqrt(3 * (1 - tau * tau))
    return gamma, beta, kappa


# -- outer quadrature driver ------------------------------------------------------------

class _Outer:
    """Gauss-Jacobi integration of many channels at once with order doubling.

    ``kernel(tau, ectx)`` returns a dict of inner values at one node and is
    memoized per node; ``integrand(ch, tau, inner, ectx)`` combines them with
    the polynomial factors for one channel.
    """

    def __init__(self, ctx, tol, orders, cut=None):
        self.ctx = ctx
        self.cut = cut
        self.ectx = ctx.extra(16)
        self.tol = to_mpf(self.ectx, tol if tol is not None else ctx.target_rel_tol)
        self.orders = orders
        self.cache = {}

    def node_values(self, kernel, tau):
        key = getattr(tau, "_mpf_", tau)
        if key not in self.cache:
            self.cache[key] = kernel(tau, self.ectx)
        return self.cache[key]

    def rule(self, n, a, b):
        """Nodes and weights for (1-tau)^a (1+tau)^b on [-1, 1], n per piece."""
        if self.cut is None:
            return gauss_jacobi(n, a, b, self.ectx)
        mp = self.ectx.mp
        cut = to_mpf(self.ectx, self.cut)
        xs, ws = [], []
        # left piece keeps (1+tau)^b in its rule, right piece (1-tau)^a
        h = (cut + 1) / 2
        for x, w in zip(*gauss_jacobi(n, 0, b, self.ectx)):
            t = cut - h * (1 - x)
            xs.append(t)
            ws.append(w * mp.power(h, to_mpf(self.ectx, b) + 1) * mp.power(1 - t, to_mpf(self.ectx, a)))
        h = (1 - cut) / 2
        for x, w in zip(*gauss_jacobi(n, a, 0, self.ectx)):
            t = cut + h * (1 + x)
            xs.append(t)
            ws.append(w * mp.power(h, to_mpf(self.ectx, a) + 1) * mp.power(1 + t, to_mpf(self.ectx, b)))
        return xs, ws

    def run(self, channels, weight_of, kernel, integrand):
        mp = self.ectx.mp
        floor = mp.ldexp(1, 16 - self.ctx.work_bits)
        results = {}
        pending = list(dict.fromkeys(channels))
        prev = {}
        history = {ch: [] for ch in pending}
        for n in self.orders:
            if not pending:
                break
            by_weight = {}
            for ch in pending:
                by_weight.setdefault(weight_of(ch), []).append(ch)
            current = {}
            for (a, b), chans in by_weight.items():
                xs, ws = self.rule(n, a, b)
                sums = {ch: mp.zero for ch in chans}
                scale = {ch: mp.zero for ch in chans}
                for x, w in zip(xs, ws):
                    inner = self.node_values(kernel, x)
                    for ch in chans:
                        t = w * integrand(ch, x, inner, self.ectx)
                        sums[ch] += t
                        scale[ch] += abs(t)
                for ch in chans:
                    current[ch] = (sums[ch], scale[ch])
            still = []
            for ch in pending:
                val, sc = current[ch]
                history[ch].append(val)
                if ch in prev:
                    # roundoff floor relative to int |f| keeps exactly-zero integrals finite
                    change = abs(val - prev[ch])
                    if change <= self.tol * abs(val) + sc * floor:
                        results[ch] = (val, change, n)
                        continue
                still.append(ch)
                prev[ch] = val
            pending = still
        if pending:
            ch = pending[0]
            raise TruncationError(
                f"outer quadrature for {ch} did not settle by order {self.orders[-1]}",
                last_term=abs(history[ch][-1] - history[ch][-2]),
                estimates=tuple(history[ch][-2:]),
            )
        return results


# -- I2 ------------------------------------------------------------------------------------

def _laguerre_node(c, k, nmax, tau, ectx):
    """All Laguerre kernels L(k; n1, n2; gamma(tau)) with n1 <= n2 <= nmax at one node.

    The erfc form is used for gamma > 0: one scaled erfc and a few integer
    polynomials per node, far cheaper than the Tricomi values behind J when
    1/(4 gamma) is moderately large.
    """
    mp = ectx.mp
    gamma = c * (1 + tau)
    out = {}
    for n1 in range(nmax + 1):
        for n2 in range(n1, nmax + 1):
            prm = LaguerreKernelParams(k, n1, n2, gamma)
            if gamma > 0:
                v = laguerre_kernel_erfc(prm, ectx)
            else:
                v = laguerre_kernel_expansion(prm, ectx)
            out[(n1, n2)] = out[(n2, n1)] = +mp.convert(v)
    return out


def i2_table(channels: Sequence[ChannelIndices], zeta_over_alpha2, ctx: PrecisionContext | None = None,
             k: int = DEFAULT_K, tol=None, orders=ORDERS) -> dict:
    """I2 for every channel at one zeta/alpha^2, sharing kernel values between channels.

    Returns ``{channel: (value, last_change, order)}``.
    """
    ctx = resolve(ctx)
    chans = list(channels)
    outer = _Outer(ctx, tol, orders)
    c = to_mpf(outer.ectx, _exact(zeta_over_alpha2))
    if c < 0:
        raise DomainError("zeta/alpha^2 must be nonnegative")
    nmax = max(max(ch.n1, ch.n2) for ch in chans)
    half = Fraction(1, 2)

    def weight_of(ch):
        return (ch.l1 + half, ch.l2 + half)

    def kernel(tau, ectx):
        return _laguerre_node(c, k, nmax, tau, ectx)

    def integrand(ch, tau, inner, ectx):
        a, b = ch.l1 + half, ch.l2 + half
        return jacobi(ch.mu1, a, b, tau, ectx) * jacobi(ch.mu2, a, b, tau, ectx) * inner[(ch.n1, ch.n2)]

    res = outer.run(chans, weight_of, kernel, integrand)
    mp = ctx.mp
    return {ch: (+mp.convert(v), +mp.convert(e), n) for ch, (v, e, n) in res.items()}


def i2_integral(ch: ChannelIndices, pot_channel, alpha, ctx: PrecisionContext | None = None,
                k: int = DEFAULT_K, tol=None):
    """int (1-tau)^(l1+1/2) (1+tau)^(l2+1/2) P_mu1 P_mu2 L(k; n1, n2; gamma(tau)) dtau."""
    c = _zeta_ratio(pot_channel, alpha, ctx)
    return i2_table([ch], c, ctx, k, tol)[ch][0]


def _zeta_ratio(pot_channel, alpha, ctx):
    ctx = resolve(ctx)
    _, zeta = pot_channel
    c = _ratio(zeta, alpha)
    if c is not None:
        return c
    ectx = ctx.extra(32)
    return to_mpf(ectx, _exact(zeta)) / to_mpf(ectx, _exact(alpha)) ** 2


# -- I3 ------------------------------------------------------------------------------------

def _b_node(c, k, nmax, lpairs, tau, ectx, switch_low, switch_high):
    """B(k; n1, n2; l1, l2) at one node for every n1 <= n2 <= nmax and (l1, l2) in ``lpairs``."""
    mp = ectx.mp
    _, beta, kappa = _params_from_ratio(c, tau, mp)
    orders = sorted({l1 + l2 - 2 * r for l1, l2 in lpairs for r in range(min(l1, l2) + 1)})
    pvals = range(k - 1, k + 2 * nmax)
    kv = {}
    if kappa > 0:
        reps = k_eval_many([(m, p) for m in orders for p in pvals], beta, kappa, ectx,
                           switch_low, switch_high)
        kv = {key: r.value for key, r in reps.items()}
    out = {}
    for l1, l2 in lpairs:
        for n1 in range(nmax + 1):
            for n2 in range(n1, nmax + 1):
                if kappa > 0:
                    v = b_kernel(k, n1, n2, l1, l2, beta, kappa, ectx,
                                 kernel=lambda m, p, _e: kv[(m, p)])
                else:
                    v = b_kernel(k, n1, n2, l1, l2, beta, 0, ectx)
                out[(l1, l2, n1, n2)] = out[(l2, l1, n1, n2)] = v
                out[(l1, l2, n2, n1)] = out[(l2, l1, n2, n1)] = v
    return out


def i3_table(channels: Sequence[ChannelIndices], zeta_over_alpha2, ctx: PrecisionContext | None = None,
             k: int = DEFAULT_K, tol=None, orders=ORDERS,
             switch_low=None, switch_high=None) -> dict:
    """I3 for every channel at one zeta/alpha^2; returns ``{channel: (value, last_change, order)}``.

    When l1 + l2 is odd, B is odd in kappa and carries a factor
    sqrt(1 - tau^2); the rule then uses the weight (1-tau^2)^(3/2) and the
    integrand is divided by sqrt(1 - tau^2), keeping it smooth at the ends.
    """
    ctx = resolve(ctx)
    switch_low = NODE_SWITCH_LOW if switch_low is None else switch_low
    switch_high = NODE_SWITCH_HIGH if switch_high is None else switch_high
    chans = list(channels)
    outer = _Outer(ctx, tol, orders, cut=Fraction(1, 2))
    c = to_mpf(outer.ectx, _exact(zeta_over_alpha2))
    if c < 0:
        raise DomainError("zeta/alpha^2 must be nonnegative")
    nmax = max(max(ch.n1, ch.n2) for ch in chans)
    lpairs = sorted({(min(ch.l1, ch.l2), max(ch.l1, ch.l2)) for ch in chans})
    half = Fraction(1, 2)

    def weight_of(ch):
        return (Fraction(3, 2), Fraction(3, 2)) if (ch.l1 + ch.l2) % 2 else (1, 1)

    def kernel(tau, ectx):
        if c == 0:
            return None
        return _b_node(c, k, nmax, lpairs, tau, ectx, switch_low, switch_high)

    def integrand(ch, tau, inner, ectx):
        mp = ectx.mp
        p1 = jacobi(ch.mu1, ch.l1 + half, ch.l1 + half, tau, ectx)
        p2 = jacobi(ch.mu2, ch.l2 + half, ch.l2 + half, tau, ectx)
        if inner is None:
            bval = _b_zero_range(ch, k, ectx)
        else:
            bval = inner[(ch.l1, ch.l2, ch.n1, ch.n2)]
        if (ch.l1 + ch.l2) % 2:
            bval = bval / mp.sqrt(1 - tau * tau)
        return p1 * p2 * bval

    res = outer.run(chans, weight_of, kernel, integrand)
    mp = ctx.mp
    return {ch: (+mp.convert(v), +mp.convert(e), n) for ch, (v, e, n) in res.items()}


def _b_zero_range(ch, k, ectx):
    # zeta = 0: beta = kappa = 0, the x integral is Gamma-valued
    return b_kernel(k, ch.n1, ch.n2, ch.l1, ch.l2, 0, 0, ectx)


def i3_integral(ch: ChannelIndices, pot_channel, alpha, ctx: PrecisionContext | None = None,
                k: int = DEFAULT_K, tol=None):
    """int (1-tau^2) P_mu1^(l1+1/2,l1+1/2) P_mu2^(l2+1/2,l2+1/2) B(beta(tau), kappa(tau)) dtau."""
    c = _zeta_ratio(pot_channel, alpha, ctx)
    return i3_table([ch], c, ctx, k, tol)[ch][0]


# -- assembled matrix element ---------------------------------------------------------------------

def potential_matrix_element(pot: GaussianPotential, ch: ChannelIndices,
                             ctx: PrecisionContext | None = None, k: int = DEFAULT_K, tol=None):
    """Unnormalized (sum_k A_k I2, sum_k A_k I3, breakdown) for one channel set.

    ``breakdown`` lists ``{"A", "zeta", "I2", "I3"}`` per potential channel.
    Multiply by the products of hyperradial and hyperangular normalization
    constants of bra and ket to obtain physical matrix elements.
    """
    ctx = resolve(ctx)
    mp = ctx.mp
    pair12 = mp.zero
    pair13 = mp.zero
    rows = []
    for a, zeta in pot.channels:
        c = _zeta_ratio((a, zeta), pot.alpha, ctx)
        v2 = i2_table([ch], c, ctx, k, tol)[ch][0]
        v3 = i3_table([ch], c, ctx, k, tol)[ch][0]
        amp = to_mpf(ctx, a)
        pair12 += amp * v2
        pair13 += amp * v3
        rows.append({"A": a, "zeta": zeta, "I2": v2, "I3": v3})
    return pair12, pair13, rows
