"""Extended-precision real arithmetic.

Every routine takes a :class:`PrecisionContext` that owns a private
``mpmath`` context, so no global precision state is ever touched and
values from different contexts can coexist. Real numbers are plain mpmath
``mpf`` instances (``ExtReal`` below is only a documentation alias).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable, Tuple

import mpmath

from .errors import DomainError, PoleError

ExtReal = Any  # an mpmath mpf bound to some PrecisionContext

DEFAULT_BITS = 256
DEFAULT_TOL = "1e-30"


@lru_cache(maxsize=None)
def _mp_context(bits: int) -> mpmath.ctx_mp.MPContext:
    # one immutable-by-convention context per precision; nobody sets .prec
    mp = mpmath.MPContext()
    mp.prec = bits
    return mp


@dataclass(frozen=True)
class PrecisionContext:
    """Working precision, target relative tolerance and series budget."""

    work_bits: int = DEFAULT_BITS
    target_rel_tol: Any = DEFAULT_TOL
    max_series_terms: int = 10000

    def __post_init__(self):
        if int(self.work_bits) != self.work_bits or self.work_bits < 64:
            raise ValueError(f"work_bits must be an integer >= 64, got {self.work_bits}")
        if self.max_series_terms < 1:
            raise ValueError("max_series_terms must be >= 1")
        tol = _mp_context(64).convert(self.target_rel_tol)
        if not tol > 0:
            raise ValueError("target_rel_tol must be positive")

    @property
    def mp(self):
        return _mp_context(self.work_bits)

    @property
    def tol(self):
        return self.mp.convert(self.target_rel_tol)

    @property
    def tol_bits(self) -> int:
        """Bits of relative accuracy implied by ``target_rel_tol``."""
        return int(math.ceil(-float(self.mp.log(self.tol, 2))))

    def with_bits(self, bits: int) -> "PrecisionContext":
        return replace(self, work_bits=int(bits))

    def extra(self, bits: int) -> "PrecisionContext":
        return replace(self, work_bits=self.work_bits + int(bits))

    def mpf(self, x):
        return to_mpf(self, x)


DEFAULT_CONTEXT = PrecisionContext()


def resolve(ctx: PrecisionContext | None) -> PrecisionContext:
    return DEFAULT_CONTEXT if ctx is None else ctx


def to_mpf(ctx: PrecisionContext, x):
    """Convert ints, strings, Fractions, floats or foreign mpfs into ``ctx``.

    Strings are parsed at full working precision, so ``"0.3"`` is the
    correctly rounded 0.3 rather than its binary double approximation.
    """
    mp = ctx.mp
    if isinstance(x, Fraction):
        return mp.mpf(x.numerator) / x.denominator
    if isinstance(x, mpmath.ctx_mp_python._constant):
        # evaluate pi, e, ... afresh at this precision, whichever context owns them
        return mp.make_mpf(x.func(mp.prec, "n"))
    v = mp.convert(x)
    if not isinstance(v, mp.mpf):
        raise DomainError(f"expected a real number, got {x!r}")
    return +v


def is_integer(x) -> bool:
    """True when ``x`` is exactly an integer (int, Fraction or integral mpf)."""
    if isinstance(x, bool):
        return False
    if isinstance(x, int):
        return True
    if isinstance(x, Fraction):
        return x.denominator == 1
    if isinstance(x, str):
        try:
            x = _mp_context(1024).mpf(x)
        except (ValueError, TypeError):
            return False
    if isinstance(x, float):
        return x.is_integer()
    try:
        return bool(mpmath.isint(x))
    except TypeError:
        return False


def is_nonpositive_integer(x) -> bool:
    if not is_integer(x):
        return False
    if isinstance(x, str):
        x = _mp_context(1024).mpf(x)
    return x <= 0


def elementary(ctx: PrecisionContext | None, f: str, x, y=None):
    """Evaluate ``exp``, ``ln``, ``sqrt``, ``sinh``, ``cosh`` or ``pow``.

    ``pow`` takes the exponent as ``y``. Arguments outside the real domain
    raise :class:`DomainError` instead of silently going complex.
    """
    ctx = resolve(ctx)
    mp = ctx.mp
    x = to_mpf(ctx, x)
    if f == "exp":
        return mp.exp(x)
    if f == "ln":
        if not x > 0:
            raise DomainError(f"ln undefined for {x}")
        return mp.ln(x)
    if f == "sqrt":
        if x < 0:
            raise DomainError(f"sqrt undefined for {x}")
        return mp.sqrt(x)
    if f == "sinh":
        return mp.sinh(x)
    if f == "cosh":
        return mp.cosh(x)
    if f == "pow":
        if y is None:
            raise TypeError("pow needs an exponent")
        y = to_mpf(ctx, y)
        if x < 0 and not mp.isint(y):
            raise DomainError(f"{x}**{y} is not real")
        if x == 0 and y < 0:
            raise DomainError("zero to a negative power")
        return mp.power(x, y)
    raise ValueError(f"unknown elementary function {f!r}")


def gamma_fn(ctx: PrecisionContext | None, x):
    ctx = resolve(ctx)
    x = to_mpf(ctx, x)
    if x <= 0 and ctx.mp.isint(x):
        raise PoleError(f"gamma pole at {x}")
    return ctx.mp.gamma(x)


def rgamma_fn(ctx: PrecisionContext | None, x):
    """1/Gamma(x); zero at the poles instead of raising."""
    ctx = resolve(ctx)
    return ctx.mp.rgamma(to_mpf(ctx, x))


def erfc_fn(ctx: PrecisionContext | None, x):
    ctx = resolve(ctx)
    return ctx.mp.erfc(to_mpf(ctx, x))


def erfcx_fn(ctx: PrecisionContext | None, x):
    """Scaled complementary error function exp(x^2) * erfc(x).

    mpmath exponents are unbounded, so the product never underflows; the
    relative accuracy of erfc itself is maintained for large x.
    """
    ctx = resolve(ctx)
    mp = ctx.mp
    x = to_mpf(ctx, x)
    return mp.exp(x * x) * mp.erfc(x)


def lost_bits(scale, value) -> float:
    """Bits destroyed when summands of size ``scale`` cancel down to ``value``."""
    scale = abs(scale)
    value = abs(value)
    if scale == 0:
        return 0.0
    if value == 0:
        return math.inf
    return max(0.0, float(mpmath.log(scale / value, 2)))


def guarded(
    ctx: PrecisionContext,
    compute: Callable[[PrecisionContext], Tuple[Any, Any]],
    *,
    guard: int = 32,
    rounds: int = 5,
):
    """Run ``compute`` with enough extra bits to absorb its cancellation.

    ``compute(ectx)`` returns ``(value, scale)`` where ``scale`` is the
    largest magnitude that entered the cancelling sum. The computation is
    repeated at higher precision until at least ``ctx.work_bits`` bits
    survive. Returns ``(value, bits_used, lost)`` with ``value`` rounded into
    ``ctx``.
    """
    bits = ctx.work_bits + guard
    value = scale = None
    lost = 0.0
    for _ in range(rounds):
        value, scale = compute(ctx.with_bits(bits))
        lost = lost_bits(scale, value)
        if math.isinf(lost):
            # exact zero from a cancelling sum: accept once confirmed at 2x bits
            value2, scale2 = compute(ctx.with_bits(2 * bits))
            if value2 == 0:
                return ctx.mp.zero, 2 * bits, lost
            value, scale = value2, scale2
            bits *= 2
            lost = lost_bits(scale, value)
        if bits - lost >= ctx.work_bits:
            return +ctx.mp.convert(value), bits, lost
        bits = ctx.work_bits + guard + int(math.ceil(lost))
    return +ctx.mp.convert(value), bits, lost
