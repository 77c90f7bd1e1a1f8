"""Command line driver.

Commands::

    hyperkernel kernel      --m 0 --p 5 --beta 1 --kappa 0.1,0.5,0.9
    hyperkernel laguerre    --k 5 --n1 0:2 --n2 0:2 --gamma 0.1,1
    hyperkernel compare     --m 0,2 --p 0:10 --beta 1 --kappa 0.5
    hyperkernel cancel-scan --m 0:6 --p 5 --beta 1 --kappa 0.5
    hyperkernel matel       --potential model.txt --n1 0:1 --n2 0:1

Grid flags take a scalar, a comma list or an inclusive ``a:b[:step]`` range.
Numbers are parsed exactly (decimal strings become rationals) and printed as
strings with a fixed digit count, so identical inputs give identical output.
Exit status is 0 when every point converged, 1 when some did not, and 2 for
usage, domain or parse errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

from .errors import DomainError, NumericalError, TruncationError
from .kernels import (
    SWITCH_LOW,
    KernelParams,
    LaguerreKernelParams,
    k_closed,
    k_eval,
    k_quadrature,
    k_series,
    laguerre_kernel_erfc,
    laguerre_kernel_expansion,
)
from .matelem import ChannelIndices, GaussianPotential, i2_table, i3_table
from .mpnum import PrecisionContext

EXIT_OK, EXIT_UNCONVERGED, EXIT_USAGE = 0, 1, 2
ENV_PRECISION = "HYPERKERNEL_PRECISION"


class UsageError(Exception):
    pass


# -- parsing ----------------------------------------------------------------------

def _number(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a number: {text!r}") from None


def parse_grid(text: str, integer: bool = False) -> list:
    """``"1"``, ``"0.1,0.5"`` or ``"0:10:2"`` (inclusive) into a list of exact values."""
    out = []
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            raise UsageError(f"empty entry in grid {text!r}")
        if ":" in item:
            parts = item.split(":")
            if len(parts) not in (2, 3):
                raise UsageError(f"range must be a:b or a:b:step, got {item!r}")
            a, b = _number(parts[0]), _number(parts[1])
            step = _number(parts[2]) if len(parts) == 3 else Fraction(1)
            if step <= 0:
                raise UsageError(f"range step must be positive in {item!r}")
            v = a
            while v <= b:
                out.append(v)
                v += step
        else:
            out.append(_number(item))
    if not out:
        raise UsageError(f"grid {text!r} is empty")
    if integer:
        if any(v.denominator != 1 for v in out):
            raise UsageError(f"expected integers in {text!r}")
        return [int(v) for v in out]
    return [v.numerator if v.denominator == 1 else v for v in out]


_CHANNEL = re.compile(r"^\{\s*(.*?)\s*\}$")
_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def parse_potential(text: str, source: str = "<potential>") -> GaussianPotential:
    """Read ``alpha = <real>`` and repeated ``channel = {A = <real>, zeta = <real>}`` lines."""
    alpha = None
    channels = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if "=" not in line:
            raise UsageError(f"{where}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "alpha":
            if not re.fullmatch(_NUM, value):
                raise UsageError(f"{where}: field 'alpha' is not a real number: {value!r}")
            alpha = Fraction(value)
        elif key == "channel":
            m = _CHANNEL.match(value)
            if not m:
                raise UsageError(f"{where}: channel must look like {{A = <real>, zeta = <real>}}")
            fields = {}
            for part in m.group(1).split(","):
                if "=" not in part:
                    raise UsageError(f"{where}: malformed channel field {part.strip()!r}")
                k, v = (s.strip() for s in part.split("=", 1))
                if k not in ("A", "zeta"):
                    raise UsageError(f"{where}: unknown channel field {k!r}")
                if not re.fullmatch(_NUM, v):
                    raise UsageError(f"{where}: field {k!r} is not a real number: {v!r}")
                fields[k] = Fraction(v)
            missing = {"A", "zeta"} - fields.keys()
            if missing:
                raise UsageError(f"{where}: channel is missing {', '.join(sorted(missing))}")
            if fields["zeta"] <= 0:
                raise UsageError(f"{where}: field 'zeta' must be positive")
            channels.append((fields["A"], fields["zeta"]))
        else:
            raise UsageError(f"{where}: unknown key {key!r}")
    if alpha is None:
        raise UsageError(f"{source}: missing 'alpha'")
    if alpha <= 0:
        raise UsageError(f"{source}: 'alpha' must be positive")
    if not channels:
        raise UsageError(f"{source}: no channel lines")
    return GaussianPotential(channels, alpha)


# -- rendering --------------------------------------------------------------------

def _digits(ctx: PrecisionContext) -> int:
    return ctx.tol_bits * 30103 // 100000 + 3


def _fmt(v, ctx, digits=None):
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, int):
        return str(v)
    if isinstance(v, Fraction):
        return _fraction_text(v)
    if isinstance(v, float):
        return repr(v)
    if digits is not None:
        return ctx.mp.nstr(v, digits, strip_zeros=False, min_fixed=1, max_fixed=0)
    return ctx.mp.nstr(v, _digits(ctx), strip_zeros=False, min_fixed=-4, max_fixed=6)


def _fraction_text(v: Fraction) -> str:
    # inputs arrive as decimals, so echo them as decimals when the expansion terminates
    if v.denominator == 1:
        return str(v.numerator)
    d = v.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{v.numerator}/{v.denominator}"
    places = max(twos, fives)
    scaled = abs(v.numerator) * 10**places // v.denominator
    body = str(scaled).rjust(places + 1, "0")
    text = (body[:-places] + "." + body[-places:]).rstrip("0")
    return ("-" if v < 0 else "") + text


def render(rows: list, columns: list, fmt: str, ctx: PrecisionContext) -> str:
    cells = [{c: _fmt(r.get(c), ctx, 4 if c.startswith(("est_", "max_rel", "rel_", "cancel", "t_")) else None)
              for c in columns} for r in rows]
    if fmt == "json":
        return json.dumps(cells, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    w.writerows(cells)
    return buf.getvalue()


# -- commands ---------------------------------------------------------------------

def _ctx(args) -> PrecisionContext:
    return PrecisionContext(work_bits=args.precision, target_rel_tol=args.tol)


def _kernel_points(args):
    ms = parse_grid(args.m, integer=True)
    return [(m, p, b, k) for m in ms for p in parse_grid(args.p)
            for b in parse_grid(args.beta) for k in parse_grid(args.kappa)]


def _kernel_row(task):
    (m, p, b, k), bits, tol = task
    ctx = PrecisionContext(bits, tol)
    row = {"m": m, "p": p, "beta": b, "kappa": k}
    try:
        rep = k_eval(KernelParams(m, p, b, k), ctx)
    except DomainError as e:
        row.update(status="domain_error", message=str(e))
        return row
    except NumericalError as e:
        row.update(status="unconverged", message=str(e))
        return row
    row.update(value=rep.value, method=rep.method, est_rel_err=rep.est_rel_err,
               cancellation_ratio=rep.cancellation_ratio, terms=rep.terms, status="ok")
    return row


def _timed(fn):
    t = time.perf_counter()
    try:
        rep = fn()
        return rep.value, time.perf_counter() - t, None
    except DomainError:
        return None, None, "invalid"
    except TruncationError:
        return None, None, "unconverged"


def _compare_row(task):
    (m, p, b, k), bits, tol = task
    ctx = PrecisionContext(bits, tol)
    row = {"m": m, "p": p, "beta": b, "kappa": k}
    try:
        prm = KernelParams(m, p, b, k)
    except DomainError as e:
        row.update(status="domain_error", message=str(e))
        return row
    ratio = prm.ratio(ctx)
    values = {}
    routes = (("series", k_series), ("closed_form", k_closed), ("quadrature", k_quadrature))
    for name, fn in routes:
        if name == "closed_form" and ratio < SWITCH_LOW:
            row[name] = "skipped-by-dispatcher"
            continue
        if name != "quadrature" and not ratio < 1:
            row[name] = "skipped-by-dispatcher"
            continue
        v, t, err = _timed(lambda: fn(prm, ctx))
        if err:
            row[name] = err
            continue
        values[name] = v
        row[name] = v
        row["t_" + name] = t
    vals = list(values.values())
    dev = max((abs(x / y - 1) for x in vals for y in vals if y != 0), default=None)
    row["max_rel_dev"] = dev
    row["status"] = "ok" if len(vals) >= 2 else "unconverged"
    return row


def _scan_row(task):
    (m, p, b, k), bits, tol = task
    ctx = PrecisionContext(bits, tol)
    row = {"m": m, "p": p, "beta": b, "kappa": k}
    try:
        rep = k_closed(KernelParams(m, p, b, k), ctx)
    except DomainError as e:
        row.update(status="domain_error", message=str(e))
        return row
    except NumericalError as e:
        row.update(status="unconverged", message=str(e))
        return row
    need = ctx.tol_bits + 16 + math.ceil(float(ctx.mp.log(rep.cancellation_ratio, 2)))
    row.update(value=rep.value, cancellation_ratio=rep.cancellation_ratio, bits_used=rep.work_bits_used,
               min_sufficient_bits=need, escalations=rep.escalations, est_rel_err=rep.est_rel_err,
               branch=rep.branch, status="ok")
    return row


def _map(fn, tasks, jobs):
    if jobs and jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def _grid_tasks(args):
    return [(pt, args.precision, args.tol) for pt in _kernel_points(args)]


def cmd_kernel(args):
    rows = _map(_kernel_row, _grid_tasks(args), args.jobs)
    cols = ["m", "p", "beta", "kappa", "value", "method", "est_rel_err",
            "cancellation_ratio", "terms", "status", "message"]
    return rows, cols


def cmd_compare(args):
    rows = _map(_compare_row, _grid_tasks(args), args.jobs)
    cols = ["m", "p", "beta", "kappa", "series", "closed_form", "quadrature", "max_rel_dev"]
    if not args.no_timing:
        cols += ["t_series", "t_closed_form", "t_quadrature"]
    cols += ["status", "message"]
    return rows, cols


def cmd_cancel_scan(args):
    rows = _map(_scan_row, _grid_tasks(args), args.jobs)
    cols = ["m", "p", "beta", "kappa", "value", "cancellation_ratio", "bits_used",
            "min_sufficient_bits", "escalations", "est_rel_err", "branch", "status", "message"]
    return rows, cols


def _laguerre_row(task):
    (k, n1, n2, g), bits, tol = task
    ctx = PrecisionContext(bits, tol)
    row = {"k": k, "n1": n1, "n2": n2, "gamma": g}
    try:
        prm = LaguerreKernelParams(k, n1, n2, g)
        a = laguerre_kernel_expansion(prm, ctx)
        b = laguerre_kernel_erfc(prm, ctx) if g > 0 else None
    except DomainError as e:
        row.update(status="domain_error", message=str(e))
        return row
    row.update(expansion=a, erfc=b, rel_diff=abs(b / a - 1) if b is not None and a != 0 else None,
               status="ok")
    return row


def cmd_laguerre(args):
    tasks = [((k, n1, n2, g), args.precision, args.tol)
             for k in parse_grid(args.k, integer=True)
             for n1 in parse_grid(args.n1, integer=True)
             for n2 in parse_grid(args.n2, integer=True)
             for g in parse_grid(args.gamma)]
    rows = _map(_laguerre_row, tasks, args.jobs)
    return rows, ["k", "n1", "n2", "gamma", "expansion", "erfc", "rel_diff", "status", "message"]


def cmd_matel(args):
    if not args.potential:
        raise UsageError("matel needs --potential <path>")
    try:
        with open(args.potential, encoding="utf-8") as fh:
            pot = parse_potential(fh.read(), args.potential)
    except OSError as e:
        raise UsageError(f"cannot read potential file: {e}") from None
    ctx = _ctx(args)
    chans = [ChannelIndices(l1, l2, u1, u2, n1, n2)
             for l1 in parse_grid(args.l1, integer=True) for l2 in parse_grid(args.l2, integer=True)
             for u1 in parse_grid(args.mu1, integer=True) for u2 in parse_grid(args.mu2, integer=True)
             for n1 in parse_grid(args.n1, integer=True) for n2 in parse_grid(args.n2, integer=True)]
    mp = ctx.mp
    rows = [{"l1": c.l1, "l2": c.l2, "mu1": c.mu1, "mu2": c.mu2, "n1": c.n1, "n2": c.n2,
             "pair12": mp.zero, "pair13_23": mp.zero, "status": "ok"} for c in chans]
    cols = ["l1", "l2", "mu1", "mu2", "n1", "n2", "pair12", "pair13_23"]
    for idx, (a, zeta) in enumerate(pot.channels):
        ratio = Fraction(zeta) / Fraction(pot.alpha) ** 2
        amp = ctx.mpf(a)
        try:
            t2 = i2_table(chans, ratio, ctx, tol=args.tol)
            t3 = i3_table(chans, ratio, ctx, tol=args.tol)
        except TruncationError as e:
            for r in rows:
                r.update(status="unconverged", message=str(e))
            return rows, cols + ["status", "message"]
        for r, c in zip(rows, chans):
            r["pair12"] += amp * t2[c][0]
            r["pair13_23"] += amp * t3[c][0]
            if args.breakdown:
                r[f"I2_{idx}"] = t2[c][0]
                r[f"I3_{idx}"] = t3[c][0]
    if args.breakdown:
        for idx in range(len(pot.channels)):
            cols += [f"I2_{idx}", f"I3_{idx}"]
    return rows, cols + ["status"]


COMMANDS = {
    "kernel": cmd_kernel,
    "laguerre": cmd_laguerre,
    "matel": cmd_matel,
    "compare": cmd_compare,
    "cancel-scan": cmd_cancel_scan,
}


def build_parser() -> argparse.ArgumentParser:
    default_bits = os.environ.get(ENV_PRECISION, "256")
    parser = argparse.ArgumentParser(prog="hyperkernel", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--precision", type=int, default=int(default_bits),
                        help=f"working precision in bits (default ${ENV_PRECISION} or 256)")
        sp.add_argument("--tol", default="1e-30", help="target relative tolerance")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--out", help="write to this path instead of stdout")
        sp.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    for name in ("kernel", "compare", "cancel-scan"):
        sp = sub.add_parser(name)
        sp.add_argument("--m", required=True)
        sp.add_argument("--p", required=True)
        sp.add_argument("--beta", required=True)
        sp.add_argument("--kappa", required=True)
        if name == "compare":
            sp.add_argument("--no-timing", action="store_true", help="omit timing columns")
        common(sp)
    sp = sub.add_parser("laguerre")
    sp.add_argument("--k", default="5")
    sp.add_argument("--n1", default="0")
    sp.add_argument("--n2", default="0")
    sp.add_argument("--gamma", required=True)
    common(sp)
    sp = sub.add_parser("matel")
    sp.add_argument("--potential")
    for name in ("l1", "l2", "mu1", "mu2", "n1", "n2"):
        sp.add_argument(f"--{name}", default="0")
    sp.add_argument("--breakdown", action="store_true")
    common(sp)
    sp.set_defaults(tol="1e-20")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        PrecisionContext(args.precision, args.tol)
        rows, cols = COMMANDS[args.command](args)
    except (UsageError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    ctx = _ctx(args)
    text = render(rows, cols, args.format, ctx)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    statuses = {r.get("status") for r in rows}
    if "domain_error" in statuses:
        return EXIT_USAGE
    if statuses - {"ok"}:
        return EXIT_UNCONVERGED
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
