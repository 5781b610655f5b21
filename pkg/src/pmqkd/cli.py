"""Command-line front end: ``sweep``, ``table`` and ``mc-check``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np

from .montecarlo import run_batch
from .photonics import ProtocolParams, RangeError
from .rates import (
    Observables,
    RateReport,
    analytic_observables,
    phase_error_rate,
    rate_pm,
    rate_report,
)
from .sifting import correspondence_table, format_phase

CSV_COLUMNS = ["L_km", "mu", "Q", "Ez", "Ex", "rate_trits", "rate_bits", "rate_2pm_bits",
               "plob_bits"]
MC_COLUMNS = ["q_hat", "ez_hat", "std_q", "std_ez"]
MODES = ("analytic", "montecarlo", "both")


class ParseError(ValueError):
    pass


class SweepError(RuntimeError):
    pass


_INT_KEYS = {"n", "M"}
_STR_KEYS = {"interferometer", "ex_model"}
_PARAM_KEYS = {f.name for f in fields(ProtocolParams)}


def parse_config(text: str) -> ProtocolParams:
    """Parse ``key=value`` lines into ProtocolParams; omitted keys keep defaults.

    ``mu`` sets both ``mu_a`` and ``mu_b``. ``#`` starts a comment.
    """
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected key=value, got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        if key not in _PARAM_KEYS and key != "mu":
            raise ParseError(f"line {lineno}: unknown key {key!r}")
        try:
            if key in _STR_KEYS:
                parsed = val
            elif key in _INT_KEYS:
                parsed = int(val)
            else:
                parsed = float(val)
        except ValueError:
            raise ParseError(f"line {lineno}: bad value for {key}: {val!r}") from None
        if key == "mu":
            values["mu_a"] = values["mu_b"] = parsed
        else:
            values[key] = parsed
    return ProtocolParams(**values)


@dataclass(frozen=True)
class SweepSpec:
    L_start: float = 0.0
    L_end: float = 500.0
    L_step: float = 10.0
    mode: str = "analytic"
    rounds: int = 10**6
    seed: int = 0
    optimize_mu: bool = True
    fixed_mu: float | None = None

    def __post_init__(self):
        if self.L_start > self.L_end:
            raise RangeError("L_start must be <= L_end")
        if self.L_step <= 0:
            raise RangeError("L_step must be > 0")
        if self.mode not in MODES:
            raise RangeError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode != "analytic" and self.rounds < 1:
            raise RangeError("rounds must be >= 1 in Monte Carlo modes")
        if self.fixed_mu is not None and self.fixed_mu < 0:
            raise RangeError("fixed_mu must be >= 0")

    def distances(self) -> list[float]:
        count = int(math.floor((self.L_end - self.L_start) / self.L_step + 1e-9)) + 1
        return [round(self.L_start + i * self.L_step, 10) for i in range(count)]


def _distance_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _sweep_point(params: ProtocolParams, spec: SweepSpec, index: int, L: float,
                 streams: int) -> RateReport:
    try:
        p = params.at(L)
        fixed = spec.fixed_mu
        if not spec.optimize_mu and fixed is None:
            fixed = params.mu_a
        rep = rate_report(p, optimize=spec.optimize_mu, fixed_mu=fixed)
        if spec.mode == "analytic":
            return rep
        pm = p.with_mu(rep.mu_used)
        tally = run_batch(pm, spec.rounds, _distance_seed(spec.seed, index), streams)
        rep.mc = tally
        if spec.mode == "montecarlo":
            obs = Observables(tally.q_hat, tally.ez_hat, phase_error_rate(tally.ez_hat, pm))
            rate = rate_pm(pm.n, pm.M, obs, pm.f)
            rep.observables = obs
            rep.rate_trits, rep.rate_bits = rate, rate * math.log2(pm.n)
        return rep
    except Exception as exc:
        raise SweepError(f"at L={L} km: {exc}") from exc


def run_sweep(params: ProtocolParams, spec: SweepSpec, workers: int = 1) -> list[RateReport]:
    """One RateReport per distance, in distance order.

    Distances run concurrently when ``workers > 1``; Monte Carlo batches
    additionally fan out over the same number of streams. Output does not
    depend on ``workers``.
    """
    Ls = spec.distances()
    if workers <= 1:
        return [_sweep_point(params, spec, i, L, 1) for i, L in enumerate(Ls)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futs = [pool.submit(_sweep_point, params, spec, i, L, workers) for i, L in enumerate(Ls)]
        return [f.result() for f in futs]


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def reports_to_csv(reports: list[RateReport], mode: str = "analytic") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = CSV_COLUMNS + (MC_COLUMNS if mode != "analytic" else [])
    w.writerow(header)
    for r in reports:
        o = r.observables
        row = [r.L, r.mu_used, o.q, o.ez, o.ex, r.rate_trits, r.rate_bits, r.rate_2pm_bits,
               r.plob_bits]
        if mode != "analytic":
            m = r.mc
            row += [m.q_hat, m.ez_hat, m.std_q, m.std_ez]
        w.writerow([_fmt(float(v)) for v in row])
    return buf.getvalue()


def render_table(n: int, s: int) -> str:
    """Key-correspondence table for offset class ``s`` as aligned plain text."""
    header = ["κ_a", "κ_b", "|φ_a−φ_b|", "Δ_φ", "Response", "κ_b′", "κ_b″"]
    body = [
        [str(r.kappa_a), str(r.kappa_b), format_phase(r.phase_offset, n),
         format_phase(r.delta_phi, n), f"D_{r.detector}", str(r.kappa_b_prime),
         str(r.kappa_b_double_prime)]
        for r in correspondence_table(n, s)
    ]
    widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
    lines = ["  ".join(c.ljust(wd) for c, wd in zip(row, widths)).rstrip()
             for row in [header] + body]
    lines.insert(1, "  ".join("-" * wd for wd in widths))
    return "\n".join(lines) + "\n"


def atomic_write(path: str, text: str) -> None:
    """Write via a temp file in the same directory, then rename over ``path``."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_params(path: str | None) -> ProtocolParams:
    if path is None:
        return ProtocolParams()
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        atomic_write(out, text)


def cmd_sweep(args) -> int:
    params = _load_params(args.config)
    spec = SweepSpec(args.start, args.end, args.step, args.mode, args.rounds, args.seed,
                     optimize_mu=args.fixed_mu is None, fixed_mu=args.fixed_mu)
    reports = run_sweep(params, spec, workers=args.workers)
    text = reports_to_csv(reports, spec.mode)
    _emit(text, args.out)
    if args.out is not None:
        sidecar = {"params": params.to_dict(), "sweep": asdict(spec), "columns":
                   text.splitlines()[0].split(",")}
        atomic_write(args.out + ".json", json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_table(args) -> int:
    _emit(render_table(args.n, args.s), args.out)
    return 0


def mc_check(params: ProtocolParams, distances, mu: float, rounds: int, seed: int,
             workers: int = 1, nsigma: float = 3.0) -> list[dict]:
    """Compare run_batch against analytic_observables at each distance."""
    rows = []
    for i, L in enumerate(distances):
        p = params.at(L).with_mu(mu)
        a = analytic_observables(p)
        t = run_batch(p, rounds, _distance_seed(seed, i), workers)
        zq = (t.q_hat - a.q) / t.std_q if t.std_q > 0 else math.inf
        ze = (t.ez_hat - a.ez) / t.std_ez if t.std_ez > 0 else math.inf
        rows.append({"L_km": L, "Q": a.q, "q_hat": t.q_hat, "z_q": zq, "Ez": a.ez,
                     "ez_hat": t.ez_hat, "z_ez": ze,
                     "ok": abs(zq) <= nsigma and abs(ze) <= nsigma})
    return rows


def cmd_mc_check(args) -> int:
    params = _load_params(args.config)
    Ls = [float(x) for x in args.distances.split(",")]
    rows = mc_check(params, Ls, args.mu, args.rounds, args.seed, args.workers)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (_fmt(v) if isinstance(v, float) else v) for k, v in r.items()})
    _emit(buf.getvalue(), args.out)
    return 0 if all(r["ok"] for r in rows) else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key=value parameter file")
    common.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    common.add_argument("--seed", type=int, default=0)

    ap = argparse.ArgumentParser(prog="pmqkd", description="n-state phase-matching QKD toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", parents=[common], help="key rate versus distance")
    sw.add_argument("--start", type=float, default=0.0)
    sw.add_argument("--end", type=float, default=500.0)
    sw.add_argument("--step", type=float, default=10.0)
    sw.add_argument("--mode", choices=MODES, default="analytic")
    sw.add_argument("--rounds", type=int, default=10**6)
    sw.add_argument("--fixed-mu", type=float, default=None,
                    help="pin mu instead of optimising it per distance")
    sw.add_argument("--workers", type=int, default=1)
    sw.set_defaults(func=cmd_sweep)

    tb = sub.add_parser("table", parents=[common], help="key-correspondence table")
    tb.add_argument("--n", type=int, default=3)
    tb.add_argument("--s", type=int, default=2)
    tb.set_defaults(func=cmd_table)

    mc = sub.add_parser("mc-check", parents=[common], help="Monte Carlo vs analytic check")
    mc.add_argument("--distances", default="50,100,200")
    mc.add_argument("--mu", type=float, default=0.05)
    mc.add_argument("--rounds", type=int, default=10**7)
    mc.add_argument("--workers", type=int, default=1)
    mc.set_defaults(func=cmd_mc_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, SweepError) as exc:
        print(f"pmqkd {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
