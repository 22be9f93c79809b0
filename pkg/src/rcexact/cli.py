"""Command-line front end.

Every subcommand reads a channel document (JSON with ``W``, ``Px`` and an
optional ``name``), calls one library function and prints the result.  Exit
status is 0 on success, 2 on a domain error (including malformed channels),
3 when a resource cap is hit and 64 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

from . import __version__
from .bounds import (
    CompareOptions,
    compare_report,
    gallager_asymptotic,
    theorem2_asymptotic,
    union_asymptotic,
)
from .channel import load_channel, mutual_information
from .errors import DomainError, NotApplicableError, ResourceError
from .exact import ATOM_CAP, MERGE_TOL, TYPE_CAP, exact_prc
from .gfun import gh_inequality_suite
from .lattice import LATTICE_TOL, MAX_DENOMINATOR, classify
from .tilting import critical_rate, solve_exponent

EXIT_OK = 0
EXIT_DOMAIN = 2
EXIT_RESOURCE = 3
EXIT_USAGE = 64

CSV_COLUMNS = (
    "n", "M", "log_exact", "log_thm1_lo", "log_thm1_hi", "log_thm2",
    "log_gallager", "log_union", "ratio_thm2", "config_hash",
)
NA = "NA"


@dataclass(frozen=True)
class RunConfig:
    command: str
    channel: str | None = None
    R: float | None = None
    n: int | None = None
    n_list: tuple[int, ...] = ()
    M: int | None = None
    eps: float = 0.1
    delta2: float = 0.1
    eta: float | None = None
    tol: float = LATTICE_TOL
    max_denominator: int = MAX_DENOMINATOR
    merge_tol: float = MERGE_TOL
    atom_cap: int = ATOM_CAP
    type_cap: int = TYPE_CAP
    with_exact: bool = True
    with_thm1: bool = True
    output: str | None = None
    fmt: str = "text"
    extra: dict = field(default_factory=dict)


def fmt_num(x: Any) -> str:
    if x is None:
        return NA
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return NA
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return f"{x:.12g}"


def config_hash(cfg: RunConfig, channel_doc: dict | None) -> str:
    payload = {k: v for k, v in asdict(cfg).items() if k not in ("output", "fmt")}
    payload["channel_doc"] = channel_doc
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _n_list(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty n list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rcexact", description="Exact and asymptotic random-coding error probabilities for DMCs.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    def common(sp, rate=False, fmt=("text", "json")):
        sp.add_argument("--channel", required=True, help="channel JSON document")
        sp.add_argument("--format", dest="fmt", choices=fmt, default=fmt[0])
        sp.add_argument("--output", help="write to this file instead of stdout")
        sp.add_argument("--tol", type=float, default=LATTICE_TOL, help="lattice commensurability tolerance")
        sp.add_argument("--max-denominator", type=int, default=MAX_DENOMINATOR)
        if rate:
            sp.add_argument("--R", type=float, required=True, help="rate (nats unless --bits)")
            sp.add_argument("--bits", action="store_true", help="interpret --R in bits per channel use")

    def caps(sp):
        sp.add_argument("--merge-tol", type=float, default=MERGE_TOL)
        sp.add_argument("--atom-cap", type=int, default=ATOM_CAP)
        sp.add_argument("--type-cap", type=int, default=TYPE_CAP)

    sp = sub.add_parser("classify", help="lattice span and strongly-nonlattice classification")
    common(sp)
    sp.add_argument("--R", type=float, help="take eta from the exponent at this rate (default eta = 1/2)")
    sp.add_argument("--bits", action="store_true")
    sp.add_argument("--eta", type=float)

    sp = sub.add_parser("exponent", help="tilted solution and critical rate")
    common(sp, rate=True)

    sp = sub.add_parser("exact", help="exact P_RC(n, M)")
    common(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--M", type=int, required=True)
    caps(sp)

    sp = sub.add_parser("bounds", help="closed-form asymptotes for one n")
    common(sp, rate=True)
    sp.add_argument("--n", type=int, required=True)

    sp = sub.add_parser("compare", help="sweep over n, CSV output")
    common(sp, rate=True, fmt=("csv", "json"))
    sp.add_argument("--n", dest="n_list", type=_n_list, required=True, help="comma-separated block lengths")
    sp.add_argument("--M", type=int, help="fixed code size instead of ceil(exp(nR))")
    sp.add_argument("--eps", type=float, default=0.1)
    sp.add_argument("--delta2", type=float, default=0.1, help="delta2 as a fraction of mu2")
    sp.add_argument("--no-exact", action="store_true")
    sp.add_argument("--no-thm1", action="store_true")
    caps(sp)

    sp = sub.add_parser("gh-check", help="grid check of the g_h inequalities")
    sp.add_argument("--format", dest="fmt", choices=("text", "json"), default="text")
    sp.add_argument("--output")
    return p


def parse_config(argv: Sequence[str]) -> RunConfig:
    args = build_parser().parse_args(list(argv))
    if args.command is None:
        raise _UsageError(build_parser().format_usage() + "rcexact: error: a command is required")
    d = vars(args)
    R = d.get("R")
    if R is not None and d.get("bits"):
        R = R * math.log(2.0)
    return RunConfig(
        command=args.command,
        channel=d.get("channel"),
        R=R,
        n=d.get("n"),
        n_list=d.get("n_list") or (),
        M=d.get("M"),
        eps=d.get("eps", 0.1),
        delta2=d.get("delta2", 0.1),
        eta=d.get("eta"),
        tol=d.get("tol", LATTICE_TOL),
        max_denominator=d.get("max_denominator", MAX_DENOMINATOR),
        merge_tol=d.get("merge_tol", MERGE_TOL),
        atom_cap=d.get("atom_cap", ATOM_CAP),
        type_cap=d.get("type_cap", TYPE_CAP),
        with_exact=not d.get("no_exact", False),
        with_thm1=not d.get("no_thm1", False),
        output=d.get("output"),
        fmt=d.get("fmt", "text"),
    )


def _read_channel(path: str) -> tuple[Any, dict]:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DomainError(f"cannot read channel file {path!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise DomainError(f"channel file {path!r} is not valid JSON: {exc}") from None
    return load_channel(doc), doc


def _text(record: dict) -> str:
    lines = []
    for k, v in record.items():
        if isinstance(v, (list, tuple)):
            v = json.dumps(v)
        elif not isinstance(v, str):
            v = fmt_num(v)
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"


def _json(obj: Any) -> str:
    def clean(o):
        if isinstance(o, float):
            return None if not math.isfinite(o) else float(fmt_num(o))
        if isinstance(o, dict):
            return {k: clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        return o

    return json.dumps(clean(obj), indent=2, sort_keys=False) + "\n"


def _classify(cfg: RunConfig) -> dict:
    ch, _ = _read_channel(cfg.channel)
    eta = cfg.eta
    if eta is None:
        eta = solve_exponent(ch, cfg.R).eta if cfg.R is not None else 0.5
    lc = classify(ch, eta, cfg.tol, cfg.max_denominator)
    rec = lc.as_dict()
    return {"channel": ch.name, **rec, "pruned_outputs": list(ch.pruned_outputs)}


def _exponent(cfg: RunConfig) -> dict:
    ch, _ = _read_channel(cfg.channel)
    ts = solve_exponent(ch, cfg.R)
    return {"channel": ch.name, "I": mutual_information(ch), "R_crit": critical_rate(ch), **ts.as_dict()}


def _exact(cfg: RunConfig) -> dict:
    ch, _ = _read_channel(cfg.channel)
    lc = classify(ch, 0.5, cfg.tol, cfg.max_denominator)
    lp = exact_prc(ch, cfg.n, cfg.M, lc, cfg.merge_tol, cfg.atom_cap, cfg.type_cap)
    return {"channel": ch.name, "n": cfg.n, "M": cfg.M, "h": lc.h, "log_P_RC": lp, "P_RC": math.exp(lp)}


def _bounds(cfg: RunConfig) -> dict:
    ch, _ = _read_channel(cfg.channel)
    ts = solve_exponent(ch, cfg.R)
    lc = classify(ch, ts.eta, cfg.tol, cfg.max_denominator)
    rec = {
        "channel": ch.name, "n": cfg.n, "R": cfg.R, "regime": ts.regime.value, "rho": ts.rho,
        "Er": ts.Er, "table1_cell": lc.table1_cell.value,
        "outside_hypotheses": not lc.strongly_nonlattice,
        "log_thm2": theorem2_asymptotic(ts, lc, cfg.n, warn=False),
    }
    try:
        rec["log_gallager"] = gallager_asymptotic(ch, cfg.n, cfg.R, lc)
    except NotApplicableError:
        rec["log_gallager"] = None
    try:
        rec["log_union"] = union_asymptotic(ts, lc, cfg.n, warn=False)
    except NotApplicableError:
        rec["log_union"] = None
    return rec


def _compare(cfg: RunConfig) -> tuple[list, str]:
    ch, doc = _read_channel(cfg.channel)
    opts = CompareOptions(
        eps=cfg.eps, delta2_fraction=cfg.delta2, with_exact=cfg.with_exact, with_thm1=cfg.with_thm1,
        type_cap=cfg.type_cap, atom_cap=cfg.atom_cap, M_override=cfg.M,
    )
    return compare_report(ch, cfg.R, cfg.n_list, opts), config_hash(cfg, doc)


def compare_csv(rows, chash: str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([
            r.n, r.M, fmt_num(r.log_exact), fmt_num(r.log_thm1_lower), fmt_num(r.log_thm1_upper),
            fmt_num(r.log_thm2), fmt_num(r.log_gallager), fmt_num(r.log_union_asym), fmt_num(r.ratio_thm2), chash,
        ])
    return buf.getvalue()


def compare_json(rows, chash: str) -> str:
    out = []
    for r in rows:
        d = asdict(r)
        d["ratio_thm2"] = r.ratio_thm2
        d["config_hash"] = chash
        out.append(d)
    return _json(out)


def _gh_check(cfg: RunConfig) -> list[dict]:
    return [
        {"inequality": r.name, "points": r.points, "violations": r.violations,
         "worst_excess": r.worst_excess, "worst_at": list(r.worst_at), "ok": r.ok}
        for r in gh_inequality_suite()
    ]


def run(cfg: RunConfig) -> tuple[int, str]:
    """Execute one command; returns the exit status and the text to emit."""
    if cfg.command == "compare":
        rows, chash = _compare(cfg)
        return EXIT_OK, compare_json(rows, chash) if cfg.fmt == "json" else compare_csv(rows, chash)
    if cfg.command == "gh-check":
        recs = _gh_check(cfg)
        if cfg.fmt == "json":
            return EXIT_OK, _json(recs)
        lines = [
            f"{'PASS' if r['ok'] else 'FAIL'}  {r['inequality']}: {r['violations']}/{r['points']} violations,"
            f" worst excess {fmt_num(r['worst_excess'])} at {r['worst_at']}"
            for r in recs
        ]
        return EXIT_OK, "\n".join(lines) + "\n"
    handlers = {"classify": _classify, "exponent": _exponent, "exact": _exact, "bounds": _bounds}
    if cfg.command not in handlers:
        raise _UsageError(f"unknown command {cfg.command!r}")
    rec = handlers[cfg.command](cfg)
    return EXIT_OK, _json(rec) if cfg.fmt == "json" else _text(rec)


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
        status, text = run(cfg)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except ResourceError as exc:
        print(f"rcexact: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except DomainError as exc:
        print(f"rcexact: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status
