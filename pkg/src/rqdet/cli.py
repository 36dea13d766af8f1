"""Command-line entry point: ``rqdet {construct,trajectory,rqa,sweep,reproduce}``.

Exit status: 0 pass, 1 certified-bound or validation failure, 2 usage
error, 3 budget exceeded.  Every JSON output embeds the resolved config
and is written with sorted keys, so identical configs give identical bytes.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from .config import RunConfig, parse_eps, parse_number, parse_range
from .dynamics import OdometerExtension, parse_map, symbolic_trajectory, trajectory
from .experiments import Budget, classify, epsilon_sweep, four_fifths_report, theorem_example_report
from .intervals import build_ternary, build_theorem3, validate
from .odometer import Word
from .rqa import asymptotic_profile, recurrence_matrix

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


class BudgetExceeded(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, Fraction):
        return f"{o.numerator}/{o.denominator}"
    if hasattr(o, "item"):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _emit(cfg: RunConfig, name: str, payload: dict, stdout):
    payload = dict(payload, config=cfg.to_dict())
    text = _dump(payload)
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)
    stdout.write(text)


def _write(cfg: RunConfig, name: str, data):
    if not cfg.out:
        return
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    if isinstance(data, bytes):
        path.write_bytes(data)
    else:
        path.write_text(data)


def _x0(text: str):
    return parse_number(text)


# ---------------------------------------------------------------------------
# commands


def cmd_construct(cfg: RunConfig, stdout) -> int:
    if cfg.kind == "ternary":
        sys_ = build_ternary()
        depth = cfg.depth if cfg.depth is not None else 8
        if not 0 <= depth <= 20:
            raise UsageError("depth must lie in 0..20")
    elif cfg.kind == "theorem3":
        try:
            sys_, ladder = build_theorem3(cfg.stages or 3)
        except ValueError as e:
            raise UsageError(str(e)) from e
        depth = cfg.depth if cfg.depth is not None else ladder.t_prime[-1]
        if not 0 <= depth <= 20:
            raise UsageError("depth must lie in 0..20")
    else:
        raise UsageError(f"unknown kind {cfg.kind!r}")
    report = validate(sys_, depth)
    _write(cfg, "system.json", _dump(sys_.to_dict(depth)))
    _emit(cfg, "validation.json", report, stdout)
    return EXIT_OK if report["ok"] else EXIT_FAIL


def _make_trajectory(cfg: RunConfig, length: int):
    m = parse_map(cfg.map)
    if cfg.alpha is not None:
        if not isinstance(m, OdometerExtension):
            raise UsageError("--alpha needs an odometer map")
        return m, symbolic_trajectory(m.system, Word.from_str(cfg.alpha), length)
    if cfg.x0 is None:
        raise UsageError("give --x0 or --alpha")
    return m, trajectory(m, _x0(cfg.x0), length, cfg.transient, cfg.seed)


def cmd_trajectory(cfg: RunConfig, stdout) -> int:
    if cfg.n is None or cfg.n < 1:
        raise UsageError("--n must be >= 1")
    _, traj = _make_trajectory(cfg, cfg.n)
    text = traj.csv_text()
    _write(cfg, "trajectory.csv", text)
    if not cfg.out:
        stdout.write(text)
    return EXIT_OK


def cmd_rqa(cfg: RunConfig, stdout) -> int:
    if cfg.eps is None or cfg.n is None:
        raise UsageError("rqa needs --eps and --n")
    if cfg.n > cfg.n_max:
        raise BudgetExceeded(f"n = {cfg.n} exceeds n_max = {cfg.n_max}")
    eps = float(parse_number(cfg.eps))
    grid = sorted({max(1, cfg.n // 4), max(1, cfg.n // 2), cfg.n})
    _, traj = _make_trajectory(cfg, cfg.n + cfg.m_cap)
    rep = asymptotic_profile(traj, eps, cfg.m_cap, grid, threads=cfg.threads)
    _write(cfg, "profile.csv", rep.to_csv())
    extra = cfg.extra or {}
    if extra.get("plot") or extra.get("pgm") or extra.get("rle"):
        rm = recurrence_matrix(traj, eps, cfg.n, threads=cfg.threads)
        if extra.get("plot"):
            Path(extra["plot"]).write_bytes(rm.pbm_bytes())
        if extra.get("pgm"):
            Path(extra["pgm"]).write_bytes(rm.pgm_bytes())
        if extra.get("rle"):
            Path(extra["rle"]).write_text(_dump(rm.to_rle()))
    summary = rep.summary()
    summary["rdet_at_n"] = {str(m): float(rep.rdet[m - 1, -1]) for m in (1, cfg.m_cap)}
    summary["C_column"] = [float(v) for v in rep.C[:, -1]]
    _emit(cfg, "profile.json", summary, stdout)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, stdout) -> int:
    if cfg.eps is None or cfg.map is None:
        raise UsageError("sweep needs --map and --eps")
    m = parse_map(cfg.map)
    try:
        grid, prov = parse_eps(cfg.eps, m)
    except ValueError as e:
        raise UsageError(str(e)) from e
    if isinstance(m, OdometerExtension):
        start = cfg.alpha or 0
    else:
        if cfg.x0 is None:
            raise UsageError("give --x0")
        start = _x0(cfg.x0)
    budget = Budget(cfg.n_max, cfg.m_cap, cfg.max_period)
    sw = epsilon_sweep(m, start, grid, budget, prov, cfg.seed, threads=cfg.threads)
    extra = cfg.extra or {}
    payload = {"sweep": sw.to_dict()}
    try:
        cl = classify(sw, extra.get("theta1", 0.05), extra.get("theta0", 0.1), extra.get("small", 1 / 3))
        payload["classification"] = cl.to_dict()
    except ValueError as e:
        payload["classification"] = {"error": str(e)}
    lines = ["eps,status,rdet_hi,rdet_lo,c_hi,c_lo,m,n_max"]
    for e in sw.entries:
        lines.append(",".join(str(v) for v in (e.eps, e.status, e.rdet_hi, e.rdet_lo, e.c_hi, e.c_lo, e.m, e.n_max)))
    _write(cfg, "sweep.csv", "\n".join(lines) + "\n")
    _emit(cfg, "sweep.json", payload, stdout)
    if any(e.status == "budget" for e in sw.entries):
        return EXIT_BUDGET
    return EXIT_OK


def cmd_reproduce(cfg: RunConfig, stdout) -> int:
    which = (cfg.extra or {}).get("report")
    if which == "theorem-example":
        stages = cfg.stages or 3
        if not 1 <= stages <= 4:
            raise UsageError("stages must lie in 1..4")
        rep = theorem_example_report(stages)
        _emit(cfg, "theorem_example.json", rep, stdout)
    elif which == "four-fifths":
        t_range = parse_range(cfg.t_range or "2..8")
        if min(t_range) < 2 or max(t_range) > 12:
            raise UsageError("t must lie in 2..12")
        scale = (cfg.extra or {}).get("eps_scale", "1")
        rep = four_fifths_report(build_ternary(), t_range, Fraction(scale))
        _emit(cfg, "four_fifths.json", rep, stdout)
    else:
        raise UsageError("reproduce needs theorem-example or four-fifths")
    return EXIT_OK if rep["ok"] else EXIT_FAIL


COMMANDS = {
    "construct": cmd_construct,
    "trajectory": cmd_trajectory,
    "rqa": cmd_rqa,
    "sweep": cmd_sweep,
    "reproduce": cmd_reproduce,
}


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rqdet", description="Recurrence determinism of interval maps.")
    p.add_argument("--config", help="load a RunConfig JSON file (flags are ignored)")
    sub = p.add_subparsers(dest="command")

    def common(sp):
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--n-max", type=int, default=16384)
        sp.add_argument("--m-cap", type=int, default=None)
        sp.add_argument("--max-period", type=int, default=1 << 16)

    sp = sub.add_parser("construct", help="build and validate an interval system")
    sp.add_argument("--kind", choices=["ternary", "theorem3"], required=True)
    sp.add_argument("--stages", type=int)
    sp.add_argument("--depth", type=int)
    common(sp)

    helps = {
        "trajectory": "write an orbit as CSV",
        "rqa": "correlation sums, rdet and DET profile of one orbit",
        "sweep": "profiles over an eps grid plus a trichotomy verdict",
    }
    for name in ("trajectory", "rqa", "sweep"):
        sp = sub.add_parser(name, help=helps[name])
        sp.add_argument("--map", required=True, help="logistic:R | tent:S | odometer:ternary | odometer:theorem3[:N]")
        sp.add_argument("--x0")
        sp.add_argument("--alpha", help="start address for symbolic odometer orbits, digit 0 first")
        sp.add_argument("--transient", type=int, default=1000)
        common(sp)
        if name in ("trajectory", "rqa"):
            sp.add_argument("--n", type=int, required=True)
        if name in ("rqa", "sweep"):
            sp.add_argument("--eps", required=True)
        if name == "rqa":
            sp.add_argument("--m", type=int, dest="m_cap_rqa", default=64)
            sp.add_argument("--plot", help="write the n x n recurrence plot as PBM")
            sp.add_argument("--pgm", help="write diagonal run lengths as PGM")
            sp.add_argument("--rle", help="write the recurrence plot as run-length JSON")
        if name == "sweep":
            sp.add_argument("--theta0", type=float, default=0.1)
            sp.add_argument("--theta1", type=float, default=0.05)
            sp.add_argument("--small", type=float, default=1 / 3, help="fraction of the grid treated as small eps")

    sp = sub.add_parser("reproduce", help="certified reproduction reports")
    sp.add_argument("report", choices=["theorem-example", "four-fifths"])
    sp.add_argument("--stages", type=int)
    sp.add_argument("--t", dest="t_range", default=None)
    sp.add_argument("--eps-scale", default="1")
    common(sp)
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command)
    for name in ("map", "x0", "alpha", "eps", "n", "depth", "stages", "t_range", "kind", "out", "threads", "seed",
                 "n_max", "max_period", "transient"):
        if getattr(args, name, None) is not None:
            setattr(cfg, name, getattr(args, name))
    if getattr(args, "m_cap_rqa", None) is not None:
        cfg.m_cap = args.m_cap_rqa
    if getattr(args, "m_cap", None) is not None:
        cfg.m_cap = args.m_cap
    extra = {}
    for name in ("plot", "pgm", "rle", "theta0", "theta1", "small", "report", "eps_scale"):
        if getattr(args, name, None) is not None:
            extra[name] = getattr(args, name)
    cfg.extra = extra
    return cfg


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        if args.config:
            cfg = RunConfig.parse(Path(args.config).read_text())
        elif args.command is None:
            parser.print_usage(stderr)
            return EXIT_USAGE
        else:
            cfg = config_from_args(args)
        cfg.apply_env()
        return COMMANDS[cfg.command](cfg, stdout)
    except UsageError as e:
        stderr.write(f"rqdet: error: {e}\n")
        return EXIT_USAGE
    except BudgetExceeded as e:
        stderr.write(f"rqdet: budget: {e}\n")
        return EXIT_BUDGET
    except (ValueError, KeyError) as e:
        stderr.write(f"rqdet: error: {e}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
