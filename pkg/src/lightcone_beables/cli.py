"""Command line: ``lcbeables <command> <scenario> [options]``.

Exit status is 0 on success, 1 when the scenario is malformed or invalid,
and 2 on a runtime error.
"""

from __future__ import annotations

import argparse
import collections
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .beables import asymptotic_check, compute_field, photon_artefact, presence_intervals
from .boundary import outcome_for, sample_outcome
from .oracle import field_deviation, params_from_scenario
from .output import fmt, trajectories_csv, write_field_csv, write_heatmaps
from .raytrace import trace
from .scenario import Scenario, ScenarioParseError, enumerate_branches, load_scenario, validate

log = logging.getLogger("lightcone_beables")

OUT_ENV = "LCBEABLES_OUT"
EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class InvalidScenario(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("scenario_pos", nargs="?", metavar="SCENARIO",
                        help="scenario file, or 'model1' / 'model2'")
    common.add_argument("--scenario", help="scenario file (alternative to the positional)")
    common.add_argument("--seed", type=int, help="override the scenario seed")
    common.add_argument("--out", type=Path,
                        help=f"output directory (default ${OUT_ENV} or ./out)")
    common.add_argument("--grid-override", metavar="NT,NX", help="replace the grid resolution")
    common.add_argument("--branch", help="branch label to use instead of sampling")
    common.add_argument("--emit", default="csv,heatmap", help="comma list from {csv,heatmap}")
    common.add_argument("--workers", type=int, default=1, help="processes for grid evaluation")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="lcbeables", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check a scenario file")
    sub.add_parser("run", parents=[common], help="sample an outcome and compute the beable field")
    sp = sub.add_parser("sample", parents=[common], help="Born-sample N outcomes over consecutive seeds")
    sp.add_argument("n", type=int, metavar="N")
    sw = sub.add_parser("sweep-T", parents=[common], help="asymptotic stability over final times")
    sw.add_argument("t_list", metavar="T_LIST", help="comma separated final times, e.g. 18,30,100")
    sw.add_argument("--s1", type=float, help="last time of the compared subgrid (default grid tMax)")
    sub.add_parser("oracle-diff", parents=[common], help="compare the engine with the closed-form oracle")
    sub.add_parser("trajectories", parents=[common], help="dump photon trajectories per branch")
    return ap


def _scenario(args) -> Scenario:
    src = args.scenario or args.scenario_pos
    if not src:
        raise InvalidScenario("no scenario given")
    s = load_scenario(src)
    if args.grid_override:
        try:
            nt, nx = (int(v) for v in args.grid_override.split(","))
        except ValueError:
            raise InvalidScenario(f"--grid-override expects NT,NX, got {args.grid_override!r}")
        s = s.with_grid(nt=nt, nx=nx)
    problems = validate(s)
    if problems:
        raise InvalidScenario("\n".join(str(p) for p in problems))
    return s


def _outdir(args) -> Path:
    out = args.out or Path(os.environ.get(OUT_ENV, "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def cmd_validate(args) -> int:
    _scenario(args)
    print("ok")
    return EXIT_OK


def cmd_run(args) -> int:
    s = _scenario(args)
    seed = s.seed if args.seed is None else args.seed
    outcome = outcome_for(s, args.branch) if args.branch else sample_outcome(s, seed)
    field = compute_field(s, outcome, workers=args.workers)
    out = _outdir(args)
    emit = {e.strip() for e in args.emit.split(",") if e.strip()}
    files = []
    if "csv" in emit:
        files.append(write_field_csv(field, out / "field.csv").name)
    if "heatmap" in emit:
        files += [p.name for p in write_heatmaps(field, out)]

    hist = collections.Counter(int(n) for n in field.n_consistent.ravel())
    intervals = presence_intervals(s, outcome)
    meta = {
        "tool": "lightcone_beables",
        "version": __version__,
        "scenario": args.scenario or args.scenario_pos,
        "seed": seed,
        "outcome": {"branch": outcome.branch.label, "weight": outcome.weight,
                    "sampled": not args.branch},
        "branches": [{"label": b.label, "weight": b.weight} for b in enumerate_branches(s)],
        "T": s.T,
        "grid": {"nt": s.grid.nt, "nx": s.grid.nx, "tMin": s.grid.t_min, "tMax": s.grid.t_max,
                 "xMin": s.grid.x_min, "xMax": s.grid.x_max},
        "consistent_set_sizes": {str(k): v for k, v in sorted(hist.items())},
        "collapsed_fraction": hist.get(1, 0) / field.total.size,
        "presence_intervals": intervals,
        "photon_partial_presence": photon_artefact(s, outcome, intervals),
        "files": files,
    }
    _write_json(out / "metadata.json", meta)
    print(f"outcome branch {outcome.branch.label} (weight {fmt(outcome.weight)}); wrote {out}")
    return EXIT_OK


def cmd_sample(args) -> int:
    if args.n <= 0:
        raise InvalidScenario("N must be positive")
    s = _scenario(args)
    base = s.seed if args.seed is None else args.seed
    rows = ["seed,branch,weight"]
    counts = collections.Counter()
    for seed in range(base, base + args.n):
        o = sample_outcome(s, seed)
        counts[o.branch.label] += 1
        rows.append(f"{seed},{o.branch.label},{fmt(o.weight)}")
    out = _outdir(args)
    (out / "samples.csv").write_text("\n".join(rows) + "\n")
    freq = ["branch,weight,count,frequency"]
    for b in enumerate_branches(s):
        c = counts.get(b.label, 0)
        freq.append(f"{b.label},{fmt(b.weight)},{c},{fmt(c / args.n)}")
    (out / "frequencies.csv").write_text("\n".join(freq) + "\n")
    print("\n".join(freq))
    return EXIT_OK


def cmd_sweep(args) -> int:
    s = _scenario(args)
    try:
        t_list = [float(v) for v in args.t_list.split(",")]
    except ValueError:
        raise InvalidScenario(f"bad T list {args.t_list!r}")
    label = args.branch or sample_outcome(s, s.seed if args.seed is None else args.seed).branch.label
    dev = asymptotic_check(s, label, t_list, t_max=args.s1, workers=args.workers)
    report = {"branch": label, "T_list": t_list, "t_max": args.s1 if args.s1 is not None else s.grid.t_max,
              "max_deviation": dev}
    _write_json(_outdir(args) / "sweep.json", report)
    print(f"branch {label}: max deviation over T={t_list}: {dev:.3e}")
    return EXIT_OK


def cmd_oracle_diff(args) -> int:
    s = _scenario(args)
    labels = [args.branch] if args.branch else [b.label for b in enumerate_branches(s)]
    results = {}
    for label in labels:
        params, model = params_from_scenario(s, label)
        field = compute_field(s, outcome_for(s, label), workers=args.workers)
        dev, n = field_deviation(field, params, model)
        results[label] = {"model": model, "max_deviation": dev, "probes": n}
        print(f"model {model} branch {label}: max deviation {dev:.3e} over {n} probes")
    _write_json(_outdir(args) / "oracle_diff.json", results)
    return EXIT_OK


def cmd_trajectories(args) -> int:
    s = _scenario(args)
    trajs = [trace(p, b, s, photon_id=k) for b in enumerate_branches(s) for k, p in enumerate(s.photons)]
    text = trajectories_csv(trajs)
    (_outdir(args) / "trajectories.csv").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "run": cmd_run,
    "sample": cmd_sample,
    "sweep-T": cmd_sweep,
    "oracle-diff": cmd_oracle_diff,
    "trajectories": cmd_trajectories,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ScenarioParseError, InvalidScenario) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        log.debug("runtime failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
