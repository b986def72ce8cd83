"""Command-line driver: generate or load a scenario, build, solve, evaluate and map.

Output tree under ``--out``::

    manifest.txt   every option of the run, defaults included
    scenario/      scenario files (gen and pipeline)
    models/        <model>.lp
    solutions/     <model>_stage1.sol, <model>_stage2.sol and summaries
    eval/          coverage and evaluation tables with their figures
    maps/          PPM rasters, companion pixel tables and PNG previews

Exit codes: 0 success, 1 usage error, 2 data error, 3 solver limit.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from importlib import resources
from pathlib import Path

from . import __version__
from .coverage import FIXED_SERVER, FREE_SERVER, coverage_report, current_service_set, write_protected_csv
from .evaluate import EvaluationError, evaluate_solution, write_current, write_evaluation
from .maprender import GridSpec, MapError, render_interference_map, render_service_map, write_pixels_csv, write_ppm
from .milp import LP, MILP, ModelError, build_lp, build_milp, export_model
from .scenario import PRESETS, ScenarioError, generate_synthetic, load_scenario, write_scenario
from .solve import (ITERATION_LIMIT, INFEASIBLE, SolutionError, SolverError, SolverParams,
                    import_external_solution, power_minimization_stage, solve_lp, solve_milp,
                    write_solution)

log = logging.getLogger("fmpower")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SOLVER = 0, 1, 2, 3
COMMANDS = ("gen", "coverage", "build", "solve", "stage2", "eval", "map", "pipeline")
# options recorded in the manifest, in this order
MANIFEST_KEYS = ("command", "scenario", "preset", "seed", "model", "bigm", "gap", "node_limit",
                 "time_limit", "feas_tol", "int_tol", "jobs", "efficiency", "top_n", "pixel_deg",
                 "service_admin", "interfering_admin", "out")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def shipped_fixture() -> Path:
    return Path(str(resources.files("fmpower") / "data" / "small"))


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--manifest", help="take option values from a recorded manifest.txt")
    p.add_argument("--out", help="output directory")
    src = p.add_argument_group("scenario source")
    src.add_argument("--scenario", help="scenario directory (default: OUT/scenario if present, "
                                        "else the shipped small fixture)")
    src.add_argument("--preset", choices=sorted(PRESETS), help="generate a synthetic scenario instead")
    src.add_argument("--seed", type=int, default=1, help="seed for --preset / gen (default 1)")
    m = p.add_argument_group("model and solver")
    m.add_argument("--model", choices=(MILP, LP), default=MILP)
    m.add_argument("--bigm", default="fixed:1e40", help="fixed[:M] or per_row (MILP only)")
    m.add_argument("--gap", type=float, default=1.0, help="target gap in percent")
    m.add_argument("--node-limit", type=int, default=100000)
    m.add_argument("--time-limit", type=float, default=600.0, help="seconds")
    m.add_argument("--feas-tol", type=float, default=1e-7)
    m.add_argument("--int-tol", type=float, default=1e-6)
    m.add_argument("--jobs", type=int, default=1, help="concurrent block solves")
    e = p.add_argument_group("evaluation and maps")
    e.add_argument("--efficiency", type=float, default=0.5, help="transmitter efficiency")
    e.add_argument("--top-n", type=int, default=20)
    e.add_argument("--pixel-deg", type=float, default=0.05)
    e.add_argument("--service-admin", help="administration of the QoS map (default: domestic)")
    e.add_argument("--interfering-admin", help="administration of the interference map (default: domestic)")
    p.add_argument("--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fmpower", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"fmpower {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    helps = {
        "gen": "write a synthetic scenario",
        "coverage": "current-service report and protected set",
        "build": "export the model in LP format",
        "solve": "solve the model with the built-in solver",
        "stage2": "minimise radiated power keeping the coverage decisions",
        "eval": "evaluation tables, energy report and figures",
        "map": "service and interference maps",
        "pipeline": "all of the above",
    }
    for name in COMMANDS:
        _add_common(sub.add_parser(name, help=helps[name]))
    return parser


def read_manifest(path) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        out[key.strip()] = value.strip()
    return out


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError("fmpower: a subcommand is required (" + ", ".join(COMMANDS) + ")")
    if args.manifest:
        recorded = read_manifest(args.manifest)
        flags = []
        for key, value in recorded.items():
            if key in ("command", "version") or value == "":
                continue
            if key not in MANIFEST_KEYS:
                raise UsageError(f"{args.manifest}: unknown manifest key {key!r}")
            flags += [f"--{key.replace('_', '-')}", value]
        # explicit command-line flags win over the manifest
        args = parser.parse_args([args.command] + flags + list(argv[1:]))
    if not args.out:
        raise UsageError(f"fmpower {args.command}: --out is required")
    return args


def write_manifest(args, out: Path) -> Path:
    lines = [f"# fmpower {__version__} run manifest", f"version = {__version__}"]
    for key in MANIFEST_KEYS:
        value = getattr(args, key)
        lines.append(f"{key} = {'' if value is None else value}")
    path = out / "manifest.txt"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def default_source(out: Path) -> Path:
    local = out / "scenario"
    return local if (local / "config.txt").is_file() else shipped_fixture()


def params_from(args) -> SolverParams:
    try:
        return SolverParams(feas_tol=args.feas_tol, int_tol=args.int_tol, gap_percent=args.gap,
                            node_limit=args.node_limit, time_limit=args.time_limit, jobs=args.jobs)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


class Run:
    """State shared by the steps of one invocation."""

    def __init__(self, args):
        self.args = args
        self.out = Path(args.out)
        self.params = params_from(args)
        self._scenario = None
        self._model = None

    @property
    def scenario(self):
        if self._scenario is None:
            a = self.args
            if a.preset:
                log.info("generating preset %s with seed %d", a.preset, a.seed)
                self._scenario = generate_synthetic(a.seed, PRESETS[a.preset])
            else:
                src = Path(a.scenario or default_source(self.out))
                log.info("loading scenario %s", src)
                self._scenario = load_scenario(src)
        return self._scenario

    @property
    def domestic(self) -> str:
        admins = sorted({t.admin for t in self.scenario.transmitters if t.optimizable})
        if not admins:
            raise ScenarioError("scenario has no optimisable transmitter")
        return admins[0]

    @property
    def model(self):
        if self._model is None:
            z = current_service_set(self.scenario)
            if self.args.model == MILP:
                self._model = build_milp(self.scenario, z, self.args.bigm)
            else:
                self._model = build_lp(self.scenario, z)
        return self._model

    def path(self, sub: str, name: str) -> Path:
        d = self.out / sub
        d.mkdir(parents=True, exist_ok=True)
        return d / name

    def solution_path(self, stage: int) -> Path:
        return self.path("solutions", f"{self.args.model}_stage{stage}.sol")

    def load_solution(self, stage: int):
        path = self.solution_path(stage)
        if not path.is_file():
            raise FileNotFoundError(f"{path} not found; run the "
                                    f"{'solve' if stage == 1 else 'stage2'} step first")
        return import_external_solution(path, self.model, self.params, allow_extra_y=stage == 2)


def _write_table(path: Path, rows) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "value"])
        w.writerows(rows)
    return path


def _g(x: float) -> str:
    return "inf" if math.isinf(x) else format(x, ".10g")


def step_gen(run: Run) -> int:
    a = run.args
    s = generate_synthetic(a.seed, PRESETS[a.preset or "small"])
    write_scenario(s, run.out / "scenario")
    return EXIT_OK


def step_coverage(run: Run) -> int:
    s = run.scenario
    z = current_service_set(s)
    write_protected_csv(z, run.path("eval", "protected.csv"))
    coverage_report(s, {}, FIXED_SERVER).write_csv(run.path("eval", "coverage_current.csv"))
    coverage_report(s, {}, FREE_SERVER).write_csv(run.path("eval", "coverage_current_free.csv"))
    write_current(s, run.path("eval", "current.csv"))
    log.info("protected pairs: %d", len(z))
    return EXIT_OK


def step_build(run: Run) -> int:
    path = export_model(run.model, run.path("models", f"{run.args.model}.lp"))
    log.info("wrote %s (%d rows, %d variables)", path, len(run.model.rows), len(run.model.variables))
    return EXIT_OK


def step_solve(run: Run) -> int:
    m = run.model
    sol = solve_milp(m, run.params) if m.kind == MILP else solve_lp(m, run.params)
    write_solution(sol, run.solution_path(1), m)
    _write_table(run.path("solutions", f"{run.args.model}_stage1_summary.csv"), [
        ("model", m.kind), ("bigm", m.bigm), ("status", sol.status),
        ("objective", _g(sol.objective)), ("lower_bound", _g(sol.lower_bound)),
        ("gap_percent", _g(sol.gap)), ("target_gap_percent", _g(run.params.gap_percent)),
        ("nodes", sol.nodes), ("blocks", len(m.blocks)), ("rows", len(m.rows)),
        ("variables", len(m.variables))])
    log.info("stage 1: %s objective %s gap %.4g%%", sol.status, _g(sol.objective), sol.gap)
    if sol.status in (ITERATION_LIMIT, INFEASIBLE):
        print(f"fmpower: solver stopped with status {sol.status}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def step_stage2(run: Run) -> int:
    sol = run.load_solution(1)
    out = power_minimization_stage(run.scenario, run.model, sol, run.params)
    write_solution(out, run.solution_path(2), run.model)
    before = sum(t.power_w for t in run.scenario.transmitters if t.optimizable)
    _write_table(run.path("solutions", f"{run.args.model}_stage2_summary.csv"), [
        ("model", run.model.kind), ("stage1_status", sol.status),
        ("uncovered_population", _g(out.objective)),
        ("radiated_power_before_w", _g(before)), ("radiated_power_after_w", _g(out.radiated_power_w))])
    return EXIT_OK


def step_eval(run: Run) -> int:
    from .figures import plot_population_gain, plot_power_factors

    sol = run.load_solution(2)
    s = run.scenario
    e = evaluate_solution(s, sol, efficiency=run.args.efficiency)
    write_evaluation(e, run.out / "eval", run.args.top_n)
    coverage_report(s, sol.y, FIXED_SERVER).write_csv(run.path("eval", "coverage_after.csv"))
    coverage_report(s, sol.y, FREE_SERVER).write_csv(run.path("eval", "coverage_after_free.csv"))
    plot_power_factors(s, sol.y, run.path("eval", "power.png"))
    plot_population_gain(e, run.path("eval", "population_gain.png"), run.args.top_n)
    log.info("delta power %.2f%%, shut down %d", e.delta_power_percent, e.shutdown_count)
    return EXIT_OK


def step_map(run: Run) -> int:
    from .figures import plot_raster

    sol = run.load_solution(2)
    s = run.scenario
    g = GridSpec.covering(s, run.args.pixel_deg)
    service_admin = run.args.service_admin or run.domestic
    interfering_admin = run.args.interfering_admin or run.domestic
    for label, y in (("current", {}), ("optimized", sol.y)):
        maps = {
            f"service_{label}": render_service_map(s, y, g, admin=service_admin),
            f"interference_{label}": render_interference_map(s, y, interfering_admin, g),
        }
        for name, raster in maps.items():
            write_ppm(raster, run.path("maps", f"{name}.ppm"))
            write_pixels_csv(raster, run.path("maps", f"{name}.csv"))
            plot_raster(raster, run.path("maps", f"{name}.png"), name.replace("_", " "))
    return EXIT_OK


STEPS = {
    "gen": (step_gen,),
    "coverage": (step_coverage,),
    "build": (step_build,),
    "solve": (step_solve,),
    "stage2": (step_stage2,),
    "eval": (step_eval,),
    "map": (step_map,),
    "pipeline": (step_coverage, step_build, step_solve, step_stage2, step_eval, step_map),
}


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s", stream=sys.stderr)
        r = Run(args)
        if not args.preset and not args.scenario:
            args.scenario = str(default_source(r.out))
        r.out.mkdir(parents=True, exist_ok=True)
        write_manifest(args, r.out)
        if args.command == "pipeline" and not (r.out / "scenario" / "config.txt").is_file():
            write_scenario(r.scenario, r.out / "scenario")
        final = EXIT_OK
        for step in STEPS[args.command]:
            code = step(r)
            if code == EXIT_SOLVER and args.command == "pipeline":
                # a limit-stopped incumbent is still feasible: finish the run, report the limit
                final = code
            elif code != EXIT_OK:
                return code
        return final
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ScenarioError, ModelError, SolutionError, EvaluationError, MapError,
            FileNotFoundError, NotADirectoryError, ValueError) as exc:
        print(f"fmpower: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SolverError as exc:
        print(f"fmpower: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
