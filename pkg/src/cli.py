"""
Command Line - batch entry point

    tpe mesh --voronoi 1000 --domain 0,2,0,2 --seed 42 --out mesh.json
    tpe convergence --preset fig1-l1 --jobs 4 --out results/fig1
    tpe robustness --preset table4-test-i
    tpe geothermal --preset geothermal-ci
    tpe run --config my_run.json

Every command validates its configuration before computing anything,
copies the effective configuration into the output directory and exits
with 0 on success, 2 on a configuration error and 3 on any other failure
(the failure is also written to stderr and error.json as JSON).
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from .analysis import (
    ConvergenceTable,
    convergence_study,
    estimate_infsup,
    final_errors,
    write_convergence_csv,
)
from .assembly import dump_coo
from .config import RunConfig, load_run_config, parse_run_config, settings
from .errors import ConfigError, TpeError
from .event_bus import get_event_bus, reset_event_bus
from .mesh import (
    PolyMesh,
    Rectangle,
    generate_cartesian,
    generate_voronoi,
    meshes_from_spec,
    regularity_report,
    save_mesh,
)
from .output import (
    DiagnosticsRecorder,
    ProbeRecorder,
    midline_points,
    write_config,
    write_error,
    write_rows,
    write_vtk,
)
from .parallel import set_jobs
from .physics import (
    PenaltyParams,
    TpeCoefficients,
    baseline_coefficients,
    convergence_case,
    describe,
    geothermal_case,
    robustness_cases,
    validate,
)
from .presets import get_preset, preset_names
from .solver import FixedPointConfig, SolveOptions, ThetaScheme, ThetaStepper
from .space import DgSpace

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str) -> None:
    logging.basicConfig(level=getattr(logging, str(level).upper(), logging.INFO),
                        format=LOG_FORMAT, force=True)


# Configuration plumbing

def resolve_config(args: argparse.Namespace, experiment: Optional[str]) -> RunConfig:
    """Preset, then config file, then the command's experiment"""
    base: Dict[str, Any] = get_preset(args.preset) if args.preset else {}
    if experiment is not None:
        if base.get("experiment", experiment) != experiment:
            raise ConfigError(f"preset {args.preset} is a {base['experiment']} experiment, "
                              f"not {experiment}")
        base["experiment"] = experiment
    if args.config:
        cfg = load_run_config(Path(args.config), base)
    else:
        cfg = parse_run_config(base)
    if experiment is not None and cfg.experiment != experiment:
        raise ConfigError(f"config describes a {cfg.experiment} experiment, not {experiment}")
    return cfg


def output_directory(args: argparse.Namespace, cfg: Optional[RunConfig], command: str) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    if cfg is not None and cfg.output.directory:
        return Path(cfg.output.directory)
    return Path(settings.output_dir) / (getattr(args, "preset", None) or command)


def coefficients_for(cfg: RunConfig, base: TpeCoefficients) -> TpeCoefficients:
    """Apply the configured overrides and check the admissibility relations"""
    coeffs = base.with_overrides(cfg.coefficients.as_dict())
    validate(coeffs).raise_if_failed()
    return coeffs


def scheme_for(cfg: RunConfig) -> ThetaScheme:
    if cfg.time.steady:
        return ThetaScheme.steady()
    return ThetaScheme(cfg.time.theta, cfg.time.dt, cfg.time.t_final)


def fixed_point_for(cfg: RunConfig) -> FixedPointConfig:
    fp = cfg.fixed_point
    return FixedPointConfig(fp.tolerance, fp.max_iterations, fp.initial_guess, fp.linearization)


def penalties_for(cfg: RunConfig) -> PenaltyParams:
    p = cfg.penalties
    return PenaltyParams(p.alpha1, p.alpha2, p.alpha3, p.alpha4)


def solve_options_for(cfg: RunConfig) -> SolveOptions:
    return SolveOptions(cfg.solver.method, cfg.solver.rtol, cfg.solver.max_iterations)


def meshes_for(cfg: RunConfig) -> List[PolyMesh]:
    m = cfg.mesh
    meshes = meshes_from_spec(m.kind, m.domain, m.sizes, m.lloyd_iterations, cfg.rng_seed, m.files)
    for mesh in meshes:
        reg = regularity_report(mesh)
        logger.info(f"mesh: {mesh.n_cells} cells, {mesh.n_faces} faces, h={mesh.h:.4f}, "
                    f"regularity min={reg.min():.3f}")
    return meshes


def _level_writer(cfg: RunConfig, out: Path, label: str):
    dump = cfg.output.dump_matrices or settings.dump_matrices

    def on_level(level: int, stepper: ThetaStepper, state) -> None:
        if cfg.output.vtk:
            write_vtk(out / f"fields_{label}_level{level}.vtk", stepper.space, state,
                      cfg.output.vtk_vertex_resampled)
        if dump:
            dump_coo(stepper.mass, out / f"matrices_{label}_level{level}_mass.txt")
            dump_coo(stepper.stiffness, out / f"matrices_{label}_level{level}_stiffness.txt")
    return on_level


def _infsup_table(cfg: RunConfig, meshes: Sequence[PolyMesh], out: Path, penalties: PenaltyParams) -> None:
    rows = []
    for mesh in meshes:
        space = DgSpace(mesh, cfg.degree, cfg.phi_degree, cfg.degree_u)
        rows.append({"n_cells": mesh.n_cells, "h": mesh.h,
                     "infsup": estimate_infsup(space, penalties=penalties)})
    write_rows(out / "infsup.csv", rows, ["n_cells", "h", "infsup"])


def _run_table(cfg: RunConfig, coeffs: TpeCoefficients, out: Path, label: str) -> ConvergenceTable:
    case = convergence_case(coeffs, steady=cfg.time.steady)
    meshes = meshes_for(cfg)
    penalties = penalties_for(cfg)
    logger.info(f"{label}: coefficients {describe(coeffs)}")
    recorder = DiagnosticsRecorder(get_event_bus(), label)
    try:
        table = convergence_study(case, meshes, cfg.degree, scheme_for(cfg), fixed_point_for(cfg),
                                  penalties, solve_options_for(cfg), cfg.phi_degree, cfg.degree_u,
                                  label=label, on_level=_level_writer(cfg, out, label))
    finally:
        recorder.close()
    recorder.write(out / f"diagnostics_{label}.csv")
    write_convergence_csv(table, out / f"{label}.csv")
    if cfg.estimate_infsup:
        _infsup_table(cfg, meshes, out, penalties)
    _print_table(table)
    return table


def _print_table(table: ConvergenceTable) -> None:
    frame = table.to_frame()
    cols = ["n_cells", "inv_h", "err_u_dg", "roc_u_dg", "err_p_l2", "roc_p_l2", "err_T_l2", "roc_T_l2"]
    print(f"\n{table.label}")
    print(frame[cols].to_string(index=False, float_format=lambda v: f"{v:.4e}"))


# Commands

def cmd_mesh(args: argparse.Namespace) -> int:
    rect = Rectangle.from_tuple([float(v) for v in args.domain.split(",")])
    if args.voronoi:
        mesh = generate_voronoi(rect, args.voronoi, args.lloyd, args.seed)
    else:
        try:
            nx, ny = (int(v) for v in args.cartesian.lower().split("x"))
        except ValueError as e:
            raise ConfigError(f"--cartesian expects NXxNY, got {args.cartesian}") from e
        mesh = generate_cartesian(rect, nx, ny)
    path = Path(args.out or "mesh.json")
    save_mesh(mesh, path)
    reg = regularity_report(mesh)
    print(f"cells={mesh.n_cells} faces={mesh.n_faces} vertices={mesh.n_vertices} h={mesh.h:.6f}")
    print(f"regularity min={reg.min():.4f} mean={reg.mean():.4f} -> {path}")
    return 0


def cmd_convergence(cfg: RunConfig, out: Path) -> int:
    coeffs = coefficients_for(cfg, baseline_coefficients(c_f=1.0 if cfg.nonlinear else 0.0))
    _run_table(cfg, coeffs, out, "convergence")
    return 0


def cmd_robustness(cfg: RunConfig, out: Path) -> int:
    tests = {t.name: t for t in robustness_cases()}
    for name in cfg.robustness_tests:
        test = tests[name]
        if test.nonlinear_only and not cfg.nonlinear:
            logger.warning(f"robustness test ({name}) is defined for nonlinear runs only, skipped")
            continue
        base = replace(test.coefficients, c_f=1.0 if cfg.nonlinear else 0.0)
        _run_table(cfg, coefficients_for(cfg, base), out, f"robustness_{name}")
    return 0


def cmd_geothermal(cfg: RunConfig, out: Path) -> int:
    geo = cfg.geothermal
    coeffs = coefficients_for(cfg, baseline_coefficients(c_f=1.0 if cfg.nonlinear else 0.0))
    problem = geothermal_case(geo.T_inj, geo.T_ext, geo.p_inj, geo.p_ext, geo.gamma, coeffs,
                              geo.T_initial, geo.p_initial)
    mesh = meshes_for(cfg)[0]
    space = DgSpace(mesh, cfg.degree, cfg.phi_degree, cfg.degree_u)
    stepper = ThetaStepper(space, problem, scheme_for(cfg), fixed_point_for(cfg),
                           penalties_for(cfg), solve_options_for(cfg))
    if cfg.output.dump_matrices or settings.dump_matrices:
        dump_coo(stepper.mass, out / "matrices_mass.txt")
        dump_coo(stepper.stiffness, out / "matrices_stiffness.txt")

    probes = ProbeRecorder(space, midline_points(mesh, geo.probe_points))
    recorder = DiagnosticsRecorder(get_event_bus(), problem.name)
    n_steps = stepper.scheme.n_steps
    every = cfg.output.write_every

    def on_step(step: int, state) -> None:
        if step % every == 0 or step == n_steps:
            probes.sample(state, step)
            if cfg.output.vtk:
                write_vtk(out / f"fields_{step:06d}.vtk", space, state,
                          cfg.output.vtk_vertex_resampled)

    try:
        result = stepper.run(log_every=every, on_step=on_step)
    finally:
        recorder.close()
    recorder.write(out / "diagnostics.csv")
    probes.write(out / "probes.csv")
    print(f"{problem.name}: {n_steps} steps, mean fixed-point iterations {result.mean_iterations:.2f}")
    return 0


def cmd_custom(cfg: RunConfig, out: Path) -> int:
    """Manufactured case on the configured meshes, errors per mesh without rates"""
    coeffs = coefficients_for(cfg, baseline_coefficients(c_f=1.0 if cfg.nonlinear else 0.0))
    case = convergence_case(coeffs, steady=cfg.time.steady)
    penalties = penalties_for(cfg)
    recorder = DiagnosticsRecorder(get_event_bus(), "custom")
    rows = []
    try:
        for level, mesh in enumerate(meshes_for(cfg)):
            space = DgSpace(mesh, cfg.degree, cfg.phi_degree, cfg.degree_u)
            stepper = ThetaStepper(space, case, scheme_for(cfg), fixed_point_for(cfg),
                                   penalties, solve_options_for(cfg))
            result = stepper.run()
            report = final_errors(case, space, result.final, penalties, result.mean_iterations)
            _level_writer(cfg, out, "custom")(level, stepper, result.final)
            rows.append({k: v for k, v in vars(report).items() if k != "integrated"})
    finally:
        recorder.close()
    recorder.write(out / "diagnostics.csv")
    if rows:
        write_rows(out / "errors.csv", rows, list(rows[0]))
    return 0


COMMANDS = {
    "convergence": cmd_convergence,
    "robustness": cmd_robustness,
    "geothermal": cmd_geothermal,
    "custom": cmd_custom,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tpe", description="Polytopal DG thermo-poroelasticity solver")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--preset", help=f"named experiment ({', '.join(preset_names())})")
    common.add_argument("--jobs", type=int, default=0, help="worker threads (default TPE_JOBS)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING (default TPE_LOG)")

    mesh = sub.add_parser("mesh", help="generate a mesh file")
    kind = mesh.add_mutually_exclusive_group(required=True)
    kind.add_argument("--voronoi", type=int, metavar="N", help="number of Voronoi seeds")
    kind.add_argument("--cartesian", metavar="NXxNY", help="Cartesian cells, e.g. 4x1")
    mesh.add_argument("--domain", default="0,2,0,2", help="xmin,xmax,ymin,ymax")
    mesh.add_argument("--seed", type=int, default=42)
    mesh.add_argument("--lloyd", type=int, default=20, help="Lloyd iterations")
    mesh.add_argument("--out", help="mesh file (default mesh.json)")
    mesh.add_argument("--log-level", default=None)
    mesh.add_argument("--jobs", type=int, default=0)

    for name, text in (("convergence", "manufactured-solution convergence table"),
                       ("robustness", "convergence tables for the robustness parameter sets"),
                       ("geothermal", "injection/extraction time series"),
                       ("run", "run whatever experiment the configuration names")):
        sub.add_parser(name, help=text, parents=[common])
    sub.add_parser("presets", help="list the named presets")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(getattr(args, "log_level", None) or settings.log)
    set_jobs(getattr(args, "jobs", 0) or settings.jobs)
    reset_event_bus()

    if args.command == "presets":
        for name in preset_names():
            print(name)
        return 0

    out: Optional[Path] = None
    try:
        if args.command == "mesh":
            return cmd_mesh(args)
        cfg = resolve_config(args, None if args.command == "run" else args.command)
        out = output_directory(args, cfg, args.command)
        out.mkdir(parents=True, exist_ok=True)
        write_config(out, cfg.model_dump(mode="json"))
        code = COMMANDS[cfg.experiment](cfg, out)
        logger.info(f"outputs in {out}")
        return code
    except TpeError as e:
        print(json.dumps(e.to_dict(), default=str), file=sys.stderr)
        if out is None and args.command != "mesh":
            out = output_directory(args, None, args.command)
        write_error(out, e)
        logger.error(f"{type(e).__name__}: {e.message}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
