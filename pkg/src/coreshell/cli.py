"""Command-line front end: experiment orchestration and file emission.

Every subcommand reads one JSON experiment file, writes CSV tables plus a
JSON summary into the output directory, and folds audit outcomes into the
exit status: 0 when everything passed, 1 on any failed inequality or
non-convergence, 2 on usage or configuration errors.  Output is
deterministic for a fixed config (the PRNG seed lives in the config and is
echoed in each summary); numbers are written with 17 significant digits.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analysis, reactions
from .config import ConfigError, ExperimentConfig, parse_config
from .operators import assemble, eigenbasis, norm
from .solvers import (ConvergenceError, SolverError, fem_solve,
                      galerkin_solve, newton_stationary, resolve_initial)

TRAJECTORY_HEADER = "t,h_norm_sq,grad_norm_sq,v_norm_sq,da_norm_sq,u_f_inner"
DEFAULT_WIDTHS = (0.2, 0.1, 0.05, 0.025)
ENV_OUTPUT_ROOT = "CORESHELL_OUT"


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_csv(path: Path, header: str, rows) -> None:
    lines = [header]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _output_dir(config: ExperimentConfig, override: str | None) -> Path:
    root = Path(os.environ.get(ENV_OUTPUT_ROOT, "."))
    directory = Path(override) if override else Path(config.output.directory)
    out = directory if directory.is_absolute() else root / directory
    out.mkdir(parents=True, exist_ok=True)
    return out


def _say(quiet: bool, message: str) -> None:
    if not quiet:
        print(message)


def _build_problem(config: ExperimentConfig):
    mesh = config.build_mesh()
    op = assemble(mesh, config.diffusion)
    return mesh, op


def _run_trajectory(config: ExperimentConfig, op, use_fem: bool):
    solve_cfg = config.solve_config()
    if use_fem:
        return fem_solve(op, config.reaction, solve_cfg), None
    basis = eigenbasis(op, solve_cfg.modes)
    return galerkin_solve(basis, config.reaction, solve_cfg), basis


def cmd_eigen(config: ExperimentConfig, out: Path, args) -> int:
    mesh, op = _build_problem(config)
    basis = eigenbasis(op, config.solve.modes)
    _write_csv(out / "spectrum.csv", "j,lambda",
               ((j + 1, lam) for j, lam in enumerate(basis.eigenvalues)))
    header = "r," + ",".join(f"mode_{j + 1}" for j in range(basis.size))
    rows = np.column_stack([mesh.nodes, basis.eigenvectors])
    _write_csv(out / "eigenvectors.csv", header, rows)
    _write_json(out / "summary.json", {
        "command": "eigen",
        "modes": basis.size,
        "lambda_min": float(basis.eigenvalues[0]),
        "lambda_max": float(basis.eigenvalues[-1]),
        "elements": mesh.num_elements,
        "seed": config.seed,
    })
    _say(args.quiet, f"eigen: {basis.size} modes, lambda_1 = "
                     f"{basis.eigenvalues[0]:.6g} -> {out}")
    return 0


def _write_trajectory(out: Path, trajectory, stride: int) -> None:
    cols = zip(trajectory.times, trajectory.h_norm_sq,
               trajectory.grad_norm_sq, trajectory.v_norm_sq,
               trajectory.da_norm_sq, trajectory.u_f_inner)
    _write_csv(out / "trajectory.csv", TRAJECTORY_HEADER, cols)
    if stride > 0:
        samples = range(0, trajectory.num_samples, stride)
        header = "r," + ",".join(f"t={trajectory.times[i]:.12g}"
                                 for i in samples)
        rows = np.column_stack(
            [trajectory.operator.mesh.nodes]
            + [trajectory.field(i) for i in samples])
        _write_csv(out / "snapshots.csv", header, rows)


def cmd_solve(config: ExperimentConfig, out: Path, args) -> int:
    _, op = _build_problem(config)
    trajectory, _ = _run_trajectory(config, op, args.fem)
    _write_trajectory(out, trajectory, config.output.snapshot_stride)
    final = trajectory.final_field()
    _write_json(out / "summary.json", {
        "command": "solve",
        "solver": trajectory.kind,
        "scheme": trajectory.scheme,
        "steps": trajectory.num_samples - 1,
        "final_h_norm": norm(op, final, "H"),
        "final_v_norm": norm(op, final, "V"),
        "max_u_f_inner": float(trajectory.u_f_inner.max()),
        "seed": config.seed,
    })
    _say(args.quiet, f"solve: {trajectory.kind}, {trajectory.num_samples - 1} "
                     f"steps, |u(T)|_H = {norm(op, final, 'H'):.6g} -> {out}")
    return 0


def cmd_stationary(config: ExperimentConfig, out: Path, args) -> int:
    mesh, op = _build_problem(config)
    guess = resolve_initial(op, config.initial)
    result = newton_stationary(op, config.reaction, guess)
    _write_csv(out / "state.csv", "r,u", zip(mesh.nodes, result.field))
    _write_json(out / "residual.json", {
        "command": "stationary",
        "converged": True,
        "iterations": result.iterations,
        "residual": result.residual,
        "flux_jump": analysis.flux_jump(op, result.field),
        "seed": config.seed,
    })
    _say(args.quiet, f"stationary: converged in {result.iterations} "
                     f"iterations, residual {result.residual:.3e} -> {out}")
    return 0


def cmd_energy(config: ExperimentConfig, out: Path, args) -> int:
    _, op = _build_problem(config)
    trajectory, _ = _run_trajectory(config, op, args.fem)
    report = analysis.energy_report(trajectory, config.reaction, op)
    _write_csv(out / "margins.csv", "t,weak_margin",
               zip(trajectory.times, report.weak_margins))
    _write_json(out / "energy.json", {
        "command": "energy",
        "k_bound": report.k_bound,
        "gamma": report.gamma,
        "sup_bound": report.sup_bound,
        "integral_bound": report.integral_bound,
        "worst_weak_margin": report.worst_weak_margin,
        "sup_margin": report.sup_margin,
        "integral_margin": report.integral_margin,
        "strong_margin": report.strong_margin,
        "condition_margin": report.condition_margin,
        "tol": report.tol,
        "pass": report.passed,
        "seed": config.seed,
    })
    status = "PASS" if report.passed else "FAIL"
    _say(args.quiet, f"energy: {status}, worst weak margin "
                     f"{report.worst_weak_margin:.3e} (tol {report.tol:.3e}) "
                     f"-> {out}")
    return 0 if report.passed else 1


def _mode_counts(config: ExperimentConfig, num_free: int) -> list[int]:
    counts = [n for n in (4, 8, 16, 32, 64, 128, 256, 512)
              if n < config.solve.modes]
    counts.append(config.solve.modes)
    if num_free not in counts:
        counts.append(num_free)
    return sorted(set(counts))


def cmd_converge(config: ExperimentConfig, out: Path, args) -> int:
    _, op = _build_problem(config)
    if args.mesh:
        coarsest = config.solve.elements // 8
        if coarsest < 4:
            raise ConfigError(["solve.elements: must be >= 32 for the mesh "
                               "refinement study"])
        counts = [coarsest * 2**k for k in range(4)]
        study = analysis.flux_refinement_study(config.geometry,
                                               config.diffusion,
                                               config.reaction, counts)
        _write_csv(out / "mesh_convergence.csv", "elements,flux_jump",
                   zip(study.element_counts, study.jumps))
        decreasing = bool(np.all(np.diff(study.jumps) < 0))
        passed = decreasing and study.observed_order >= 1.0
        _write_json(out / "converge.json", {
            "command": "converge",
            "mode": "mesh",
            "observed_order": study.observed_order,
            "strictly_decreasing": decreasing,
            "pass": passed,
            "seed": config.seed,
        })
        status = "PASS" if passed else "FAIL"
        _say(args.quiet, f"converge --mesh: {status}, observed order "
                         f"{study.observed_order:.3f} -> {out}")
        return 0 if passed else 1

    counts = _mode_counts(config, op.num_free)
    table = analysis.galerkin_convergence(op, config.reaction,
                                          config.solve_config(), counts)
    _write_csv(out / "galerkin_convergence.csv", "modes,rel_h_error",
               zip(table.mode_counts, table.errors))
    # 10% non-monotonicity slack per step plus an absolute roundoff floor.
    err = table.errors
    monotone = bool(np.all(err[1:] <= 1.1 * err[:-1] + 1e-11))
    full_rank = float(err[-1])
    passed = monotone and full_rank <= 1e-8
    _write_json(out / "converge.json", {
        "command": "converge",
        "mode": "galerkin",
        "full_rank_error": full_rank,
        "monotone": monotone,
        "pass": passed,
        "seed": config.seed,
    })
    status = "PASS" if passed else "FAIL"
    _say(args.quiet, f"converge --galerkin: {status}, full-rank error "
                     f"{full_rank:.3e} -> {out}")
    return 0 if passed else 1


def cmd_regularize(config: ExperimentConfig, out: Path, args) -> int:
    widths = [float(w) for w in args.widths.split(",")]
    table = analysis.regularization_study(
        config.geometry, config.diffusion, config.reaction,
        config.solve_config(), widths,
        target_spacing=config.geometry.outer_extent / config.solve.elements)
    _write_csv(out / "regularization.csv",
               "epsilon,discrepancy,second_difference_max",
               zip(table.widths, table.discrepancies,
                   table.second_difference_max))
    decreasing = bool(np.all(np.diff(table.discrepancies) < 0))
    monotone_monitor = bool(np.all(np.diff(table.second_difference_max) >= 0))
    passed = decreasing and monotone_monitor
    _write_json(out / "regularize.json", {
        "command": "regularize",
        "discrepancy_strictly_decreasing": decreasing,
        "monitor_non_decreasing": monotone_monitor,
        "pass": passed,
        "seed": config.seed,
    })
    status = "PASS" if passed else "FAIL"
    _say(args.quiet, f"regularize: {status}, D = "
                     f"{', '.join(f'{d:.4g}' for d in table.discrepancies)} "
                     f"-> {out}")
    return 0 if passed else 1


def perturbation_pairs(config: ExperimentConfig, op, pairs: int,
                       magnitude: float):
    """Seeded random initial-state pairs at fixed H distance."""
    rng = np.random.default_rng(config.seed)
    base = resolve_initial(op, config.initial)
    for _ in range(pairs):
        bump = rng.standard_normal(op.mesh.num_nodes)
        if op.mesh.dirichlet_left:
            bump[0] = 0.0
        bump[-1] = 0.0
        bump *= magnitude / norm(op, bump, "H")
        yield base, base + bump


def cmd_depend(config: ExperimentConfig, out: Path, args) -> int:
    _, op = _build_problem(config)
    solve_cfg = config.solve_config()
    basis = eigenbasis(op, solve_cfg.modes)
    rows = []
    passed = True
    for i, (u0, v0) in enumerate(
            perturbation_pairs(config, op, args.pairs, args.delta), start=1):
        report = analysis.dependence_check(op, config.reaction, u0, v0,
                                           solve_cfg, basis=basis)
        rows.append((i, report.worst_h_ratio, report.worst_v_ratio))
        passed = passed and report.passed
    _write_csv(out / "dependence.csv", "pair,worst_h_ratio,worst_v_ratio",
               rows)
    _write_json(out / "depend.json", {
        "command": "depend",
        "pairs": args.pairs,
        "delta": args.delta,
        "lipschitz": reactions.certify_lipschitz(config.reaction),
        "worst_h_ratio": max(r[1] for r in rows),
        "worst_v_ratio": max(r[2] for r in rows),
        "pass": passed,
        "seed": config.seed,
    })
    status = "PASS" if passed else "FAIL"
    _say(args.quiet, f"depend: {status}, worst H ratio "
                     f"{max(r[1] for r in rows):.6f} -> {out}")
    return 0 if passed else 1


def cmd_certify(config: ExperimentConfig, out: Path, args) -> int:
    mesh, op = _build_problem(config)
    term = config.reaction
    try:
        k_bound = reactions.certify_admissibility(term, config.geometry)
    except ValueError as exc:
        payload = {"command": "certify", "admissible": False,
                   "reason": str(exc), "seed": config.seed}
        _write_json(out / "certify.json", payload)
        _say(args.quiet, json.dumps(payload, indent=2, sort_keys=True))
        return 1
    lipschitz = reactions.certify_lipschitz(term)
    rng = np.random.default_rng(config.seed)
    fields = rng.uniform(-2.0 * term.c0, 2.0 * term.c0,
                         size=(1000, mesh.num_nodes))
    worst_pairing = -np.inf
    worst_norm = -np.inf
    for u in fields:
        f = reactions.apply_f(term, u)
        mf = op.mass.matvec(f)
        worst_pairing = max(worst_pairing, float(u @ mf))
        worst_norm = max(worst_norm, float(np.sqrt(max(f @ mf, 0.0))))
    passed = worst_pairing <= k_bound and worst_norm <= k_bound
    payload = {
        "command": "certify",
        "admissible": True,
        "k_bound": k_bound,
        "lipschitz": lipschitz,
        "sampled_max_pairing": worst_pairing,
        "sampled_max_norm": worst_norm,
        "pass": passed,
        "seed": config.seed,
    }
    _write_json(out / "certify.json", payload)
    _say(args.quiet, json.dumps(payload, indent=2, sort_keys=True))
    return 0 if passed else 1


_COMMANDS = {
    "eigen": cmd_eigen,
    "solve": cmd_solve,
    "stationary": cmd_stationary,
    "energy": cmd_energy,
    "converge": cmd_converge,
    "regularize": cmd_regularize,
    "depend": cmd_depend,
    "certify": cmd_certify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coreshell",
        description="Solve and certify core-shell reaction-diffusion "
                    "problems with a discontinuous diffusivity.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="path to the JSON experiment file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", default=None,
                       help="override the output directory")
        p.add_argument("--quiet", action="store_true",
                       help="suppress progress output")

    common(sub.add_parser("eigen", help="dump the operator spectrum"))
    p = sub.add_parser("solve", help="integrate the evolution problem")
    common(p)
    p.add_argument("--fem", action="store_true",
                   help="use the nodal method-of-lines oracle")
    common(sub.add_parser("stationary", help="Newton stationary state"))
    p = sub.add_parser("energy", help="audit the energy inequalities")
    common(p)
    p.add_argument("--fem", action="store_true",
                   help="audit the nodal oracle instead")
    p = sub.add_parser("converge", help="convergence studies")
    common(p)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--galerkin", action="store_true",
                       help="spectral truncation sweep (default)")
    group.add_argument("--mesh", action="store_true",
                       help="stationary flux-jump refinement study")
    p = sub.add_parser("regularize", help="smoothed-diffusivity limit study")
    common(p)
    p.add_argument("--widths", default=",".join(str(w) for w in DEFAULT_WIDTHS),
                   help="comma-separated ramp widths, descending")
    p = sub.add_parser("depend", help="continuous-dependence audit")
    common(p)
    p.add_argument("--pairs", type=int, default=10,
                   help="number of perturbation pairs")
    p.add_argument("--delta", type=float, default=1e-3,
                   help="H distance of each pair")
    common(sub.add_parser("certify", help="print certified K and L as JSON"))
    return parser


def run(command: str, config: ExperimentConfig, args) -> int:
    out = _output_dir(config, args.out)
    return _COMMANDS[command](config, out, args)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = parse_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError(["seed: must be a non-negative integer"])
            config = replace(config, seed=args.seed)
        return run(args.command, config, args)
    except ConfigError as exc:
        for message in exc.errors:
            print(f"config error: {message}", file=sys.stderr)
        return 2
    except (ConvergenceError, SolverError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
