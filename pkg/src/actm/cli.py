"""Command-line front end: ``actm validate-fem | optimize | synthesize | sweep``.

Exit codes: 0 success, 1 domain failure, 2 usage or configuration error.
Files use degrees, mN*m, mm and MPa; computation is SI throughout.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .exceptions import ACTMError, Infeasible, NoFeasibleCandidate
from .fem import BeamDesign, CrossSection, Material, build_model
from .ga import NSMProblem, SurrogateProblem, default_pins, run
from .synthesis import (
    JAW_OPENS,
    nsm_force_curve,
    nsm_torque_curve,
    net_torque_curve,
    preload_for_target,
    scale_section,
    stress_check,
)
from .validation import format_report, validate_fem

__all__ = [
    "main",
    "save_design",
    "load_design",
    "default_design_path",
    "analyze_design",
    "synthesize_targets",
    "SWEEP_PARAMETERS",
]

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2
SWEEP_PARAMETERS = ("w_mm", "R_mm", "k_mNm_per_deg", "width_mm")


def default_design_path():
    return resources.files("actm").joinpath("data/best_design.json")


def save_design(path, design, fitness=None, seed=None):
    doc = {
        "key_points_mm": (np.asarray(design.key_points) * 1e3).tolist(),
        "box_mm": [design.design_box[0] * 1e3, design.design_box[1] * 1e3],
        "section_mm": {
            "thickness": design.section.in_plane_thickness * 1e3,
            "width": design.section.out_of_plane_width * 1e3,
        },
        "material": {
            "E_GPa": design.material.youngs_modulus / 1e9,
            "poisson": design.material.poisson_ratio,
            "yield_MPa": design.material.yield_strength / 1e6,
        },
        "fitness": None if fitness is None or not np.isfinite(fitness) else fitness,
        "seed": seed,
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_design(path):
    doc = json.loads(Path(path).read_text())
    m = doc["material"]
    s = doc["section_mm"]
    return BeamDesign(
        np.asarray(doc["key_points_mm"], dtype=float) * 1e-3,
        CrossSection(s["thickness"] * 1e-3, s["width"] * 1e-3),
        Material(m["E_GPa"] * 1e9, m["poisson"], m["yield_MPa"] * 1e6),
        (doc["box_mm"][0] * 1e-3, doc["box_mm"][1] * 1e-3),
    )


@dataclass
class DesignAnalysis:
    """A design scaled to the spring stiffness and evaluated over the window."""

    design: BeamDesign
    force_scale: float
    nsm: object
    force_curve: object
    stress: object


def analyze_design(project, design, scale=True):
    """Scale the section so the NSM slope equals k, then evaluate at the report step.

    The stress sweep covers the whole crank travel from the relax position to
    the end of the window, including the pre-load period.
    """
    cfg = project.synthesis
    fine = cfg.operating_angles(project.fitness_step)
    force_scale = 1.0
    if scale:
        model = build_model(design, project.n_elements)
        base = nsm_torque_curve(
            nsm_force_curve(model, cfg, fine), cfg.geometry, cfg.relaxed_chord, fine, cfg.window
        )
        if not base.slope > 0:
            raise Infeasible("design shows no negative stiffness over the window")
        force_scale = cfg.spring.k / base.slope
        design = scale_section(design, force_scale)
    report = cfg.operating_angles(project.report_step)
    travel = np.linspace(0.0, cfg.window[1], int(round(cfg.window[1] / project.report_step)) * 3 + 1)
    psi = np.unique(np.concatenate([report, fine, travel]))
    model = build_model(design, project.n_elements)
    curve = nsm_force_curve(model, cfg, psi)
    nsm = nsm_torque_curve(curve, cfg.geometry, cfg.relaxed_chord, report, cfg.window)
    return DesignAnalysis(design, force_scale, nsm, curve, stress_check(curve, design.material))


def synthesize_targets(project, analysis, targets_mNm):
    """One report row (and net curve) per torque target."""
    rows = []
    k = project.synthesis.spring.k
    for t in targets_mNm:
        row = {
            "target_mNm": float(t),
            "peak_stress_MPa": analysis.stress.peak / 1e6,
            "stress_pass": analysis.stress.passed,
        }
        if t <= 0:
            row.update(status=JAW_OPENS, preload_deg=float("nan"), mean_mNm=float("nan"), std_mNm=float("nan"), cv=float("nan"), curve=None)
            rows.append(row)
            continue
        preload = preload_for_target(k, analysis.nsm, t * 1e-3)
        net = net_torque_curve(analysis.nsm, project.synthesis.spring.with_preload(preload))
        row.update(
            status="ok" if net.mean > 0 else JAW_OPENS,
            preload_deg=float(np.degrees(preload)),
            mean_mNm=net.mean * 1e3,
            std_mNm=net.std * 1e3,
            cv=net.cv,
            curve=net,
        )
        rows.append(row)
    return rows


def _format_report(project, analysis, rows):
    d = analysis.design
    lines = [
        "# constant-torque synthesis report",
        f"k_mNm_per_deg = {project.synthesis.spring.k * 1e3 * np.pi / 180:.6g}",
        f"relaxed_chord_mm = {project.synthesis.relaxed_chord * 1e3:.6g}",
        f"section_mm = {d.section.in_plane_thickness * 1e3:.6g} x {d.section.out_of_plane_width * 1e3:.6g}",
        f"force_scale = {analysis.force_scale:.6g}",
        f"nsm_slope_mNm_per_deg = {analysis.nsm.slope * 1e3 * np.pi / 180:.6g}",
        "",
        "target_mNm,preload_deg,mean_mNm,std_mNm,cv,peak_stress_MPa,stress_pass,status",
    ]
    for r in rows:
        lines.append(
            f"{r['target_mNm']:g},{r['preload_deg']:.6f},{r['mean_mNm']:.6f},{r['std_mNm']:.6f},"
            f"{r['cv']:.6f},{r['peak_stress_MPa']:.3f},{str(r['stress_pass']).lower()},{r['status']}"
        )
    return "\n".join(lines) + "\n"


def _resolve_design(project):
    for candidate in (project.best_design, project.out_dir / "best_design.json"):
        if candidate is not None and Path(candidate).is_file():
            return Path(candidate)
    return default_design_path()


def _parse_list(text, name):
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"{name}: expected a comma-separated list of numbers, got {text!r}")
    return values


def _parse_range(text):
    """``a,b,c`` or ``start:stop:count``."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range {text!r}: expected start:stop:count")
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ConfigError(f"range {text!r}: expected start:stop:count")
        return np.linspace(start, stop, count).tolist() if count > 0 else []
    return _parse_list(text, "range")


def cmd_validate_fem(project, out):
    checks = validate_fem(project.n_elements)
    report = format_report(checks)
    (out / "validation_report.csv").write_text(report)
    print(report, end="")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_DOMAIN


def _problem(project):
    cfg = project.synthesis
    if project.mode == "surrogate":
        pins = default_pins(project.box, cfg.relaxed_chord)
        w, h = project.box
        optimum = np.column_stack([pins[0, 0] + (pins[1, 0] - pins[0, 0]) * np.array([0.25, 0.5, 0.75]), h * np.array([0.4, 0.6, 0.4])])
        return SurrogateProblem(project.box, pins, optimum)
    return NSMProblem(
        cfg,
        project.search_section,
        project.material,
        box=project.box,
        n_elements=project.n_elements,
        step=project.fitness_step,
        stress_penalty=project.stress_penalty,
    )


def cmd_optimize(project, out):
    problem = _problem(project)
    try:
        result = run(project.ga, problem, n_jobs=project.n_jobs)
    except NoFeasibleCandidate as exc:
        print(f"optimize: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    result.history_to_csv(out / "ga_history.csv")
    design = BeamDesign(result.best.key_points, project.search_section, project.material, project.box)
    save_design(out / "best_design.json", design, result.best.fitness, project.ga.rng_seed)
    if project.mode == "fem":
        _, nsm = problem.analyze(result.best.key_points)
        nsm.to_csv(out / "nsm_curve.csv")
        print(f"fitted NSM slope: {nsm.slope * 1e3 * np.pi / 180:.6g} mN*m/deg")
    print(f"best fitness {result.best.fitness!r} after {len(result.history)} generations ({result.evaluations} evaluations)")
    return EXIT_OK


def cmd_synthesize(project, out, targets):
    path = _resolve_design(project)
    design = load_design(path)
    try:
        analysis = analyze_design(project, design)
        rows = synthesize_targets(project, analysis, targets)
    except (Infeasible, ACTMError) as exc:
        print(f"synthesize: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    for r in rows:
        if r["curve"] is not None:
            r["curve"].to_csv(out / f"curve_{r['target_mNm']:g}mNm.csv")
    report = _format_report(project, analysis, rows)
    (out / "report.txt").write_text(report)
    print(f"design: {path}")
    print(report, end="")
    return EXIT_OK


def _swept_project(project, parameter, value):
    cfg = project.synthesis
    if parameter == "w_mm":
        geom = replace(cfg.geometry, w=value * 1e-3)
    elif parameter == "R_mm":
        geom = replace(cfg.geometry, R=value * 1e-3)
    else:
        geom = cfg.geometry
    spring = cfg.spring
    if parameter == "k_mNm_per_deg":
        spring = replace(spring, k=value * 1e-3 / np.radians(1.0))
    synthesis = replace(cfg, geometry=geom, spring=spring)
    return replace(project, synthesis=synthesis)


def cmd_sweep(project, out, parameter, values, targets):
    design = load_design(_resolve_design(project))
    target = targets[0]
    lines = ["parameter,value,target_mNm,nsm_slope_mNm_per_deg,width_mm,preload_deg,mean_mNm,std_mNm,cv,peak_stress_MPa,stress_pass,status"]
    failed = False
    for value in values:
        try:
            swept = _swept_project(project, parameter, value)
            if parameter == "width_mm":
                d = design.with_section(CrossSection(design.section.in_plane_thickness, value * 1e-3))
                analysis = analyze_design(swept, d, scale=False)
            else:
                analysis = analyze_design(swept, design)
            (row,) = synthesize_targets(swept, analysis, [target])
            slope = float(analysis.nsm.slope * 1e3 * np.pi / 180)
            width = float(analysis.design.section.out_of_plane_width * 1e3)
            lines.append(
                f"{parameter},{float(value)!r},{target:g},{slope!r},{width!r},{row['preload_deg']!r},{row['mean_mNm']!r},"
                f"{row['std_mNm']!r},{row['cv']!r},{row['peak_stress_MPa']!r},{str(row['stress_pass']).lower()},{row['status']}"
            )
        except (ValueError, ACTMError) as exc:
            failed = True
            lines.append(f"{parameter},{float(value)!r},{target:g},nan,nan,nan,nan,nan,nan,nan,false,error: {str(exc).replace(',', ';')}")
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_DOMAIN if failed else EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="actm", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file (defaults are layered underneath)")
    common.add_argument("--seed", help="GA seed (unsigned 64-bit), overrides [ga] seed")
    common.add_argument("--out", help="output directory, overrides [output] out_dir")
    common.add_argument("--targets", default="10,20,30", help="comma-separated torque targets in mN*m")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate-fem", parents=[common], help="run the analytic FEM checks")
    sub.add_parser("optimize", parents=[common], help="search for an NSM beam shape")
    sub.add_parser("synthesize", parents=[common], help="calibrate pre-loads and report net torque")
    sweep = sub.add_parser("sweep", parents=[common], help="re-run synthesis over a parameter range")
    sweep.add_argument("parameter", help="one of: " + ", ".join(SWEEP_PARAMETERS))
    sweep.add_argument("values", help="comma list (0.2,0.3) or start:stop:count")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        project = load_config(args.config)
        if args.seed is not None:
            try:
                seed = int(args.seed)
            except ValueError:
                raise ConfigError(f"--seed must be an integer, got {args.seed!r}")
            project = project.with_seed(seed)
        if args.out is not None:
            project = project.with_out_dir(args.out)
        targets = _parse_list(args.targets, "--targets")
        if not targets:
            raise ConfigError("--targets is empty")
        if args.command == "sweep":
            if args.parameter not in SWEEP_PARAMETERS:
                raise ConfigError(f"unknown sweep parameter {args.parameter!r}; choose from {', '.join(SWEEP_PARAMETERS)}")
            values = _parse_range(args.values)
            if not values:
                raise ConfigError("sweep range is empty")
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = project.out_dir
    out.mkdir(parents=True, exist_ok=True)
    if args.command == "validate-fem":
        return cmd_validate_fem(project, out)
    if args.command == "optimize":
        return cmd_optimize(project, out)
    if args.command == "synthesize":
        return cmd_synthesize(project, out, targets)
    return cmd_sweep(project, out, args.parameter, values, targets)


if __name__ == "__main__":
    sys.exit(main())
