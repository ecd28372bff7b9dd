# qssmix/harness/suites.py
"""
One function per subcommand. Every suite opens a top-level report job, runs its
checks in nested jobs and exports the collected entries under ``out/<subcommand>/``.
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.integrate import simpson

from .. import area_map, constraints, curve as curve_ops, embed3d, qss_family, spectral_solver, time_smoothing
from ..curve import Curve, frenet, kernel_projection, mode_profile, polynomial_bump
from ..families import CurveFamily, default_families
from ..field import GridField
from ..local_fields import LocalFieldSet, field_stability_sweep, support_inclusion
from .config import ExperimentConfig
from .report import Job, aggregate, check, record, run_jobs, table
from .snapshot import write_snapshot

logger = logging.getLogger(__name__)

SNAPSHOT_CELLS = 1000


def _families(config: ExperimentConfig, nodes: int | None = None) -> list[CurveFamily]:
    return default_families.build(config.family, config.blocks, nodes or config.nodes, **config.family_params)


def _profile(curve: Curve, frame=None) -> np.ndarray:
    """Unit-sup kernel profile used by every epsilon sweep."""
    frame = frenet(curve) if frame is None else frame
    u = kernel_projection(curve, mode_profile(curve, 2), polynomial_bump(curve, frame=frame), frame)
    return u / np.max(np.abs(u))


def _cells_per_tile(tile_resolution: int, limit: int) -> int:
    """Largest divisor of the block resolution not above limit."""
    return max(d for d in range(1, tile_resolution + 1) if tile_resolution % d == 0 and d <= max(limit, 1))


def _in_window(value: float, low: float, high: float) -> bool:
    return bool(np.isfinite(value) and low <= value <= high)


# ---------- geometry-check ----------

def geometry_check(config: ExperimentConfig, out: Path) -> Job:
    rng = np.random.default_rng(config.seed)
    families = _families(config)
    with Job("geometry-check") as job:
        with Job("circle-area"):
            R, c = 0.25, 0.01
            circle = Curve.circle(R, n=config.nodes)
            exact = np.pi * ((R + c) ** 2 - R ** 2)
            error = abs(curve_ops.area_difference(circle, np.full(circle.n, c)) - exact) / exact
            check("circle_area_difference", error <= 1e-10, error, "curve.area_difference")

        with Job("maps"):
            det_error = roundtrip = beta_error = 0.0
            for fam in families:
                for t in (0.0, 0.5, 1.0):
                    curve = fam.curve(t)
                    frame = frenet(curve)
                    phi = area_map.build_map(curve, frame)
                    det_error = max(det_error, float(np.max(np.abs(phi.jacobian_determinant() - 1.0))))
                    inner = phi.y_grid(16) * 0.8
                    points = phi.node_images(inner)[::4].reshape(-1, 2)
                    inv = area_map.invert(phi, points)
                    image = phi.evaluate(inv.s[inv.inside], inv.y[inv.inside])
                    roundtrip = max(roundtrip, float(np.max(np.linalg.norm(image - points[inv.inside], axis=-1))))
            check("jacobian_determinant", det_error <= config.tol_jacobian, det_error,
                  "area_map.TubularMap.jacobian_determinant")
            check("inverse_roundtrip", roundtrip <= config.tol_roundtrip, roundtrip, "area_map.InverseMap")

            curve = families[0].curve(1.0)
            frame = frenet(curve)
            y = area_map.build_map(curve, frame).y_grid()[None, :]
            h, _ = constraints.project_area_preserving(curve, 1e-3 * 0.05 * curve.length * _profile(curve, frame),
                                                       frame=frame)
            frame_t = frenet(curve_ops.perturb(curve, h, frame))
            beta = area_map.beta_closed_form(frame.curvature[:, None], frame.speed[:, None], y)
            fixed, iterations = area_map.beta_fixed_point(frame_t.curvature[:, None], frame.curvature[:, None],
                                                          beta, frame_t.speed[:, None], frame.speed[:, None], y)
            closed = area_map.beta_closed_form(frame_t.curvature[:, None], frame_t.speed[:, None], y)
            beta_error = float(np.max(np.abs(fixed - closed)) / np.max(np.abs(closed)))
            record("beta_fixed_point_iterations", iterations, "area_map.beta_fixed_point")
            check("beta_fixed_point", beta_error <= 1e-10, beta_error, "area_map.beta_fixed_point")

        with Job("constraints"):
            curves = [fam.curve(1.0) for fam in families]
            hs = []
            for c in curves:
                frame = frenet(c)
                modes = rng.integers(2, 6, size=3)
                phases = rng.uniform(0.0, 2 * np.pi, size=3)
                weights = rng.standard_normal(3)
                u = sum(w * mode_profile(c, int(k), phase=p) for w, k, p in zip(weights, modes, phases))
                u = kernel_projection(c, u, polynomial_bump(c, frame=frame), frame)
                u = 1e-3 * 0.05 * c.length * u / np.max(np.abs(u))
                h, rep = constraints.project_area_preserving(c, u, frame=frame)
                hs.append(h)
            projected, rep = constraints.project_equal_length(curves, hs)
            scale = max(c.length for c in curves)
            record("constraint_iterations", rep.newton_iterations, "constraints.project_equal_length")
            check("area_constraint", rep.area_defect <= config.tol_constraint * scale ** 2, rep.area_defect,
                  "constraints.project_equal_length")
            check("equal_length_constraint", rep.length_defect <= config.tol_constraint * scale,
                  rep.length_defect, "constraints.project_equal_length")
            check("perturbations_admissible", all(p.is_admissible() for p in projected), None,
                  "curve.NormalPerturbation.is_admissible")

        with Job("fields"):
            blocks = LocalFieldSet(_families(config, config.sweep_nodes))
            first, second = blocks[0].chart_moments()
            record("theta_chart_mean", first, "local_fields.LocalField.chart_moments")
            check("theta_chart_normalised", abs(second - 1.0) <= 1e-6, second,
                  "local_fields.LocalField.chart_moments")
            inside = all(support_inclusion(blocks[i], 128, t) for i in range(blocks.count) for t in (0.0, 1.0))
            check("support_inclusion", inside, None, "local_fields.support_inclusion")
    job.export(out / "geometry-check")
    return job


# ---------- build-family ----------

def build_family(config: ExperimentConfig, out: Path) -> Job:
    blocks = LocalFieldSet(_families(config))
    directory = out / "build-family"
    with Job("build-family") as job:
        for i, fam in enumerate(blocks.families):
            write_snapshot(directory / f"curve_{i}_t0.qssf", fam.curve(0.0))
        rows = []
        for n in range(config.n_max + 1):
            with Job(f"level-{n}"):
                for t in (0.0, 1.0):
                    fields = qss_family.assemble(n, blocks, t, tile_resolution=config.tile_resolution,
                                                 cycle=config.cycle, supersample=config.supersample)
                    lam = fields.rho.tiling.tiles_per_side
                    k = _cells_per_tile(config.tile_resolution, SNAPSHOT_CELLS // lam)
                    rho = fields.rho.materialize(k)
                    velocity = fields.velocity_field(k)
                    write_snapshot(directory / f"rho_n{n}_t{t:g}.qssf",
                                   GridField.scalar(rho.values, time=t, level=n))
                    write_snapshot(directory / f"v_n{n}_t{t:g}.qssf",
                                   GridField.vector(velocity.values, time=t, level=n))
                    rows.append({"level": n, "t": t, "mean": fields.rho.mean(), "l2": fields.rho.l2_norm(),
                                 "grad_sup": fields.rho.gradient_sup(), "velocity_sup": fields.velocity.sup_norm()})
                    check(f"support_within_t{t:g}", fields.rho.support_within(), None,
                          "qss_family.TiledField.support_within")
                if n < config.n_max:
                    rep = qss_family.verify_recursion(blocks, n, tile_resolution=config.tile_resolution,
                                                      cycle=config.cycle)
                    record("recursion_mismatch", rep.mismatch, "qss_family.verify_recursion")
                    record("recursion_tolerance", rep.tolerance, "qss_family.verify_recursion")
        table("levels", rows)
    job.export(directory)
    return job


# ---------- scaling ----------

def scaling(config: ExperimentConfig, out: Path) -> Job:
    blocks = LocalFieldSet(_families(config))
    with Job("scaling") as job:
        with Job("exponents"):
            diag = qss_family.scaling_diagnostics(blocks, range(config.n_max + 1), config.alphas,
                                                  tile_resolution=config.tile_resolution,
                                                  spectral_tile_resolution=config.spectral_tile_resolution,
                                                  cycle=config.cycle, supersample=config.supersample)
            table("levels", diag.rows)
            worst_mean = max(abs(row["mean"]) for row in diag.rows)
            worst_l2 = max(abs(row["l2"] ** 2 - 1.0) for row in diag.rows)
            check("rho_mean_zero", worst_mean <= 1e-6, worst_mean, "qss_family.TiledField.mean")
            check("rho_unit_l2", worst_l2 <= config.tol_norm, worst_l2, "qss_family.TiledField.l2_norm")
            table("slopes", [{"quantity": k, "slope": v} for k, v in sorted(diag.slopes.items())])
            for key, slope in sorted(diag.slopes.items()):
                record(f"{key}_slope", slope, "qss_family.scaling_diagnostics")
            if diag.slopes:
                check("grad_sup_slope", _in_window(diag.slopes["grad_sup"], config.slope_low, config.slope_high),
                      diag.slopes["grad_sup"], "qss_family.scaling_diagnostics")
                check("hminus1_slope", _in_window(diag.slopes["hminus1"], -1.1, -0.9),
                      diag.slopes["hminus1"], "qss_family.scaling_diagnostics")
                for a in config.alphas:
                    for name in ("velocity_holder", "nonlinear_holder"):
                        slope = diag.slopes[f"{name}_{a:g}"]
                        check(f"{name}_{a:g}_slope", _in_window(slope, a - 1.1, a - 0.9), slope,
                              "qss_family.scaling_diagnostics")

        with Job("forcing"):
            rows = []
            for m in range(1, config.n_max + 1):
                comp = time_smoothing.forcing_components(blocks, m, config.alphas[0],
                                                         tile_resolution=config.spectral_tile_resolution * 4,
                                                         cycle=config.cycle)
                rows.append(comp.as_dict())
                record(f"forcing_holder_m{m}", comp.total, "time_smoothing.forcing_components")
                record(f"viscous_holder_m{m}", comp.viscous, "time_smoothing.forcing_components")
            table("forcing", rows)
    job.export(out / "scaling")
    return job


# ---------- dissipate ----------

def dissipate(config: ExperimentConfig, out: Path) -> Job:
    base = LocalFieldSet(_families(config))
    directory = out / "dissipate"
    epsilons = [0.0] + [e for e in config.epsilons if e <= 1e-2]
    results: dict[float, list[spectral_solver.DissipationRecord]] = {}

    def task(eps: float) -> Callable[[], None]:
        def run() -> None:
            blocks = base if eps == 0.0 else base.perturbed(eps)
            records = spectral_solver.dissipation_experiment(blocks, config.m_range,
                                                             resolution=config.dissipation_resolution,
                                                             cycle=config.cycle)
            results[eps] = records
            for rec in records:
                label = f"m{rec.m}_eps{eps:g}"
                record(f"D_{label}", rec.dissipation, "spectral_solver.dissipation_experiment")
                record(f"summary_{label}", rec.summary(), "spectral_solver.DissipationRecord.summary")
                check(f"dissipation_positive_{label}", rec.dissipation > 0, rec.dissipation,
                      "spectral_solver.dissipation_experiment")
                check(f"comparison_inequality_{label}", rec.comparison_holds(),
                      min(c["slack"] for c in rec.comparison), "spectral_solver.dissipation_experiment")
                check(f"bernstein_{label}", rec.bernstein_ok, None, "spectral_solver.bernstein_check")
                check(f"energy_identity_{label}", rec.energy_defect <= config.tol_energy, rec.energy_defect,
                      "spectral_solver.energy_identity_defect")
                record(f"under_resolved_{label}", rec.under_resolved, "spectral_solver.spectral_tail_fraction")
                table("dissipation" if eps == 0.0 else f"dissipation_eps{eps:g}", rec.rows())
                write_snapshot(directory / f"theta_{label}_t1.qssf", rec.final)
        return run

    with Job("dissipate") as job:
        run_jobs([(f"eps-{eps:g}", task(eps)) for eps in epsilons], threads=config.threads)
        with Job("stability"):
            baseline = {rec.m: rec.dissipation for rec in results[0.0]}
            if 1 in baseline and 2 in baseline:
                ratio = baseline[2] / baseline[1]
                check("dissipation_ratio_m2_m1", 0.5 <= ratio <= 2.0, ratio, "spectral_solver.dissipation_experiment")
            for eps in epsilons[1:]:
                for rec in results[eps]:
                    change = abs(rec.dissipation / baseline[rec.m] - 1.0)
                    check(f"dissipation_stability_m{rec.m}_eps{eps:g}", change <= 0.2, change,
                          "spectral_solver.dissipation_experiment")
        with Job("poincare"):
            ratio = spectral_solver.poincare_check(np.random.default_rng(config.seed))
            check("poincare_constant", ratio <= 1.0, ratio, "spectral_solver.poincare_check")
    job.export(directory)
    return job


# ---------- stability-sweep ----------

def curve_sweep_checks(curve: Curve, profile: np.ndarray, config: ExperimentConfig) -> curve_ops.SweepResult:
    """Speed, normal and curvature distances with their s-derivatives must all be linear in epsilon."""
    sweep = curve_ops.perturbation_sweep(curve, profile, config.epsilons)
    table("curve", sweep.rows())
    for key, slope in sorted(sweep.slopes().items()):
        check(f"{key}_slope", _in_window(slope, config.slope_low, config.slope_high), slope,
              "curve.perturbation_sweep")
    return sweep


def stability_sweep(config: ExperimentConfig, out: Path) -> Job:
    families = _families(config, config.sweep_nodes)
    curve = families[0].curve(1.0)
    profile = _profile(curve)
    low, high = config.slope_low, config.slope_high
    with Job("stability-sweep") as job:
        with Job("curve"):
            curve_sweep_checks(curve, profile, config)
        with Job("map"):
            sweep = area_map.map_stability_sweep(curve, profile, config.epsilons)
            table("map", sweep.rows())
            slopes = sweep.slopes()
            for key in sorted(slopes):
                record(f"{key}_slope", slopes[key], "area_map.map_stability_sweep")
            for key in ("c2", "inverse_c1", "hausdorff"):
                check(f"{key}_slope", _in_window(slopes[key], low, high), slopes[key], "area_map.map_stability_sweep")
        with Job("fields"):
            sweep = field_stability_sweep(families, config.epsilons, resolution=config.solver_resolution)
            table("fields", sweep.rows())
            for key, slope in sorted(sweep.slopes().items()):
                check(f"{key}_slope", _in_window(slope, low, high), slope, "local_fields.field_stability_sweep")
    job.export(out / "stability-sweep")
    return job


# ---------- embed ----------

def embed(config: ExperimentConfig, out: Path, samples: int = 20, time_step: float = 1e-5) -> Job:
    rng = np.random.default_rng(config.seed)
    blocks = LocalFieldSet(_families(config))
    m = min(config.m_range)
    family = time_smoothing.SmoothedFamily(blocks, m, config.dissipation_resolution, cycle=config.cycle)
    mu = family.schedule.mu
    lattice = spectral_solver.ScheduleLattice(family)
    freeze = family.schedule.freeze_time
    centres = np.sort(rng.uniform(0.05 * freeze, 0.95 * freeze, samples))
    grid = np.linspace(0.0, 1.0, 21)
    stamps = sorted({float(t) for p in centres for t in (p - 2 * time_step, p - time_step, p,
                                                        p + time_step, p + 2 * time_step)}
                    | {float(t) for t in grid[1:]})
    rho0 = family.scalar(0.0)
    traj = spectral_solver.solve_batch(family, [rho0], [mu], stamps)
    snapshots = {t: fields[0] for t, fields in traj.checkpoints.items()}
    snapshots[0.0] = GridField.scalar(rho0.values).dealias().to_physical()

    def velocity_at(t: float) -> GridField:
        return GridField.vector(lattice(t), time=t)

    def lifted_at(t: float) -> embed3d.Lifted3DField:
        key = min(snapshots, key=lambda s: abs(s - t))
        g = time_smoothing.forcing(velocity_at, mu, t, time_step=time_step)
        return embed3d.lift(velocity_at(t), snapshots[key], g)

    with Job("embed") as job:
        with Job("residual"):
            rows = []
            for p in centres:
                p = float(p)
                rep = embed3d.ns_residual(lifted_at, mu, p, time_step=time_step)
                theta = snapshots[min(snapshots, key=lambda s: abs(s - p))]
                wide = (snapshots[min(snapshots, key=lambda s: abs(s - p - 2 * time_step))].values
                        - snapshots[min(snapshots, key=lambda s: abs(s - p + 2 * time_step))].values) / (4 * time_step)
                narrow = (snapshots[min(snapshots, key=lambda s: abs(s - p - time_step))].values
                          - snapshots[min(snapshots, key=lambda s: abs(s - p + time_step))].values) / (2 * time_step)
                v = velocity_at(p)
                advective = v.advect(theta)
                aliasing = advective - advective.dealias().to_physical()
                budget = 10 * (float(np.max(np.abs(wide - narrow))) + aliasing.sup_norm()) + 1e-8
                rows.append({**rep.as_dict(), "budget": budget})
                check(f"vertical_residual_t{p:.6f}", rep.vertical <= budget, rep.vertical, "embed3d.ns_residual")
                check(f"horizontal_residual_t{p:.6f}", rep.horizontal <= 1e-6 * max(1.0, v.sup_norm()),
                      rep.horizontal, "embed3d.ns_residual")
                check(f"forcing_vertical_t{p:.6f}", rep.forcing_vertical == 0.0, rep.forcing_vertical,
                      "embed3d.Lifted3DField.forcing_components")
            table("residual", rows)
        with Job("identities"):
            fields = [embed3d.lift(velocity_at(float(t)), snapshots[float(t)])
                      for t in grid]
            worst = 0.0
            for f in fields:
                lhs = f.gradient_energy()
                rhs = f.velocity.gradient_energy() + f.theta.gradient_energy()
                worst = max(worst, abs(lhs - rhs) / max(rhs, 1e-300))
            check("gradient_energy_split", worst <= 1e-10, worst, "embed3d.Lifted3DField.gradient_energy")
            div = max(float(np.max(np.abs(f.divergence() - f.velocity.divergence().values[..., None])))
                      for f in fields)
            check("divergence_matches_2d", div <= 1e-8, div, "embed3d.Lifted3DField.divergence")
            agg = embed3d.dissipation_aggregate(fields, grid, mu)
            measured = float(mu * simpson([f.theta.gradient_energy() for f in fields], x=grid))
            record("aggregate", agg.as_dict(), "embed3d.dissipation_aggregate")
            check("dissipation_aggregate", agg.bounds(measured), agg.total, "embed3d.dissipation_aggregate")
            record("trajectory_dissipation", traj.dissipation(0), "spectral_solver.Trajectory.dissipation")
    job.export(out / "embed")
    return job


# ---------- report ----------

def report(config: ExperimentConfig, out: Path) -> Job:
    summary = aggregate(out)
    summary.tables["checks"] = [e.as_dict() for e in summary.entries if e.kind == "check"]
    summary.export(out)
    return summary


SUITES: dict[str, Callable[[ExperimentConfig, Path], Job]] = {
    "geometry-check": geometry_check,
    "build-family": build_family,
    "scaling": scaling,
    "dissipate": dissipate,
    "stability-sweep": stability_sweep,
    "embed": embed,
    "report": report,
}
