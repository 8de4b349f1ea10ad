"""Scenario execution: run configs, write CSV/SVG artifacts, batch sweeps."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .analysis import TrajectorySummary, summarize
from .config import ScenarioConfig, set_config_value
from .control import ControlSchedule, FbsmReport, fbsm_solve
from .errors import ConfigError
from .integrate import TimeGrid, Trajectory, simulate
from .svgchart import line_chart

DEFAULT_WINDOW = 90.0


@dataclass
class RunResult:
    config: ScenarioConfig
    trajectory: Trajectory
    summary: TrajectorySummary
    report: FbsmReport | None
    out_dir: str
    files: list[str]


def _g17(x: float) -> str:
    return format(float(x), ".17g")


def write_trajectory_csv(path: str, traj: Trajectory) -> None:
    """Write the full run, one row per grid node, 17 significant digits."""
    n = traj.n_strains
    header = ["t", "P"]
    for j in range(1, n + 1):
        header += [f"S_{j}", f"E_{j}", f"I_{j}", f"R_{j}"]
    header.append("u")
    S = traj.susceptible_matrix()
    times = traj.grid.times()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for k in range(traj.grid.n_points):
            row = [_g17(times[k]), _g17(traj.P[k])]
            for j in range(n):
                row += [
                    _g17(S[k, j]), _g17(traj.E[k, j]),
                    _g17(traj.I[k, j]), _g17(traj.R[k, j]),
                ]
            row.append(_g17(traj.u[k]))
            writer.writerow(row)


def read_trajectory_csv(path: str) -> Trajectory:
    """Read a trajectory written by :func:`write_trajectory_csv`."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [list(map(float, row)) for row in reader]
    if len(header) < 3 or header[0] != "t" or header[-1] != "u":
        raise ConfigError(f"{path}: not a trajectory file")
    n = (len(header) - 3) // 4
    data = np.array(rows)
    times = data[:, 0]
    if len(times) < 2:
        raise ConfigError(f"{path}: trajectory needs at least two rows")
    dt = times[1] - times[0]
    grid = TimeGrid(t0=float(times[0]), dt=float(dt), n_steps=len(times) - 1)
    E = np.empty((len(times), n))
    I = np.empty((len(times), n))
    R = np.empty((len(times), n))
    for j in range(n):
        E[:, j] = data[:, 3 + 4 * j]
        I[:, j] = data[:, 4 + 4 * j]
        R[:, j] = data[:, 5 + 4 * j]
    return Trajectory(grid=grid, P=data[:, 1], E=E, I=I, R=R, u=data[:, -1])


def read_schedule_csv(path: str, grid: TimeGrid) -> ControlSchedule:
    """Read a t,u schedule file and check it matches the grid."""
    if not os.path.exists(path):
        raise ConfigError(f"schedule file not found: {path}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header[:2]] != ["t", "u"]:
            raise ConfigError(f"{path}: schedule files need a t,u header")
        rows = [(float(r[0]), float(r[1])) for r in reader]
    if len(rows) != grid.n_points:
        raise ConfigError(
            f"{path}: schedule has {len(rows)} rows but the grid has "
            f"{grid.n_points} nodes"
        )
    times = grid.times()
    for k, (t, _) in enumerate(rows):
        if abs(t - times[k]) > 1e-9 * max(1.0, abs(t)):
            raise ConfigError(f"{path}: row {k + 1} time {t!r} is off the grid")
    return ControlSchedule(grid=grid, u=np.array([u for _, u in rows]))


_SUMMARY_FIELDS = [
    "scenario", "strain", "initial_population", "cumulative_deaths",
    "peak_infected", "peak_day", "dominant_strain_at_peak",
    "share_S", "share_E", "share_I", "share_R",
    "plateau_S", "plateau_E", "plateau_I", "plateau_R",
    "objective", "fbsm_converged", "fbsm_iterations",
]


def _summary_rows(name: str, summary: TrajectorySummary, report: FbsmReport | None):
    rows = []
    for s in summary.strains:
        rows.append(
            {
                "scenario": name,
                "strain": s.strain + 1,
                "initial_population": _g17(summary.initial_population),
                "cumulative_deaths": _g17(summary.cumulative_deaths),
                "peak_infected": _g17(s.peak_infected),
                "peak_day": _g17(s.peak_day),
                "dominant_strain_at_peak": s.dominant_strain_at_peak + 1,
                "share_S": _g17(s.share_S),
                "share_E": _g17(s.share_E),
                "share_I": _g17(s.share_I),
                "share_R": _g17(s.share_R),
                "plateau_S": str(s.plateau_S).lower(),
                "plateau_E": str(s.plateau_E).lower(),
                "plateau_I": str(s.plateau_I).lower(),
                "plateau_R": str(s.plateau_R).lower(),
                "objective": "" if report is None else _g17(report.objective),
                "fbsm_converged": "" if report is None else str(report.converged).lower(),
                "fbsm_iterations": "" if report is None else report.iterations,
            }
        )
    return rows


def write_summary_csv(path: str, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_SUMMARY_FIELDS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def _write_charts(out_dir: str, config: ScenarioConfig, traj: Trajectory) -> list[str]:
    files = []
    p0 = traj.P[0]
    times = traj.grid.times()
    S = traj.susceptible_matrix()
    series = []
    n = traj.n_strains
    for j in range(n):
        tag = f" {j + 1}" if n > 1 else ""
        series += [
            (f"S{tag}", S[:, j] / p0),
            (f"E{tag}", traj.E[:, j] / p0),
            (f"I{tag}", traj.I[:, j] / p0),
            (f"R{tag}", traj.R[:, j] / p0),
        ]
    series.append(("P", traj.P / p0))
    comp_path = os.path.join(out_dir, "compartments.svg")
    line_chart(
        comp_path,
        title=f"{config.name}: compartment shares of the initial population",
        x=times, series=series, y_label="share of P(0)", y_min=0.0,
    )
    files.append(comp_path)
    if config.control_mode != "none":
        ctrl_path = os.path.join(out_dir, "control.svg")
        line_chart(
            ctrl_path,
            title=f"{config.name}: mitigation schedule",
            x=times, series=[("u", traj.u)],
            y_label="mitigation u", y_min=0.0, y_max=1.0,
        )
        files.append(ctrl_path)
    return files


def format_report(report: FbsmReport) -> str:
    status = "converged" if report.converged else "did NOT converge"
    u = report.schedule.u
    return (
        f"sweep {status} after {report.iterations} iteration(s); "
        f"last update {report.last_update:.3e}\n"
        f"objective J = {report.objective:.9e}\n"
        f"schedule: mean u = {u.mean():.4f}, max u = {u.max():.4f}"
    )


def run_scenario(
    config: ScenarioConfig,
    out_dir: str | None = None,
    quiet: bool = False,
    write_svg: bool | None = None,
    window: float | None = None,
) -> RunResult:
    """Execute one scenario and write its artifacts.

    Artifacts are ``trajectory.csv``, ``summary.csv`` and (unless disabled)
    SVG charts, all placed in the scenario's output directory.  For optimize
    mode the sweep report is attached to the result; non-convergence is
    reported, not raised.
    """
    config.validate()
    grid = config.grid()
    params = config.strain_params()
    events = config.seed_events()
    initial = config.initial_state()

    report = None
    if config.control_mode == "optimize":
        report = fbsm_solve(
            initial, params, events, grid,
            costs=config.cost_params(),
            u_init=ControlSchedule.constant(grid, config.u_init),
            relaxation=config.relaxation,
            tol=config.tolerance,
            max_iter=config.max_iterations,
        )
        traj = report.trajectory
    else:
        if config.control_mode == "none":
            schedule = ControlSchedule.constant(grid, 0.0)
        elif config.control_mode == "constant":
            schedule = ControlSchedule.constant(grid, config.control_value)
        else:
            schedule = read_schedule_csv(config.resolve_path(config.schedule_file), grid)
        traj = simulate(initial, params, schedule, events, grid)

    horizon = grid.T - grid.t0
    if window is None:
        window = min(DEFAULT_WINDOW, horizon)
    summary = summarize(traj, window=window)

    out = out_dir or config.output_dir or os.path.join("out", config.name)
    os.makedirs(out, exist_ok=True)
    files = []
    traj_path = os.path.join(out, "trajectory.csv")
    write_trajectory_csv(traj_path, traj)
    files.append(traj_path)
    summary_path = os.path.join(out, "summary.csv")
    write_summary_csv(summary_path, _summary_rows(config.name, summary, report))
    files.append(summary_path)
    if write_svg if write_svg is not None else config.svg:
        files += _write_charts(out, config, traj)

    if not quiet:
        print(f"scenario {config.name}: wrote {len(files)} file(s) to {out}")
        print(summary.format())
        if report is not None:
            print(format_report(report))

    return RunResult(
        config=config, trajectory=traj, summary=summary,
        report=report, out_dir=out, files=files,
    )


def _value_tag(value: float) -> str:
    return format(float(value), "g").replace("-", "m")


def sweep(
    config: ScenarioConfig,
    param_path: str,
    values,
    out_dir: str | None = None,
    quiet: bool = False,
    write_svg: bool | None = None,
) -> list[RunResult]:
    """Run the scenario once per parameter value and combine the summaries.

    Each run writes into ``<root>/<name>__<param>_<value>/``; a combined
    ``sweep_summary.csv`` lands in the root.  Scenario runs are independent,
    so callers may parallelise them externally if needed.
    """
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    root = out_dir or config.output_dir or os.path.join("out", f"{config.name}_sweep")
    os.makedirs(root, exist_ok=True)
    results = []
    combined = []
    for value in values:
        cfg = set_config_value(config, param_path, value)
        tag = f"{cfg.name}__{param_path.replace('.', '_')}_{_value_tag(value)}"
        sub = os.path.join(root, tag)
        result = run_scenario(cfg, out_dir=sub, quiet=quiet, write_svg=write_svg)
        results.append(result)
        for row in _summary_rows(tag, result.summary, result.report):
            row["scenario"] = tag
            combined.append({"param": param_path, "value": _g17(value), **row})
    path = os.path.join(root, "sweep_summary.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["param", "value"] + _SUMMARY_FIELDS, lineterminator="\n"
        )
        writer.writeheader()
        writer.writerows(combined)
    if not quiet:
        print(f"sweep over {param_path}: combined summary at {path}")
    return results
