"""Explicit finite-difference time stepping of the cubic-transformed equation

    zeta_t = Lap(zeta) - (2/3)|grad zeta|^2/zeta
             - (delta lambda^(2/3)/3^(4/3)) |grad zeta|^2/zeta^(4/3) - 1

with zeta = 1/(3 lambda) on the boundary and initially. Quenching (u -> 1)
is zeta -> 0.
"""
import logging
import math
import time
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from app.core.errors import BudgetExceededError, NonPositiveError
from app.core.geometry import build_grid
from app.schemas.core import Domain, Field, Grid, Params
from app.schemas.evolution import QuenchOutcome, QuenchTableRow, RunConfig, RunTemplate, RunTrace
from app.services import transform_service
from app.services.report_service import write_profile, write_table
from app.utils.helpers import run_label
from app.utils.logger import log_run_record

logger = logging.getLogger(__name__)

# the final approach to quench is traced at every step once min zeta drops below this share of 1/(3 lambda)
FINAL_PHASE_SHARE = 0.1

Kernel = Callable[[np.ndarray], np.ndarray]


def fringing_coefficient(params: Params) -> float:
    return params.delta * params.lam ** (2.0 / 3.0) / 3.0 ** (4.0 / 3.0)


def _check_positive(interior: np.ndarray):
    if np.any(interior <= 0.0):
        raise NonPositiveError(
            f"interior zeta reached {float(interior.min()):.3g} before the zeta^(4/3) evaluation"
        )


def _slab_kernel(config: RunConfig) -> Kernel:
    h, dt = config.grid.h, config.dt
    boundary = config.params.boundary_zeta
    coeff = fringing_coefficient(config.params)
    floor = config.stop_tol ** 2

    def step(z: np.ndarray) -> np.ndarray:
        zi = z[1:-1]
        _check_positive(zi)
        d2 = (z[2:] - 2.0 * zi + z[:-2]) / h ** 2
        d0_sq = (z[2:] - z[:-2]) ** 2
        rhs = (
            d2
            - d0_sq / (6.0 * zi * h ** 2)
            - coeff * d0_sq / (4.0 * np.maximum(zi, floor) ** (4.0 / 3.0) * h ** 2)
            - 1.0
        )
        new = np.empty_like(z)
        new[1:-1] = zi + dt * rhs
        new[0] = new[-1] = boundary
        return new

    return step


def _disk_kernel(config: RunConfig) -> Kernel:
    h, dt = config.grid.h, config.dt
    n = config.grid.domain.dim
    boundary = config.params.boundary_zeta
    coeff = fringing_coefficient(config.params)
    floor = config.stop_tol ** 2
    r = np.asarray(config.grid.nodes[1:-1])

    def step(z: np.ndarray) -> np.ndarray:
        zi = z[1:-1]
        _check_positive(z[:-1])
        d2 = (z[2:] - 2.0 * zi + z[:-2]) / h ** 2
        d0 = z[2:] - z[:-2]
        d0_sq = d0 ** 2
        rhs = (
            d2
            + (n - 1) * d0 / (2.0 * h * r)
            - d0_sq / (6.0 * zi * h ** 2)
            - coeff * d0_sq / (4.0 * np.maximum(zi, floor) ** (4.0 / 3.0) * h ** 2)
            - 1.0
        )
        new = np.empty_like(z)
        new[1:-1] = zi + dt * rhs
        # symmetric origin: Lap(zeta) -> 2n (zeta_1 - zeta_0)/h^2, gradient terms vanish
        new[0] = z[0] + (2.0 * n * dt / h ** 2) * (z[1] - z[0]) - dt
        new[-1] = boundary
        return new

    return step


def _kernel(config: RunConfig) -> Kernel:
    if config.grid.domain.kind == "slab":
        return _slab_kernel(config)
    return _disk_kernel(config)


def initial_field(grid: Grid, params: Params) -> Field:
    return Field(grid=grid, values=np.full(grid.size, params.boundary_zeta), time=0.0)


def step_slab(field: Field, config: RunConfig) -> Field:
    """One forward-Euler step on the slab"""
    values = _slab_kernel(config)(np.asarray(field.values, dtype=float))
    return Field(grid=field.grid, values=values, time=field.time + config.dt)


def step_disk(field: Field, config: RunConfig) -> Field:
    """One forward-Euler step on a radial grid, origin included"""
    values = _disk_kernel(config)(np.asarray(field.values, dtype=float))
    return Field(grid=field.grid, values=values, time=field.time + config.dt)


def max_gradient_u(z: np.ndarray, h: float, params: Params, floor: float) -> float:
    """max |grad u| from nodal zeta, using grad u = -lambda grad zeta/(3 lambda zeta)^(2/3)"""
    grad_zeta = np.gradient(z, h)
    gap_sq = np.cbrt(3.0 * params.lam * np.maximum(z, floor)) ** 2
    return float(np.max(np.abs(params.lam * grad_zeta / gap_sq)))


def run(config: RunConfig, raise_on_budget: bool = True) -> QuenchOutcome:
    """Step until quench (min zeta < stop_tol), steady state, or the step budget runs out"""
    grid, params = config.grid, config.params
    dt, tol = config.dt, config.stop_tol
    nodes = np.asarray(grid.nodes)
    step = _kernel(config)
    final_phase = FINAL_PHASE_SHARE * params.boundary_zeta

    z = np.full(grid.size, params.boundary_zeta)
    pending = list(config.snapshot_times)
    snapshots: List[Field] = []
    trace: Dict[str, list] = {"t": [], "min_zeta": [], "argmin_node": [], "max_grad_u": []}

    def record(m: int, values: np.ndarray):
        j = int(np.argmin(values))
        trace["t"].append(m * dt)
        trace["min_zeta"].append(float(values[j]))
        trace["argmin_node"].append(float(nodes[j]))
        trace["max_grad_u"].append(max_gradient_u(values, grid.h, params, tol ** 2))

    started = time.perf_counter()
    kind, m, change = "budget_exceeded", 0, math.inf
    t_interp: Optional[float] = None
    record(0, z)

    for m in range(config.max_steps):
        # nearest step not after each requested time
        while pending and pending[0] < (m + 1) * dt:
            pending.pop(0)
            snapshots.append(Field(grid=grid, values=z.copy(), time=m * dt))

        new = step(z)
        change = float(np.max(np.abs(new - z)))
        z_min_prev, z_min = float(z.min()), float(new.min())
        z = new

        if z_min < tol:
            kind = "quenched"
            t_interp = m * dt + dt * (z_min_prev - tol) / (z_min_prev - z_min)
            record(m + 1, np.maximum(z, 0.0))
            break
        if change < tol:
            kind = "steady"
            record(m + 1, z)
            break
        if (m + 1) % config.trace_every == 0 or z_min < final_phase:
            record(m + 1, z)
    steps = m + 1
    elapsed = time.perf_counter() - started

    if kind == "budget_exceeded":
        message = (
            f"no quench or steady state after {config.max_steps} steps "
            f"(lambda={params.lam:g}, delta={params.delta:g}, {grid.domain.kind})"
        )
        logger.warning(message)
        if raise_on_budget:
            raise BudgetExceededError(message)

    final_values = np.maximum(z, 0.0)
    t_ex = steps * dt if kind != "budget_exceeded" else None
    label = run_label(grid.domain.kind, params.lam, params.delta)
    quench_node = float(nodes[int(np.argmin(z))]) if kind == "quenched" else None
    centre_quench = None
    if quench_node is not None:
        centre_quench = bool(abs(quench_node) <= 2.0 * grid.h * (1.0 + 1e-9))
        if not centre_quench:
            logger.warning(
                f"Off-centre quench at {quench_node:.6g} ({abs(quench_node) / grid.h:.0f} cells from the centre): "
                f"the wall sublayer is unresolved at h={grid.h:g}, t_ex={t_ex} is a discretization artifact",
                extra={"run": label},
            )
    logger.info(
        f"Run {kind}: lambda={params.lam:g} delta={params.delta:g} {grid.domain.kind} "
        f"N={grid.n_interior} steps={steps} t_ex={t_ex} wall={elapsed:.2f}s",
        extra={"run": label},
    )

    outcome = QuenchOutcome(
        kind=kind,
        params=params,
        dt=dt,
        stop_tol=tol,
        steps=steps,
        t_ex=t_ex,
        t_ex_interpolated=t_interp,
        quench_node=quench_node,
        centre_quench=centre_quench,
        last_change=change,
        final_field=Field(grid=grid, values=final_values, time=steps * dt),
        snapshots=snapshots,
        trace=RunTrace(**trace),
    )
    log_run_record(run_record(outcome), label)
    return outcome


def u_view(field: Field, params: Params) -> Field:
    """Nodal u = 1 - (3 lambda zeta)^(1/3)"""
    values = transform_service.u_of_cubic(np.maximum(np.asarray(field.values), 0.0), params)
    return Field(grid=field.grid, values=np.atleast_1d(values), time=field.time, kind="u")


def quench_row(domain: Domain, params: Params, template: RunTemplate) -> QuenchTableRow:
    """Run one sweep cell; budget exhaustion becomes an infinite-time row"""
    config = template.config_for(domain, params)
    outcome = run(config, raise_on_budget=False)
    if outcome.kind == "quenched":
        t_ex = outcome.t_ex
    else:
        t_ex = math.inf
    return QuenchTableRow(
        delta=params.delta,
        lam=params.lam,
        domain=domain.kind,
        n_interior=template.n_interior,
        dt=template.dt,
        outcome=outcome.kind,
        t_ex=t_ex,
        lam_t_ex=params.lam * t_ex,
        quench_node=outcome.quench_node,
        centre_quench=outcome.centre_quench,
    )


def quench_time_table(
    domain: Domain, deltas: List[float], lambdas: List[float], template: RunTemplate
) -> List[QuenchTableRow]:
    """Sequential quench-time table ordered by (delta, lambda)"""
    rows = []
    for delta in sorted(deltas):
        for lam in sorted(lambdas):
            rows.append(quench_row(domain, Params(lam=lam, delta=delta), template))
    return rows


def one_side_rate(outcome: QuenchOutcome) -> pd.DataFrame:
    """min_x (1-u) (T-t)^(-1/3) along the trace of a quenched run"""
    if outcome.kind != "quenched":
        return pd.DataFrame(columns=["t", "tau", "value"])
    T = outcome.quench_time
    t = np.asarray(outcome.trace.t)
    keep = t < T
    tau = T - t[keep]
    gap = np.cbrt(3.0 * outcome.params.lam * np.asarray(outcome.trace.min_zeta)[keep])
    frame = pd.DataFrame({"t": t[keep], "tau": tau, "value": gap / np.cbrt(tau)})
    last_decade = frame[frame["tau"] <= frame["tau"].max() / 10.0]
    if not last_decade.empty:
        logger.info(
            f"One-side rate over the last decade: min={last_decade['value'].min():.4g} "
            f"max={last_decade['value'].max():.4g}"
        )
    return frame


def mesh_study(config: RunConfig, levels: int = 3) -> pd.DataFrame:
    """Halve h at every level, scale dt by 1/4, and compare quench times"""
    rows = []
    previous = None
    for level in range(levels):
        n_interior = (config.grid.n_interior + 1) * 2 ** level - 1
        level_config = RunConfig(
            params=config.params,
            grid=build_grid(config.grid.domain, n_interior),
            dt=config.dt / 4 ** level,
            stop_tol=config.stop_tol,
            max_steps=config.max_steps * 4 ** level,
            trace_every=config.trace_every,
        )
        outcome = run(level_config)
        t_ex = outcome.quench_time if outcome.kind == "quenched" else math.inf
        change = None if previous is None else abs(t_ex - previous) / abs(previous)
        rows.append(
            {
                "level": level,
                "n_interior": n_interior,
                "h": level_config.grid.h,
                "dt": level_config.dt,
                "outcome": outcome.kind,
                "t_ex": t_ex,
                "rel_change": change,
            }
        )
        previous = t_ex
    return pd.DataFrame(rows)


def write_snapshots(outcome: QuenchOutcome, out_dir: Path, stem: str) -> List[Path]:
    """Two-column (coordinate, value) files for every snapshot and the stop time, zeta and u"""
    written = []
    fields = list(outcome.snapshots) + [outcome.final_field]
    for index, field in enumerate(fields):
        label = "stop" if index == len(fields) - 1 else f"t{index:02d}"
        u_field = u_view(field, outcome.params)
        written.append(write_profile(out_dir / f"{stem}_{label}_zeta.dat", field))
        written.append(write_profile(out_dir / f"{stem}_{label}_u.dat", u_field))
    return written


def run_record(outcome: QuenchOutcome) -> dict:
    """CSV/JSON-ready summary of one run"""
    grid = outcome.grid
    t_ex = outcome.t_ex if outcome.t_ex is not None else math.inf
    return {
        "delta": outcome.params.delta,
        "lambda": outcome.params.lam,
        "domain": grid.domain.kind,
        "n_interior": grid.n_interior,
        "dt": outcome.dt,
        "outcome": outcome.kind,
        "t_ex": t_ex,
        "t_ex_interpolated": outcome.t_ex_interpolated,
        "lam_t_ex": outcome.params.lam * t_ex,
        "quench_node": outcome.quench_node,
        "centre_quench": outcome.centre_quench,
        "steps": outcome.steps,
    }


def write_run_record(outcome: QuenchOutcome, path: Path) -> Path:
    return write_table([run_record(outcome)], path)
