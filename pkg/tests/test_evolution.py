import json
import logging
import math

import numpy as np
import pytest

from app.core.config import settings
from app.core.errors import BudgetExceededError, NonPositiveError, StabilityError
from app.core.geometry import build_grid
from app.core.reference import QUENCH_TABLE
from app.schemas.core import Domain, Field, Params
from app.schemas.evolution import RunTemplate
from app.services import evolution_service
from app.services.evolution_service import (
    fringing_coefficient,
    initial_field,
    mesh_study,
    one_side_rate,
    quench_time_table,
    run,
    step_disk,
    step_slab,
    u_view,
)

FINE_N = 200
FINE_DT = 6e-6


def test_fringing_coefficient():
    assert fringing_coefficient(Params(lam=1.0)) == 0.0
    assert fringing_coefficient(Params(lam=8.0, delta=3.0)) == pytest.approx(4.0 * 3.0 / 3.0 ** (4.0 / 3.0))


def test_initial_field_is_flat(coarse_slab_grid):
    params = Params(lam=3.0, delta=0.7)
    field = initial_field(coarse_slab_grid, params)
    assert np.all(field.values == params.boundary_zeta)
    assert field.time == 0.0


@pytest.mark.parametrize("domain", [Domain.slab(), Domain.disk()])
def test_flat_field_only_feels_the_source(domain, make_config):
    config = make_config(domain, 2.0, 0.7)
    field = initial_field(config.grid, config.params)
    stepper = step_slab if domain.kind == "slab" else step_disk
    new = stepper(field, config)
    assert new.time == pytest.approx(config.dt)
    assert np.allclose(new.values[:-1][1 if domain.kind == "slab" else 0 :], config.params.boundary_zeta - config.dt)
    assert new.values[-1] == config.params.boundary_zeta


def test_slab_step_reproduces_continuum_rhs_for_quadratic_profile(slab, make_config):
    config = make_config(slab, 1.0, 0.7)
    x = np.asarray(config.grid.nodes)
    a, b = 0.3, -0.5
    zeta = a + b * x ** 2
    new = step_slab(Field(grid=config.grid, values=zeta), config)

    coeff = fringing_coefficient(config.params)
    grad_sq = 4.0 * b ** 2 * x ** 2
    expected = 2.0 * b - (2.0 / 3.0) * grad_sq / zeta - coeff * grad_sq / zeta ** (4.0 / 3.0) - 1.0
    rate = (new.values - zeta) / config.dt
    assert np.allclose(rate[1:-1], expected[1:-1], rtol=1e-9, atol=1e-9)
    assert new.values[0] == new.values[-1] == config.params.boundary_zeta


def test_disk_step_reproduces_continuum_rhs_for_quadratic_profile(disk, make_config):
    config = make_config(disk, 1.0, 0.7)
    r = np.asarray(config.grid.nodes)
    a, b = 0.3, -0.2
    zeta = a + b * r ** 2
    new = step_disk(Field(grid=config.grid, values=zeta), config)

    coeff = fringing_coefficient(config.params)
    grad_sq = 4.0 * b ** 2 * r ** 2
    # Lap(a + b r^2) = 2 b n in n dimensions
    expected = 4.0 * b - (2.0 / 3.0) * grad_sq / zeta - coeff * grad_sq / zeta ** (4.0 / 3.0) - 1.0
    rate = (new.values - zeta) / config.dt
    assert np.allclose(rate[:-1], expected[:-1], rtol=1e-9, atol=1e-9)


def test_step_rejects_non_positive_interior(slab, disk, make_config):
    for domain, stepper in ((slab, step_slab), (disk, step_disk)):
        config = make_config(domain, 1.0, 0.7)
        values = np.full(config.grid.size, config.params.boundary_zeta)
        values[len(values) // 2] = 0.0
        with pytest.raises(NonPositiveError):
            stepper(Field(grid=config.grid, values=values), config)


def test_unstable_time_step_is_rejected(slab, make_config):
    h = build_grid(slab, 20).h
    with pytest.raises(StabilityError):
        make_config(slab, 1.0, 0.0, dt=h ** 2 / 2)
    with pytest.raises(StabilityError):
        make_config(slab, 1.0, 0.0, dt=h ** 2 / 4)


def test_budget_exhaustion(slab, make_config):
    config = make_config(slab, 3.0, 0.0, max_steps=5)
    with pytest.raises(BudgetExceededError):
        run(config)

    outcome = run(config, raise_on_budget=False)
    assert outcome.kind == "budget_exceeded"
    assert outcome.t_ex is None and outcome.quench_node is None
    assert outcome.steps == 5


def test_slab_quench_is_symmetric_and_central(slab, make_config):
    config = make_config(slab, 3.0, 0.7, snapshot_times=[0.05, 0.1])
    outcome = run(config)

    assert outcome.kind == "quenched"
    assert abs(outcome.quench_node) <= 2 * config.grid.h
    assert outcome.centre_quench is True
    assert float(outcome.final_field.values.min()) < config.stop_tol
    assert np.all(outcome.final_field.values >= 0.0)
    for snapshot in outcome.snapshots:
        assert np.allclose(snapshot.values, snapshot.values[::-1], rtol=0, atol=1e-12)


def test_disk_quenches_at_the_center(disk, make_config):
    outcome = run(make_config(disk, 2.0, 0.7))
    assert outcome.kind == "quenched"
    assert outcome.quench_node == 0.0
    assert outcome.centre_quench is True


def test_interpolated_quench_time_lies_within_the_last_step(slab, make_config):
    outcome = run(make_config(slab, 3.0, 0.0))
    assert outcome.t_ex - outcome.dt <= outcome.t_ex_interpolated <= outcome.t_ex
    assert outcome.quench_time == outcome.t_ex_interpolated


@pytest.mark.parametrize("domain, lam", [(Domain.slab(), 1.0), (Domain.disk(), 0.5)])
def test_below_pull_in_reaches_steady_state(domain, lam, make_config):
    outcome = run(make_config(domain, lam, 0.7))
    assert outcome.kind == "steady"
    assert outcome.quench_node is None and outcome.centre_quench is None
    assert outcome.last_change < outcome.stop_tol
    u = u_view(outcome.final_field, outcome.params)
    assert float(u.values.max()) < 1.0
    assert u.values[-1] == pytest.approx(0.0, abs=1e-12)


def test_snapshots_use_nearest_step_not_after(slab, make_config):
    config = make_config(slab, 3.0, 0.0, snapshot_times=[0.02, 0.0, 0.01])
    outcome = run(config)

    times = [snapshot.time for snapshot in outcome.snapshots]
    assert len(times) == 3
    for requested, t in zip([0.0, 0.01, 0.02], times):
        assert requested - config.dt < t <= requested + 1e-12
    assert np.all(outcome.snapshots[0].values == config.params.boundary_zeta)


def test_snapshots_after_quench_are_not_taken(slab, make_config):
    outcome = run(make_config(slab, 3.0, 0.0, snapshot_times=[0.01, 10.0]))
    assert len(outcome.snapshots) == 1


def test_trace_follows_the_run(slab, make_config):
    config = make_config(slab, 3.0, 0.0)
    outcome = run(config)
    trace = outcome.trace
    assert trace.t[0] == 0.0
    assert trace.min_zeta[0] == pytest.approx(config.params.boundary_zeta)
    assert np.all(np.diff(trace.t) > 0)
    assert trace.min_zeta[-1] < config.stop_tol
    assert trace.max_grad_u[-1] > trace.max_grad_u[0]


def test_u_view_of_initial_and_quenched_fields(slab, make_config):
    config = make_config(slab, 3.0, 0.0)
    flat = u_view(initial_field(config.grid, config.params), config.params)
    assert flat.kind == "u"
    assert np.allclose(flat.values, 0.0, atol=1e-14)

    outcome = run(config)
    assert float(u_view(outcome.final_field, outcome.params).values.max()) > 0.99


def test_quench_time_falls_as_voltage_grows(slab, make_config):
    times = [run(make_config(slab, lam, 0.1, dt=2e-5)).quench_time for lam in (2.0, 20.0, 200.0)]
    assert times[0] > times[1] > times[2]


def test_quench_time_falls_as_fringing_grows(slab, make_config):
    times = [run(make_config(slab, 2.0, delta)).quench_time for delta in (0.0, 0.7, 7.0)]
    assert times[0] > times[1] > times[2]


def test_large_voltage_approaches_the_flat_limit(slab, make_config):
    # without fringing lambda * T tends to 1/3
    outcome = run(make_config(slab, 100.0, 0.0, dt=2e-5))
    assert 100.0 * outcome.quench_time == pytest.approx(1.0 / 3.0, rel=1e-2)


@pytest.mark.parametrize("lam, rel", [(10.0, 3e-2), (3.0, 3e-2)])
def test_published_quench_times_without_fringing(slab, make_config, lam, rel):
    outcome = run(make_config(slab, lam, 0.0, n_interior=FINE_N, dt=FINE_DT))
    assert outcome.quench_time == pytest.approx(QUENCH_TABLE[("slab", 0.0, lam)], rel=rel)


@pytest.mark.slow
def test_published_disk_quench_time_without_fringing(disk, make_config):
    # the published value sits 2% below the mesh-converged time
    outcome = run(make_config(disk, 1.0, 0.0, n_interior=FINE_N, dt=FINE_DT, max_steps=10_000_000))
    assert outcome.quench_time == pytest.approx(QUENCH_TABLE[("disk", 0.0, 1.0)], rel=3e-2)


@pytest.mark.slow
def test_published_disk_quench_time_with_fringing(disk, make_config):
    outcome = run(make_config(disk, 1.0, 0.7, n_interior=FINE_N, dt=FINE_DT, max_steps=10_000_000))
    assert outcome.centre_quench is True
    assert outcome.quench_time == pytest.approx(QUENCH_TABLE[("disk", 0.7, 1.0)], rel=2e-2)


@pytest.mark.slow
@pytest.mark.parametrize("delta", [0.1, 1.0])
def test_published_slab_quench_times_with_fringing(slab, make_config, delta):
    outcome = run(make_config(slab, 2.0, delta, n_interior=FINE_N, dt=FINE_DT, max_steps=10_000_000))
    assert outcome.centre_quench is True
    assert outcome.quench_time == pytest.approx(QUENCH_TABLE[("slab", delta, 2.0)], rel=3e-2)


def test_strong_fringing_quench_next_to_the_wall_is_flagged(slab, make_config):
    # the flat solution is a supersolution, so a resolved run cannot quench before 1/(3 lambda)
    lam = 2000.0
    config = make_config(slab, lam, 0.1, n_interior=FINE_N, dt=FINE_DT)
    outcome = run(config)
    assert outcome.kind == "quenched"
    assert outcome.centre_quench is False
    assert abs(outcome.quench_node) > 0.4
    assert lam * outcome.quench_time < 1.0 / 3.0
    assert lam * QUENCH_TABLE[("slab", 0.1, lam)] < 1.0 / 3.0
    assert evolution_service.run_record(outcome)["centre_quench"] is False


def test_quench_time_table_is_ordered_and_marks_steady_cells(slab, coarse_template):
    rows = quench_time_table(slab, [0.7, 0.0], [3.0, 1.0], coarse_template)

    assert [(row.delta, row.lam) for row in rows] == [(0.0, 1.0), (0.0, 3.0), (0.7, 1.0), (0.7, 3.0)]
    by_key = {(row.delta, row.lam): row for row in rows}
    assert by_key[(0.7, 1.0)].outcome == "steady"
    assert math.isinf(by_key[(0.7, 1.0)].t_ex)
    assert by_key[(0.0, 3.0)].outcome == "quenched"
    assert by_key[(0.0, 3.0)].lam_t_ex == pytest.approx(3.0 * by_key[(0.0, 3.0)].t_ex)
    assert by_key[(0.7, 3.0)].t_ex < by_key[(0.0, 3.0)].t_ex


def test_quench_row_with_empty_budget():
    template = RunTemplate(n_interior=20, dt=4e-4, max_steps=3)
    row = evolution_service.quench_row(Domain.slab(), Params(lam=3.0), template)
    assert row.outcome == "budget_exceeded"
    assert math.isinf(row.t_ex)


def test_mesh_study_converges(slab, make_config):
    config = make_config(slab, 3.0, 0.0, n_interior=9, dt=1e-3)
    frame = mesh_study(config, levels=2)

    assert list(frame["n_interior"]) == [9, 19]
    assert list(frame["dt"]) == pytest.approx([1e-3, 2.5e-4])
    assert set(frame["outcome"]) == {"quenched"}
    assert frame["rel_change"].iloc[1] < 0.1


def test_one_side_rate(slab, make_config):
    outcome = run(make_config(slab, 3.0, 0.0))
    frame = one_side_rate(outcome)
    assert not frame.empty
    assert np.all(frame["tau"] > 0)
    assert np.all(frame["value"] > 0)

    steady = run(make_config(slab, 1.0, 0.7))
    assert one_side_rate(steady).empty


def test_snapshot_and_record_files(slab, make_config, tmp_path):
    outcome = run(make_config(slab, 3.0, 0.0, snapshot_times=[0.0]))
    written = evolution_service.write_snapshots(outcome, tmp_path, "slab")
    names = sorted(path.name for path in written)
    assert names == ["slab_stop_u.dat", "slab_stop_zeta.dat", "slab_t00_u.dat", "slab_t00_zeta.dat"]

    profile = np.loadtxt(tmp_path / "slab_t00_zeta.dat")
    assert profile.shape == (outcome.grid.size, 2)

    record = evolution_service.write_run_record(outcome, tmp_path / "run.csv")
    header = record.read_text().splitlines()[0].split(",")
    assert "lam_t_ex" in header and "t_ex_interpolated" in header


@pytest.fixture
def runs_log(tmp_path, monkeypatch):
    monkeypatch.setattr(settings, "LOG_DIR", str(tmp_path))
    run_logger = logging.getLogger("runs")
    saved = list(run_logger.handlers)
    for handler in saved:
        run_logger.removeHandler(handler)
    yield tmp_path / "runs.log"
    for handler in list(run_logger.handlers):
        handler.close()
        run_logger.removeHandler(handler)
    for handler in saved:
        run_logger.addHandler(handler)


def test_completed_runs_are_appended_to_the_run_log(slab, make_config, runs_log):
    run(make_config(slab, 3.0, 0.7))
    run(make_config(slab, 1.0, 0.7))
    for handler in logging.getLogger("runs").handlers:
        handler.flush()

    lines = runs_log.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 2
    assert "[slab-l3-d0p7]" in lines[0]
    first = json.loads(lines[0].split(" - ", 1)[1])
    second = json.loads(lines[1].split(" - ", 1)[1])
    assert first["outcome"] == "quenched" and first["centre_quench"] is True
    assert first["lambda"] == 3.0 and first["domain"] == "slab"
    assert second["outcome"] == "steady" and second["centre_quench"] is None
