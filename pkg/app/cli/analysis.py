import logging
import math
from pathlib import Path

import numpy as np

from app.cli.common import PROVENANCE, echo, finish, print_table, single_case
from app.core import reference
from app.core.errors import ConfigError, DomainValueError, InsufficientRangeError, InsufficientSpanError
from app.core.geometry import build_grid
from app.schemas.asymptotics import ExpansionCoeffs
from app.schemas.core import Params
from app.schemas.experiment import ExperimentConfig, Report
from app.services import asymptotics_service, evolution_service, report_service

logger = logging.getLogger(__name__)

FIT_COLUMNS = ["exponent", "amplitude", "pinned_amplitude", "residual", "t_lo", "t_hi", "n_samples", "T",
               "target_amplitude", "exponent_t_minus", "exponent_t_plus"]
COMPARE_COLUMNS = ["r", "zeta_numeric", "zeta_local", "abs_err", "rel_err", "inside_validity"]

# analytic profile for the self-test: lambda = 3, delta = 0.7, T = 1
SELF_TEST_PARAMS = Params(lam=3.0, delta=0.7)


def register(subparsers, parents):
    fit = subparsers.add_parser(
        "fit-rate", parents=parents, help="Quenching rate, amplitude and similarity diagnostics of one run"
    )
    fit.set_defaults(handler=cmd_fit_rate)
    compare = subparsers.add_parser(
        "compare-local", parents=parents, help="Numerical profile against the local expansion near quench"
    )
    compare.set_defaults(handler=cmd_compare_local)


def cmd_fit_rate(config: ExperimentConfig, out_dir: Path, workers: int) -> Report:
    domain, params = single_case(config)
    run_config = config.template().config_for(domain, params)
    outcome = evolution_service.run(run_config)
    if outcome.kind != "quenched":
        raise InsufficientSpanError(f"lambda={params.lam:g}, delta={params.delta:g} does not quench: {outcome.kind}")

    fits = asymptotics_service.rate_fit_from_run(outcome)
    row = {
        "exponent": fits.fit.exponent,
        "amplitude": fits.fit.amplitude,
        "pinned_amplitude": fits.fit.pinned_amplitude,
        "residual": fits.fit.residual,
        "t_lo": fits.fit.window[0],
        "t_hi": fits.fit.window[1],
        "n_samples": fits.fit.n_samples,
        "T": fits.fit.T,
        "target_amplitude": fits.target_amplitude,
        "exponent_t_minus": fits.fit_t_minus.exponent,
        "exponent_t_plus": fits.fit_t_plus.exponent,
    }
    report_service.write_table([row], out_dir / "fit_rate.csv", columns=FIT_COLUMNS)
    report_service.write_table(evolution_service.one_side_rate(outcome), out_dir / "one_side_rate.csv")
    report_service.write_table(asymptotics_service.gradient_scaling(outcome), out_dir / "gradient_scaling.csv")
    files = ["fit_rate.csv", "one_side_rate.csv", "gradient_scaling.csv"]

    notes = []
    try:
        resampled = asymptotics_service.resample_run(run_config, outcome, config.similarity_levels)
        frame = asymptotics_service.similarity_frame(
            resampled.snapshots, outcome.quench_node, outcome.quench_time, params, config.window
        )
        energies = asymptotics_service.energy_series(frame)
        report_service.write_table(energies, out_dir / "energy.csv")
        files.append("energy.csv")
        monitor = asymptotics_service.condition_monitor(frame)
        notes.append(f"condition monitor integral {monitor:.6g} over s-range {frame.s_range:.3f}")
        notes.append(f"quench point classification: {asymptotics_service.classify_point(frame)}")

        # the node next to the boundary is a regular point
        edge = float(resampled.grid.nodes[-2])
        edge_frame = asymptotics_service.similarity_frame(
            resampled.snapshots, edge, outcome.quench_time, params, config.window
        )
        notes.append(f"near-boundary classification: {asymptotics_service.classify_point(edge_frame)}")
    except (InsufficientRangeError, DomainValueError) as e:
        logger.warning(f"Similarity diagnostics skipped: {e.detail}")
        notes.append(f"similarity diagnostics skipped: {e.detail}")

    print_table([row], FIT_COLUMNS)
    report = Report(
        command="fit-rate", config=echo(config), rows=[row], provenance=PROVENANCE, notes=notes, files=files
    )
    return finish(report, out_dir)


def _self_test_rows(config: ExperimentConfig):
    domain = config.domains()[0]
    params = Params(lam=config.lambdas[0], delta=config.deltas[0]) if config.lambdas and config.deltas else SELF_TEST_PARAMS
    coeffs = ExpansionCoeffs.build(T=1.0, params=params, n=domain.dim)
    grid = build_grid(domain, config.n_interior)
    t = 1.0 - 1e-3
    a = 0.0
    values = [asymptotics_service.local_zeta(abs(x - a), t, coeffs) for x in np.asarray(grid.nodes)]
    return asymptotics_service.compare_profile(grid.nodes, values, t, coeffs, a, config.r_window)


def cmd_compare_local(config: ExperimentConfig, out_dir: Path, workers: int) -> Report:
    notes = []
    if config.self_test:
        rows = _self_test_rows(config)
        notes.append("self-test: the numeric column is the expansion itself")
    else:
        domain, params = single_case(config)
        key = (domain.kind, params.delta, params.lam)
        if config.t_eval is not None and config.tau_eval is not None:
            raise ConfigError("[compare-local] takes t_eval or tau_eval, not both")
        run_config = config.template().config_for(domain, params)

        if config.t_eval is not None:
            t_eval = config.t_eval
            outcome = evolution_service.run(run_config.model_copy(update={"snapshot_times": [t_eval]}))
            if outcome.kind != "quenched" or t_eval >= outcome.quench_time:
                raise DomainValueError(
                    f"t_eval={t_eval:g} must precede the quench time of a quenched run ({outcome.kind})"
                )
            coeffs = ExpansionCoeffs.build(T=outcome.quench_time, params=params, n=domain.dim)
            rows = asymptotics_service.compare_local(outcome, coeffs, t_eval, config.r_window)
        else:
            tau_eval = config.tau_eval or reference.LOCAL_COMPARISON_TAUS.get(key)
            if tau_eval is None:
                raise ConfigError(
                    f"[compare-local] needs t_eval or tau_eval for {domain.kind} "
                    f"lambda={params.lam:g} delta={params.delta:g}"
                )
            outcome, coeffs, rows = asymptotics_service.compare_local_matched(run_config, tau_eval, config.r_window)
            t_eval = outcome.quench_time - tau_eval
            notes.append(f"evaluated at T - {tau_eval:.6g} = {t_eval:.6g} with T = {outcome.quench_time:.6g}")

        r_valid = coeffs.validity_radius(t_eval)
        inside = [row.rel_err for row in rows if row.inside_validity]
        notes.append(
            f"expansion valid for r <= {r_valid:.4g}; max relative error there {max(inside, default=math.nan):.6g}"
        )
        for exponent in (config.exponent, 1.0):
            residual = asymptotics_service.expansion_identity_residual(0.0, t_eval, coeffs, exponent)
            notes.append(f"identity residual with bracket exponent {exponent:.6g}: {residual:.3e}")

    dumped = [row.model_dump() for row in rows]
    report_service.write_table(dumped, out_dir / "compare_local.csv", columns=COMPARE_COLUMNS)
    worst = max((row.rel_err for row in rows), default=math.nan)
    notes.append(f"max relative error {worst:.6g}")
    print_table(dumped, COMPARE_COLUMNS)
    report = Report(
        command="compare-local", config=echo(config), rows=dumped, notes=notes, files=["compare_local.csv"]
    )
    return finish(report, out_dir)
