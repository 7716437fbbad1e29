from pathlib import Path

from app.cli.common import PROVENANCE, echo, finish, print_table, single_case
from app.core import reference
from app.schemas.experiment import ExperimentConfig, Report
from app.services import evolution_service, report_service
from app.utils.helpers import run_label

COLUMNS = [
    "delta",
    "lambda",
    "domain",
    "n_interior",
    "dt",
    "outcome",
    "t_ex",
    "t_ex_interpolated",
    "lam_t_ex",
    "quench_node",
    "centre_quench",
    "steps",
]


def register(subparsers, parents):
    parser = subparsers.add_parser(
        "evolve", parents=parents, help="Time-step one (lambda, delta) case and write profile snapshots"
    )
    parser.set_defaults(handler=cmd_evolve)


def cmd_evolve(config: ExperimentConfig, out_dir: Path, workers: int) -> Report:
    domain, params = single_case(config)
    # the stability guard runs here, before any step is taken
    run_config = config.template().config_for(domain, params, config.snapshot_times)
    outcome = evolution_service.run(run_config)

    stem = run_label(domain.kind, params.lam, params.delta)
    profiles = evolution_service.write_snapshots(outcome, out_dir, stem)
    record = evolution_service.run_record(outcome)
    evolution_service.write_run_record(outcome, out_dir / "run.csv")
    files = ["run.csv"] + [path.name for path in profiles]

    if config.mesh_levels > 0:
        study = evolution_service.mesh_study(run_config, config.mesh_levels)
        report_service.write_table(study, out_dir / "mesh_study.csv")
        files.append("mesh_study.csv")

    print_table([record], COLUMNS)
    notes = []
    published = reference.QUENCH_TABLE.get((domain.kind, params.delta, params.lam))
    if published is not None:
        notes.append(f"published quench time {published}")
    report = Report(
        command="evolve",
        config=echo(config),
        rows=[record],
        provenance=PROVENANCE,
        notes=notes,
        files=files,
    )
    return finish(report, out_dir)
