from pathlib import Path

from app.cli.common import echo, finish, print_table
from app.schemas.experiment import ExperimentConfig, Report
from app.services import report_service, stationary_service

COLUMNS = [
    "domain",
    "delta",
    "lambda_l",
    "lambda_u1",
    "lambda_u1_max",
    "four_27_mu0",
    "table_lambda_l",
    "table_lambda_u1",
    "lambda_l_flag",
    "lambda_u1_flag",
]


def register(subparsers, parents):
    parser = subparsers.add_parser(
        "bounds", parents=parents, help="Closed-form pull-in bounds against the published table"
    )
    parser.set_defaults(handler=cmd_bounds)


def cmd_bounds(config: ExperimentConfig, out_dir: Path, workers: int) -> Report:
    rows = []
    for domain in config.domains():
        rows.extend(row.model_dump() for row in stationary_service.bounds_table(domain, config.deltas))

    report_service.write_table(rows, out_dir / "bounds.csv", columns=COLUMNS)
    print_table(rows, COLUMNS)
    notes = [
        "lambda_l and lambda_u1 follow their closed forms; flags mark cells that differ from the published table",
        "the disk torsion sup is the analytic R^2/(2n)",
    ]
    report = Report(command="bounds", config=echo(config), rows=rows, notes=notes, files=["bounds.csv"])
    return finish(report, out_dir)
