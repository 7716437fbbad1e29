import asyncio
from pathlib import Path

from app.cli.common import PROVENANCE, echo, finish, print_table
from app.core import reference
from app.schemas.experiment import ExperimentConfig, Report
from app.services import report_service
from app.services.sweep_service import SweepService

COLUMNS = [
    "delta",
    "lambda",
    "domain",
    "n_interior",
    "dt",
    "outcome",
    "t_ex",
    "lam_t_ex",
    "quench_node",
    "centre_quench",
    "table_t_ex",
    "error",
]


def register(subparsers, parents):
    parser = subparsers.add_parser(
        "sweep-quench", parents=parents, help="Quench-time table over a (delta, lambda) grid"
    )
    parser.set_defaults(handler=cmd_sweep_quench)


def cmd_sweep_quench(config: ExperimentConfig, out_dir: Path, workers: int) -> Report:
    service = SweepService(workers)
    template = config.template()
    rows, files = [], []
    for domain in config.domains():
        results = asyncio.run(service.quench_sweep(domain, config.deltas, config.lambdas, template))
        domain_rows = []
        for result in results:
            row = result.model_dump(by_alias=True)
            row["table_t_ex"] = reference.QUENCH_TABLE.get((domain.kind, float(result.delta), float(result.lam)))
            domain_rows.append(row)
        name = f"quench_{domain.kind}.csv"
        report_service.write_table(domain_rows, out_dir / name, columns=COLUMNS)
        files.append(name)
        rows.extend(domain_rows)

    print_table(rows, COLUMNS)
    report = Report(command="sweep-quench", config=echo(config), rows=rows, provenance=PROVENANCE, files=files)
    return finish(report, out_dir)
