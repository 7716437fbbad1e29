import asyncio
from pathlib import Path

from app.cli.common import echo, finish, print_table
from app.core import reference
from app.schemas.core import Params
from app.schemas.experiment import ExperimentConfig, Report
from app.services import report_service, stationary_service
from app.services.sweep_service import SweepService
from app.utils.helpers import format_float, generate_slug

COLUMNS = ["domain", "delta", "lambda_star", "alpha_star", "bracket_width", "table_lambda_star", "error"]


def register(subparsers, parents):
    parser = subparsers.add_parser("pullin", parents=parents, help="Pull-in voltage by shooting, per delta")
    parser.set_defaults(handler=cmd_pullin)


def cmd_pullin(config: ExperimentConfig, out_dir: Path, workers: int) -> Report:
    service = SweepService(workers)
    rows, files = [], ["pullin.csv"]
    for domain in config.domains():
        results = asyncio.run(service.pull_in_sweep(domain, config.deltas, config.alpha_grid_size))
        for result in results:
            row = result.model_dump()
            row["table_lambda_star"] = reference.PULL_IN_TABLE.get((domain.kind, float(result.delta)))
            rows.append(row)
            if config.branch and result.branch:
                name = generate_slug(f"branch_{domain.kind}_d{format_float(result.delta, 6)}") + ".csv"
                branch = [{"alpha": a, "lambda": lam} for a, lam in result.branch]
                report_service.write_table(branch, out_dir / name, columns=["alpha", "lambda"])
                files.append(name)

        if config.convergence_levels > 0:
            for delta in sorted(config.deltas):
                study = stationary_service.convergence_study(
                    Params(lam=1.0, delta=delta), domain, config.convergence_levels, config.alpha_grid_size
                )
                name = generate_slug(f"convergence_{domain.kind}_d{format_float(delta, 6)}") + ".csv"
                report_service.write_table(study, out_dir / name)
                files.append(name)

    report_service.write_table(rows, out_dir / "pullin.csv", columns=COLUMNS)
    print_table(rows, COLUMNS)
    report = Report(command="pullin", config=echo(config), rows=rows, files=files)
    return finish(report, out_dir)
