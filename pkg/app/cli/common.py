import logging
import sys
from pathlib import Path
from typing import List

import pandas as pd

from app.core.errors import ConfigError
from app.schemas.core import Domain, Params
from app.schemas.experiment import ExperimentConfig, Report
from app.services import report_service

logger = logging.getLogger(__name__)

PROVENANCE = {
    "time_scheme": "forward Euler, first order",
    "space_scheme": "centered differences, second order",
    "t_ex_interpolation": "linear between the last two steps",
    "stop_rule": "min zeta < stop_tol (quench) or max step change < stop_tol (steady)",
}


def single_case(config: ExperimentConfig) -> tuple:
    """The (domain, params) of a command that needs exactly one run"""
    if len(config.domain) != 1 or len(config.lambdas) != 1 or len(config.deltas) != 1:
        raise ConfigError(
            f"[{config.command}] needs exactly one domain, one lambda and one delta; got "
            f"domain={config.domain}, lambda={config.lambdas}, delta={config.deltas}"
        )
    domain: Domain = config.domains()[0]
    return domain, Params(lam=config.lambdas[0], delta=config.deltas[0])


def echo(config: ExperimentConfig) -> dict:
    """Config as written to report.json; the output directory stays out so reports compare across runs"""
    return config.model_dump(exclude={"output_dir"})


def print_table(rows: List[dict], columns: List[str]):
    if not rows:
        print("(no rows)")
        return
    frame = pd.DataFrame(rows).reindex(columns=columns)
    print(frame.to_string(index=False, float_format=lambda v: f"{v:.9g}"))


def finish(report: Report, out_dir: Path) -> Report:
    path = report_service.write_json(report, Path(out_dir) / "report.json", exclude={"wall_clock"})
    report.files.append(path.name)
    sys.stdout.flush()
    return report
