import asyncio
import logging
import math
from concurrent.futures import Executor, ProcessPoolExecutor
from typing import Callable, List, Optional, Sequence, Tuple

from app.core.config import settings
from app.core.errors import LabError
from app.schemas.core import Domain, Params
from app.schemas.evolution import QuenchTableRow, RunTemplate
from app.schemas.stationary import PullInRow
from app.services import evolution_service, stationary_service

logger = logging.getLogger(__name__)


# Cell functions live at module level so worker processes can unpickle them

def quench_cell(domain: Domain, delta: float, lam: float, template: RunTemplate) -> QuenchTableRow:
    try:
        return evolution_service.quench_row(domain, Params(lam=lam, delta=delta), template)
    except Exception as e:
        detail = e.detail if isinstance(e, LabError) else repr(e)
        logger.error(f"Quench cell delta={delta:g} lambda={lam:g} failed: {detail}")
        return QuenchTableRow(
            delta=delta,
            lam=lam,
            domain=domain.kind,
            n_interior=template.n_interior,
            dt=template.dt,
            outcome="error",
            t_ex=math.nan,
            lam_t_ex=math.nan,
            error=detail,
        )


def pull_in_cell(domain: Domain, delta: float, alpha_grid_size: int) -> PullInRow:
    try:
        result = stationary_service.pull_in(Params(lam=1.0, delta=delta), domain, alpha_grid_size)
        return PullInRow(
            domain=domain.kind,
            delta=delta,
            lambda_star=result.lambda_star,
            alpha_star=result.alpha_star,
            bracket_width=result.tolerance,
            branch=result.branch,
        )
    except Exception as e:
        detail = e.detail if isinstance(e, LabError) else repr(e)
        logger.error(f"Pull-in cell delta={delta:g} failed: {detail}")
        return PullInRow(domain=domain.kind, delta=delta, error=detail)


class SweepService:
    """Runs independent cells on a bounded process pool, returning rows in key order"""

    def __init__(self, workers: Optional[int] = None):
        self.workers = workers or settings.WORKERS

    async def _dispatch(self, fn: Callable, cells: Sequence[Tuple]) -> list:
        if self.workers == 1 or len(cells) <= 1:
            return [fn(*cell) for cell in cells]

        loop = asyncio.get_running_loop()
        with ProcessPoolExecutor(max_workers=min(self.workers, len(cells))) as pool:
            return await self._gather(loop, pool, fn, cells)

    async def _gather(self, loop, pool: Executor, fn: Callable, cells: Sequence[Tuple]) -> list:
        tasks = [loop.run_in_executor(pool, fn, *cell) for cell in cells]
        # results come back in submission order, whatever order the workers finish in
        return list(await asyncio.gather(*tasks))

    async def quench_sweep(
        self, domain: Domain, deltas: List[float], lambdas: List[float], template: RunTemplate
    ) -> List[QuenchTableRow]:
        cells = [(domain, delta, lam, template) for delta in sorted(deltas) for lam in sorted(lambdas)]
        logger.info(f"Quench sweep on the {domain.kind}: {len(cells)} cells, {self.workers} workers")
        return await self._dispatch(quench_cell, cells)

    async def pull_in_sweep(self, domain: Domain, deltas: List[float], alpha_grid_size: int) -> List[PullInRow]:
        cells = [(domain, delta, alpha_grid_size) for delta in sorted(deltas)]
        logger.info(f"Pull-in sweep on the {domain.kind}: {len(cells)} cells, {self.workers} workers")
        return await self._dispatch(pull_in_cell, cells)
