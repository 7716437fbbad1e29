import math
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field as PydanticField, field_validator, model_validator

from app.core.config import settings
from app.core.errors import StabilityError
from app.core.geometry import build_grid, stable_dt_limit
from app.schemas.core import Field, Grid, Params, _frozen_array

OutcomeKind = Literal["quenched", "steady", "budget_exceeded"]


class RunConfig(BaseModel):
    """Everything one explicit time-stepping run needs"""

    model_config = ConfigDict(frozen=True)

    params: Params
    grid: Grid
    dt: float = PydanticField(default_factory=lambda: settings.TIME_STEP)
    stop_tol: float = PydanticField(default_factory=lambda: settings.STOP_TOL)
    max_steps: int = PydanticField(default_factory=lambda: settings.MAX_STEPS)
    snapshot_times: List[float] = PydanticField(default_factory=list)
    trace_every: int = PydanticField(50, description="Record the run trace every k steps")

    @field_validator("dt")
    @classmethod
    def validate_dt(cls, v):
        if not math.isfinite(v) or v <= 0:
            raise ValueError(f"dt must be positive, got {v}")
        return v

    @field_validator("stop_tol")
    @classmethod
    def validate_stop_tol(cls, v):
        if not 0 < v <= 1e-6:
            raise ValueError(f"stop_tol must lie in (0, 1e-6], got {v}")
        return v

    @field_validator("max_steps", "trace_every")
    @classmethod
    def validate_positive(cls, v):
        if v < 1:
            raise ValueError(f"must be at least 1, got {v}")
        return v

    @field_validator("snapshot_times")
    @classmethod
    def validate_snapshot_times(cls, v):
        if any(t < 0 for t in v):
            raise ValueError("snapshot times must be non-negative")
        return sorted(v)

    @model_validator(mode="after")
    def check_stability(self):
        limit = stable_dt_limit(self.grid)
        if self.dt >= limit:
            raise StabilityError(
                f"dt={self.dt:g} violates the explicit stability limit {limit:g} "
                f"(h={self.grid.h:g}, {self.grid.domain.kind})"
            )
        return self


class RunTemplate(BaseModel):
    """Discretization shared by every cell of a sweep"""

    model_config = ConfigDict(frozen=True)

    n_interior: int = PydanticField(default_factory=lambda: settings.GRID_SIZE)
    dt: float = PydanticField(default_factory=lambda: settings.TIME_STEP)
    stop_tol: float = PydanticField(default_factory=lambda: settings.STOP_TOL)
    max_steps: int = PydanticField(default_factory=lambda: settings.MAX_STEPS)
    trace_every: int = 50

    def config_for(self, domain, params: Params, snapshot_times: Optional[List[float]] = None) -> RunConfig:
        return RunConfig(
            params=params,
            grid=build_grid(domain, self.n_interior),
            dt=self.dt,
            stop_tol=self.stop_tol,
            max_steps=self.max_steps,
            snapshot_times=snapshot_times or [],
            trace_every=self.trace_every,
        )


class RunTrace(BaseModel):
    """Time series sampled along a run: min zeta, where it sits, and max |grad u|"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    t: np.ndarray
    min_zeta: np.ndarray
    argmin_node: np.ndarray
    max_grad_u: np.ndarray

    @field_validator("t", "min_zeta", "argmin_node", "max_grad_u", mode="before")
    @classmethod
    def freeze(cls, v):
        return _frozen_array(v)

    @model_validator(mode="after")
    def check_lengths(self):
        n = len(self.t)
        if not (len(self.min_zeta) == len(self.argmin_node) == len(self.max_grad_u) == n):
            raise ValueError("trace columns must have equal length")
        return self

    def __len__(self) -> int:
        return len(self.t)


class QuenchOutcome(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: OutcomeKind
    params: Params
    dt: float
    stop_tol: float
    steps: int
    t_ex: Optional[float] = None
    t_ex_interpolated: Optional[float] = None
    quench_node: Optional[float] = None
    centre_quench: Optional[bool] = PydanticField(None, description="Quench within two cells of the symmetry centre")
    last_change: float = math.inf
    final_field: Field
    snapshots: List[Field] = PydanticField(default_factory=list)
    trace: RunTrace

    @model_validator(mode="after")
    def check_kind(self):
        if self.kind == "quenched":
            if self.t_ex is None or self.quench_node is None:
                raise ValueError("a quenched outcome needs t_ex and quench_node")
            if float(np.min(self.final_field.values)) >= self.stop_tol:
                raise ValueError("a quenched outcome must end below stop_tol")
        elif self.kind == "steady":
            if self.t_ex is None:
                raise ValueError("a steady outcome needs t_ex")
            if not self.last_change < self.stop_tol:
                raise ValueError("a steady outcome must end with a change below stop_tol")
        return self

    @property
    def grid(self) -> Grid:
        return self.final_field.grid

    @property
    def quench_time(self) -> Optional[float]:
        """Interpolated crossing time when available, else the step-count time"""
        if self.t_ex_interpolated is not None:
            return self.t_ex_interpolated
        return self.t_ex


class QuenchTableRow(BaseModel):
    """One (delta, lambda) cell of a quench-time sweep"""

    delta: float
    lam: float = PydanticField(..., alias="lambda")
    domain: str
    n_interior: int
    dt: float
    outcome: str
    t_ex: float
    lam_t_ex: float
    quench_node: Optional[float] = None
    centre_quench: Optional[bool] = None
    error: Optional[str] = None

    model_config = ConfigDict(populate_by_name=True)
