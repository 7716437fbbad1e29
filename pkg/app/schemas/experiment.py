from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.core.config import settings
from app.schemas.core import Domain
from app.schemas.evolution import RunTemplate

COMMANDS = ("bounds", "pullin", "evolve", "sweep-quench", "fit-rate", "compare-local")


def _split_list(value):
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class ExperimentConfig(BaseModel):
    """One command's experiment, merged from the [common] and command sections"""

    model_config = ConfigDict(extra="forbid")

    command: str
    domain: List[str] = Field(default_factory=lambda: ["slab"])
    size: Optional[float] = None
    dim: Optional[int] = None
    n_interior: int = Field(default_factory=lambda: settings.GRID_SIZE)
    dt: float = Field(default_factory=lambda: settings.TIME_STEP)
    stop_tol: float = Field(default_factory=lambda: settings.STOP_TOL)
    max_steps: int = Field(default_factory=lambda: settings.MAX_STEPS)
    trace_every: int = 50
    lambdas: List[float] = Field(default_factory=list)
    deltas: List[float] = Field(default_factory=list)
    snapshot_times: List[float] = Field(default_factory=lambda: list(settings.DEFAULT_SNAPSHOT_TIMES))
    output_dir: str = Field(default_factory=lambda: settings.OUTPUT_DIR)

    # command-specific options
    alpha_grid_size: int = Field(default_factory=lambda: settings.ALPHA_GRID_SIZE)
    branch: bool = False
    convergence_levels: int = 0
    mesh_levels: int = 0
    window: float = 5.0
    r_window: float = 0.1
    t_eval: Optional[float] = None
    tau_eval: Optional[float] = None
    self_test: bool = False
    exponent: float = 1.0 / 3.0
    similarity_levels: int = 16

    @field_validator("command")
    @classmethod
    def validate_command(cls, v):
        if v not in COMMANDS:
            raise ValueError(f"unknown command {v!r}; expected one of {', '.join(COMMANDS)}")
        return v

    @field_validator("domain", "lambdas", "deltas", "snapshot_times", mode="before")
    @classmethod
    def split_lists(cls, v):
        return _split_list(v)

    @field_validator("domain")
    @classmethod
    def validate_domain(cls, v):
        for kind in v:
            if kind not in ("slab", "disk"):
                raise ValueError(f"domain must be slab or disk, got {kind!r}")
        return v

    @field_validator("n_interior")
    @classmethod
    def validate_n_interior(cls, v):
        if v < 4:
            raise ValueError(f"n_interior must be at least 4, got {v}")
        return v

    @field_validator("dt", "window", "r_window")
    @classmethod
    def validate_positive(cls, v):
        if v <= 0:
            raise ValueError(f"must be positive, got {v}")
        return v

    @field_validator("t_eval", "tau_eval")
    @classmethod
    def validate_optional_positive(cls, v):
        if v is not None and v <= 0:
            raise ValueError(f"must be positive, got {v}")
        return v

    @field_validator("stop_tol")
    @classmethod
    def validate_stop_tol(cls, v):
        if not 0 < v <= 1e-6:
            raise ValueError(f"stop_tol must lie in (0, 1e-6], got {v}")
        return v

    def domains(self) -> List[Domain]:
        return [Domain(kind=kind, size=self.size, dim=self.dim) for kind in self.domain]

    def template(self) -> RunTemplate:
        return RunTemplate(
            n_interior=self.n_interior,
            dt=self.dt,
            stop_tol=self.stop_tol,
            max_steps=self.max_steps,
            trace_every=self.trace_every,
        )


class Report(BaseModel):
    """What a command produced; wall_clock is logged but never written"""

    command: str
    config: Dict[str, Any]
    rows: List[Dict[str, Any]] = Field(default_factory=list)
    provenance: Dict[str, Any] = Field(default_factory=dict)
    notes: List[str] = Field(default_factory=list)
    files: List[str] = Field(default_factory=list)
    wall_clock: float = 0.0
