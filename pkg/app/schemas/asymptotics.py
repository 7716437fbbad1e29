import math
from typing import List, Literal, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.errors import DomainValueError
from app.schemas.core import Params, _frozen_array

PointClass = Literal["quench_candidate", "non_quench"]


class FrameLevel(BaseModel):
    """Similarity variables of one time level restricted to |x - a| <= C sqrt(T - t)"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    t: float
    s: float
    x: np.ndarray
    y: np.ndarray
    w: np.ndarray

    @field_validator("x", "y", "w", mode="before")
    @classmethod
    def freeze(cls, v):
        return _frozen_array(v)

    @model_validator(mode="after")
    def check_level(self):
        if not (len(self.x) == len(self.y) == len(self.w)):
            raise ValueError("frame columns must have equal length")
        if np.any(self.w <= 0):
            raise ValueError("w must be positive at every stored node")
        return self


class SimilarityFrame(BaseModel):
    model_config = ConfigDict(frozen=True)

    a: float
    T: float
    params: Params
    dim: int = 1
    window: float = 5.0
    levels: List[FrameLevel] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_order(self):
        s_values = [level.s for level in self.levels]
        if any(b <= a for a, b in zip(s_values, s_values[1:])):
            raise ValueError("s must be strictly increasing across levels")
        return self

    @property
    def samples(self) -> List[Tuple[float, float, float]]:
        """Flat (y, s, w) triples over every stored level"""
        return [
            (float(y), level.s, float(w))
            for level in self.levels
            for y, w in zip(level.y, level.w)
        ]

    @property
    def s_range(self) -> float:
        if len(self.levels) < 2:
            return 0.0
        return self.levels[-1].s - self.levels[0].s

    def __len__(self) -> int:
        return len(self.levels)


class RateFit(BaseModel):
    model_config = ConfigDict(frozen=True)

    exponent: float
    amplitude: float
    pinned_amplitude: float = Field(..., description="Amplitude with the exponent held at pinned_exponent")
    pinned_exponent: float = 1.0 / 3.0
    window: Tuple[float, float]
    residual: float
    n_samples: int
    T: float

    @model_validator(mode="after")
    def check_window(self):
        t_lo, t_hi = self.window
        if not 0.0 < t_lo < t_hi < self.T:
            raise ValueError(f"fit window {self.window} must lie strictly inside (0, {self.T})")
        if not math.isfinite(self.residual):
            raise ValueError("fit residual must be finite")
        return self


class ExpansionCoeffs(BaseModel):
    """Determined coefficients of the local expansion near the quench point.

    zeta2 multiplies r^2/(T-t)^(2/3) in zeta/(T-t); zeta0 multiplies (T-t)^(1/3).
    """

    model_config = ConfigDict(frozen=True)

    T: float
    params: Params
    n: int = 1

    @model_validator(mode="after")
    def check_delta(self):
        if self.params.delta <= 0:
            raise ValueError("expansion coefficients need delta > 0")
        return self

    @classmethod
    def build(cls, T: float, params: Params, n: int = 1) -> "ExpansionCoeffs":
        if params.delta <= 0:
            raise DomainValueError("expansion coefficients diverge at delta = 0")
        return cls(T=T, params=params, n=n)

    @property
    def scale(self) -> float:
        return self.params.delta * self.params.lam ** (2.0 / 3.0)

    @property
    def zeta2(self) -> float:
        return 3.0 ** (1.0 / 3.0) / (2.0 * self.scale)

    @property
    def zeta0(self) -> float:
        return -(3.0 ** (4.0 / 3.0)) * self.n / (8.0 * self.scale)

    def validity_radius(self, t: float) -> float:
        """r at which the r^2 term of the bracket reaches 1"""
        tau = self.T - t
        if tau <= 0:
            raise DomainValueError(f"validity radius needs t < T, got t={t:g}, T={self.T:g}")
        return tau ** (1.0 / 3.0) * math.sqrt(2.0 / self.zeta2)


class EnergyReport(BaseModel):
    s: float
    energy: float
    gradient_term: float
    mass_term: float
    singular_term: float
    ball_radius: float
    covered_mass_fraction: float
    n_nodes: int


class ComparisonRow(BaseModel):
    r: float
    zeta_numeric: float
    zeta_local: float
    abs_err: float
    rel_err: float
    inside_validity: bool = True


class RateFitReport(BaseModel):
    """A rate fit plus its sensitivity to the quench time estimate"""

    fit: RateFit
    fit_t_minus: RateFit
    fit_t_plus: RateFit
    target_amplitude: float
