from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class ShootState(BaseModel):
    """A point (r, u, u') along a shooting trajectory"""

    model_config = ConfigDict(frozen=True)

    r: float
    u: float
    up: float

    @field_validator("u")
    @classmethod
    def validate_u(cls, v):
        if not v < 1.0:
            raise ValueError(f"u must stay below 1, got {v}")
        return v


class PullInResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    lambda_star: float
    alpha_star: float
    branch: List[Tuple[float, float]] = Field(default_factory=list)
    tolerance: float
    failed_alphas: List[float] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_fold(self):
        if not 0.0 < self.alpha_star < 1.0:
            raise ValueError(f"alpha_star must lie in (0, 1), got {self.alpha_star}")
        # the refined fold may only improve on the sampled maximum
        if self.branch and self.lambda_star < max(lam for _, lam in self.branch) - 1e-9:
            raise ValueError("lambda_star is below the sampled branch maximum")
        return self


class BoundsRow(BaseModel):
    """One (domain, delta) row of the bounds table"""

    domain: str
    delta: float
    lambda_l: float
    lambda_u1: float
    lambda_u1_max: float
    four_27_mu0: float
    table_lambda_l: Optional[float] = None
    table_lambda_u1: Optional[float] = None
    lambda_l_flag: bool = False
    lambda_u1_flag: bool = False


class PullInRow(BaseModel):
    domain: str
    delta: float
    lambda_star: Optional[float] = None
    alpha_star: Optional[float] = None
    bracket_width: Optional[float] = None
    error: Optional[str] = None
    branch: List[Tuple[float, float]] = Field(default_factory=list, exclude=True)


class ConvergenceRow(BaseModel):
    """One level of the shooting step-halving study"""

    level: int
    max_step: float
    lambda_star: float
    alpha_star: float
    change: Optional[float] = None
