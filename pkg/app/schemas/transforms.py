from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.schemas.core import Params


class TransformContext(BaseModel):
    """Parameters plus the tolerances used by the exp-transform and its inverse"""

    model_config = ConfigDict(frozen=True)

    params: Params
    quadrature_tol: float = Field(1e-12, description="Relative tolerance of the adaptive quadrature")
    root_tol: float = Field(1e-12, description="Tolerance of the inverse root-finder")

    @field_validator("quadrature_tol", "root_tol")
    @classmethod
    def validate_tolerance(cls, v):
        if not 0 < v <= 1e-6:
            raise ValueError(f"tolerance must lie in (0, 1e-6], got {v}")
        return v

    @property
    def lam_delta(self) -> float:
        return self.params.lam * self.params.delta
