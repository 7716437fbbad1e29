import math
from typing import Callable, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field as PydanticField, field_validator, model_validator


def _frozen_array(values) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.flags.writeable = False
    return array


class Params(BaseModel):
    """The (voltage, fringing coefficient) pair of every equation"""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    lam: float = PydanticField(..., alias="lambda", description="Applied voltage, dimensionless")
    delta: float = PydanticField(0.0, description="Fringing coefficient, dimensionless")

    @field_validator("lam")
    @classmethod
    def validate_lam(cls, v):
        if not math.isfinite(v) or v <= 0:
            raise ValueError(f"lambda must be positive and finite, got {v}")
        return v

    @field_validator("delta")
    @classmethod
    def validate_delta(cls, v):
        if not math.isfinite(v) or v < 0:
            raise ValueError(f"delta must be non-negative and finite, got {v}")
        return v

    def with_lambda(self, lam: float) -> "Params":
        return Params(lam=lam, delta=self.delta)

    @property
    def boundary_zeta(self) -> float:
        """zeta = 1/(3 lambda), the cubic transform of u = 0"""
        return 1.0 / (3.0 * self.lam)


class Domain(BaseModel):
    """Slab [-L, L] (dim 1) or radially symmetric ball of radius R (dim >= 2).

    ``size`` is the half-width for the slab and the radius for the disk.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["slab", "disk"]
    size: Optional[float] = None
    dim: Optional[int] = None

    @model_validator(mode="after")
    def fill_defaults(self):
        size = self.size if self.size is not None else (0.5 if self.kind == "slab" else 1.0)
        dim = self.dim if self.dim is not None else (1 if self.kind == "slab" else 2)
        if size <= 0 or not math.isfinite(size):
            raise ValueError(f"domain size must be positive, got {size}")
        if self.kind == "slab" and dim != 1:
            raise ValueError("a slab is one-dimensional")
        if self.kind == "disk" and dim < 2:
            raise ValueError("a radial disk needs dim >= 2")
        object.__setattr__(self, "size", float(size))
        object.__setattr__(self, "dim", int(dim))
        return self

    @classmethod
    def slab(cls, half_width: float = 0.5) -> "Domain":
        return cls(kind="slab", size=half_width)

    @classmethod
    def disk(cls, radius: float = 1.0, dim: int = 2) -> "Domain":
        return cls(kind="disk", size=radius, dim=dim)

    @property
    def extent(self) -> float:
        """Length covered by the grid: full slab width, or the disk radius"""
        return 2.0 * self.size if self.kind == "slab" else self.size

    @property
    def shooting_radius(self) -> float:
        """Center-to-boundary distance used by radial shooting"""
        return self.size


class Grid(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    domain: Domain
    n_interior: int
    h: float
    nodes: np.ndarray

    @field_validator("nodes", mode="before")
    @classmethod
    def freeze_nodes(cls, v):
        return _frozen_array(v)

    @model_validator(mode="after")
    def check_layout(self):
        if len(self.nodes) != self.n_interior + 2:
            raise ValueError("grid must hold n_interior + 2 nodes")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        return self

    @property
    def size(self) -> int:
        return len(self.nodes)


class Field(BaseModel):
    """Nodal values of zeta (or u) at one time level"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: Grid
    values: np.ndarray
    time: float = 0.0
    kind: Literal["zeta", "u"] = "zeta"

    @field_validator("values", mode="before")
    @classmethod
    def freeze_values(cls, v):
        return _frozen_array(v)

    @field_validator("time")
    @classmethod
    def validate_time(cls, v):
        if v < 0:
            raise ValueError(f"time must be non-negative, got {v}")
        return v

    @model_validator(mode="after")
    def check_length(self):
        if len(self.values) != len(self.grid.nodes):
            raise ValueError(
                f"field holds {len(self.values)} values for {len(self.grid.nodes)} nodes"
            )
        return self


class EigenPair(BaseModel):
    """Principal Dirichlet eigenpair with phi0 normalized to unit integral"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mu0: float
    phi0_at: Callable[[np.ndarray], np.ndarray]


class TorsionSolution(BaseModel):
    """Solution of -Laplace(xi) = 1 with zero boundary data"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    xi_at: Callable[[np.ndarray], np.ndarray]
    xi_sup: float
    lap_xi_sup: float = 1.0
