"""Domain geometry shared by every service: grids, principal eigenpairs,
torsion functions and the Bessel evaluations they need.

Only the slab [-L, L] and the radially symmetric ball are discretized.
"""
from functools import lru_cache

import numpy as np
from scipy import special
from scipy.integrate import simpson
from scipy.optimize import bisect

from app.core.errors import DomainValueError
from app.schemas.core import Domain, EigenPair, Grid, TorsionSolution

BESSEL_MAX_ARGUMENT = 50.0


def build_grid(domain: Domain, n_interior: int) -> Grid:
    """Uniform node layout including both endpoints.

    Slab nodes span [-L, L]; radial nodes span [0, R] with the origin first.
    """
    if n_interior < 4:
        raise DomainValueError(f"n_interior must be at least 4, got {n_interior}")
    h = domain.extent / (n_interior + 1)
    if domain.kind == "slab":
        nodes = np.linspace(-domain.size, domain.size, n_interior + 2)
    else:
        nodes = np.linspace(0.0, domain.size, n_interior + 2)
    return Grid(domain=domain, n_interior=n_interior, h=h, nodes=nodes)


def stable_dt_limit(grid: Grid) -> float:
    """Largest explicit time step: h^2/4 on the slab, h^2/(2n) on radial grids"""
    if grid.domain.kind == "slab":
        return grid.h ** 2 / 4.0
    return grid.h ** 2 / (2.0 * grid.domain.dim)


def bessel_j(order: int, x: float) -> float:
    """J0 or J1 for |x| <= 50"""
    if order not in (0, 1):
        raise DomainValueError(f"Bessel order must be 0 or 1, got {order}")
    if not abs(x) <= BESSEL_MAX_ARGUMENT:
        raise DomainValueError(f"Bessel argument must satisfy |x| <= {BESSEL_MAX_ARGUMENT}, got {x}")
    return float(special.j0(x) if order == 0 else special.j1(x))


@lru_cache(maxsize=1)
def first_bessel_zero() -> float:
    """z0, the first positive zero of J0, bracketed in [2, 3]"""
    return float(bisect(special.j0, 2.0, 3.0, xtol=1e-13))


def eigenpair(domain: Domain) -> EigenPair:
    """Principal Dirichlet eigenpair of -Laplace with unit-integral phi0"""
    if domain.kind == "slab":
        half = domain.size
        mu0 = (np.pi / (2.0 * half)) ** 2
        amplitude = np.pi / (4.0 * half)

        def phi0_at(x):
            return amplitude * np.sin(np.pi * (np.asarray(x) + half) / (2.0 * half))

        return EigenPair(mu0=float(mu0), phi0_at=phi0_at)

    if domain.dim != 2:
        raise DomainValueError(f"eigenpair is only available for the 2D disk, got dim={domain.dim}")

    radius = domain.size
    z0 = first_bessel_zero()
    mu0 = (z0 / radius) ** 2
    # J0(z0 r / R) integrates to R^2 J1(z0) 2 pi / z0 over the disk
    amplitude = z0 / (2.0 * np.pi * radius ** 2 * special.j1(z0))

    def phi0_at(r):
        return amplitude * special.j0(z0 * np.asarray(r) / radius)

    return EigenPair(mu0=float(mu0), phi0_at=phi0_at)


def torsion(domain: Domain) -> TorsionSolution:
    """Closed-form xi with -Laplace(xi) = 1, xi = 0 on the boundary"""
    if domain.kind == "slab":
        half = domain.size

        def xi_at(x):
            return (half ** 2 - np.asarray(x) ** 2) / 2.0

        return TorsionSolution(xi_at=xi_at, xi_sup=half ** 2 / 2.0)

    radius, n = domain.size, domain.dim

    def xi_at(r):
        return (radius ** 2 - np.asarray(r) ** 2) / (2.0 * n)

    return TorsionSolution(xi_at=xi_at, xi_sup=radius ** 2 / (2.0 * n))


def integrate_over_domain(grid: Grid, values: np.ndarray) -> float:
    """Composite Simpson of nodal values over the domain (radial measure for disks)"""
    values = np.asarray(values, dtype=float)
    if grid.domain.kind == "slab":
        return float(simpson(values, x=grid.nodes))
    n = grid.domain.dim
    # surface area of the unit sphere in R^n
    sphere = 2.0 * np.pi ** (n / 2.0) / special.gamma(n / 2.0)
    return float(sphere * simpson(values * grid.nodes ** (n - 1), x=grid.nodes))


def quadrature_phi0(domain: Domain, n_interior: int = 2000) -> float:
    """Integral of phi0 over the domain; equals 1 up to quadrature error"""
    grid = build_grid(domain, n_interior)
    return integrate_over_domain(grid, eigenpair(domain).phi0_at(grid.nodes))
