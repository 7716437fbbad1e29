"""Changes of variable used throughout the lab.

The exp-transform v = int_0^u exp(lambda*delta/(1-s)) ds removes the fringing
gradient term; the cubic transform zeta = (1-u)^3/(3*lambda) maps the quench
value u = 1 to zeta = 0 and is the variable the time steppers work in.
"""
import logging
import math
from typing import Union

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from app.core.errors import DomainValueError
from app.schemas.core import Params
from app.schemas.transforms import TransformContext

logger = logging.getLogger(__name__)

SINGULAR_GUARD = 1e-12
LOG_DOUBLE_MAX = math.log(np.finfo(float).max)

ParamsLike = Union[Params, TransformContext]


def _context(params: ParamsLike) -> TransformContext:
    if isinstance(params, TransformContext):
        return params
    return TransformContext(params=params)


def _unwrap(value):
    array = np.asarray(value, dtype=float)
    return float(array) if array.ndim == 0 else array


# Cubic transform

def cubic_of_u(u, params: Params):
    """(1-u)^3/(3 lambda); accepts scalars or arrays"""
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr < 0.0) or np.any(u_arr > 1.0):
        raise DomainValueError(f"u must lie in [0, 1], got {u}")
    return _unwrap((1.0 - u_arr) ** 3 / (3.0 * params.lam))


def u_of_cubic(zeta, params: Params):
    """1 - (3 lambda zeta)^(1/3), the inverse of cubic_of_u"""
    zeta_arr = np.asarray(zeta, dtype=float)
    ceiling = params.boundary_zeta * (1.0 + 1e-12)
    if np.any(zeta_arr < 0.0) or np.any(zeta_arr > ceiling):
        raise DomainValueError(f"zeta must lie in [0, 1/(3 lambda)] = [0, {params.boundary_zeta:g}], got {zeta}")
    # values within rounding of the boundary level map to u = 0 exactly
    zeta_arr = np.minimum(zeta_arr, params.boundary_zeta)
    return _unwrap(1.0 - np.cbrt(3.0 * params.lam * zeta_arr))


# Exp-transform

def _checked_exp(exponent: float, what: str) -> float:
    if exponent > LOG_DOUBLE_MAX:
        raise DomainValueError(f"{what} = exp({exponent:.6g}) exceeds double range")
    return math.exp(exponent)


def xi_of_u(u: float, params: Params) -> float:
    """exp(lambda delta/(1-u))/(1-u)^2"""
    if not 0.0 <= u < 1.0:
        raise DomainValueError(f"u must lie in [0, 1), got {u}")
    lam_delta = params.lam * params.delta
    return _checked_exp(lam_delta / (1.0 - u), "xi") / (1.0 - u) ** 2


def _check_u(u: float):
    if u < 0.0 or u > 1.0 - SINGULAR_GUARD:
        raise DomainValueError(f"exp_transform needs 0 <= u <= 1 - {SINGULAR_GUARD:g}, got {u}")


def log_exp_transform(u: float, params: ParamsLike) -> float:
    """log of the exp-transform, finite wherever u > 0 even when the transform itself overflows"""
    ctx = _context(params)
    _check_u(u)
    if u == 0.0:
        return -math.inf
    lam_delta = ctx.lam_delta
    if lam_delta == 0.0:
        return math.log(u)
    top = lam_delta / (1.0 - u)
    # the integrand is concentrated in a layer of width (1-u)^2/(lambda delta) below u
    layer = u - (1.0 - u) ** 2 / lam_delta
    value, _ = quad(
        lambda s: math.exp(lam_delta / (1.0 - s) - top),
        0.0,
        u,
        epsabs=0.0,
        epsrel=ctx.quadrature_tol,
        limit=200,
        points=[layer] if 0.0 < layer < u else None,
    )
    return top + math.log(value)


def exp_transform(u: float, params: ParamsLike) -> float:
    ctx = _context(params)
    _check_u(u)
    if u == 0.0:
        return 0.0
    if ctx.lam_delta == 0.0:
        return float(u)
    return _checked_exp(log_exp_transform(u, ctx), f"exp_transform({u:g})")


def _upper_bracket(log_v: float, ctx: TransformContext) -> float:
    """Smallest u of the ladder 1 - 10^-k whose transform reaches exp(log_v)"""
    u_hi = 0.5
    while log_exp_transform(u_hi, ctx) < log_v:
        candidate = 1.0 - (1.0 - u_hi) / 10.0
        if candidate > 1.0 - SINGULAR_GUARD:
            raise DomainValueError(
                f"v=exp({log_v:.6g}) lies beyond the transform of u = 1 - {SINGULAR_GUARD:g} "
                f"(lambda*delta={ctx.lam_delta:g})"
            )
        u_hi = candidate
    return u_hi


def u_of_exp(v: float, params: ParamsLike) -> float:
    """The unique u in [0, 1) with exp_transform(u) = v"""
    ctx = _context(params)
    if v < 0.0 or not math.isfinite(v):
        raise DomainValueError(f"v must be finite and non-negative, got {v}")
    if v == 0.0:
        return 0.0
    if ctx.lam_delta == 0.0:
        if v > 1.0 - SINGULAR_GUARD:
            raise DomainValueError(f"without fringing the transform only reaches v < 1, got {v}")
        return float(v)

    log_v = math.log(v)
    u_hi = _upper_bracket(log_v, ctx)
    # exp_transform(u) >= u exp(lambda delta)
    bound = math.exp(log_v - ctx.lam_delta)
    if bound == 0.0:
        raise DomainValueError(f"u_of_exp({v:g}) underflows for lambda*delta={ctx.lam_delta:g}")
    u_hi = min(u_hi, bound)

    def residual(u: float) -> float:
        return log_exp_transform(u, ctx) - log_v

    if residual(u_hi) <= 0.0:
        return u_hi
    u_lo = 0.5 * u_hi
    while residual(u_lo) > 0.0:
        u_lo *= 0.5
    return float(brentq(residual, u_lo, u_hi, xtol=ctx.root_tol * u_hi, rtol=4 * np.finfo(float).eps))


# rho = xi o (exp-transform)^-1 and its derivatives

def rho(v: float, params: ParamsLike) -> float:
    ctx = _context(params)
    u = u_of_exp(v, ctx)
    return _checked_exp(ctx.lam_delta / (1.0 - u), "rho") / (1.0 - u) ** 2


def rho_prime(v: float, params: ParamsLike) -> float:
    ctx = _context(params)
    u = u_of_exp(v, ctx)
    return (2.0 + ctx.lam_delta / (1.0 - u)) / (1.0 - u) ** 3


def rho_second(v: float, params: ParamsLike) -> float:
    ctx = _context(params)
    u = u_of_exp(v, ctx)
    gap = 1.0 - u
    return 2.0 / gap ** 4 * math.exp(-ctx.lam_delta / gap) * (3.0 + 2.0 * ctx.lam_delta / gap)


def rho_tail_integral(v0: float, params: ParamsLike) -> float:
    """Closed form of int_{v0}^inf ds/rho(s) = (1 - u(v0))^3 / 3"""
    if v0 <= 0.0:
        raise DomainValueError(f"v0 must be positive, got {v0}")
    u0 = u_of_exp(v0, params)
    return (1.0 - u0) ** 3 / 3.0


def rho_tail_quadrature(v0: float, v_max: float, params: ParamsLike) -> float:
    """Direct quadrature of 1/rho over [v0, v_max]"""
    ctx = _context(params)
    if not 0.0 < v0 < v_max:
        raise DomainValueError(f"need 0 < v0 < v_max, got v0={v0}, v_max={v_max}")
    value, error = quad(lambda s: 1.0 / rho(s, ctx), v0, v_max, limit=400, epsrel=1e-10)
    logger.debug(f"Tail quadrature on [{v0:g}, {v_max:g}] = {value:.12g} (error estimate {error:.2g})")
    return float(value)
