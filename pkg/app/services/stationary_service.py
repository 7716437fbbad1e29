"""Pull-in voltage by shooting on the radial stationary problem

    u'' + ((n-1)/r) u' = -lambda (1 + delta u'^2)/(1 - u)^2,  u(0) = alpha, u'(0) = 0,

plus the closed-form bounds on the pull-in voltage and the quench time.
The slab [-L, L] is shot on [0, L] with n = 1 by symmetry.
"""
import logging
import math
from typing import List, Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, minimize_scalar

from app.core import reference
from app.core.config import settings
from app.core.errors import DomainValueError, GradientBlowUp, NoBracketError, SingularBeforeBoundary
from app.core.geometry import eigenpair, torsion
from app.schemas.core import Domain, Params
from app.schemas.stationary import BoundsRow, ConvergenceRow, PullInResult, ShootState

logger = logging.getLogger(__name__)

LAMBDA_MIN = 1e-8
LAMBDA_MAX = 1e4
LAMBDA_RTOL = 1e-10
ALPHA_XTOL = 1e-8
ODE_RTOL = 1e-11
ODE_ATOL = 1e-13
# shooting starts at r = eps from the regularized origin expansion
START_RADIUS = 1e-6


def _default_max_step(domain: Domain) -> float:
    return domain.shooting_radius / 100.0


def _start_state(alpha: float, params: Params, n: int) -> ShootState:
    second = -params.lam / (n * (1.0 - alpha) ** 2)
    r = START_RADIUS
    return ShootState(r=r, u=alpha + 0.5 * second * r ** 2, up=second * r)


def _radial_rhs(params: Params, n: int):
    lam, delta = params.lam, params.delta

    def rhs(r, y):
        u, up = y
        return [up, -(n - 1) / r * up - lam * (1.0 + delta * up * up) / (1.0 - u) ** 2]

    return rhs


def _shoot(alpha: float, params: Params, domain: Domain, max_step: Optional[float] = None):
    """Integrate outward to the boundary, stopping early where u reaches 0"""
    if not 0.0 < alpha < 1.0:
        raise DomainValueError(f"alpha must lie in (0, 1), got {alpha}")
    radius = domain.shooting_radius
    start = _start_state(alpha, params, domain.dim)

    def touches_zero(r, y):
        return y[0]

    touches_zero.terminal = True
    touches_zero.direction = -1

    def touches_one(r, y):
        return 1.0 - 1e-12 - y[0]

    touches_one.terminal = True

    solution = solve_ivp(
        _radial_rhs(params, domain.dim),
        (start.r, radius),
        [start.u, start.up],
        method="DOP853",
        rtol=ODE_RTOL,
        atol=ODE_ATOL,
        max_step=max_step or _default_max_step(domain),
        events=(touches_zero, touches_one),
    )
    if solution.t_events[1].size:
        raise SingularBeforeBoundary(
            f"u reached 1 at r={solution.t_events[1][0]:.6g} < R={radius:g} (alpha={alpha}, lambda={params.lam:g})"
        )
    if solution.status == -1:
        # u' diverges while u has barely moved when lambda delta is large
        raise GradientBlowUp(
            f"slope diverged at r={solution.t[-1]:.6g} < R={radius:g} (alpha={alpha}, lambda={params.lam:g}): "
            f"{solution.message}",
            radius=float(solution.t[-1]),
        )
    return solution


def integrate_radial(alpha: float, params: Params, domain: Domain, max_step: Optional[float] = None) -> float:
    """u(R) of the trajectory started at u(0) = alpha; may be negative.

    Past a zero crossing the trajectory is continued to R without the stop event.
    """
    solution = _shoot(alpha, params, domain, max_step)
    if not solution.t_events[0].size:
        return float(solution.y[0, -1])
    crossing = solution.y_events[0][0]
    tail = solve_ivp(
        _radial_rhs(params, domain.dim),
        (solution.t_events[0][0], domain.shooting_radius),
        crossing,
        method="DOP853",
        rtol=ODE_RTOL,
        atol=ODE_ATOL,
        max_step=max_step or _default_max_step(domain),
    )
    if tail.status == -1:
        raise SingularBeforeBoundary(f"gradient blew up past the zero crossing: {tail.message}")
    return float(tail.y[0, -1])


def zero_radius(alpha: float, params: Params, domain: Domain, max_step: Optional[float] = None) -> float:
    """First radius where u = 0, or inf when u stays positive up to R.

    A slope blow-up counts as the crossing: u falls to -inf there, so its zero
    lies exponentially close before the blow-up radius.
    """
    try:
        solution = _shoot(alpha, params, domain, max_step)
    except GradientBlowUp as e:
        return e.radius
    if solution.t_events[0].size:
        return float(solution.t_events[0][0])
    return math.inf


def shooting_residual(alpha: float, params: Params, domain: Domain, max_step: Optional[float] = None) -> float:
    """Zero exactly when u(R) = 0.

    Negative (zero radius - R) when u crosses 0 inside, u(R) >= 0 otherwise.
    """
    try:
        solution = _shoot(alpha, params, domain, max_step)
    except GradientBlowUp as e:
        return e.radius - domain.shooting_radius
    if solution.t_events[0].size:
        return float(solution.t_events[0][0]) - domain.shooting_radius
    return float(solution.y[0, -1])


def lambda_scale(params: Params, domain: Domain) -> float:
    """Starting guess for the lambda bracket; falls like mu0/sqrt(delta) for large delta"""
    return min(1.0, bound_asymptotic_P(params, domain))


def lambda_of_alpha(alpha: float, params: Params, domain: Domain, max_step: Optional[float] = None) -> float:
    """The lambda whose trajectory from u(0) = alpha lands on u(R) = 0; params.lam is ignored"""

    def residual(lam: float) -> float:
        return shooting_residual(alpha, params.with_lambda(lam), domain, max_step)

    start = lambda_scale(params, domain)
    lo = hi = start
    if residual(start) > 0.0:
        while residual(hi) > 0.0:
            lo, hi = hi, hi * 2.0
            if hi > LAMBDA_MAX:
                raise NoBracketError(f"no sign change for alpha={alpha} up to lambda={LAMBDA_MAX:g}")
    else:
        while residual(lo) <= 0.0:
            hi, lo = lo, lo / 2.0
            if lo < LAMBDA_MIN:
                raise NoBracketError(f"no sign change for alpha={alpha} down to lambda={LAMBDA_MIN:g}")
    return float(brentq(residual, lo, hi, xtol=LAMBDA_RTOL * lo, rtol=LAMBDA_RTOL))


def _fold_bracket(alphas: List[float], index: int) -> Tuple[float, float]:
    lo = alphas[index - 1] if index > 0 else 1e-6
    hi = alphas[index + 1] if index + 1 < len(alphas) else 1.0 - 1e-6
    return lo, hi


def pull_in(
    params: Params,
    domain: Domain,
    alpha_grid_size: Optional[int] = None,
    max_step: Optional[float] = None,
) -> PullInResult:
    """Sample the branch lambda(alpha) on a uniform grid and refine its maximum"""
    size = alpha_grid_size or settings.ALPHA_GRID_SIZE
    if size < 32:
        raise DomainValueError(f"alpha_grid_size must be at least 32, got {size}")

    branch: List[Tuple[float, float]] = []
    failed: List[float] = []
    for k in range(1, size + 1):
        alpha = k / (size + 1)
        try:
            branch.append((alpha, lambda_of_alpha(alpha, params, domain, max_step)))
        except (NoBracketError, SingularBeforeBoundary) as e:
            logger.warning(f"Branch sample skipped: {e.detail}")
            failed.append(alpha)
    if not branch:
        raise NoBracketError(f"empty branch for delta={params.delta:g} on the {domain.kind}")

    alphas = [a for a, _ in branch]
    values = [lam for _, lam in branch]
    index = int(np.argmax(values))
    lo, hi = _fold_bracket(alphas, index)

    def negative_lambda(alpha: float) -> float:
        try:
            return -lambda_of_alpha(alpha, params, domain, max_step)
        except (NoBracketError, SingularBeforeBoundary) as e:
            logger.debug(f"Fold refinement sample skipped: {e.detail}")
            failed.append(float(alpha))
            return 0.0

    refined = minimize_scalar(negative_lambda, bounds=(lo, hi), method="bounded", options={"xatol": ALPHA_XTOL})
    alpha_star, lambda_star = float(refined.x), float(-refined.fun)
    if lambda_star < values[index]:
        alpha_star, lambda_star = alphas[index], values[index]

    peaks = sum(
        1 for j in range(1, len(values) - 1) if values[j] > values[j - 1] and values[j] > values[j + 1]
    )
    if peaks > 1:
        logger.warning(f"Branch for delta={params.delta:g} has {peaks} interior maxima at the sampled resolution")

    logger.info(
        f"Pull-in on the {domain.kind}: delta={params.delta:g} lambda*={lambda_star:.6f} alpha*={alpha_star:.6f}"
    )
    return PullInResult(
        lambda_star=lambda_star,
        alpha_star=alpha_star,
        branch=branch,
        tolerance=ALPHA_XTOL,
        failed_alphas=failed,
    )


def convergence_study(params: Params, domain: Domain, levels: int = 4, alpha_grid_size: int = 32) -> List[ConvergenceRow]:
    """Repeat pull_in halving the integrator's maximum step at every level"""
    rows = []
    previous = None
    max_step = _default_max_step(domain) * 2.0
    for level in range(levels):
        result = pull_in(params, domain, alpha_grid_size, max_step)
        change = None if previous is None else abs(result.lambda_star - previous)
        rows.append(
            ConvergenceRow(
                level=level,
                max_step=max_step,
                lambda_star=result.lambda_star,
                alpha_star=result.alpha_star,
                change=change,
            )
        )
        previous = result.lambda_star
        max_step /= 2.0
    return rows


# Closed-form bounds

def bound_lambda_l(params: Params, domain: Domain) -> float:
    xi = torsion(domain)
    return 4.0 / 27.0 * xi.xi_sup / (xi.xi_sup ** 2 + params.delta * xi.lap_xi_sup ** 2)


def bound_lambda_u1(params: Params, domain: Domain) -> float:
    """First-order expansion in delta of the upper bound"""
    mu0 = eigenpair(domain).mu0
    xi_sup = torsion(domain).xi_sup
    return 4.0 / 27.0 * mu0 * (1.0 - params.delta / (27.0 * xi_sup))


def bound_lambda_u1_max(params: Params, domain: Domain) -> float:
    """max over u in [0, 1] of mu0 (1-u)^2 u [1 + exp(lambda_l delta (1 - 1/(1-u)))] / 2"""
    mu0 = eigenpair(domain).mu0
    exponent_scale = bound_lambda_l(params, domain) * params.delta

    def negative(u):
        return -0.5 * mu0 * (1.0 - u) ** 2 * u * (1.0 + math.exp(exponent_scale * (1.0 - 1.0 / (1.0 - u))))

    best = minimize_scalar(negative, bounds=(0.0, 1.0 - 1e-9), method="bounded", options={"xatol": 1e-12})
    return float(-best.fun)


def bound_T_upper(params: Params, domain: Domain) -> float:
    """1/(3 lambda - mu0), valid for lambda > mu0/3"""
    mu0 = eigenpair(domain).mu0
    if params.lam <= mu0 / 3.0:
        raise DomainValueError(f"the quench-time bound needs lambda > mu0/3 = {mu0 / 3.0:.6g}, got {params.lam:g}")
    return 1.0 / (3.0 * params.lam - mu0)


def bound_quench_time_intro(params: Params, domain: Domain) -> float:
    """The 1/(3 lambda + mu0) variant of the quench-time bound"""
    mu0 = eigenpair(domain).mu0
    return 1.0 / (3.0 * params.lam + mu0)


def default_p(delta: float) -> int:
    return max(3, math.ceil(2.0 + math.sqrt(delta)))


def bound_asymptotic_P(params: Params, domain: Domain, P: Optional[int] = None) -> float:
    """mu0/(P-2), the nonexistence level used for large delta"""
    P = default_p(params.delta) if P is None else P
    if P < 3:
        raise DomainValueError(f"P must be at least 3, got {P}")
    mu0 = eigenpair(domain).mu0
    return mu0 / (P - 2)


def _flag(computed: float, table: Optional[float]) -> bool:
    if table is None:
        return False
    return abs(computed - table) > reference.TABLE_FLAG_TOLERANCE * max(1.0, abs(table))


def bounds_table(domain: Domain, deltas: List[float]) -> List[BoundsRow]:
    """One row per delta with discrepancy flags against the published bounds"""
    rows = []
    mu0 = eigenpair(domain).mu0
    for delta in sorted(deltas):
        params = Params(lam=1.0, delta=delta)
        lambda_l = bound_lambda_l(params, domain)
        lambda_u1 = bound_lambda_u1(params, domain)
        table = reference.BOUNDS_TABLE.get((domain.kind, float(delta)))
        table_l = table[1] if table else None
        table_u1 = table[2] if table else None
        row = BoundsRow(
            domain=domain.kind,
            delta=delta,
            lambda_l=lambda_l,
            lambda_u1=lambda_u1,
            lambda_u1_max=bound_lambda_u1_max(params, domain),
            four_27_mu0=4.0 / 27.0 * mu0,
            table_lambda_l=table_l,
            table_lambda_u1=table_u1,
            lambda_l_flag=_flag(lambda_l, table_l),
            lambda_u1_flag=_flag(lambda_u1, table_u1),
        )
        if row.lambda_l_flag or row.lambda_u1_flag:
            logger.warning(
                f"Bounds for {domain.kind} delta={delta:g} differ from the published table: "
                f"lambda_l {lambda_l:.4f} vs {table_l}, lambda_u1 {lambda_u1:.4f} vs {table_u1}"
            )
        rows.append(row)
    return rows
