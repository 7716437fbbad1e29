"""Post-processing of quenched runs near the singularity.

Similarity variables around a point a and quench time T:

    y = (x - a)/sqrt(T - t),  s = -log(T - t),  w = (1 - u)/(T - t)^(1/3)

At a quenching point w tends to (3 lambda)^(1/3).
"""
import logging
import math
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid
from scipy.special import erf

from app.core.errors import (
    DomainValueError,
    InsufficientRangeError,
    InsufficientSpanError,
    NegativeBracketError,
    TooFewNodesError,
)
from app.schemas.asymptotics import (
    ComparisonRow,
    EnergyReport,
    ExpansionCoeffs,
    FrameLevel,
    PointClass,
    RateFit,
    RateFitReport,
    SimilarityFrame,
)
from app.schemas.core import Field, Params
from app.schemas.evolution import QuenchOutcome, RunConfig
from app.services import evolution_service

logger = logging.getLogger(__name__)

DEFAULT_WINDOW = 5.0
MIN_FIT_SAMPLES = 20
MIN_FIT_DECADES = 2.0
MIN_ENERGY_NODES = 5
RATE_EXPONENT = 1.0 / 3.0


def _u_values(field: Field, params: Params) -> np.ndarray:
    if field.kind == "u":
        return np.asarray(field.values, dtype=float)
    return np.asarray(evolution_service.u_view(field, params).values, dtype=float)


# Similarity frames

def similarity_frame(
    snapshots: Sequence[Field],
    a: float,
    T: float,
    params: Params,
    window: float = DEFAULT_WINDOW,
) -> SimilarityFrame:
    """Map every node with |x - a| <= window sqrt(T - t) to (y, s, w)"""
    levels: List[FrameLevel] = []
    dim = snapshots[0].grid.domain.dim if snapshots else 1
    seen = set()
    for field in sorted(snapshots, key=lambda f: f.time):
        if field.time >= T:
            raise DomainValueError(f"snapshot at t={field.time:g} is not before T={T:g}")
        if field.time in seen:
            continue
        seen.add(field.time)
        tau = T - field.time
        x = np.asarray(field.grid.nodes)
        u = _u_values(field, params)
        keep = np.abs(x - a) <= window * math.sqrt(tau)
        if not np.any(keep):
            continue
        levels.append(
            FrameLevel(
                t=field.time,
                s=-math.log(tau),
                x=x[keep],
                y=(x[keep] - a) / math.sqrt(tau),
                w=(1.0 - u[keep]) / tau ** (1.0 / 3.0),
            )
        )
    if not levels:
        logger.warning(f"Similarity frame around a={a:g} is empty")
    return SimilarityFrame(a=a, T=T, params=params, dim=dim, window=window, levels=levels)


def reconstruct_u(frame: SimilarityFrame) -> List[np.ndarray]:
    """Per-level u values recovered from (s, w)"""
    return [1.0 - level.w * math.exp(-level.s / 3.0) for level in frame.levels]


def similarity_snapshot_times(T: float, dt: float, count: int = 16) -> List[float]:
    """Times T - tau with tau geometric from T/2 down to 10 dt"""
    tau_hi, tau_lo = 0.5 * T, 10.0 * dt
    if tau_hi <= tau_lo:
        raise InsufficientRangeError(f"quench time {T:g} is too short for dt={dt:g}")
    return sorted(float(T - tau) for tau in np.geomspace(tau_hi, tau_lo, count))


def resample_run(config: RunConfig, outcome: QuenchOutcome, count: int = 16) -> QuenchOutcome:
    """Repeat a quenched run with snapshots spread geometrically toward T"""
    times = similarity_snapshot_times(outcome.quench_time, config.dt, count)
    return evolution_service.run(config.model_copy(update={"snapshot_times": times}))


# Quenching rate

def rate_fit(series: Iterable[Tuple[float, float]], T: float, pinned_exponent: float = RATE_EXPONENT) -> RateFit:
    """Least-squares line through (log(T - t), log(1 - max u)).

    The free intercept amplifies any slope error by the mean log(T - t) of the
    window, so the amplitude is also fitted with the exponent held at
    `pinned_exponent`.
    """
    data = np.array([(t, u) for t, u in series if t < T and u < 1.0], dtype=float).reshape(-1, 2)
    if len(data) < MIN_FIT_SAMPLES:
        raise InsufficientSpanError(f"rate fit needs {MIN_FIT_SAMPLES} samples, got {len(data)}")
    tau = T - data[:, 0]
    span = math.log10(tau.max() / tau.min())
    if span < MIN_FIT_DECADES:
        raise InsufficientSpanError(f"rate fit needs T - t to span {MIN_FIT_DECADES:g} decades, got {span:.2f}")
    log_tau, log_gap = np.log(tau), np.log(1.0 - data[:, 1])
    slope, intercept = np.polyfit(log_tau, log_gap, 1)
    residual = float(np.sqrt(np.mean((log_gap - (slope * log_tau + intercept)) ** 2)))
    pinned = float(np.mean(log_gap - pinned_exponent * log_tau))
    return RateFit(
        exponent=float(slope),
        amplitude=float(math.exp(intercept)),
        pinned_amplitude=math.exp(pinned),
        pinned_exponent=pinned_exponent,
        window=(float(data[:, 0].min()), float(data[:, 0].max())),
        residual=residual,
        n_samples=len(data),
        T=T,
    )


def fit_window(T: float, dt: float) -> Tuple[float, float]:
    """T - t in [10 dt, T/10], lowered toward 2 dt until it spans two decades"""
    tau_hi = T / 10.0
    tau_lo = 10.0 * dt
    while tau_hi / tau_lo < 10.0 ** MIN_FIT_DECADES and tau_lo > 2.0 * dt:
        tau_lo = max(2.0 * dt, tau_lo / 2.0)
    return tau_lo, tau_hi


def _series_from_trace(outcome: QuenchOutcome, T: float, tau_lo: float, tau_hi: float):
    t = np.asarray(outcome.trace.t)
    max_u = 1.0 - np.cbrt(3.0 * outcome.params.lam * np.asarray(outcome.trace.min_zeta))
    tau = T - t
    keep = (tau >= tau_lo) & (tau <= tau_hi)
    return list(zip(t[keep], max_u[keep]))


def rate_fit_from_run(outcome: QuenchOutcome, window: Optional[Tuple[float, float]] = None) -> RateFitReport:
    """Fit at the interpolated quench time and at T -/+ dt"""
    if outcome.kind != "quenched":
        raise InsufficientSpanError(f"rate fit needs a quenched run, got {outcome.kind}")
    T, dt = outcome.quench_time, outcome.dt
    tau_lo, tau_hi = window or fit_window(T, dt)
    fits = [rate_fit(_series_from_trace(outcome, T_k, tau_lo, tau_hi), T_k) for T_k in (T, T - dt, T + dt)]
    target = (3.0 * outcome.params.lam) ** (1.0 / 3.0)
    logger.info(
        f"Rate fit: exponent={fits[0].exponent:.5f} amplitude={fits[0].pinned_amplitude:.5f} "
        f"(free fit {fits[0].amplitude:.5f}, target {target:.5f}); T-dt exponent={fits[1].exponent:.5f}, T+dt exponent={fits[2].exponent:.5f}"
    )
    return RateFitReport(fit=fits[0], fit_t_minus=fits[1], fit_t_plus=fits[2], target_amplitude=target)


def gradient_scaling(outcome: QuenchOutcome) -> pd.DataFrame:
    """max |grad u| (T - t)^(1/6) along the trace"""
    if outcome.kind != "quenched":
        return pd.DataFrame(columns=["t", "tau", "value"])
    T = outcome.quench_time
    t = np.asarray(outcome.trace.t)
    keep = t < T
    tau = T - t[keep]
    frame = pd.DataFrame(
        {"t": t[keep], "tau": tau, "value": np.asarray(outcome.trace.max_grad_u)[keep] * tau ** (1.0 / 6.0)}
    )
    last = frame[frame["tau"] <= frame["tau"].max() / 10.0]
    if len(last) > 1:
        trend = np.polyfit(np.log(last["tau"]), np.log(last["value"]), 1)[0]
        logger.info(f"Gradient scaling over the last decade: max={last['value'].max():.4g}, log-slope={trend:.3f}")
    return frame


# Energy and condition monitor

def _gaussian_mass(ball_radius: float, dim: int) -> float:
    if dim == 1:
        return 2.0 * math.sqrt(math.pi) * float(erf(ball_radius / 2.0))
    return 4.0 * math.pi * (1.0 - math.exp(-ball_radius ** 2 / 4.0))


def _measure(y: np.ndarray, dim: int) -> np.ndarray:
    """Radial weight 2 pi |y| for the disk, 1 on the slab"""
    if dim == 1:
        return np.ones_like(y)
    return 2.0 * math.pi * np.abs(y)


def _ball(level: FrameLevel, ball_radius: float):
    inside = np.abs(level.y) < ball_radius
    if inside.sum() < MIN_ENERGY_NODES:
        raise TooFewNodesError(f"only {int(inside.sum())} nodes inside |y| < {ball_radius:g} at s={level.s:.3f}")
    y, w = level.y[inside], level.w[inside]
    return y, w, np.gradient(w, y)


def energy(level: FrameLevel, params: Params, ball_radius: Optional[float] = None, dim: int = 1) -> EnergyReport:
    """E[w](s) = 1/2 int rho |grad w|^2 - 1/6 int rho w^2 - lambda int rho/w over |y| < ball_radius"""
    ball_radius = level.s if ball_radius is None else ball_radius
    y, w, grad = _ball(level, ball_radius)
    weight = np.exp(-y ** 2 / 4.0) * _measure(y, dim)
    gradient_term = 0.5 * trapezoid(weight * grad ** 2, y)
    mass_term = -trapezoid(weight * w ** 2, y) / 6.0
    singular_term = -params.lam * trapezoid(weight / w, y)
    covered = trapezoid(weight, y) / _gaussian_mass(ball_radius, dim)
    return EnergyReport(
        s=level.s,
        energy=float(gradient_term + mass_term + singular_term),
        gradient_term=float(gradient_term),
        mass_term=float(mass_term),
        singular_term=float(singular_term),
        ball_radius=ball_radius,
        covered_mass_fraction=float(covered),
        n_nodes=len(y),
    )


def energy_series(frame: SimilarityFrame, ball_radius: Optional[float] = None) -> List[EnergyReport]:
    """Energy at every level with enough nodes; increases are logged, not raised"""
    reports = []
    for level in frame.levels:
        try:
            reports.append(energy(level, frame.params, ball_radius, frame.dim))
        except TooFewNodesError as e:
            logger.debug(e.detail)
    increases = sum(1 for a, b in zip(reports, reports[1:]) if b.energy > a.energy)
    if increases:
        logger.info(f"Energy increased at {increases} of {max(len(reports) - 1, 0)} level transitions")
    return reports


def condition_monitor(frame: SimilarityFrame, ball_radius: Optional[float] = None) -> float:
    """int s e^(s/3) int_{B_s} rho |grad w|^2 dy ds over the frame's s-range"""
    if frame.s_range < 1.0:
        logger.warning(f"Condition monitor over an s-range of {frame.s_range:.3f} < 1")
    s_values, integrand = [], []
    for level in frame.levels:
        radius = level.s if ball_radius is None else ball_radius
        inside = np.abs(level.y) < radius
        if inside.sum() < 2:
            continue
        y, w = level.y[inside], level.w[inside]
        weight = np.exp(-y ** 2 / 4.0) * _measure(y, frame.dim)
        dirichlet = trapezoid(weight * np.gradient(w, y) ** 2, y)
        s_values.append(level.s)
        integrand.append(level.s * math.exp(level.s / 3.0) * dirichlet)
    if len(s_values) < 2:
        return 0.0
    return float(trapezoid(integrand, s_values))


# Local expansion

def _tau(t: float, coeffs: ExpansionCoeffs) -> float:
    tau = coeffs.T - t
    if tau <= 0:
        raise DomainValueError(f"local expansion needs t < T, got t={t:g}, T={coeffs.T:g}")
    return tau


def bracket(r, t: float, coeffs: ExpansionCoeffs):
    """1 + (zeta0/3)(T-t)^(1/3) + (zeta2/2) r^2/(T-t)^(2/3)"""
    tau = _tau(t, coeffs)
    r = np.asarray(r, dtype=float)
    value = 1.0 + coeffs.zeta0 / 3.0 * tau ** (1.0 / 3.0) + coeffs.zeta2 / 2.0 * r ** 2 / tau ** (2.0 / 3.0)
    return float(value) if value.ndim == 0 else value


def local_zeta(r, t: float, coeffs: ExpansionCoeffs):
    return _tau(t, coeffs) * bracket(r, t, coeffs)


def local_u(r, t: float, coeffs: ExpansionCoeffs, exponent: float = 1.0 / 3.0):
    """1 - (3 lambda (T-t))^(1/3) bracket^exponent"""
    value = bracket(r, t, coeffs)
    if np.any(np.asarray(value) < 0.0):
        raise NegativeBracketError(f"expansion bracket is negative at t={t:g}; r is outside its validity window")
    tau = _tau(t, coeffs)
    result = 1.0 - (3.0 * coeffs.params.lam * tau) ** (1.0 / 3.0) * np.asarray(value) ** exponent
    return float(result) if np.ndim(result) == 0 else result


def expansion_identity_residual(r, t: float, coeffs: ExpansionCoeffs, exponent: float = 1.0 / 3.0) -> float:
    """max |(1 - local_u)^3/(3 lambda) - local_zeta|"""
    gap = 1.0 - np.asarray(local_u(r, t, coeffs, exponent))
    residual = np.abs(gap ** 3 / (3.0 * coeffs.params.lam) - np.asarray(local_zeta(r, t, coeffs)))
    return float(np.max(residual))


def compare_profile(
    nodes: np.ndarray, values: np.ndarray, t: float, coeffs: ExpansionCoeffs, a: float, r_window: float
) -> List[ComparisonRow]:
    rows = []
    r_valid = coeffs.validity_radius(t)
    for x, zeta in zip(np.asarray(nodes), np.asarray(values)):
        r = abs(x - a)
        if r > r_window:
            continue
        expected = local_zeta(r, t, coeffs)
        error = abs(zeta - expected)
        rows.append(
            ComparisonRow(
                r=float(r),
                zeta_numeric=float(zeta),
                zeta_local=float(expected),
                abs_err=float(error),
                rel_err=float(error / abs(expected)) if expected else math.inf,
                inside_validity=bool(r <= r_valid),
            )
        )
    return rows


def nearest_snapshot(outcome: QuenchOutcome, t_eval: float) -> Field:
    """Latest snapshot not after t_eval"""
    candidates = [f for f in outcome.snapshots if f.time <= t_eval + 1e-15]
    if not candidates:
        raise DomainValueError(f"no snapshot at or before t={t_eval:g}; request it in snapshot_times")
    return max(candidates, key=lambda f: f.time)


def compare_local(outcome: QuenchOutcome, coeffs: ExpansionCoeffs, t_eval: float, r_window: float) -> List[ComparisonRow]:
    """Numerical zeta against the local expansion near the quench point"""
    if outcome.kind != "quenched":
        raise DomainValueError(f"local comparison needs a quenched run, got {outcome.kind}")
    field = nearest_snapshot(outcome, t_eval)
    rows = compare_profile(field.grid.nodes, field.values, field.time, coeffs, outcome.quench_node, r_window)
    if rows:
        worst = max(row.rel_err for row in rows)
        inside = [row.rel_err for row in rows if row.inside_validity]
        logger.info(
            f"Local expansion at t={field.time:.6g} (T-t={coeffs.T - field.time:.3g}): max relative error "
            f"{worst:.3%} over r <= {r_window:g}, {max(inside, default=math.nan):.3%} inside "
            f"r <= {coeffs.validity_radius(field.time):.3g}"
        )
    for exponent in (1.0 / 3.0, 1.0):
        try:
            residual = expansion_identity_residual(0.0, field.time, coeffs, exponent)
            logger.info(f"Cubic-transform identity residual with bracket exponent {exponent:.4g}: {residual:.3e}")
        except NegativeBracketError as e:
            logger.info(e.detail)
    return rows


def compare_local_matched(
    config: RunConfig, tau_eval: float, r_window: float
) -> Tuple[QuenchOutcome, ExpansionCoeffs, List[ComparisonRow]]:
    """Compare at T - tau_eval of this run's own quench time T.

    A fixed absolute instant lands at a different stage of the approach
    whenever the computed T moves with the discretization.
    """
    first = evolution_service.run(config)
    if first.kind != "quenched":
        raise DomainValueError(f"local comparison needs a quenched run, got {first.kind}")
    if not 0.0 < tau_eval < first.quench_time:
        raise DomainValueError(f"tau_eval={tau_eval:g} must lie in (0, T={first.quench_time:g})")
    t_eval = first.quench_time - tau_eval
    outcome = evolution_service.run(config.model_copy(update={"snapshot_times": [t_eval]}))
    coeffs = ExpansionCoeffs.build(T=outcome.quench_time, params=config.params, n=config.grid.domain.dim)
    return outcome, coeffs, compare_local(outcome, coeffs, t_eval, r_window)


def _minimum_near(level: FrameLevel, a: float, window: float) -> float:
    # y = (x - a)/sqrt(T - t) with T - t = exp(-s)
    y = (level.x - a) * math.exp(level.s / 2.0)
    inside = np.abs(y) <= window
    if not np.any(inside):
        raise DomainValueError(f"no frame node within |y| <= {window:g} of a={a:g} at s={level.s:.3f}")
    return float(level.w[inside].min())


def classify_point(frame: SimilarityFrame, a: Optional[float] = None, factor: float = 10.0) -> PointClass:
    """non_quench when min_{|y|<=C} w grows monotonically by more than factor over the frame.

    With `a` given the minima are taken around a instead of the frame's own
    centre, over the nodes the frame stored.
    """
    if frame.window < 1.0 or frame.s_range < 2.0:
        raise InsufficientRangeError(
            f"classification needs C >= 1 and two units of s, got C={frame.window:g}, s-range={frame.s_range:.3f}"
        )
    centre = frame.a if a is None else a
    if centre == frame.a:
        minima = np.array([level.w.min() for level in frame.levels])
    else:
        minima = np.array([_minimum_near(level, centre, frame.window) for level in frame.levels])
    growing = np.all(np.diff(minima) >= -1e-12 * np.abs(minima[:-1]))
    ratio = minima[-1] / minima[0]
    logger.info(f"Point a={centre:g}: min w grew by {ratio:.3g} over {frame.s_range:.2f} units of s")
    if growing and ratio > factor:
        return "non_quench"
    return "quench_candidate"
