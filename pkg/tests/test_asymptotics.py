import math

import numpy as np
import pytest

from app.core.errors import (
    DomainValueError,
    InsufficientRangeError,
    InsufficientSpanError,
    NegativeBracketError,
    TooFewNodesError,
)
from app.core.geometry import build_grid
from app.core.reference import LOCAL_COMPARISON_TAUS
from app.schemas.asymptotics import ExpansionCoeffs, FrameLevel, RateFit, SimilarityFrame
from app.schemas.core import Domain, Field, Params
from app.schemas.evolution import RunConfig
from app.services import asymptotics_service as asym
from app.services import evolution_service

LAM = 3.0
AMPLITUDE = (3.0 * LAM) ** (1.0 / 3.0)


def power_law_series(T, taus, exponent=1.0 / 3.0, amplitude=AMPLITUDE, noise=None):
    gaps = amplitude * taus ** exponent
    if noise is not None:
        gaps = gaps * noise
    return list(zip(T - taus, 1.0 - gaps))


@pytest.fixture(scope="module")
def quenched_run():
    config = RunConfig(
        params=Params(lam=LAM, delta=0.7),
        grid=build_grid(Domain.slab(), 40),
        dt=2e-5,
        max_steps=2_000_000,
    )
    return config, evolution_service.run(config)


def synthetic_level(s, y, w, t=0.0):
    y = np.asarray(y, dtype=float)
    return FrameLevel(t=t, s=s, x=y, y=y, w=np.broadcast_to(w, y.shape))


# Rate fits

def test_rate_fit_recovers_an_exact_power_law():
    taus = np.geomspace(1e-1, 1e-4, 40)
    fit = asym.rate_fit(power_law_series(1.0, taus), 1.0)
    assert fit.exponent == pytest.approx(1.0 / 3.0, abs=1e-10)
    assert fit.amplitude == pytest.approx(AMPLITUDE, rel=1e-9)
    assert fit.pinned_amplitude == pytest.approx(AMPLITUDE, rel=1e-9)
    assert fit.pinned_exponent == pytest.approx(1.0 / 3.0)
    assert fit.n_samples == 40
    assert fit.residual < 1e-10


def test_rate_fit_tolerates_multiplicative_noise():
    taus = np.geomspace(1e-1, 1e-4, 60)
    noise = 1.0 + 0.01 * np.random.default_rng(7).uniform(-1.0, 1.0, taus.size)
    fit = asym.rate_fit(power_law_series(1.0, taus, noise=noise), 1.0)
    assert abs(fit.exponent - 1.0 / 3.0) < 0.01


def test_pinned_amplitude_resists_a_slope_error():
    # a slightly flat exponent drags the free intercept far from the amplitude
    taus = np.geomspace(1e-2, 6e-5, 50)
    pivot = math.sqrt(1e-2 * 6e-5)
    gaps = AMPLITUDE * pivot ** (1.0 / 3.0) * (taus / pivot) ** 0.32
    fit = asym.rate_fit(list(zip(1.0 - taus, 1.0 - gaps)), 1.0)
    assert fit.exponent == pytest.approx(0.32, abs=1e-10)
    assert fit.amplitude < 0.95 * AMPLITUDE
    assert fit.pinned_amplitude == pytest.approx(AMPLITUDE, rel=5e-3)


def test_rate_fit_rejects_short_series():
    with pytest.raises(InsufficientSpanError):
        asym.rate_fit(power_law_series(1.0, np.geomspace(1e-1, 1e-4, 10)), 1.0)
    with pytest.raises(InsufficientSpanError):
        asym.rate_fit(power_law_series(1.0, np.geomspace(1e-1, 1e-2, 40)), 1.0)


def test_rate_fit_window_lies_inside_the_run():
    with pytest.raises(ValueError):
        RateFit(exponent=0.3, amplitude=2.0, pinned_amplitude=2.0, window=(0.5, 1.5), residual=0.0, n_samples=20, T=1.0)


def test_fit_window_is_widened_toward_two_steps():
    assert asym.fit_window(1.0, 1e-5) == pytest.approx((1e-4, 0.1))
    assert asym.fit_window(1.0, 1e-3) == pytest.approx((2e-3, 0.1))


def test_rate_fit_from_a_quenched_run(quenched_run):
    _, outcome = quenched_run
    report = asym.rate_fit_from_run(outcome)
    assert abs(report.fit.exponent - 1.0 / 3.0) < 0.05
    assert report.target_amplitude == pytest.approx(AMPLITUDE)
    assert report.fit_t_minus.T < report.fit.T < report.fit_t_plus.T


def test_rate_fit_needs_a_quenched_run(slab, make_config):
    steady = evolution_service.run(make_config(slab, 1.0, 0.7))
    with pytest.raises(InsufficientSpanError):
        asym.rate_fit_from_run(steady)


def test_gradient_scaling_along_the_trace(quenched_run):
    _, outcome = quenched_run
    frame = asym.gradient_scaling(outcome)
    assert list(frame.columns) == ["t", "tau", "value"]
    assert not frame.empty and np.all(frame["tau"] > 0)


# Similarity frames

def test_similarity_frame_of_an_exact_self_similar_profile(slab):
    grid = build_grid(slab, 200)
    x = np.asarray(grid.nodes)
    T = 0.05
    snapshots = []
    for tau in (1e-2, 1e-3, 1e-4):
        y = x / math.sqrt(tau)
        snapshots.append(Field(grid=grid, values=1.0 - tau ** (1.0 / 3.0) * (AMPLITUDE + y ** 2), time=T - tau, kind="u"))

    frame = asym.similarity_frame(snapshots, 0.0, T, Params(lam=LAM))
    assert len(frame) == 3
    assert [level.s for level in frame.levels] == pytest.approx([-math.log(t) for t in (1e-2, 1e-3, 1e-4)])
    for level in frame.levels:
        assert np.all(np.abs(level.y) <= 5.0 + 1e-12)
        assert np.allclose(level.w, AMPLITUDE + level.y ** 2, rtol=1e-9)
    for level, u in zip(frame.levels, asym.reconstruct_u(frame)):
        tau = math.exp(-level.s)
        assert np.allclose(u, 1.0 - tau ** (1.0 / 3.0) * (AMPLITUDE + level.y ** 2), rtol=1e-12, atol=1e-12)
    assert frame.s_range == pytest.approx(math.log(100.0))
    assert len(frame.samples) == sum(len(level.y) for level in frame.levels)


def test_similarity_frame_rejects_snapshots_after_quench(slab):
    grid = build_grid(slab, 20)
    field = Field(grid=grid, values=np.zeros(grid.size), time=1.0, kind="u")
    with pytest.raises(DomainValueError):
        asym.similarity_frame([field], 0.0, 1.0, Params(lam=1.0))


def test_frame_levels_must_increase_in_s():
    level = synthetic_level(1.0, [0.0, 1.0], 1.0)
    with pytest.raises(ValueError):
        SimilarityFrame(a=0.0, T=1.0, params=Params(lam=1.0), levels=[level, level])


def test_similarity_snapshot_times():
    times = asym.similarity_snapshot_times(1.0, 1e-3, count=5)
    assert times == sorted(times)
    assert times[0] == pytest.approx(0.5)
    assert times[-1] == pytest.approx(1.0 - 1e-2)
    with pytest.raises(InsufficientRangeError):
        asym.similarity_snapshot_times(1e-3, 1e-3)


def test_frame_from_a_resampled_run(quenched_run):
    config, outcome = quenched_run
    resampled = asym.resample_run(config, outcome, count=8)
    assert resampled.quench_time == pytest.approx(outcome.quench_time, rel=1e-12)
    assert len(resampled.snapshots) == 8

    frame = asym.similarity_frame(resampled.snapshots, outcome.quench_node, outcome.quench_time, outcome.params)
    assert len(frame) == 8
    assert frame.s_range > 2.0
    center = frame.levels[-1]
    assert center.w[np.argmin(np.abs(center.y))] == pytest.approx(AMPLITUDE, rel=0.15)
    assert asym.classify_point(frame) == "quench_candidate"

    reports = asym.energy_series(frame, ball_radius=3.0)
    assert all(report.n_nodes >= asym.MIN_ENERGY_NODES for report in reports)
    assert asym.condition_monitor(frame) >= 0.0


# Energy

def test_energy_of_a_constant_profile():
    y = np.linspace(-10.0, 10.0, 4001)
    c, ball = 2.0, 8.0
    report = asym.energy(synthetic_level(3.0, y, c), Params(lam=LAM), ball_radius=ball)
    gaussian_mass = 2.0 * math.sqrt(math.pi) * math.erf(ball / 2.0)
    assert report.gradient_term == pytest.approx(0.0, abs=1e-12)
    assert report.mass_term == pytest.approx(-c ** 2 / 6.0 * gaussian_mass, rel=1e-4)
    assert report.singular_term == pytest.approx(-LAM / c * gaussian_mass, rel=1e-4)
    assert report.covered_mass_fraction == pytest.approx(1.0, rel=1e-4)


def test_energy_terms_scale_with_the_profile():
    y = np.linspace(-10.0, 10.0, 2001)
    single = asym.energy(synthetic_level(3.0, y, 1.5), Params(lam=LAM), ball_radius=6.0)
    double = asym.energy(synthetic_level(3.0, y, 3.0), Params(lam=LAM), ball_radius=6.0)
    assert double.mass_term == pytest.approx(4.0 * single.mass_term, rel=1e-12)
    assert double.singular_term == pytest.approx(0.5 * single.singular_term, rel=1e-12)


def test_energy_gradient_term_of_a_parabola():
    y = np.linspace(-12.0, 12.0, 4801)
    level = FrameLevel(t=0.0, s=3.0, x=y, y=y, w=1.0 + y ** 2)
    report = asym.energy(level, Params(lam=1.0), ball_radius=11.0)
    # 1/2 int e^(-y^2/4) (2y)^2 dy = 8 sqrt(pi)
    assert report.gradient_term == pytest.approx(8.0 * math.sqrt(math.pi), rel=1e-4)


def test_energy_defaults_the_ball_to_s():
    y = np.linspace(-10.0, 10.0, 201)
    report = asym.energy(synthetic_level(4.0, y, 1.0), Params(lam=1.0))
    assert report.ball_radius == 4.0


def test_energy_needs_enough_nodes():
    with pytest.raises(TooFewNodesError):
        asym.energy(synthetic_level(3.0, [-0.5, 0.0, 0.5], 1.0), Params(lam=1.0), ball_radius=1.0)


def test_condition_monitor_of_flat_and_short_frames():
    y = np.linspace(-6.0, 6.0, 121)
    levels = [synthetic_level(s, y, 2.0) for s in (2.0, 3.0, 4.0)]
    frame = SimilarityFrame(a=0.0, T=1.0, params=Params(lam=1.0), levels=levels)
    assert asym.condition_monitor(frame) == pytest.approx(0.0, abs=1e-12)

    single = SimilarityFrame(a=0.0, T=1.0, params=Params(lam=1.0), levels=levels[:1])
    assert asym.condition_monitor(single) == 0.0


# Local expansion

def test_expansion_coefficients():
    coeffs = ExpansionCoeffs.build(1.0, Params(lam=8.0, delta=0.5), n=2)
    assert coeffs.scale == pytest.approx(2.0)
    assert coeffs.zeta2 == pytest.approx(3.0 ** (1.0 / 3.0) / 4.0)
    assert coeffs.zeta0 == pytest.approx(-(3.0 ** (4.0 / 3.0)) * 2.0 / 16.0)


def test_expansion_needs_fringing():
    with pytest.raises(DomainValueError):
        ExpansionCoeffs.build(1.0, Params(lam=1.0))
    with pytest.raises(ValueError):
        ExpansionCoeffs(T=1.0, params=Params(lam=1.0))


def test_local_expansion_at_the_center():
    coeffs = ExpansionCoeffs.build(1.0, Params(lam=LAM, delta=0.7))
    t = 0.999
    tau = 1e-3
    expected = tau * (1.0 + coeffs.zeta0 / 3.0 * tau ** (1.0 / 3.0))
    assert asym.local_zeta(0.0, t, coeffs) == pytest.approx(expected, rel=1e-12)
    assert asym.local_u(0.0, t, coeffs) == pytest.approx(1.0 - (3.0 * LAM * expected) ** (1.0 / 3.0), rel=1e-12)


def test_cubic_identity_of_the_local_expansion():
    coeffs = ExpansionCoeffs.build(1.0, Params(lam=LAM, delta=0.7))
    r = np.linspace(0.0, 0.1, 11)
    assert asym.expansion_identity_residual(r, 0.999, coeffs) < 1e-15
    assert asym.expansion_identity_residual(r, 0.999, coeffs, exponent=1.0) > 1e-8


def test_local_expansion_profile_opens_away_from_the_center():
    coeffs = ExpansionCoeffs.build(1.0, Params(lam=LAM, delta=0.7))
    r = np.linspace(0.0, 0.1, 11)
    u = asym.local_u(r, 0.999, coeffs)
    assert np.all(np.diff(u) < 0)


def test_negative_bracket_is_reported():
    coeffs = ExpansionCoeffs.build(1.0, Params(lam=1.0, delta=0.001))
    with pytest.raises(NegativeBracketError):
        asym.local_u(0.0, 0.5, coeffs)
    with pytest.raises(DomainValueError):
        asym.local_zeta(0.0, 1.0, coeffs)


def test_compare_profile_against_itself():
    coeffs = ExpansionCoeffs.build(1.0, Params(lam=LAM, delta=0.7))
    nodes = np.linspace(-0.2, 0.2, 41)
    values = asym.local_zeta(np.abs(nodes), 0.999, coeffs)
    rows = asym.compare_profile(nodes, values, 0.999, coeffs, 0.0, 0.105)
    assert len(rows) == 21
    assert max(row.rel_err for row in rows) < 1e-14


def test_validity_radius_of_the_expansion():
    coeffs = ExpansionCoeffs.build(1.0, Params(lam=LAM, delta=0.7))
    t = 1.0 - 1e-3
    r_valid = coeffs.validity_radius(t)
    assert r_valid == pytest.approx(0.1 * math.sqrt(2.0 / coeffs.zeta2))
    assert coeffs.zeta2 / 2.0 * r_valid ** 2 / 1e-3 ** (2.0 / 3.0) == pytest.approx(1.0)
    with pytest.raises(DomainValueError):
        coeffs.validity_radius(1.0)

    nodes = np.linspace(0.0, 0.4, 41)
    rows = asym.compare_profile(nodes, asym.local_zeta(nodes, t, coeffs), t, coeffs, 0.0, 0.4)
    assert [row.inside_validity for row in rows] == [row.r <= r_valid for row in rows]
    assert rows[0].inside_validity and not rows[-1].inside_validity


def test_nearest_snapshot(quenched_run):
    config, outcome = quenched_run
    with pytest.raises(DomainValueError):
        asym.nearest_snapshot(outcome, 0.01)

    sampled = evolution_service.run(config.model_copy(update={"snapshot_times": [0.01, 0.02]}))
    assert asym.nearest_snapshot(sampled, 0.015).time == pytest.approx(0.01, abs=config.dt)


def test_compare_local_on_a_run(quenched_run):
    config, outcome = quenched_run
    t_eval = outcome.quench_time - 50 * config.dt
    sampled = evolution_service.run(config.model_copy(update={"snapshot_times": [t_eval]}))
    coeffs = ExpansionCoeffs.build(sampled.quench_time, sampled.params)
    rows = asym.compare_local(sampled, coeffs, t_eval, 0.1)
    assert rows
    assert all(row.r <= 0.1 for row in rows)


def test_compare_local_at_a_distance_to_quench(quenched_run):
    config, outcome = quenched_run
    tau = 50 * config.dt
    sampled, coeffs, rows = asym.compare_local_matched(config, tau, 0.1)
    assert coeffs.T == sampled.quench_time == pytest.approx(outcome.quench_time)
    snapshot = sampled.snapshots[0]
    assert coeffs.T - tau - config.dt <= snapshot.time <= coeffs.T - tau
    assert rows and all(row.r <= 0.1 for row in rows)
    with pytest.raises(DomainValueError):
        asym.compare_local_matched(config, 2.0 * outcome.quench_time, 0.1)


def fine_run_config(domain, lam, delta):
    return RunConfig(
        params=Params(lam=lam, delta=delta), grid=build_grid(domain, 200), dt=6e-6, max_steps=10_000_000
    )


@pytest.mark.slow
def test_local_expansion_on_the_slab_at_the_published_stage():
    tau = LOCAL_COMPARISON_TAUS[("slab", 0.7, 3.0)]
    outcome, coeffs, rows = asym.compare_local_matched(fine_run_config(Domain.slab(), 3.0, 0.7), tau, 0.1)
    assert outcome.centre_quench is True
    centre = min(rows, key=lambda row: row.r)
    assert centre.rel_err < 0.05
    # the truncated expansion drops a 1/log(T - t) correction that grows with r
    assert max(row.rel_err for row in rows) < 0.25


@pytest.mark.slow
def test_local_expansion_on_the_disk_at_the_published_stage():
    tau = LOCAL_COMPARISON_TAUS[("disk", 0.7, 1.0)]
    _, _, rows = asym.compare_local_matched(fine_run_config(Domain.disk(), 1.0, 0.7), tau, 0.2)
    centre = min(rows, key=lambda row: row.r)
    assert centre.r == 0.0
    assert centre.rel_err < 0.1
    inside = [row.rel_err for row in rows if row.inside_validity]
    outside = [row.rel_err for row in rows if not row.inside_validity]
    assert inside and outside
    assert max(outside) > max(inside)


@pytest.mark.slow
@pytest.mark.parametrize("lam, delta", [(10.0, 0.0), (3.0, 0.7)])
def test_quenching_rate_and_amplitude_on_a_fine_run(lam, delta):
    outcome = evolution_service.run(fine_run_config(Domain.slab(), lam, delta))
    report = asym.rate_fit_from_run(outcome)
    assert report.fit.exponent == pytest.approx(1.0 / 3.0, abs=0.02)
    assert report.fit.pinned_amplitude == pytest.approx(report.target_amplitude, rel=5e-2)


# Point classification

def test_classify_point_on_synthetic_frames():
    y = np.linspace(-3.0, 3.0, 31)
    params = Params(lam=1.0)
    flat = SimilarityFrame(a=0.0, T=1.0, params=params, levels=[synthetic_level(s, y, 2.0) for s in (1.0, 2.0, 3.5)])
    assert asym.classify_point(flat) == "quench_candidate"

    growing = SimilarityFrame(
        a=0.4, T=1.0, params=params, levels=[synthetic_level(s, y, math.exp(s)) for s in (1.0, 2.0, 3.5)]
    )
    assert asym.classify_point(growing) == "non_quench"
    assert asym.classify_point(growing, factor=100.0) == "quench_candidate"


def test_classify_point_recentres_on_a_given_point():
    y = np.linspace(-3.0, 3.0, 61)
    levels = [synthetic_level(s, y, np.where(y > 1.0, math.exp(s), 2.0)) for s in (1.0, 2.0, 3.5)]
    frame = SimilarityFrame(a=0.0, T=1.0, params=Params(lam=1.0), window=1.0, levels=levels)
    assert asym.classify_point(frame) == "quench_candidate"
    assert asym.classify_point(frame, a=2.5) == "non_quench"
    with pytest.raises(DomainValueError):
        asym.classify_point(frame, a=10.0)


def test_classify_point_needs_range():
    y = np.linspace(-3.0, 3.0, 31)
    params = Params(lam=1.0)
    short = SimilarityFrame(a=0.0, T=1.0, params=params, levels=[synthetic_level(s, y, 2.0) for s in (1.0, 2.0)])
    with pytest.raises(InsufficientRangeError):
        asym.classify_point(short)
    narrow = SimilarityFrame(
        a=0.0, T=1.0, params=params, window=0.5, levels=[synthetic_level(s, y, 2.0) for s in (1.0, 4.0)]
    )
    with pytest.raises(InsufficientRangeError):
        asym.classify_point(narrow)
