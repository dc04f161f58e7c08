import dataclasses
import itertools
import math

import numpy as np
import pytest

from objloss import analysis, lp, regions, sampling
from objloss.sampling import RngStream

from conftest import random_admissible_hull, unit_square


def fixed_pair(alpha, rotate=None):
    """Deterministic pair: v points up, w at angle alpha (both unit)."""
    v = np.array([0.0, 1.0])
    w = np.array([math.sin(alpha), math.cos(alpha)])
    if rotate is not None:
        v, w = rotate @ v, rotate @ w
    return sampling.ObjectivePair(w=w, v=v, alpha=alpha, z=np.zeros(2),
                                  model_tag=sampling.PD2)


# --- loss / scaled loss ---------------------------------------------------

def test_loss_on_unit_ball():
    ball = regions.Ball([0.0, 0.0], 1.0)
    for deg in (15, 30, 45, 60, 75):
        a = math.radians(deg)
        assert analysis.loss(ball, fixed_pair(a)) == pytest.approx(
            1.0 - math.cos(a), abs=1e-12
        )


def test_loss_on_flat_segment_is_full_range():
    seg = regions.PointSet([(-1.0, 0.0), (1.0, 0.0)])
    a = math.radians(30)
    pair = fixed_pair(a)
    assert analysis.loss(seg, pair) == pytest.approx(2.0 * math.sin(a), abs=1e-12)
    assert analysis.scaled_loss(seg, pair) == pytest.approx(1.0, abs=1e-12)


def test_loss_vanishes_when_objectives_agree():
    rng = np.random.default_rng(1)
    for region in (regions.Ball(rng.standard_normal(3), 2.0),
                   regions.PointSet(rng.standard_normal((6, 3))),
                   regions.BinarySet(3)):
        w = rng.standard_normal(region.dim)
        pair = sampling.ObjectivePair(w=w, v=w.copy(), alpha=0.4,
                                      z=np.zeros(region.dim), model_tag=sampling.PD1)
        assert abs(analysis.loss(region, pair)) <= 1e-7


def test_scaled_loss_model_case():
    ball = regions.Ball([0.0, 0.0], 1.0)
    assert analysis.scaled_loss(ball, fixed_pair(math.radians(60))) == pytest.approx(
        0.25, abs=1e-12
    )


def test_scaled_loss_worst_case_instance_value():
    inst = regions.make_worst_case_instance(0.8)
    a = math.asin(0.6)
    # los = 2 rho sin a = 0.72, range = r (1 + cos a) + rho sin a = 1.8
    assert analysis.scaled_loss(inst, fixed_pair(a)) == pytest.approx(0.4, abs=1e-12)


def test_scaled_loss_degenerate_range():
    singleton = regions.PointSet([(3.0, 4.0)])
    with pytest.raises(analysis.DegenerateRangeError):
        analysis.scaled_loss(singleton, fixed_pair(0.5))


# --- invariances ----------------------------------------------------------

def test_scaled_loss_scale_invariance():
    rng = np.random.default_rng(7)
    region = regions.PointSet(rng.standard_normal((8, 3)))
    for _ in range(100):
        v, w = rng.standard_normal(3), rng.standard_normal(3)
        pair = sampling.ObjectivePair(w=w, v=v, alpha=0.5, z=np.zeros(3),
                                      model_tag=sampling.PD1)
        base = analysis.scaled_loss(region, pair)
        c, d = rng.uniform(0.1, 10.0, size=2)
        scaled = dataclasses.replace(pair, v=c * v, w=d * w)
        assert analysis.scaled_loss(region, scaled) == pytest.approx(
            base, abs=1e-9, rel=1e-9
        )


def test_scaled_loss_translation_invariance():
    rng = np.random.default_rng(8)
    pts = rng.standard_normal((8, 3))
    for _ in range(50):
        v, w = rng.standard_normal(3), rng.standard_normal(3)
        pair = sampling.ObjectivePair(w=w, v=v, alpha=0.5, z=np.zeros(3),
                                      model_tag=sampling.PD1)
        t = rng.standard_normal(3) * 5.0
        a = analysis.scaled_loss(regions.PointSet(pts), pair)
        b = analysis.scaled_loss(regions.PointSet(pts + t), pair)
        assert b == pytest.approx(a, abs=1e-9)
    ball = regions.Ball(np.zeros(2), 1.0)
    moved = regions.Ball(np.array([3.0, -4.0]), 1.0)
    pair = fixed_pair(0.6)
    assert analysis.scaled_loss(moved, pair) == pytest.approx(
        analysis.scaled_loss(ball, pair), abs=1e-9
    )


def test_scaled_loss_rotation_invariance():
    rng = np.random.default_rng(9)
    pts = rng.standard_normal((8, 3))
    for _ in range(50):
        v, w = rng.standard_normal(3), rng.standard_normal(3)
        pair = sampling.ObjectivePair(w=w, v=v, alpha=0.5, z=np.zeros(3),
                                      model_tag=sampling.PD1)
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        rotated = dataclasses.replace(pair, v=q @ v, w=q @ w)
        a = analysis.scaled_loss(regions.PointSet(pts), pair)
        b = analysis.scaled_loss(regions.PointSet(pts @ q.T), rotated)
        assert b == pytest.approx(a, abs=1e-8)


# --- worst-case bound -----------------------------------------------------

def test_worst_case_bound_spot_value():
    params = analysis.WorstCaseParams(r=0.8, alpha=math.asin(0.6))
    assert analysis.worst_case_bound(params) == pytest.approx(0.4, abs=1e-12)
    assert params.rho == pytest.approx(0.6, abs=1e-15)
    assert params.rho**2 + params.r**2 == pytest.approx(1.0, abs=1e-12)


def test_worst_case_bound_vanishes_with_alpha():
    for alpha in (1e-3, 1e-5, 1e-7):
        params = analysis.WorstCaseParams(r=0.5, alpha=alpha)
        assert 0.0 < analysis.worst_case_bound(params) < 3.0 * alpha


def test_worst_case_bound_attained_by_instance():
    rng = np.random.default_rng(10)
    for _ in range(50):
        alpha = rng.uniform(math.radians(2), math.radians(44))
        r = rng.uniform(math.sin(alpha), math.cos(alpha))
        bound = analysis.worst_case_bound(analysis.WorstCaseParams(r=r, alpha=alpha))
        attained = analysis.scaled_loss(regions.make_worst_case_instance(r),
                                        fixed_pair(alpha))
        assert attained == pytest.approx(bound, abs=1e-9)


def test_worst_case_params_validation():
    with pytest.raises(ValueError, match="hypothesis"):
        analysis.WorstCaseParams(r=0.5, alpha=math.radians(80))  # cos 80 < 0.5
    with pytest.raises(ValueError, match="hypothesis"):
        analysis.WorstCaseParams(r=0.2, alpha=math.radians(30))  # sin 30 > 0.2
    with pytest.raises(ValueError, match="r must"):
        analysis.WorstCaseParams(r=1.0, alpha=0.3)


def test_bound_dominates_random_admissible_regions():
    # the full 1000-region sweep is acceptance criterion 3
    rng = np.random.default_rng(11)
    for _ in range(200):
        region, v, w, r, alpha = random_admissible_hull(rng)
        pair = sampling.ObjectivePair(w=w, v=v, alpha=alpha, z=np.zeros(2),
                                      model_tag=sampling.PD2)
        slos = analysis.scaled_loss(region, pair)
        bound = analysis.worst_case_bound(analysis.WorstCaseParams(r=r, alpha=alpha))
        assert slos <= bound + 1e-9


def test_model_case_value():
    assert analysis.model_case_value(math.radians(60)) == pytest.approx(0.25, abs=1e-15)
    assert analysis.model_case_value(math.acos(0.8)) == pytest.approx(0.1, abs=1e-15)
    assert analysis.model_case_value(1e-9) == pytest.approx(0.0, abs=1e-12)
    for bad in (0.0, math.pi / 2, -1.0):
        with pytest.raises(ValueError):
            analysis.model_case_value(bad)


# --- run_experiment -------------------------------------------------------

def test_experiment_ball_pd2_is_exact_per_trial():
    ball = regions.Ball([0.0, 0.0], 1.0)
    alpha = math.radians(30)
    res = analysis.run_experiment(ball, sampling.pd2_sampler(2, alpha), 2000, 99)
    theory = analysis.model_case_value(alpha)
    assert res.ratio_of_expectations == pytest.approx(theory, abs=1e-12)
    assert res.expectation_of_ratio == pytest.approx(theory, abs=1e-12)
    assert res.stderr_ratio_of_expectations <= 1e-15
    assert res.skipped_trials == 0
    assert res.alpha == alpha
    assert res.trials == 2000


def test_experiment_square_pd1_matches_theory():
    alpha = math.radians(30)
    res = analysis.run_experiment(unit_square(), sampling.pd1_sampler(2, alpha),
                                  20_000, 42)
    theory = analysis.model_case_value(alpha)
    assert abs(res.ratio_of_expectations - theory) <= 4.0 * res.stderr_ratio_of_expectations
    assert 0.0 <= res.expectation_of_ratio <= 1.0


def test_experiment_is_deterministic_and_worker_independent():
    region = unit_square()
    sampler = sampling.pd1_sampler(2, 0.5)
    a = analysis.run_experiment(region, sampler, 3000, 7, workers=1)
    b = analysis.run_experiment(region, sampler, 3000, 7, workers=4)
    c = analysis.run_experiment(region, sampler, 3000, 7, workers=1)
    for x, y in ((a, b), (a, c)):
        assert x.ratio_of_expectations == y.ratio_of_expectations
        assert x.expectation_of_ratio == y.expectation_of_ratio
        assert x.stderr_ratio_of_expectations == y.stderr_ratio_of_expectations
        assert np.array_equal(x.moment_cov, y.moment_cov)


def test_experiment_single_trial_bit_identical():
    region = regions.Ball(np.zeros(3), 1.0)
    sampler = sampling.pd1_sampler(3, 0.7)
    a = analysis.run_experiment(region, sampler, 1, 123)
    b = analysis.run_experiment(region, sampler, 1, 123)
    assert a.mean_loss == b.mean_loss
    assert a.mean_range == b.mean_range


def test_experiment_stream_offset_shifts_trials():
    region = regions.Ball(np.zeros(2), 1.0)
    sampler = sampling.pd1_sampler(2, 0.5)
    base = analysis.run_experiment(region, sampler, 100, 5, stream_offset=0)
    shifted = analysis.run_experiment(region, sampler, 100, 5, stream_offset=100)
    assert base.mean_max_w != shifted.mean_max_w


def test_experiment_degenerate_region_counts_skips():
    singleton = regions.PointSet([(2.0, 2.0)])
    res = analysis.run_experiment(singleton, sampling.pd1_sampler(2, 0.5), 50, 3)
    assert res.skipped_trials == 50
    assert math.isnan(res.expectation_of_ratio)
    assert res.mean_loss == 0.0 and res.mean_range == 0.0


def test_experiment_dimension_mismatch():
    region = regions.Ball(np.zeros(2), 1.0)
    with pytest.raises(ValueError, match="shape"):
        analysis.run_experiment(region, sampling.pd1_sampler(5, 0.5), 10, 1)
    with pytest.raises(TypeError):
        analysis.run_experiment("ball", sampling.pd1_sampler(2, 0.5), 10, 1)
    with pytest.raises(ValueError, match="trial"):
        analysis.run_experiment(region, sampling.pd1_sampler(2, 0.5), 0, 1)


def test_per_trial_scaled_loss_stays_in_unit_interval():
    rng = np.random.default_rng(13)
    backends = [
        regions.Ball(rng.standard_normal(3), 1.5),
        regions.PointSet(rng.standard_normal((9, 3))),
        regions.HullSegmentBall(0.6),
        regions.BinarySet(4),
        unit_square(),
    ]
    for region in backends:
        for i in range(200):
            pair = sampling.sample_pd1(region.dim, 0.6, RngStream(71, i))
            try:
                slos = analysis.scaled_loss(region, pair)
            except analysis.DegenerateRangeError:
                continue
            assert -1e-9 <= slos <= 1.0 + 1e-9


# --- identities and diagnostics --------------------------------------------

def test_identities_hold_on_square():
    res = analysis.run_experiment(unit_square(), sampling.pd2_sampler(2, 0.6),
                                  10_000, 21)
    report = analysis.check_expectation_identities(res)
    assert report.all_passed
    assert len(report.checks) == 3


def test_identities_exact_on_ball_pd2():
    ball = regions.Ball([0.0, 0.0], 1.0)
    res = analysis.run_experiment(ball, sampling.pd2_sampler(2, 0.5), 500, 2)
    report = analysis.check_expectation_identities(res)
    # analytic: every per-trial identity holds to roundoff, so z is pinned at 0
    assert report.checks[1].z == 0.0
    assert report.all_passed


def test_identities_negative_control_mismatched_alpha():
    res = analysis.run_experiment(unit_square(), sampling.pd1_sampler(2, math.radians(30)),
                                  10_000, 22)
    doctored = dataclasses.replace(res, alpha=math.radians(60))
    report = analysis.check_expectation_identities(doctored)
    assert not report.checks[2].passed
    assert abs(report.checks[2].z) > 4.0
    # the range identity does not involve alpha and still holds
    assert report.checks[1].passed


def test_mean_zero_diagnostic_ball_and_square():
    ball = regions.Ball([0.0, 0.0], 1.0)
    z1 = analysis.mean_zero_diagnostic(ball, sampling.pd1_sampler(2, 0.5), 20_000, 31)
    z2 = analysis.mean_zero_diagnostic(unit_square(), sampling.pd2_sampler(2, 0.5),
                                       20_000, 32)
    assert abs(z1) <= 4.0
    assert abs(z2) <= 4.0


def test_mean_zero_diagnostic_negative_control():
    # substituting w for z makes the statistic w @ x_v, whose mean is positive
    ball = regions.Ball([0.0, 0.0], 1.0)
    base = sampling.pd1_sampler(2, 0.5)

    def doctored(stream):
        pair = base(stream)
        return dataclasses.replace(pair, z=pair.w)

    z = analysis.mean_zero_diagnostic(ball, doctored, 5000, 33)
    assert z > 10.0


# --- perturb_binary_experiment ---------------------------------------------

def test_perturb_binary_records_arctan_sigma():
    region = regions.BinarySet(6)
    w = np.array([2.0, -1.5, 0.7, -0.3, 1.1, -2.2])
    res = analysis.perturb_binary_experiment(region, w, 0.25, 200, 5)
    assert abs(res.alpha - math.atan(0.25)) <= 1e-12
    assert res.trials == 200 and res.skipped_trials == 0


def test_perturb_binary_small_sigma_small_loss():
    region = regions.BinarySet(8)
    rng = np.random.default_rng(17)
    w = rng.standard_normal(8)
    res = analysis.perturb_binary_experiment(region, w, 1e-4, 300, 6)
    assert res.expectation_of_ratio <= 1e-3
    bigger = analysis.perturb_binary_experiment(region, w, 0.5, 300, 6)
    assert bigger.expectation_of_ratio > res.expectation_of_ratio


def test_perturb_binary_matches_exhaustive_oracle():
    n = 10
    region = regions.BinarySet(n)
    rng = np.random.default_rng(18)
    w = rng.standard_normal(n)
    while len(set(np.abs(w))) < n:
        w = rng.standard_normal(n)
    sigma, trials, seed = 0.4, 150, 77
    res = analysis.perturb_binary_experiment(region, w, sigma, trials, seed)

    # independent oracle: enumerate all 2^n points per replayed trial
    pts = np.array(list(itertools.product((0, 1), repeat=n)), dtype=float)
    alpha = math.atan(sigma)
    w_hat = w / np.linalg.norm(w)
    losses, ranges = [], []
    w_vals = pts @ w
    max_w, min_w = w_vals.max(), w_vals.min()
    for i in range(trials):
        u = RngStream(seed, i).generator().standard_normal(n) / math.sqrt(n)
        v = w_hat * math.cos(alpha) + u * math.sin(alpha)
        v_vals = pts @ v
        face = w_vals[v_vals >= v_vals.max() - regions.face_tolerance(v_vals.max())]
        losses.append(max_w - face.min())
        ranges.append(max_w - min_w)
    assert res.mean_loss == pytest.approx(np.mean(losses), abs=1e-10)
    assert res.mean_range == pytest.approx(np.mean(ranges), abs=1e-10)
    assert math.isfinite(res.expectation_of_ratio)


def test_perturb_binary_validation():
    region = regions.BinarySet(4)
    with pytest.raises(ValueError, match="sigma"):
        analysis.perturb_binary_experiment(region, np.ones(4), 0.0, 10, 1)
    with pytest.raises(ValueError, match="nonzero"):
        analysis.perturb_binary_experiment(region, np.zeros(4), 0.5, 10, 1)
    with pytest.raises(TypeError):
        analysis.perturb_binary_experiment(regions.Ball(np.zeros(2), 1.0),
                                           np.ones(2), 0.5, 10, 1)


# --- random alpha / swap convergence (small scale) --------------------------

def test_random_alpha_experiment_matches_mean_cos_theory():
    draw = sampling.uniform_alpha(math.radians(20), math.radians(40))
    res = analysis.run_experiment(
        unit_square(), sampling.random_alpha_sampler(2, draw, "pd1"), 20_000, 44
    )
    theory = (1.0 - res.mean_cos_alpha) / 2.0
    assert math.isnan(res.alpha)
    assert abs(res.ratio_of_expectations - theory) <= 4.0 * res.stderr_ratio_of_expectations


def test_swap_experiment_matches_theory():
    alpha = math.radians(35)
    res = analysis.run_experiment(
        unit_square(), sampling.swap_sampler(n=2, alpha=alpha), 20_000, 45
    )
    theory = analysis.model_case_value(alpha)
    assert abs(res.ratio_of_expectations - theory) <= 4.0 * res.stderr_ratio_of_expectations
