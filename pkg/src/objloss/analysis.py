"""Loss functionals, the worst-case bound, and the Monte Carlo engine.

Definitions, for a compact region C and objectives v (nominal, the one that
gets optimized) and w (true):

* ``loss(v, w)``   = max(w) - min{w @ x : x in C, v @ x = max(v)} -- the value
  forgone when an unlucky maximizer of the nominal objective is implemented;
* ``scaled_loss``  = loss / range(w), a dimensionless number in [0, 1].

For the Gaussian pair models the ratio of expectations
E[loss] / E[range] equals (1 - cos(alpha)) / 2 for every compact region;
``run_experiment`` estimates both that ratio and the (unpinned) expectation of
the per-trial ratio, with delta-method standard errors, using one independent
random stream per trial so results are reproducible bit-for-bit at any worker
count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import fsum

import numpy as np

from .regions import BinarySet, Region
from .sampling import RngStream

#: relative range threshold below which a trial counts as degenerate
DEGENERATE_RANGE_RTOL = 1e-14
#: slack allowed on the worst-case-bound hypothesis sin(a) <= r <= cos(a);
#: wide enough to admit angles rounded to hundredths of a degree at the boundary
_HYPOTHESIS_SLACK = 1e-5


class DegenerateRangeError(ValueError):
    """range(w) is numerically zero, so the scaled loss is undefined."""


@dataclass(frozen=True)
class WorstCaseParams:
    """Parameters (r, alpha) of the worst-case bound, with rho = sqrt(1 - r^2).

    Valid only under the bound's hypothesis sin(alpha) <= r <= cos(alpha).
    """

    r: float
    alpha: float
    rho: float = field(init=False)

    def __post_init__(self):
        r, alpha = float(self.r), float(self.alpha)
        if not 0.0 < r < 1.0:
            raise ValueError(f"r must lie strictly between 0 and 1, got {r}")
        if not 0.0 < alpha < math.pi / 2.0:
            raise ValueError(f"alpha must lie inside (0, pi/2), got {alpha}")
        if math.sin(alpha) > r + _HYPOTHESIS_SLACK or r > math.cos(alpha) + _HYPOTHESIS_SLACK:
            raise ValueError(
                f"hypothesis sin(alpha) <= r <= cos(alpha) violated: "
                f"sin={math.sin(alpha)!r}, r={r!r}, cos={math.cos(alpha)!r}"
            )
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "rho", math.sqrt(1.0 - r * r))


def model_case_value(alpha):
    """Scaled loss of the unit-ball model case: (1 - cos(alpha)) / 2."""
    alpha = float(alpha)
    if not 0.0 < alpha < math.pi / 2.0:
        raise ValueError(f"alpha must lie inside (0, pi/2), got {alpha}")
    return (1.0 - math.cos(alpha)) / 2.0


def worst_case_bound(params):
    """Tight upper bound on the scaled loss when r*B^n <= C <= B^n.

    Equals ``2 rho sin(a) / (r (1 + cos(a)) + rho sin(a))`` and is attained by
    :func:`objloss.regions.make_worst_case_instance`.
    """
    sa, ca = math.sin(params.alpha), math.cos(params.alpha)
    return 2.0 * params.rho * sa / (params.r * (1.0 + ca) + params.rho * sa)


def loss(region, pair):
    """True-objective value forgone by the unluckiest nominal-optimal point.

    Can dip a hair below zero (never past the face tolerance) through roundoff.
    """
    max_w = region.support(pair.w).value
    return max_w - region.worst_over_optimal_face(pair.v, pair.w)


def scaled_loss(region, pair):
    """loss / range(w); raises DegenerateRangeError when the range vanishes."""
    max_w = region.support(pair.w).value
    ran = region.range_of(pair.w)
    if ran <= DEGENERATE_RANGE_RTOL * (1.0 + abs(max_w)):
        raise DegenerateRangeError(
            f"range of the true objective is {ran}; scaled loss undefined"
        )
    return loss(region, pair) / ran


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    """Aggregates of one Monte Carlo experiment.

    ``ratio_of_expectations`` is mean loss over mean range (the quantity
    pinned at (1 - cos(alpha))/2 for the Gaussian models);
    ``expectation_of_ratio`` averages the per-trial scaled loss over trials
    with a nonzero range.  ``alpha`` is NaN when the angle varied per trial.
    ``moment_cov`` is the 4x4 sample covariance of the per-trial vector
    (loss, range, max_w, max_v), from which the standard errors derive.
    """

    alpha: float
    trials: int
    mean_loss: float
    mean_range: float
    mean_max_w: float
    mean_max_v: float
    ratio_of_expectations: float
    expectation_of_ratio: float
    stderr_ratio_of_expectations: float
    stderr_expectation_of_ratio: float
    skipped_trials: int
    mean_cos_alpha: float
    moment_cov: np.ndarray


# per-trial stat layout
_LOSS, _RANGE, _MAXW, _MAXV, _SLOS, _COSA, _ALPHA = range(7)


def _region_trial_stats(region, v, w):
    """(loss, range, max_w, max_v, slos) for one objective pair; slos NaN if degenerate."""
    max_w = region.support(w).value
    ran = max_w + region.support(-w).value
    max_v, face = region._face_stats(v, w)
    los = max_w - face
    if los < 0.0:
        # the face minimum can exceed max(w) only through roundoff
        if los < -1e-7 * (1.0 + abs(max_w)):
            raise ArithmeticError(
                f"face minimum exceeds the support value by {-los}; "
                "region backend is inconsistent"
            )
        los = 0.0
    if ran > DEGENERATE_RANGE_RTOL * (1.0 + abs(max_w)):
        return los, ran, max_w, max_v, los / ran
    # degenerate trials contribute zeros to the means and skip the ratio
    return 0.0, 0.0, max_w, max_v, math.nan


def _fill(trial_fn, master_seed, stream_offset, lo, hi, out):
    for i in range(lo, hi):
        out[i] = trial_fn(RngStream(master_seed, stream_offset + i))


def _run_trials(trial_fn, trials, master_seed, workers, stream_offset, width):
    """Evaluate ``trial_fn`` on streams offset..offset+trials-1, in index order.

    Rows land in a preallocated array regardless of which worker computed
    them, so the downstream (ordered, compensated) reduction is identical for
    every worker count.
    """
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    out = np.empty((trials, width)) if width > 1 else np.empty(trials)
    if workers <= 1:
        _fill(trial_fn, master_seed, stream_offset, 0, trials, out)
        return out
    chunk = max(64, -(-trials // (int(workers) * 8)))
    spans = [(lo, min(lo + chunk, trials)) for lo in range(0, trials, chunk)]
    with ThreadPoolExecutor(max_workers=int(workers)) as pool:
        futures = [
            pool.submit(_fill, trial_fn, master_seed, stream_offset, lo, hi, out)
            for lo, hi in spans
        ]
        for f in futures:
            f.result()
    return out


def _column_means(stats):
    n = stats.shape[0]
    return [fsum(stats[:, j]) / n for j in range(stats.shape[1])]


def _aggregate(stats):
    """Build an ExperimentResult from the per-trial stat rows."""
    trials = stats.shape[0]
    means = _column_means(stats[:, : _MAXV + 1])
    mean_loss, mean_range, mean_max_w, mean_max_v = means

    centered = stats[:, : _MAXV + 1] - np.array(means)
    cov = np.empty((4, 4))
    denom = trials - 1 if trials > 1 else 1
    for a in range(4):
        for b in range(a, 4):
            cov[a, b] = cov[b, a] = fsum(centered[:, a] * centered[:, b]) / denom

    if mean_range > 0.0:
        roe = mean_loss / mean_range
        var_roe = (
            cov[_LOSS, _LOSS]
            - 2.0 * roe * cov[_LOSS, _RANGE]
            + roe * roe * cov[_RANGE, _RANGE]
        ) / (trials * mean_range * mean_range)
        stderr_roe = math.sqrt(max(var_roe, 0.0))
    else:
        roe, stderr_roe = math.nan, math.nan

    slos = stats[:, _SLOS]
    valid = slos[~np.isnan(slos)]
    skipped = trials - len(valid)
    if len(valid) > 0:
        eor = fsum(valid) / len(valid)
        if len(valid) > 1:
            var = fsum((valid - eor) ** 2) / (len(valid) - 1)
            stderr_eor = math.sqrt(var / len(valid))
        else:
            stderr_eor = math.nan
    else:
        eor, stderr_eor = math.nan, math.nan

    alphas = stats[:, _ALPHA]
    alpha = float(alphas[0]) if float(alphas.min()) == float(alphas.max()) else math.nan

    return ExperimentResult(
        alpha=alpha,
        trials=trials,
        mean_loss=mean_loss,
        mean_range=mean_range,
        mean_max_w=mean_max_w,
        mean_max_v=mean_max_v,
        ratio_of_expectations=roe,
        expectation_of_ratio=eor,
        stderr_ratio_of_expectations=stderr_roe,
        stderr_expectation_of_ratio=stderr_eor,
        skipped_trials=skipped,
        mean_cos_alpha=fsum(stats[:, _COSA]) / trials,
        moment_cov=cov,
    )


def run_experiment(region, sampler, trials, master_seed, *, workers=1, stream_offset=0):
    """Monte Carlo estimate of the loss statistics of ``region`` under ``sampler``.

    Args:
        region: any Region backend.
        sampler: callable RngStream -> ObjectivePair (see objloss.sampling).
        trials: number of pairs; trial i draws from stream ``stream_offset + i``.
        master_seed: 64-bit seed shared by all streams.
        workers: thread count; the result is bit-identical for any value.
        stream_offset: lets sweeps assign disjoint streams to each grid point.
    """
    if not isinstance(region, Region):
        raise TypeError("region must be a Region backend")

    def trial(stream):
        pair = sampler(stream)
        los, ran, max_w, max_v, slos = _region_trial_stats(region, pair.v, pair.w)
        return los, ran, max_w, max_v, slos, math.cos(pair.alpha), pair.alpha

    stats = _run_trials(trial, int(trials), master_seed, workers, stream_offset, 7)
    return _aggregate(stats)


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    difference: float
    stderr: float
    z: float
    passed: bool


@dataclass(frozen=True)
class IdentityReport:
    checks: tuple

    @property
    def all_passed(self):
        return all(c.passed for c in self.checks)


def _zscore(diff, var):
    if var <= 0.0:
        z = 0.0 if diff == 0.0 else math.inf
    else:
        z = diff / math.sqrt(var)
    return z


def check_expectation_identities(result, z_limit=4.0):
    """z-scores of the three expectation identities of the Gaussian models.

    Checks, against the per-trial covariances stored in ``result``:
    mean max(v) = mean max(w);  mean range(w) = 2 mean max(w);
    mean loss = (1 - cos(alpha)) mean max(w).

    Meaningful from a few hundred trials up (documented contract: >= 100).
    """
    cov = result.moment_cov
    t = result.trials

    d1 = result.mean_max_v - result.mean_max_w
    v1 = (cov[_MAXV, _MAXV] + cov[_MAXW, _MAXW] - 2.0 * cov[_MAXW, _MAXV]) / t

    d2 = result.mean_range - 2.0 * result.mean_max_w
    v2 = (cov[_RANGE, _RANGE] + 4.0 * cov[_MAXW, _MAXW] - 4.0 * cov[_RANGE, _MAXW]) / t

    c = 1.0 - (math.cos(result.alpha) if not math.isnan(result.alpha)
               else result.mean_cos_alpha)
    d3 = result.mean_loss - c * result.mean_max_w
    v3 = (cov[_LOSS, _LOSS] + c * c * cov[_MAXW, _MAXW] - 2.0 * c * cov[_LOSS, _MAXW]) / t

    checks = []
    for name, d, v in (
        ("max_v_equals_max_w", d1, v1),
        ("range_equals_2_max_w", d2, v2),
        ("loss_equals_(1-cos_alpha)_max_w", d3, v3),
    ):
        z = _zscore(d, v)
        checks.append(
            IdentityCheck(
                name=name,
                difference=d,
                stderr=math.sqrt(v) if v > 0.0 else 0.0,
                z=z,
                passed=abs(z) <= z_limit,
            )
        )
    return IdentityReport(checks=tuple(checks))


def mean_zero_diagnostic(region, sampler, trials, master_seed, *, workers=1,
                         stream_offset=0):
    """z-score of the sample mean of ``z @ x_v`` (should be ~N(0,1)).

    ``x_v`` is the reported maximizer of the nominal objective; the statistic
    has mean zero whenever that maximizer is almost surely unique, which holds
    off a measure-zero set for every backend here.
    """
    if not isinstance(region, Region):
        raise TypeError("region must be a Region backend")

    def trial(stream):
        pair = sampler(stream)
        return float(pair.z @ region.support(pair.v).maximizer)

    vals = _run_trials(trial, int(trials), master_seed, workers, stream_offset, 1)
    n = len(vals)
    mean = fsum(vals) / n
    var = fsum((vals - mean) ** 2) / (n - 1) if n > 1 else 0.0
    return _zscore(mean, var / n)


def perturb_binary_experiment(region, w, sigma, trials, master_seed, *, workers=1,
                              stream_offset=0):
    """Explicit-perturbation experiment on a binary region.

    The true objective ``w`` stays fixed; each trial optimizes the perturbed
    objective ``v = (w/||w||) cos(alpha) + u sin(alpha)`` with
    ``alpha = arctan(sigma)`` and ``u`` a standard Gaussian vector scaled by
    ``1/sqrt(n)`` (unit length on average).  Reports the same loss/range
    statistics as :func:`run_experiment`, measured against the fixed truth.
    """
    if not isinstance(region, BinarySet):
        raise TypeError("perturb_binary_experiment expects a BinarySet region")
    sigma = float(sigma)
    if not sigma > 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    w = np.asarray(w, dtype=float)
    if w.shape != (region.dim,) or not np.any(w):
        raise ValueError(f"w must be a nonzero vector of length {region.dim}")

    alpha = math.atan(sigma)
    ca, sa = math.cos(alpha), math.sin(alpha)
    w_hat = w / np.linalg.norm(w)
    inv_sqrt_n = 1.0 / math.sqrt(region.dim)

    def trial(stream):
        u = stream.generator().standard_normal(region.dim) * inv_sqrt_n
        v = w_hat * ca + u * sa
        los, ran, max_w, max_v, slos = _region_trial_stats(region, v, w)
        return los, ran, max_w, max_v, slos, ca, alpha

    stats = _run_trials(trial, int(trials), master_seed, workers, stream_offset, 7)
    return _aggregate(stats)
