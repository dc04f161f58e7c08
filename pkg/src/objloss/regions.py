"""Compact feasible regions and the three queries the loss analysis needs.

Every region answers:

* ``support(v)``   -- max of ``v @ x`` over the region, with one maximizer;
* ``range_of(w)``  -- ``max(w) - min(w)``;
* ``worst_over_optimal_face(v, w)`` -- min of ``w @ x`` over the set of
  maximizers of ``v`` (the "optimal face"), i.e. the value an unlucky
  tie-break could leave you with.

Backends: Euclidean balls, finite point sets, LP-defined polytopes, the
extremal hull-of-segment-and-ball instance, and binary 0/1 sets with an
optional knapsack constraint.  Regions are immutable after construction and
safe to query concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lp


class UnboundedRegionError(RuntimeError):
    """A support query found the region unbounded in the query direction."""


@dataclass(frozen=True, eq=False)
class SupportResult:
    value: float
    maximizer: np.ndarray


def face_tolerance(max_value):
    """Membership slack used when collecting maximizers of a finite candidate set."""
    return 1e-7 * (1.0 + abs(max_value))


class Region:
    """Base class; concrete backends implement ``support`` and the face query."""

    dim: int

    def support(self, v) -> SupportResult:
        raise NotImplementedError

    def worst_over_optimal_face(self, v, w) -> float:
        raise NotImplementedError

    def range_of(self, w) -> float:
        """max(w) - min(w); always nonnegative up to roundoff."""
        return self.support(w).value + self.support(-self._direction(w)).value

    def _direction(self, v, allow_zero=True):
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            raise ValueError(f"direction has shape {v.shape}, expected ({self.dim},)")
        if not np.all(np.isfinite(v)):
            raise ValueError("direction must be finite")
        if not allow_zero and not np.any(v):
            raise ValueError("direction must be nonzero for this query")
        return v

    def _face_stats(self, v, w):
        """(max over v, face minimum of w); hook for backends that can share work."""
        return self.support(v).value, self.worst_over_optimal_face(v, w)


class Ball(Region):
    """Euclidean ball {x: ||x - center|| <= radius}."""

    def __init__(self, center, radius):
        center = np.asarray(center, dtype=float)
        if center.ndim != 1 or center.size == 0 or not np.all(np.isfinite(center)):
            raise ValueError("center must be a finite 1-D vector")
        radius = float(radius)
        if not radius > 0.0:
            raise ValueError(f"radius must be positive, got {radius}")
        self.center = center
        self.radius = radius
        self.dim = len(center)

    def support(self, v):
        v = self._direction(v)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return SupportResult(float(v @ self.center), self.center.copy())
        x = self.center + (self.radius / nv) * v
        return SupportResult(float(v @ self.center) + self.radius * nv, x)

    def worst_over_optimal_face(self, v, w):
        # the maximizer on a ball is unique, so the face is that single point
        v = self._direction(v, allow_zero=False)
        w = self._direction(w)
        x = self.center + (self.radius / np.linalg.norm(v)) * v
        return float(w @ x)


class PointSet(Region):
    """Finite set of points; support and face queries scan all of them."""

    def __init__(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.size == 0:
            raise ValueError("point set must be nonempty")
        if pts.ndim != 2 or not np.all(np.isfinite(pts)):
            raise ValueError("points must form a finite 2-D array")
        self.points = pts
        self.dim = pts.shape[1]

    def support(self, v):
        v = self._direction(v)
        vals = self.points @ v
        i = int(np.argmax(vals))
        return SupportResult(float(vals[i]), self.points[i].copy())

    def worst_over_optimal_face(self, v, w):
        v = self._direction(v, allow_zero=False)
        w = self._direction(w)
        vals = self.points @ v
        best = float(np.max(vals))
        on_face = vals >= best - face_tolerance(best)
        return float(np.min(self.points[on_face] @ w))


class Polytope(Region):
    """Region defined by an :class:`objloss.lp.LpModel`.

    Compactness is checked lazily: a support query in an unbounded direction
    raises :class:`UnboundedRegionError`.
    """

    def __init__(self, model):
        if not isinstance(model, lp.LpModel):
            raise TypeError("Polytope expects an LpModel")
        self.model = model
        self.dim = model.num_vars

    def _solved(self, v, sense):
        sol = lp.solve_lp(self.model, v, sense)
        if sol.status is lp.LpStatus.UNBOUNDED:
            raise UnboundedRegionError(
                "polytope is unbounded in the query direction; "
                "the region is not compact"
            )
        if sol.status is lp.LpStatus.INFEASIBLE:
            raise ValueError("polytope region is empty")
        return sol

    def support(self, v):
        v = self._direction(v)
        sol = self._solved(v, "max")
        return SupportResult(sol.value, sol.point)

    def worst_over_optimal_face(self, v, w):
        return self._face_stats(v, w)[1]

    def _face_stats(self, v, w):
        v = self._direction(v, allow_zero=False)
        w = self._direction(w)
        stage1 = self._solved(v, "max")
        stage2 = lp._second_stage_from(self.model, v, stage1, w)
        if stage2.status is not lp.LpStatus.OPTIMAL:
            raise UnboundedRegionError(
                "optimal face is unbounded in the secondary direction"
            )
        return stage1.value, stage2.value


class HullSegmentBall(Region):
    """conv(rB^2 and the two points (+-rho, r)), rho = sqrt(1 - r^2).

    This is the planar instance attaining the worst-case scaled-loss bound:
    it is wedged between rB^2 and the unit ball, and its top face is the flat
    segment from (-rho, r) to (rho, r).
    """

    def __init__(self, r):
        r = float(r)
        if not 0.0 < r < 1.0:
            raise ValueError(f"r must lie strictly between 0 and 1, got {r}")
        self.r = r
        self.rho = float(np.sqrt(1.0 - r * r))
        self.dim = 2

    def _candidates(self, v):
        # support of a hull of a ball and two points: best of the three pieces
        nv = np.linalg.norm(v)
        ball_point = (self.r / nv) * v
        left = np.array([-self.rho, self.r])
        right = np.array([self.rho, self.r])
        pts = np.stack([ball_point, left, right])
        return pts, pts @ v

    def support(self, v):
        v = self._direction(v, allow_zero=False)
        pts, vals = self._candidates(v)
        i = int(np.argmax(vals))
        return SupportResult(float(vals[i]), pts[i])

    def worst_over_optimal_face(self, v, w):
        # a linear function over the face is minimized at one of the exposed
        # candidate maximizers, so scanning the (at most three) of them suffices
        v = self._direction(v, allow_zero=False)
        w = self._direction(w)
        pts, vals = self._candidates(v)
        best = float(np.max(vals))
        on_face = vals >= best - face_tolerance(best)
        return float(np.min(pts[on_face] @ w))


class BinarySet(Region):
    """All 0/1 vectors of length n, optionally cut by a knapsack ``a @ x <= c``.

    Unconstrained queries use the closed-form sign rule; with a constraint the
    2^n points are enumerated (n is capped at 25).
    """

    MAX_N = 25

    def __init__(self, n, weights=None, capacity=None):
        n = int(n)
        if not 1 <= n <= self.MAX_N:
            raise ValueError(f"n must be within [1, {self.MAX_N}], got {n}")
        if (weights is None) != (capacity is None):
            raise ValueError("weights and capacity must be supplied together")
        self.dim = n
        self.weights = None
        self.capacity = None
        self._feasible = None
        if weights is not None:
            weights = np.asarray(weights, dtype=float)
            if weights.shape != (n,) or not np.all(np.isfinite(weights)):
                raise ValueError(f"weights must be a finite vector of length {n}")
            if np.any(weights < 0.0):
                raise ValueError("knapsack weights must be nonnegative")
            capacity = float(capacity)
            if capacity < 0.0:
                raise ValueError("capacity must be nonnegative (else the set is empty)")
            self.weights = weights
            self.capacity = capacity
            self._feasible = _subset_sums(weights) <= capacity

    def _bits(self, mask):
        return ((mask >> np.arange(self.dim)) & 1).astype(float)

    def support(self, v):
        v = self._direction(v)
        if self.weights is None:
            on = v > 0.0
            return SupportResult(float(v[on].sum()), on.astype(float))
        vals = _subset_sums(v)
        vals[~self._feasible] = -np.inf
        mask = int(np.argmax(vals))  # smallest qualifying bitmask, deterministic
        return SupportResult(float(vals[mask]), self._bits(mask))

    def worst_over_optimal_face(self, v, w):
        v = self._direction(v, allow_zero=False)
        w = self._direction(w)
        if self.weights is None:
            # maximizers: x_j = 1 for v_j > 0, free for v_j == 0; the face
            # minimum of w flips every free coordinate with negative w_j to 1
            forced = v > 0.0
            free = v == 0.0
            return float(w[forced].sum() + w[free & (w < 0.0)].sum())
        vals = _subset_sums(v)
        vals[~self._feasible] = -np.inf
        best = float(np.max(vals))
        on_face = vals >= best - face_tolerance(best)
        wvals = _subset_sums(w)
        return float(np.min(wvals[on_face]))


def _subset_sums(vec):
    """dot(vec, bits(mask)) for every mask in [0, 2^n); bit j selects vec[j]."""
    sums = np.zeros(1)
    for x in vec:
        sums = np.concatenate([sums, sums + x])
    return sums


def make_worst_case_instance(r):
    """The planar region attaining the worst-case scaled-loss bound for this r."""
    return HullSegmentBall(r)


def image_point_set(points):
    """Region over precomputed multi-criteria images ``y = (f_1(x), ..., f_k(x))``.

    The caller evaluates the criteria; optimizing weighted sums over the
    original problem is equivalent to optimizing the weights over this set.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise ValueError("need at least one image point")
    return PointSet(pts)
