import math
from pathlib import Path

import numpy as np
import pytest

from objloss import lp, regions

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def toy_mps_path():
    return str(DATA_DIR / "toy.mps")


@pytest.fixture(scope="session")
def poly10_mps_path():
    return str(DATA_DIR / "poly10.mps")


def unit_square():
    return regions.Polytope(lp.box([0.0, 0.0], [1.0, 1.0]))


def random_small_model(rng, n_lo=2, n_hi=4, m_lo=3, m_hi=8):
    """Random bounded LP with a box so vertex enumeration stays cheap.

    Rows are anchored around an interior point so most draws are feasible;
    a few rows stay unanchored, which keeps some infeasible instances in the
    family.
    """
    n = int(rng.integers(n_lo, n_hi + 1))
    m = int(rng.integers(m_lo, m_hi + 1))
    x0 = rng.uniform(-1.0, 1.0, size=n)
    A = rng.standard_normal((m, n))
    b = np.empty(m)
    senses = []
    for i in range(m):
        anchored = rng.random() < 0.9
        u = rng.random()
        if u < 0.08:
            senses.append(lp.EQ)
            b[i] = A[i] @ x0 if anchored else rng.standard_normal()
        elif u < 0.54:
            senses.append(lp.LE)
            b[i] = A[i] @ x0 + rng.uniform(0.1, 1.5) if anchored else rng.standard_normal()
        else:
            senses.append(lp.GE)
            b[i] = A[i] @ x0 - rng.uniform(0.1, 1.5) if anchored else rng.standard_normal()
    return lp.LpModel(A, tuple(senses), b, -2.0 * np.ones(n), 2.0 * np.ones(n))


class BallPointsHull(regions.Region):
    """conv(r B^2 and finitely many points): custom backend used by the
    bound-dominance checks.  Same candidate-maximizer logic as
    HullSegmentBall, with arbitrary points."""

    def __init__(self, r, points):
        self.r = float(r)
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.dim = self.points.shape[1]

    def _candidates(self, v):
        nv = np.linalg.norm(v)
        pts = np.vstack([(self.r / nv) * v, self.points])
        return pts, pts @ v

    def support(self, v):
        v = self._direction(v, allow_zero=False)
        pts, vals = self._candidates(v)
        i = int(np.argmax(vals))
        return regions.SupportResult(float(vals[i]), pts[i])

    def worst_over_optimal_face(self, v, w):
        v = self._direction(v, allow_zero=False)
        w = self._direction(w)
        pts, vals = self._candidates(v)
        best = float(np.max(vals))
        keep = vals >= best - regions.face_tolerance(best)
        return float(np.min(pts[keep] @ w))


def random_admissible_hull(rng):
    """(region, v, w, r, alpha) with r B^2 <= C <= B^2 and sin a <= r <= cos a."""
    alpha = rng.uniform(math.radians(1.0), math.radians(44.9))
    r = rng.uniform(math.sin(alpha), math.cos(alpha))
    k = int(rng.integers(1, 7))
    angles = rng.uniform(0.0, 2.0 * math.pi, size=k)
    pts = np.column_stack([np.cos(angles), np.sin(angles)])
    theta = rng.uniform(0.0, 2.0 * math.pi)
    rot = np.array(
        [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
    )
    v = rot @ np.array([0.0, 1.0])
    w = rot @ np.array([math.sin(alpha), math.cos(alpha)])
    return BallPointsHull(r, pts), v, w, r, alpha
