"""Random (true, nominal) objective pairs.

Two Gaussian models generate a true objective ``w`` and a nominal objective
``v`` at (or concentrating around) a prescribed angle ``alpha``:

* PD1: ``w``, ``u`` independent standard Gaussian vectors and
  ``v = w cos(alpha) + u sin(alpha)``;
* PD2: the same mixing applied to an exactly orthonormal pair obtained by
  normalizing ``w`` and projecting ``u`` orthogonal to it, so the angle is
  exactly ``alpha``.

Both come with the reverse-perturbation direction
``z = w sin(alpha) - u cos(alpha)``, which makes ``(v, z)`` distributed like
``(w, u)`` and hence ``(v, w) ~ (w, v)``.  A random-angle variant draws
``alpha`` per pair, and the component-swap model replaces each coordinate of
``w`` by a fresh symmetric draw with probability ``1 - cos(alpha)``.

Randomness is organized as counter-style streams: a 64-bit master seed plus a
stream index select an independent Philox stream, so trial ``i`` of an
experiment is reproducible bit-for-bit no matter in which order (or on which
thread) it runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PD1 = "PD1"
PD2 = "PD2"
RANDOM_ALPHA = "RandomAlpha"
SWAP = "Swap"

#: norms below this trigger an internal redraw in PD2 (probability-zero event)
_DEGENERATE_NORM = 1e-300


@dataclass(frozen=True)
class RngStream:
    """One independent, reproducible random stream."""

    master_seed: int
    stream_index: int

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must fit in an unsigned 64-bit integer")
        if int(self.stream_index) < 0:
            raise ValueError("stream_index must be nonnegative")

    def generator(self):
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True, eq=False)
class ObjectivePair:
    """One Monte Carlo draw: true objective w, nominal v, angle, reverse direction z."""

    w: np.ndarray
    v: np.ndarray
    alpha: float
    z: np.ndarray
    model_tag: str


def _check_alpha(alpha):
    alpha = float(alpha)
    if not 0.0 < alpha < math.pi / 2.0:
        raise ValueError(f"alpha must lie strictly inside (0, pi/2), got {alpha}")
    return alpha


def standard_gaussian_vector(n, rng):
    """n independent N(0, 1) draws from the stream."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    return rng.generator().standard_normal(int(n))


def _pd1_from(gen, n, alpha):
    ca, sa = math.cos(alpha), math.sin(alpha)
    w = gen.standard_normal(n)
    u = gen.standard_normal(n)
    return w, u, ca, sa


def sample_pd1(n, alpha, rng):
    """Gaussian pair model: w, u ~ N(0, I) and v = w cos(alpha) + u sin(alpha)."""
    n = int(n)
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")
    alpha = _check_alpha(alpha)
    w, u, ca, sa = _pd1_from(rng.generator(), n, alpha)
    return ObjectivePair(w=w, v=w * ca + u * sa, alpha=alpha, z=w * sa - u * ca,
                         model_tag=PD1)


def _pd2_from(gen, n, alpha):
    ca, sa = math.cos(alpha), math.sin(alpha)
    while True:
        wbar = gen.standard_normal(n)
        nw = np.linalg.norm(wbar)
        if nw < _DEGENERATE_NORM:
            continue
        w = wbar / nw
        ubar = gen.standard_normal(n)
        uhat = ubar - w * (w @ ubar)
        nu = np.linalg.norm(uhat)
        if nu < _DEGENERATE_NORM:
            continue
        return w, uhat / nu, ca, sa


def sample_pd2(n, alpha, rng):
    """Exact-angle model: unit w, unit u orthogonal to w, v = w cos(alpha) + u sin(alpha)."""
    n = int(n)
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")
    alpha = _check_alpha(alpha)
    w, u, ca, sa = _pd2_from(rng.generator(), n, alpha)
    return ObjectivePair(w=w, v=w * ca + u * sa, alpha=alpha, z=w * sa - u * ca,
                         model_tag=PD2)


def sample_random_alpha(n, alpha_sampler, base, rng):
    """Draw alpha from ``alpha_sampler``, then a pair from PD1/PD2 at that angle.

    ``alpha_sampler`` is called with the stream's generator (so a point-mass
    sampler that ignores it reproduces the fixed-angle model draw for draw);
    it must return angles inside (0, pi/2).  ``base`` is ``"pd1"`` or ``"pd2"``.
    """
    n = int(n)
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")
    if base not in ("pd1", "pd2"):
        raise ValueError(f"base must be 'pd1' or 'pd2', got {base!r}")
    gen = rng.generator()
    alpha = float(alpha_sampler(gen))
    if not 0.0 < alpha < math.pi / 2.0:
        raise ValueError(
            f"alpha sampler produced {alpha}, outside the open interval (0, pi/2)"
        )
    draw = _pd1_from if base == "pd1" else _pd2_from
    w, u, ca, sa = draw(gen, n, alpha)
    return ObjectivePair(w=w, v=w * ca + u * sa, alpha=alpha, z=w * sa - u * ca,
                         model_tag=RANDOM_ALPHA)


def point_alpha(alpha):
    """Degenerate angle distribution: always ``alpha``."""
    alpha = _check_alpha(alpha)
    return lambda gen: alpha


def uniform_alpha(low, high):
    """Uniform angle distribution on [low, high] (radians, inside (0, pi/2))."""
    low, high = _check_alpha(low), _check_alpha(high)
    if low > high:
        raise ValueError(f"need low <= high, got [{low}, {high}]")
    return lambda gen: gen.uniform(low, high)


def gaussian_density(gen):
    """Standard normal scalar draw; default component density for the swap model."""
    return gen.standard_normal()


def sample_swap(densities, alpha, rng):
    """Component-swap model.

    Each coordinate draws ``w_j`` and ``u_j`` independently from the (symmetric)
    density ``densities[j]``; the nominal objective keeps ``v_j = w_j`` with
    probability cos(alpha) and takes the fresh draw ``u_j`` otherwise.  The
    reverse direction is ``z = w + u - v``.
    """
    n = len(densities)
    if n < 1:
        raise ValueError("need at least one component density")
    alpha = _check_alpha(alpha)
    gen = rng.generator()
    w = np.array([float(d(gen)) for d in densities])
    u = np.array([float(d(gen)) for d in densities])
    keep = gen.random(n) < math.cos(alpha)
    v = np.where(keep, w, u)
    # z componentwise takes whichever of w, u the nominal objective dropped,
    # which keeps the identity z + v = w + u exact
    z = np.where(keep, u, w)
    return ObjectivePair(w=w, v=v, alpha=alpha, z=z, model_tag=SWAP)


def angle_between(a, b):
    """Angle in [0, pi] between two nonzero vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("angle is undefined for zero vectors")
    # roundoff can push the cosine infinitesimally outside [-1, 1]
    return float(np.arccos(np.clip((a @ b) / (na * nb), -1.0, 1.0)))


def pd1_sampler(n, alpha):
    """Trial sampler (RngStream -> ObjectivePair) for PD1 at fixed alpha."""
    n, alpha = int(n), _check_alpha(alpha)
    return lambda stream: sample_pd1(n, alpha, stream)


def pd2_sampler(n, alpha):
    """Trial sampler for PD2 at fixed alpha."""
    n, alpha = int(n), _check_alpha(alpha)
    return lambda stream: sample_pd2(n, alpha, stream)


def random_alpha_sampler(n, alpha_sampler, base="pd1"):
    """Trial sampler with a per-trial random angle."""
    n = int(n)
    return lambda stream: sample_random_alpha(n, alpha_sampler, base, stream)


def swap_sampler(n=None, alpha=None, densities=None):
    """Trial sampler for the component-swap model (default: Gaussian components)."""
    if densities is None:
        if n is None:
            raise ValueError("provide either densities or n")
        densities = [gaussian_density] * int(n)
    alpha = _check_alpha(alpha)
    return lambda stream: sample_swap(densities, alpha, stream)
