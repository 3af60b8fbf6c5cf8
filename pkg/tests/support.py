"""Shared helpers for the test suite: random instances, member sampling,
and per-invocation budget checks applied to recorded projection calls."""

import math

import numpy as np

from pfoco.geometry import (
    Ball,
    Box,
    L1Ball,
    Polytope,
    Simplex,
    exact_project,
    loo_query,
    squeeze,
)

SET_KINDS = ("ball", "box", "simplex", "l1", "polytope")
INTERIOR_KINDS = ("ball", "box", "l1", "polytope")  # r > 0


def make_polytope(rng, n, extra=4):
    """Bounded-by-construction polytope: box faces plus random cuts."""
    rows, offs = [], []
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        rows += [e, -e]
        offs += [rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0)]
    for _ in range(extra):
        a = rng.standard_normal(n)
        a /= np.linalg.norm(a)
        rows.append(a)
        offs.append(rng.uniform(0.4, 1.8))
    return Polytope(np.stack(rows), np.array(offs))


def random_set(rng, kind):
    if kind == "ball":
        return Ball(int(rng.integers(2, 8)), rng.uniform(0.3, 3.0))
    if kind == "box":
        n = int(rng.integers(2, 8))
        return Box(-rng.uniform(0.1, 2.0, n), rng.uniform(0.1, 2.0, n))
    if kind == "simplex":
        return Simplex(int(rng.integers(2, 8)), rng.uniform(0.5, 2.0))
    if kind == "l1":
        return L1Ball(int(rng.integers(2, 8)), rng.uniform(0.5, 2.5))
    if kind == "polytope":
        return make_polytope(rng, int(rng.integers(2, 6)))
    raise ValueError(kind)


def sample_members(set_, rng, count, mix=8):
    """Random members as convex combinations of LOO vertices."""
    verts = np.stack([set_.loo(rng.standard_normal(set_.n)) for _ in range(mix)])
    weights = rng.dirichlet(np.ones(mix), size=count)
    return weights @ verts


def assert_separator_valid(set_, y, g, slack=1e-9):
    """A valid separator has (y - z) @ g > 0 for all z; the worst z is
    the LOO vertex maximizing z @ g."""
    z_star = set_.loo(-np.asarray(g))
    margin = float((y - z_star) @ g)
    assert margin > -slack, f"separator fails at its worst vertex: margin {margin}"


# ----------------------------------------------------------------------
# budget checks for recorded projection invocations


def fw_iteration_ceiling(R, eps):
    return max(math.ceil(27.0 * R * R / eps - 2.0), 1)


def check_cip_loo_record(rec):
    """Per-invocation certified ceilings for the LOO-based projection."""
    eps = rec.eps
    d2 = rec.input_dist_sq
    for it in rec.fw_iterations:
        ceil_fw = fw_iteration_ceiling(rec.set_R, eps)
        assert it <= ceil_fw, f"inner loop used {it} LOO calls, ceiling {ceil_fw}"
    if d2 <= 3.0 * eps:
        assert rec.outer_iterations == 0
    else:
        outer_bound = max(d2 * (d2 - eps) / (4.0 * eps * eps) + 1.0, 1.0)
        assert rec.outer_iterations <= outer_bound + 1e-9, (
            f"outer iterations {rec.outer_iterations} exceed {outer_bound}"
        )
        # pull-anchor distances never grow (requires 3 eps < d2, which holds here)
        d0 = math.sqrt(d2)
        for dist in rec.anchor_dists:
            assert dist <= d0 + 1e-9


def check_cip_so_record(rec, set_):
    """Per-invocation certified ceiling for the SO-based projection,
    measured against exact projections onto the doubly squeezed set."""
    delta, dp, r = rec.delta, rec.delta_prime, rec.r
    target = squeeze(set_, (1.0 - delta) * (1.0 - dp / r))
    gain = delta * delta * (r - dp) * (r - dp)
    d0 = np.linalg.norm(rec.y0 - exact_project(target, rec.y0))
    dret = np.linalg.norm(rec.y - exact_project(target, rec.y))
    bound = (d0 * d0 - dret * dret) / gain + 1.0
    assert rec.so_calls <= bound + 1e-6, f"SO calls {rec.so_calls} exceed {bound}"


def min_over_set_linear(set_, c, counters=None):
    """Exact minimum of c @ x over the set (one LOO call)."""
    v = loo_query(set_, c, counters)
    return float(c @ v), v


# ----------------------------------------------------------------------
# Monte-Carlo statistics for the one-point gradient estimator


def estimate_gradient_mc(loss, x, delta, samples, rng):
    """Empirical mean and per-coordinate SEM of the one-point estimator."""
    from pfoco.losses import sample_unit_sphere

    U = sample_unit_sphere(rng, loss.n, samples)
    vals = loss.values_batch(np.asarray(x) + delta * U)
    G = (loss.n / delta) * vals[:, None] * U
    return G.mean(axis=0), G.std(axis=0, ddof=1) / math.sqrt(samples)


def smoothed_fd_gradient(loss, x, delta, h, samples, seed):
    """Central finite differences of the MC-smoothed value.

    Common random numbers: both sides of each difference reuse the same
    sample stream, so the smoothing noise cancels and only the bias of
    the difference quotient remains."""
    from pfoco.losses import smoothed_value_mc

    x = np.asarray(x, dtype=np.float64)
    out = np.empty(loss.n)
    for i in range(loss.n):
        e = np.zeros(loss.n)
        e[i] = h
        plus, _ = smoothed_value_mc(loss, x + e, delta, samples, np.random.default_rng(seed))
        minus, _ = smoothed_value_mc(loss, x - e, delta, samples, np.random.default_rng(seed))
        out[i] = (plus - minus) / (2.0 * h)
    return out


def block_sum_moment_samples(C, x, delta, blocks, rng):
    """Draws of ||sum_t g_t||^2 over independent blocks at a fixed play x.

    C is the (L, n) matrix of the block's linear-loss coefficients.
    Returns the squared norms (one per block); square them for the
    fourth-moment statistics."""
    from pfoco.losses import sample_unit_sphere

    L, n = C.shape
    U = sample_unit_sphere(rng, n, blocks * L).reshape(blocks, L, n)
    vals = C @ np.asarray(x) + delta * np.einsum("bln,ln->bl", U, C)
    G = (n / delta) * vals[..., None] * U
    S = G.sum(axis=1)
    return np.sum(S * S, axis=1)


def block_sum_moment_bounds(L, n, M, delta, G_f):
    """Certified bounds on E||sum g||^2 and E||sum g||^4."""
    a = (n * M / delta) ** 2
    second = L * a + L * L * G_f * G_f
    fourth = 3 * L**2 * a * a + 6 * L**3 * a * G_f * G_f + L**4 * G_f**4
    return second, fourth
