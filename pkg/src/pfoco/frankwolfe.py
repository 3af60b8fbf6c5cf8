"""Frank-Wolfe routines for nearest-point problems over an LOO set.

Everything here minimizes the 1-smooth objective f(x) = 0.5 * ||x - y||^2
over a feasible set accessed through its linear-optimization oracle.
Two entry points:

* :func:`frank_wolfe_min_distance` runs classic Frank-Wolfe with exact
  line search until the duality-gap certificate drops below a threshold
  (used for high-accuracy reference solves and comparators).  The gap
  after i update steps decays like O(R^2 / i), and for every iterate
  the gap upper-bounds the primal suboptimality, so the certificate is
  trustworthy without knowing the optimum.

* :func:`separating_hyperplane_fw` runs the same iteration but stops as
  soon as it can hand its caller something useful for building an
  infeasible projection: either the current iterate is provably within
  3*eps of y in squared distance ("close"), or the vector y - x
  separates y from the whole set with margin 2*eps.  It terminates
  within ceil(27 R^2 / eps - 2) iterations, at one LOO call per
  iteration (the final check included).
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional

import numpy as np

from .geometry import (
    FeasibleSet,
    OracleContractError,
    OracleCounters,
    Vector,
    loo_query,
)


def exact_line_search_quadratic(x: Vector, v: Vector, y: Vector) -> float:
    """argmin over sigma in [0,1] of ||x + sigma*(v - x) - y||^2.

    Returns 0 on the degenerate v == x step.
    """
    d = v - x
    dd = float(d @ d)
    if dd == 0.0:
        return 0.0
    sigma = float((y - x) @ d) / dd
    return min(1.0, max(0.0, sigma))


@dataclasses.dataclass
class FWState:
    """Terminal state of a Frank-Wolfe solve.

    ``iterations`` counts update steps taken; the LOO bill is
    ``iterations + 1`` (one certificate evaluation per visited iterate).
    ``history`` (when recorded) holds one (value, gap) pair per visited
    iterate, index i corresponding to the iterate after i updates.
    """

    x: Vector
    iterations: int
    v: Vector
    sigma: float
    gap: float
    converged: bool
    history: Optional[list[tuple[float, float]]] = None


def frank_wolfe_min_distance(
    set_: FeasibleSet,
    x0: Vector,
    y: Vector,
    gap_tol: float,
    max_iters: int,
    counters: Optional[OracleCounters] = None,
    record_history: bool = False,
) -> FWState:
    """Minimize 0.5*||x - y||^2 over the set from a feasible start.

    Stops when the gap certificate max_v (x - v) @ (x - y) falls to
    ``gap_tol`` or after ``max_iters`` update steps, whichever is first;
    the returned state says which through ``converged``.
    """
    if gap_tol < 0:
        raise ValueError("gap_tol must be nonnegative")
    if max_iters < 0:
        raise ValueError("max_iters must be nonnegative")
    x = np.array(x0, dtype=np.float64)
    history: Optional[list[tuple[float, float]]] = [] if record_history else None
    sigma = 0.0
    for i in range(max_iters + 1):
        v = loo_query(set_, x - y, counters)
        gap = float((x - v) @ (x - y))
        if history is not None:
            history.append((0.5 * float((x - y) @ (x - y)), gap))
        if gap <= gap_tol:
            return FWState(x=x, iterations=i, v=v, sigma=sigma, gap=gap, converged=True, history=history)
        if i == max_iters:
            return FWState(x=x, iterations=i, v=v, sigma=sigma, gap=gap, converged=False, history=history)
        sigma = exact_line_search_quadratic(x, v, y)
        x = x + sigma * (v - x)
    raise AssertionError("unreachable")


@dataclasses.dataclass
class SeparationResult:
    """Output of the early-stopping nearest-point run.

    ``close`` is True when ||point - y||^2 <= 3*eps; otherwise y - point
    defines a hyperplane separating y from the set with margin > 2*eps:
    (y - z) @ (y - point) > 2*eps for every member z.
    ``iterations`` equals the LOO calls spent.
    """

    point: Vector
    close: bool
    iterations: int


def fw_stop_ceiling(R: float, eps: float) -> int:
    """Certified iteration ceiling for the early-stopping run."""
    return max(math.ceil(27.0 * R * R / eps - 2.0), 1)


def separating_hyperplane_fw(
    set_: FeasibleSet,
    x1: Vector,
    y: Vector,
    eps: float,
    counters: Optional[OracleCounters] = None,
) -> SeparationResult:
    """Either approach y to within sqrt(3*eps) or certify separation.

    Runs Frank-Wolfe from the feasible point x1, stopping at the first
    iterate whose gap certificate (x - y) @ (x - v) is at most eps or
    whose squared distance to y is at most 3*eps (the gap test runs
    first; both comparisons are exact).  Squared distance to y never
    increases along the way, so the result is at least as close to y as
    x1 was.
    """
    if not (eps > 0):
        raise ValueError("eps must be positive")
    x = np.array(x1, dtype=np.float64)
    cap = 10 * fw_stop_ceiling(set_.R, eps)
    i = 0
    while True:
        i += 1
        v = loo_query(set_, x - y, counters)
        gap = float((x - y) @ (x - v))
        if gap <= eps or float((x - y) @ (x - y)) <= 3.0 * eps:
            return SeparationResult(point=x, close=float((x - y) @ (x - y)) <= 3.0 * eps, iterations=i)
        if i >= cap:
            raise OracleContractError(
                "nearest-point loop exceeded 10x its certified ceiling",
                ceiling=fw_stop_ceiling(set_.R, eps),
                iterations=i,
                eps=eps,
                gap=gap,
                dist_sq=float((x - y) @ (x - y)),
            )
        sigma = exact_line_search_quadratic(x, v, y)
        x = x + sigma * (v - x)
