"""Online learners over oracle-accessed feasible sets.

All learners share the same skeleton: play a point, observe loss
feedback, take a gradient step, and replace the unaffordable exact
projection with an infeasible projection built from the set's cheap
oracle.  The blocked variants amortize one projection over K rounds of
accumulated gradients, which is what pushes the total oracle bill down
to O(T) while keeping the regret sublinear.

Learners:

* :func:`ogd_wf_run`      -- projected OGD scaffold with a pluggable
  projection map; with the exact projection it is the classical
  baseline the others are measured against.
* :func:`loo_bogd_run`    -- blocked OGD with the LOO-based infeasible
  projection (full information; uniform or per-block schedules, the
  latter covering the strongly convex variant).
* :func:`loo_bbgd_run`    -- its bandit version: one-point gradient
  estimates on a slightly squeezed copy of the set.
* :func:`so_ogd_run`      -- per-round OGD with the separation-based
  infeasible projection (full information).
* :func:`so_bgd_run`      -- its bandit version.

Every run returns a :class:`RunTrace` carrying plays, per-round losses,
cumulative oracle counts, and the full diagnostics of every projection
invocation, so tests can assert the per-invocation iteration ceilings
and the global budget/regret bounds on real runs.

Parameter builders (``*_params``) encode the step sizes, tolerances,
and block lengths under which the guarantees hold, validate their
preconditions by name, and accept explicit overrides.  The companion
``theoretical_bounds`` evaluates the governing regret and oracle-call
bounds at the actual run parameters.
"""

from __future__ import annotations

import dataclasses
import math
import time
from typing import Callable, Optional, Union

import numpy as np

from .geometry import (
    FeasibleSet,
    OracleCounters,
    Vector,
    exact_project,
    squeeze,
)
from .losses import LossSchedule, bandit_gradient_estimate, sample_unit_sphere
from .projection import cip_loo, cip_so


@dataclasses.dataclass
class RunTrace:
    """Everything observable about one learner run."""

    plays: np.ndarray
    losses: np.ndarray
    loo_cum: np.ndarray
    so_cum: np.ndarray
    block_index: np.ndarray
    counters: OracleCounters
    projections: list
    params: dict
    grad_norms: Optional[np.ndarray] = None
    seed: Optional[int] = None
    wall_time: float = 0.0

    @property
    def T(self) -> int:
        return self.plays.shape[0]


@dataclasses.dataclass
class LearnerParams:
    """Run parameters; built by the ``*_params`` helpers."""

    kind: str
    T: int
    R: float
    r: float
    n: int
    G_f: float
    M: float
    K: int = 1
    B: int = 1
    eta: Optional[float] = None
    eps: Optional[float] = None
    eta_m: Optional[np.ndarray] = None
    eps_m: Optional[np.ndarray] = None
    delta: Optional[float] = None
    delta_prime: Optional[float] = None
    c: Optional[float] = None
    c_prime: Optional[float] = None
    alpha: Optional[float] = None

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, np.ndarray):
                v = v.tolist()
            out[f.name] = v
        return out


def _clamp_block_length(value: float, T: int) -> int:
    return min(max(1, math.ceil(value)), T)


def _blocks(T: int, K: int) -> int:
    return math.ceil(T / K)


# ----------------------------------------------------------------------
# parameter builders


def loo_bogd_params(
    set_: FeasibleSet,
    schedule_G_f: float,
    T: int,
    eta: Optional[float] = None,
    eps: Optional[float] = None,
    K: Optional[int] = None,
) -> LearnerParams:
    """Blocked LOO learner, general convex losses."""
    if T < 1:
        raise ValueError("needs T >= 1")
    if not (schedule_G_f > 0):
        raise ValueError("needs G_f > 0")
    R = set_.R
    K = _clamp_block_length(5.0 * math.sqrt(T), T) if K is None else int(K)
    if not (1 <= K <= T):
        raise ValueError("needs 1 <= K <= T")
    eta = (R / schedule_G_f) * T ** (-0.75) if eta is None else float(eta)
    eps = 60.0 * R * R * T ** (-0.5) if eps is None else float(eps)
    if not (eta > 0 and eps > 0):
        raise ValueError("needs eta > 0 and eps > 0")
    B = _blocks(T, K)
    return LearnerParams(
        kind="loo_bogd",
        T=T,
        R=R,
        r=set_.r,
        n=set_.n,
        G_f=schedule_G_f,
        M=0.0,
        K=K,
        B=B,
        eta=eta,
        eps=eps,
        eta_m=np.full(B, eta),
        eps_m=np.full(B, eps),
    )


def loo_bogd_sc_params(
    set_: FeasibleSet,
    schedule_G_f: float,
    T: int,
    alpha: float,
    K: Optional[int] = None,
) -> LearnerParams:
    """Blocked LOO learner, alpha-strongly-convex losses.

    Tolerances shrink and step sizes decay per block; valid once the
    horizon dominates the conditioning: T >= 27*(alpha*R/G_f)^2.
    """
    if not (alpha > 0):
        raise ValueError("needs alpha > 0")
    if not (schedule_G_f > 0):
        raise ValueError("needs G_f > 0")
    R = set_.R
    floor = 27.0 * (alpha * R / schedule_G_f) ** 2
    if T < floor:
        raise ValueError(f"needs T >= 27*(alpha*R/G_f)^2 = {floor:.6g}, got T = {T}")
    K = _clamp_block_length((alpha * R / schedule_G_f) ** (2.0 / 3.0) * T ** (2.0 / 3.0), T) if K is None else int(K)
    B = _blocks(T, K)
    m = np.arange(1, B + 1, dtype=np.float64)
    return LearnerParams(
        kind="loo_bogd_sc",
        T=T,
        R=R,
        r=set_.r,
        n=set_.n,
        G_f=schedule_G_f,
        M=0.0,
        K=K,
        B=B,
        eta_m=2.0 / (alpha * K * m),
        eps_m=(20.0 * schedule_G_f / (alpha * (m + 3.0))) ** 2,
        alpha=alpha,
    )


def loo_bbgd_params(
    set_: FeasibleSet,
    schedule_M: float,
    T: int,
    c: float,
    G_f: float = 0.0,
) -> LearnerParams:
    """Blocked LOO learner with one-point bandit feedback.

    Plays live on the (1 - delta/r)-squeezed set so the exploration
    sphere of radius delta = c * T^(-1/4) never leaves the original.
    """
    R, r, n = set_.R, set_.r, set_.n
    if not (r > 0):
        raise ValueError("needs an interior margin r > 0")
    if not (schedule_M > 0):
        raise ValueError("needs M > 0")
    if not (c > 0):
        raise ValueError("needs c > 0")
    delta = c * T ** (-0.25)
    if not (delta < r):
        raise ValueError(f"needs c*T^(-1/4) < r: c = {c}, T = {T} gives delta = {delta:.6g} >= r = {r:.6g}")
    K = _clamp_block_length(6.0 * n * schedule_M * math.sqrt(T), T)
    eta = (R / math.sqrt(n * schedule_M)) * T ** (-0.75)
    eps = delta * delta / 3.0
    B = _blocks(T, K)
    return LearnerParams(
        kind="loo_bbgd",
        T=T,
        R=R,
        r=r,
        n=n,
        G_f=G_f,
        M=schedule_M,
        K=K,
        B=B,
        eta=eta,
        eps=eps,
        eta_m=np.full(B, eta),
        eps_m=np.full(B, eps),
        delta=delta,
        c=c,
    )


def so_ogd_params(
    set_: FeasibleSet,
    schedule_G_f: float,
    T: int,
    c: Optional[float] = None,
) -> LearnerParams:
    """Per-round SO learner, full information."""
    R, r = set_.R, set_.r
    if not (r > 0):
        raise ValueError("needs an interior margin r > 0")
    if not (schedule_G_f > 0):
        raise ValueError("needs G_f > 0")
    if c is None:
        c = 4.0 * R / r
    if not (c > 0):
        raise ValueError("needs c > 0")
    delta = c * T ** (-0.5)
    if not (delta < 1.0):
        raise ValueError(f"needs c*T^(-1/2) < 1: c = {c}, T = {T} gives delta = {delta:.6g}")
    eta = (r / (2.0 * schedule_G_f)) * T ** (-0.5)
    return LearnerParams(
        kind="so_ogd",
        T=T,
        R=R,
        r=r,
        n=set_.n,
        G_f=schedule_G_f,
        M=0.0,
        eta=eta,
        delta=delta,
        c=c,
    )


def so_bgd_params(
    set_: FeasibleSet,
    schedule_M: float,
    T: int,
    c: Optional[float] = None,
    c_prime: Optional[float] = None,
    G_f: float = 0.0,
) -> LearnerParams:
    """Per-round SO learner with one-point bandit feedback."""
    R, r, n = set_.R, set_.r, set_.n
    if not (r > 0):
        raise ValueError("needs an interior margin r > 0")
    if not (schedule_M > 0):
        raise ValueError("needs M > 0")
    if c is None:
        c = 8.0 / r
    if c_prime is None:
        c_prime = math.sqrt(n * schedule_M)
    delta = c * T ** (-0.25)
    delta_prime = c_prime * T ** (-0.25)
    if not (delta < 1.0):
        raise ValueError(f"needs c*T^(-1/4) < 1: c = {c}, T = {T} gives delta = {delta:.6g}")
    if not (2.0 * delta_prime < r):
        raise ValueError(
            f"needs 2*c'*T^(-1/4) < r: c' = {c_prime}, T = {T} gives 2*delta' = {2 * delta_prime:.6g} >= r = {r:.6g}"
        )
    eta = (r / (4.0 * math.sqrt(n * schedule_M))) * T ** (-0.75)
    return LearnerParams(
        kind="so_bgd",
        T=T,
        R=R,
        r=r,
        n=n,
        G_f=G_f,
        M=schedule_M,
        eta=eta,
        delta=delta,
        delta_prime=delta_prime,
        c=c,
        c_prime=c_prime,
    )


# ----------------------------------------------------------------------
# governing bounds, evaluated at actual run parameters


def theoretical_bounds(params: LearnerParams) -> dict:
    """Regret and oracle-call bounds for a parameterized run.

    Regret means: worst interval (adaptive) for loo_bogd and so_ogd,
    static for loo_bogd_sc, expected adaptive over the exploration for
    the bandit learners.
    """
    p = params
    T, R, r, G, K = p.T, p.R, p.r, p.G_f, p.K
    if p.kind == "loo_bogd":
        eta, eps = p.eta, p.eps
        regret = G * math.sqrt(3.0 * eps) * T + 4.0 * R * G * K + 4.0 * R * R / eta + 0.5 * G * G * K * eta * T
        calls = (T / K) * (
            8.5 + 5.5 * K**2 * eta**2 * G**2 / eps + K**4 * eta**4 * G**4 / eps**2
        ) * (27.0 * R * R / eps)
        return {"regret": regret, "oracle_calls": calls, "oracle": "loo"}
    if p.kind == "loo_bogd_sc":
        a = p.alpha
        regret = 36.0 * (G**4 * R * R / a) ** (1.0 / 3.0) * T ** (2.0 / 3.0) * (
            1.0 + (2.0 / 3.0) * math.log(math.sqrt(T) * G / (a * R))
        )
        return {"regret": regret, "oracle_calls": 0.94 * T, "oracle": "loo"}
    if p.kind == "loo_bbgd":
        nM = p.n * p.M
        c = p.c
        regret = (
            (4.0 + R / r) * G * c * T**0.75
            + math.sqrt(nM) * (4.0 * R + 1.0 / math.sqrt(6.0) + 3.0 * R * G * G + R * nM / (2.0 * c * c)) * T**0.75
            + 24.0 * R * nM * (math.sqrt(nM) / (c * math.sqrt(6.0)) + G) * math.sqrt(T)
        )
        calls = (27.0 * R * R / (2.0 * nM * c * c)) * (
            6.0**5 * R**4 * nM**4 / (4.0 * c**8)
            + 6.0**6 * R**4 * nM**3 * G * G / (2.0 * c**6)
            + 6.0**6 * R**4 * nM**2 * G**4 / (3.0 * c**4)
            + 19.0
        ) * T
        return {"regret": regret, "oracle_calls": calls, "oracle": "loo"}
    if p.kind == "so_ogd":
        eta, delta = p.eta, p.delta
        regret = (G * R * delta + 0.5 * G * G * eta) * T + 2.0 * R * R / eta
        calls = (2.0 * R * G / (r * r)) * (eta / delta) * T + (G * G / (r * r)) * (eta / delta) ** 2 * T + T
        return {"regret": regret, "oracle_calls": calls, "oracle": "so"}
    if p.kind == "so_bgd":
        nM = p.n * p.M
        c, cp = p.c, p.c_prime
        regret = G * R * (
            3.0 * cp / R
            + cp / r
            + c
            + 4.0 * math.sqrt(nM) / (r * G)
            + nM ** 1.5 * r / (8.0 * G * R * cp * cp)
        ) * T**0.75 + G * R * (c * cp / r) * math.sqrt(T)
        calls = T + (2.0 * R * math.sqrt(nM) / r) * (1.0 / (c * cp)) * T**0.75 + (nM / 4.0) * (
            1.0 / (c * c * cp * cp)
        ) * math.sqrt(T)
        return {"regret": regret, "oracle_calls": calls, "oracle": "so"}
    raise ValueError(f"unknown learner kind {p.kind!r}")


# ----------------------------------------------------------------------
# runs


def _finish_trace(
    trace: RunTrace,
    t0: float,
) -> RunTrace:
    trace.wall_time = time.perf_counter() - t0
    return trace


def ogd_wf_run(
    set_: FeasibleSet,
    schedule: LossSchedule,
    etas: Union[float, np.ndarray],
    projector: Optional[Callable[[Vector], Vector]] = None,
    start: Optional[Vector] = None,
) -> RunTrace:
    """Projected online gradient descent with a pluggable projection map.

    The default projector is the exact projection, giving the classical
    baseline.  ``etas`` is a scalar or a length-T array of step sizes.
    """
    t0 = time.perf_counter()
    T = schedule.T
    n = set_.n
    eta_arr = np.full(T, float(etas)) if np.isscalar(etas) else np.asarray(etas, dtype=np.float64)
    if eta_arr.shape != (T,):
        raise ValueError("etas must be a scalar or a length-T array")
    if projector is None:
        projector = lambda y: exact_project(set_, y)  # noqa: E731
    x = np.array(set_.center if start is None else start, dtype=np.float64)
    plays = np.empty((T, n))
    losses = np.empty(T)
    gnorms = np.empty(T)
    for t in range(T):
        f = schedule.losses[t]
        plays[t] = x
        val = f.value(x)
        g = f.subgrad(x)
        losses[t] = val
        gnorms[t] = np.linalg.norm(g)
        x = projector(x - eta_arr[t] * g)
    zeros = np.zeros(T, dtype=np.int64)
    trace = RunTrace(
        plays=plays,
        losses=losses,
        loo_cum=zeros.copy(),
        so_cum=zeros.copy(),
        block_index=np.arange(1, T + 1, dtype=np.int64),
        counters=OracleCounters(),
        projections=[],
        params={"kind": "ogd_wf", "T": T, "etas": eta_arr.tolist() if T <= 64 else float(eta_arr[0])},
        grad_norms=gnorms,
    )
    return _finish_trace(trace, t0)


def loo_bogd_run(
    set_: FeasibleSet,
    schedule: LossSchedule,
    params: LearnerParams,
    seed: Optional[int] = None,
) -> RunTrace:
    """Blocked OGD with LOO-based infeasible projections (full info).

    One projection per block from the second block on, computed at
    block start from the previous block's accumulated gradient steps;
    the block's plays stay at the anchor produced two blocks back.
    """
    t0 = time.perf_counter()
    if params.kind not in ("loo_bogd", "loo_bogd_sc"):
        raise ValueError("params built for a different learner")
    T, K, B = params.T, params.K, params.B
    if T != schedule.T:
        raise ValueError("schedule horizon differs from params.T")
    n = set_.n
    counters = OracleCounters()
    start = np.array(set_.center)
    anchors = [start, start.copy()]  # x_0, x_1
    targets = [start.copy(), start.copy()]  # gradient points ytil_0, ytil_1
    y = start.copy()  # running accumulator, begins at ytil_0
    plays = np.empty((T, n))
    losses = np.empty(T)
    gnorms = np.empty(T)
    loo_cum = np.empty(T, dtype=np.int64)
    so_cum = np.empty(T, dtype=np.int64)
    block_index = np.empty(T, dtype=np.int64)
    projections = []
    t = 0
    for m in range(1, B + 1):
        if m >= 2:
            res = cip_loo(set_, anchors[m - 2], y, float(params.eps_m[m - 1]), counters)
            projections.append(res)
            anchors.append(res.x)
            targets.append(res.y)
            y = targets[m - 1].copy()
        play = anchors[m - 1]
        target = targets[m - 1]
        eta = float(params.eta_m[m - 1])
        length = min(K, T - (m - 1) * K)
        for _ in range(length):
            f = schedule.losses[t]
            plays[t] = play
            losses[t] = f.value(play)
            g = f.subgrad(target)
            gnorms[t] = np.linalg.norm(g)
            y = y - eta * g
            loo_cum[t] = counters.loo_calls
            so_cum[t] = counters.so_calls
            block_index[t] = m
            t += 1
    trace = RunTrace(
        plays=plays,
        losses=losses,
        loo_cum=loo_cum,
        so_cum=so_cum,
        block_index=block_index,
        counters=counters,
        projections=projections,
        params=params.to_dict(),
        grad_norms=gnorms,
        seed=seed,
    )
    return _finish_trace(trace, t0)


def loo_bbgd_run(
    set_: FeasibleSet,
    schedule: LossSchedule,
    params: LearnerParams,
    rng: np.random.Generator,
    seed: Optional[int] = None,
) -> RunTrace:
    """Blocked bandit learner on a squeezed copy of the set.

    Anchors live on (1 - delta/r) K; each play adds a delta-radius
    sphere perturbation, staying inside the original set.  Gradient
    steps use the one-point estimate from the single observed value.
    """
    t0 = time.perf_counter()
    if params.kind != "loo_bbgd":
        raise ValueError("params built for a different learner")
    T, K, B = params.T, params.K, params.B
    if T != schedule.T:
        raise ValueError("schedule horizon differs from params.T")
    n = set_.n
    delta = params.delta
    view = squeeze(set_, 1.0 - delta / set_.r)
    U = sample_unit_sphere(rng, n, T)
    counters = OracleCounters()
    start = np.array(view.center)
    anchors = [start, start.copy()]
    targets = [start.copy(), start.copy()]
    y = start.copy()
    plays = np.empty((T, n))
    losses = np.empty(T)
    loo_cum = np.empty(T, dtype=np.int64)
    so_cum = np.empty(T, dtype=np.int64)
    block_index = np.empty(T, dtype=np.int64)
    projections = []
    t = 0
    for m in range(1, B + 1):
        if m >= 2:
            res = cip_loo(view, anchors[m - 2], y, float(params.eps_m[m - 1]), counters)
            projections.append(res)
            anchors.append(res.x)
            targets.append(res.y)
            y = targets[m - 1].copy()
        anchor = anchors[m - 1]
        eta = float(params.eta_m[m - 1])
        length = min(K, T - (m - 1) * K)
        for _ in range(length):
            f = schedule.losses[t]
            z = anchor + delta * U[t]
            plays[t] = z
            val = f.value(z)
            losses[t] = val
            y = y - eta * bandit_gradient_estimate(val, U[t], n, delta)
            loo_cum[t] = counters.loo_calls
            so_cum[t] = counters.so_calls
            block_index[t] = m
            t += 1
    trace = RunTrace(
        plays=plays,
        losses=losses,
        loo_cum=loo_cum,
        so_cum=so_cum,
        block_index=block_index,
        counters=counters,
        projections=projections,
        params=params.to_dict(),
        seed=seed,
    )
    return _finish_trace(trace, t0)


def so_ogd_run(
    set_: FeasibleSet,
    schedule: LossSchedule,
    params: LearnerParams,
    seed: Optional[int] = None,
) -> RunTrace:
    """Per-round OGD with separation-based infeasible projections."""
    t0 = time.perf_counter()
    if params.kind != "so_ogd":
        raise ValueError("params built for a different learner")
    T = params.T
    if T != schedule.T:
        raise ValueError("schedule horizon differs from params.T")
    n = set_.n
    counters = OracleCounters()
    ytil = np.zeros(n)
    plays = np.empty((T, n))
    losses = np.empty(T)
    gnorms = np.empty(T)
    loo_cum = np.empty(T, dtype=np.int64)
    so_cum = np.empty(T, dtype=np.int64)
    projections = []
    for t in range(T):
        f = schedule.losses[t]
        plays[t] = ytil
        losses[t] = f.value(ytil)
        g = f.subgrad(ytil)
        gnorms[t] = np.linalg.norm(g)
        proj = cip_so(set_, set_.r, params.delta, 0.0, ytil - params.eta * g, counters)
        projections.append(proj)
        ytil = proj.y
        loo_cum[t] = counters.loo_calls
        so_cum[t] = counters.so_calls
    trace = RunTrace(
        plays=plays,
        losses=losses,
        loo_cum=loo_cum,
        so_cum=so_cum,
        block_index=np.arange(1, T + 1, dtype=np.int64),
        counters=counters,
        projections=projections,
        params=params.to_dict(),
        grad_norms=gnorms,
        seed=seed,
    )
    return _finish_trace(trace, t0)


def so_bgd_run(
    set_: FeasibleSet,
    schedule: LossSchedule,
    params: LearnerParams,
    rng: np.random.Generator,
    seed: Optional[int] = None,
) -> RunTrace:
    """Per-round bandit learner with separation-based projections.

    Decision points are kept in (1 - delta'/r) K by the projection, so
    the delta'-sphere exploration never leaves the set.
    """
    t0 = time.perf_counter()
    if params.kind != "so_bgd":
        raise ValueError("params built for a different learner")
    T = params.T
    if T != schedule.T:
        raise ValueError("schedule horizon differs from params.T")
    n = set_.n
    delta, dp = params.delta, params.delta_prime
    U = sample_unit_sphere(rng, n, T)
    counters = OracleCounters()
    ytil = np.zeros(n)
    plays = np.empty((T, n))
    losses = np.empty(T)
    loo_cum = np.empty(T, dtype=np.int64)
    so_cum = np.empty(T, dtype=np.int64)
    projections = []
    for t in range(T):
        f = schedule.losses[t]
        z = ytil + dp * U[t]
        plays[t] = z
        val = f.value(z)
        losses[t] = val
        g = bandit_gradient_estimate(val, U[t], n, dp)
        proj = cip_so(set_, set_.r, delta, dp, ytil - params.eta * g, counters)
        projections.append(proj)
        ytil = proj.y
        loo_cum[t] = counters.loo_calls
        so_cum[t] = counters.so_calls
    trace = RunTrace(
        plays=plays,
        losses=losses,
        loo_cum=loo_cum,
        so_cum=so_cum,
        block_index=np.arange(1, T + 1, dtype=np.int64),
        counters=counters,
        projections=projections,
        params=params.to_dict(),
        seed=seed,
    )
    return _finish_trace(trace, t0)
