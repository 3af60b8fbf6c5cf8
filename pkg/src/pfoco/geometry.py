"""Feasible sets with linear-optimization and separation oracle access.

Every set K here is convex and compact with a known circumradius R
(``K`` is contained in ``R * B``, the Euclidean ball of radius R).  All
sets except the probability-style simplex contain the origin with a
known interior margin r, so ``r * B <= K <= R * B``; the simplex reports
``r = 0`` and routines that need an interior origin refuse it.

Algorithms touch a set only through three operations:

* ``loo(d)``      -- linear optimization: a vertex minimizing ``d @ v`` over K.
* ``separate(y)`` -- membership test, or a hyperplane separating y from K.
* ``project(y)``  -- exact Euclidean projection.  Reference/testing aid
  only; it is never charged against oracle budgets.

Use the module-level wrappers :func:`loo_query` and :func:`so_query`
when a call should be charged to an :class:`OracleCounters`.

Tie-breaking is deterministic everywhere: closed-form sets resolve ties
toward the lowest coordinate index, the polytope inherits the LP
solver's (deterministic) vertex choice.
"""

from __future__ import annotations

import dataclasses
from typing import Optional, TypeAlias

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import linprog

Vector: TypeAlias = NDArray[np.float64]

# Membership slack, in distance units, relative to the set scale.
MEMBERSHIP_RTOL = 1e-12


def as_vector(x) -> Vector:
    """Coerce to a finite, contiguous 1-D float64 array."""
    v = np.ascontiguousarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


@dataclasses.dataclass
class OracleCounters:
    """Running totals of charged oracle calls."""

    loo_calls: int = 0
    so_calls: int = 0

    def snapshot(self) -> tuple[int, int]:
        return (self.loo_calls, self.so_calls)


class OracleContractError(RuntimeError):
    """An oracle loop overran its certified iteration ceiling.

    Raised only past a 10x safety margin over the proven ceiling, which
    cannot happen unless an oracle breaks its contract (e.g. a
    separation oracle that answers "feasible" inconsistently).  Carries
    a diagnostics dict for post-mortem inspection.
    """

    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclasses.dataclass(frozen=True)
class SeparationAnswer:
    """Separation oracle reply: membership, or a separating normal.

    When ``feasible`` is False, ``g`` satisfies ``(y - z) @ g > 0`` for
    every z in K, i.e. the hyperplane through the query's violated face
    strictly separates y from the set.
    """

    feasible: bool
    g: Optional[Vector] = None


class FeasibleSet:
    """Base for oracle-accessible convex compact sets.

    Attributes
    ----------
    n : int
        Ambient dimension.
    R : float
        Circumradius: K is contained in the origin-centered ball R*B.
    r : float
        Interior margin: r*B is contained in K (0 when no interior
        origin is claimed, as for the simplex).
    center : Vector
        An analytically known member point.
    """

    n: int
    R: float
    r: float

    @property
    def center(self) -> Vector:
        return np.zeros(self.n)

    # -- oracle surface -------------------------------------------------
    def loo(self, direction: Vector) -> Vector:
        raise NotImplementedError

    def separate(self, point: Vector) -> SeparationAnswer:
        raise NotImplementedError

    def project(self, point: Vector) -> Vector:
        raise NotImplementedError

    # -- helpers --------------------------------------------------------
    def contains(self, point: Vector) -> bool:
        return self.separate(point).feasible

    def _tol(self) -> float:
        return MEMBERSHIP_RTOL * max(self.R, 1.0)

    def _check_dim(self, v: Vector) -> Vector:
        v = as_vector(v)
        if v.shape != (self.n,):
            raise ValueError(f"dimension mismatch: expected ({self.n},), got {v.shape}")
        return v


class Ball(FeasibleSet):
    """Euclidean ball of a given radius, centered at the origin."""

    def __init__(self, n: int, radius: float):
        if n < 1:
            raise ValueError("dimension must be >= 1")
        if not (radius > 0 and np.isfinite(radius)):
            raise ValueError("radius must be positive and finite")
        self.n = int(n)
        self.R = float(radius)
        self.r = float(radius)

    def loo(self, direction: Vector) -> Vector:
        d = self._check_dim(direction)
        nrm = float(np.linalg.norm(d))
        if nrm == 0.0:
            v = np.zeros(self.n)
            v[0] = self.R
            return v
        return (-self.R / nrm) * d

    def separate(self, point: Vector) -> SeparationAnswer:
        y = self._check_dim(point)
        if float(np.linalg.norm(y)) <= self.R + self._tol():
            return SeparationAnswer(True)
        return SeparationAnswer(False, y.copy())

    def project(self, point: Vector) -> Vector:
        y = self._check_dim(point)
        nrm = float(np.linalg.norm(y))
        if nrm <= self.R:
            return y.copy()
        return (self.R / nrm) * y


class Box(FeasibleSet):
    """Axis-aligned box [lower, upper] containing the origin."""

    def __init__(self, lower, upper):
        lo = as_vector(lower)
        hi = as_vector(upper)
        if lo.shape != hi.shape:
            raise ValueError("lower/upper dimension mismatch")
        if np.any(lo > 0) or np.any(hi < 0):
            raise ValueError("box must contain the origin (lower <= 0 <= upper)")
        if np.any(lo >= hi):
            raise ValueError("box must have positive width in every coordinate")
        self.lower = lo
        self.upper = hi
        self.n = lo.shape[0]
        self.R = float(np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi))))
        self.r = float(min(np.min(-lo), np.min(hi)))

    def loo(self, direction: Vector) -> Vector:
        d = self._check_dim(direction)
        # zero components go to the upper face (deterministic tie rule)
        return np.where(d > 0.0, self.lower, self.upper).astype(np.float64)

    def separate(self, point: Vector) -> SeparationAnswer:
        y = self._check_dim(point)
        over = y - self.upper
        under = self.lower - y
        viol = np.concatenate([over, under])
        j = int(np.argmax(viol))
        if viol[j] <= self._tol():
            return SeparationAnswer(True)
        g = np.zeros(self.n)
        if j < self.n:
            g[j] = 1.0  # above the upper face
        else:
            g[j - self.n] = -1.0  # below the lower face
        return SeparationAnswer(False, g)

    def project(self, point: Vector) -> Vector:
        y = self._check_dim(point)
        return np.clip(y, self.lower, self.upper)


def simplex_project_sorted(y: Vector, s: float) -> Vector:
    """Project onto {x >= 0, sum(x) = s} by the sort-and-threshold rule."""
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - s
    idx = np.arange(1, y.shape[0] + 1)
    cond = u - css / idx > 0
    rho = int(idx[cond][-1])  # cond[0] always holds for s > 0
    theta = css[rho - 1] / rho
    return np.maximum(y - theta, 0.0)


class Simplex(FeasibleSet):
    """Scaled probability simplex {x >= 0, sum(x) = scale}.

    Does not contain the origin, so r = 0 and routines requiring an
    interior origin must not be pointed at it.
    """

    def __init__(self, n: int, scale: float = 1.0):
        if n < 1:
            raise ValueError("dimension must be >= 1")
        if not (scale > 0 and np.isfinite(scale)):
            raise ValueError("scale must be positive and finite")
        self.n = int(n)
        self.scale = float(scale)
        self.R = float(scale)
        self.r = 0.0

    @property
    def center(self) -> Vector:
        return np.full(self.n, self.scale / self.n)

    def loo(self, direction: Vector) -> Vector:
        d = self._check_dim(direction)
        j = int(np.argmin(d))  # lowest index on ties
        v = np.zeros(self.n)
        v[j] = self.scale
        return v

    def separate(self, point: Vector) -> SeparationAnswer:
        y = self._check_dim(point)
        tol = self._tol()
        # candidate violations, all in distance units
        j = int(np.argmin(y))
        neg = -float(y[j])
        total = float(np.sum(y)) - self.scale
        rt = np.sqrt(self.n)
        worst = max(neg, total / rt, -total / rt)
        if worst <= tol:
            return SeparationAnswer(True)
        g = np.zeros(self.n)
        if neg >= worst:
            g[j] = -1.0
        elif total > 0:
            g = np.full(self.n, 1.0 / rt)
        else:
            g = np.full(self.n, -1.0 / rt)
        return SeparationAnswer(False, g)

    def project(self, point: Vector) -> Vector:
        y = self._check_dim(point)
        return simplex_project_sorted(y, self.scale)


class L1Ball(FeasibleSet):
    """Cross-polytope {x : ||x||_1 <= radius}."""

    def __init__(self, n: int, radius: float):
        if n < 1:
            raise ValueError("dimension must be >= 1")
        if not (radius > 0 and np.isfinite(radius)):
            raise ValueError("radius must be positive and finite")
        self.n = int(n)
        self.R = float(radius)
        self.r = float(radius) / float(np.sqrt(n))

    def loo(self, direction: Vector) -> Vector:
        d = self._check_dim(direction)
        j = int(np.argmax(np.abs(d)))  # lowest index on ties
        v = np.zeros(self.n)
        if d[j] == 0.0:
            v[0] = self.R
        else:
            v[j] = -self.R * np.sign(d[j])
        return v

    def separate(self, point: Vector) -> SeparationAnswer:
        y = self._check_dim(point)
        if float(np.sum(np.abs(y))) <= self.R + self._tol():
            return SeparationAnswer(True)
        # z @ sign(y) <= ||z||_1 <= R < ||y||_1 = y @ sign(y) for all z in K
        return SeparationAnswer(False, np.sign(y))

    def project(self, point: Vector) -> Vector:
        y = self._check_dim(point)
        if float(np.sum(np.abs(y))) <= self.R:
            return y.copy()
        w = simplex_project_sorted(np.abs(y), self.R)
        return np.sign(y) * w


class Polytope(FeasibleSet):
    """Bounded intersection of halfspaces {x : A x <= b} with 0 interior.

    Rows are normalized at construction so each ``a_i`` is a unit vector;
    then constraint violations are Euclidean distances, ``r = min_i b_i``,
    and the separation oracle returns the unit normal of the most
    violated face.  Boundedness is verified (and the circumradius bound R
    computed) by 2n coordinate-range LPs at construction.
    """

    #: dual-gap certificate threshold for project()
    PROJECT_GAP_TOL = 1e-10

    def __init__(self, A, b):
        A = np.ascontiguousarray(A, dtype=np.float64)
        bv = as_vector(b)
        if A.ndim != 2 or A.shape[0] != bv.shape[0]:
            raise ValueError("A must be (m, n) with b of length m")
        if not np.all(np.isfinite(A)):
            raise ValueError("A has non-finite entries")
        norms = np.linalg.norm(A, axis=1)
        if np.any(norms == 0):
            raise ValueError("zero rows in A are not allowed")
        self.A = A / norms[:, None]
        self.b = bv / norms
        if np.any(self.b <= 0):
            raise ValueError("origin must be strictly interior (all b_i > 0 after row normalization)")
        self.n = A.shape[1]
        self.m = A.shape[0]
        self.r = float(np.min(self.b))
        self.R = self._bounding_radius()

    def _bounding_radius(self) -> float:
        lo = np.empty(self.n)
        hi = np.empty(self.n)
        for i in range(self.n):
            c = np.zeros(self.n)
            c[i] = 1.0
            res_lo = linprog(c, A_ub=self.A, b_ub=self.b, bounds=(None, None), method="highs")
            res_hi = linprog(-c, A_ub=self.A, b_ub=self.b, bounds=(None, None), method="highs")
            if res_lo.status != 0 or res_hi.status != 0:
                raise ValueError("polytope is unbounded or numerically degenerate")
            lo[i] = res_lo.fun
            hi[i] = -res_hi.fun
        return float(np.sqrt(np.sum(np.maximum(lo**2, hi**2))))

    def loo(self, direction: Vector) -> Vector:
        d = self._check_dim(direction)
        res = linprog(d, A_ub=self.A, b_ub=self.b, bounds=(None, None), method="highs")
        if res.status != 0:
            raise RuntimeError(f"LP solve failed with status {res.status}")
        v = np.asarray(res.x, dtype=np.float64)
        # pull the solver's vertex inside exactly; shrinking toward the
        # interior origin costs ~1 ulp of optimality
        scale = float(np.max(self.A @ v / self.b))
        if scale > 1.0:
            v = v / scale
        return v

    def separate(self, point: Vector) -> SeparationAnswer:
        y = self._check_dim(point)
        viol = self.A @ y - self.b
        j = int(np.argmax(viol))
        if viol[j] <= self._tol():
            return SeparationAnswer(True)
        return SeparationAnswer(False, self.A[j].copy())

    def project(self, point: Vector) -> Vector:
        """Alternating-projection solve, certified by a dual-gap check.

        Approximate in exact-arithmetic terms, but driven to machine
        precision and accepted only if the linear-optimization gap
        certificate (x - v) @ (x - y) with v = loo(x - y) is at most
        PROJECT_GAP_TOL.
        """
        y = self._check_dim(point)
        if self.separate(y).feasible:
            return y.copy()
        x = self._dykstra(y)
        # force exact membership, then certify
        scale = float(np.max(self.A @ x / self.b))
        if scale > 1.0:
            x = x / scale
        for _ in range(200):
            v = self.loo(x - y)
            gap = float((x - v) @ (x - y))
            if gap <= self.PROJECT_GAP_TOL:
                return x
            # line-search step toward v (never leaves the set)
            dd = float((v - x) @ (v - x))
            if dd == 0.0:
                break
            sigma = min(1.0, max(0.0, float((y - x) @ (v - x)) / dd))
            x = x + sigma * (v - x)
        raise RuntimeError("projection failed to certify: dual gap stayed above tolerance")

    def _dykstra(self, y: Vector, max_cycles: int = 20000) -> Vector:
        x = y.copy()
        p = np.zeros((self.m, self.n))
        stop = 1e-16 * max(1.0, float(np.linalg.norm(y)))
        for _ in range(max_cycles):
            x_prev = x.copy()
            for i in range(self.m):
                w = x + p[i]
                viol = float(self.A[i] @ w - self.b[i])
                if viol > 0.0:
                    x = w - viol * self.A[i]
                else:
                    x = w
                p[i] = w - x
            if float(np.max(np.abs(x - x_prev))) <= stop:
                break
        return x


class SqueezedSetView(FeasibleSet):
    """The set ``factor * K`` for an existing K, sharing its oracles.

    Oracle answers are derived from the base set: vertices scale by the
    factor, membership of y in factor*K is membership of y/factor in K,
    and a base separator for y/factor separates y from the view (for
    z in factor*K: (y - z) @ g = factor * (y/factor - z/factor) @ g > 0).
    """

    def __init__(self, base: FeasibleSet, factor: float):
        if not (0.0 < factor <= 1.0):
            raise ValueError("squeeze factor must be in (0, 1]")
        if isinstance(base, SqueezedSetView):
            factor = factor * base.factor
            base = base.base
        self.base = base
        self.factor = float(factor)
        self.n = base.n
        self.R = factor * base.R
        self.r = factor * base.r

    @property
    def center(self) -> Vector:
        return self.factor * self.base.center

    def loo(self, direction: Vector) -> Vector:
        d = self._check_dim(direction)
        return self.factor * self.base.loo(d)

    def separate(self, point: Vector) -> SeparationAnswer:
        y = self._check_dim(point)
        return self.base.separate(y / self.factor)

    def project(self, point: Vector) -> Vector:
        y = self._check_dim(point)
        return self.factor * self.base.project(y / self.factor)


# ----------------------------------------------------------------------
# counted oracle surface


def loo_query(set_: FeasibleSet, direction: Vector, counters: Optional[OracleCounters] = None) -> Vector:
    """Linear-optimization oracle call, charged to ``counters``."""
    if counters is not None:
        counters.loo_calls += 1
    return set_.loo(direction)


def so_query(set_: FeasibleSet, point: Vector, counters: Optional[OracleCounters] = None) -> SeparationAnswer:
    """Separation oracle call, charged to ``counters``."""
    if counters is not None:
        counters.so_calls += 1
    return set_.separate(point)


def exact_project(set_: FeasibleSet, point: Vector) -> Vector:
    """Euclidean projection. Reference aid; never charged to budgets."""
    return set_.project(point)


def squeeze(set_: FeasibleSet, factor: float) -> FeasibleSet:
    """View of ``factor * K``; nested views collapse to one factor."""
    if factor == 1.0:
        return set_
    return SqueezedSetView(set_, factor)
