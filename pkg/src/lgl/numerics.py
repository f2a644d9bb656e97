"""Small dependency-free kernels: phase-1 simplex feasibility and max-flow.

Both are written for desk-scale problems (hundreds of variables at most) and
favour reproducibility over speed: the simplex uses Bland's rule throughout.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import IllConditionedProblem

FEAS_TOL = 1e-9
_PIVOT_EPS = 1e-11
_COST_EPS = 1e-12


@dataclass(frozen=True)
class LinearFeasibilityProblem:
    """{x : lower <= x <= upper, a_eq x = b_eq, a_ge x >= b_ge}."""

    lower: np.ndarray
    upper: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    a_ge: np.ndarray
    b_ge: np.ndarray

    def __post_init__(self):
        n = len(np.atleast_1d(self.lower))
        for name, shape in (("a_eq", (-1, n)), ("a_ge", (-1, n))):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(shape)
            object.__setattr__(self, name, arr)
        for name in ("lower", "upper", "b_eq", "b_ge"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).ravel())
        if self.upper.shape != (n,):
            raise ValueError("lower and upper bounds differ in length")
        if len(self.b_eq) != len(self.a_eq) or len(self.b_ge) != len(self.a_ge):
            raise ValueError("constraint rows and right-hand sides differ in length")
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise ValueError("all variable bounds must be finite")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def n_vars(self) -> int:
        return len(self.lower)

    def violation(self, x) -> float:
        """Largest absolute constraint violation at ``x``."""
        x = np.asarray(x, dtype=float)
        v = [0.0,
             float(np.max(self.lower - x, initial=0.0)),
             float(np.max(x - self.upper, initial=0.0))]
        if len(self.b_eq):
            v.append(float(np.max(np.abs(self.a_eq @ x - self.b_eq))))
        if len(self.b_ge):
            v.append(float(np.max(self.b_ge - self.a_ge @ x, initial=0.0)))
        return max(v)

    def certificate_gap(self, y_eq, y_ge) -> float:
        """y.b - max_{box} (y A) x.  Positive (with y_ge >= 0) proves infeasibility."""
        y_eq = np.asarray(y_eq, dtype=float)
        y_ge = np.asarray(y_ge, dtype=float)
        g = y_eq @ self.a_eq + y_ge @ self.a_ge
        box_max = np.sum(np.where(g > 0, g * self.upper, g * self.lower))
        return float(y_eq @ self.b_eq + y_ge @ self.b_ge - box_max)


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    point: np.ndarray | None = None
    certificate: tuple[np.ndarray, np.ndarray] | None = None
    max_violation: float = 0.0
    pivots: int = 0


def solve_feasibility(p: LinearFeasibilityProblem, tol: float = FEAS_TOL,
                      max_pivots: int = 50_000) -> FeasibilityResult:
    """Phase-1 bounded-variable simplex.

    Variables are shifted to ``[0, upper - lower]``, each ``>=`` row gets a
    surplus column, and one artificial per row starts the basis.  On success
    the point satisfies every constraint within ``tol``; otherwise the
    phase-1 simplex multipliers are returned as a Farkas certificate
    ``(y_eq, y_ge)`` with ``y_ge >= 0`` and positive
    :meth:`LinearFeasibilityProblem.certificate_gap`.
    """
    n = p.n_vars
    m_eq, m_ge = len(p.b_eq), len(p.b_ge)
    m = m_eq + m_ge
    width = p.upper - p.lower
    if m == 0:
        return FeasibilityResult(True, p.lower.copy(), None, 0.0, 0)

    a = np.zeros((m, n + m_ge))
    a[:m_eq, :n] = p.a_eq
    a[m_eq:, :n] = p.a_ge
    a[m_eq:, n:] = -np.eye(m_ge)
    rhs = np.concatenate([p.b_eq - p.a_eq @ p.lower, p.b_ge - p.a_ge @ p.lower])
    flip = np.where(rhs < 0, -1.0, 1.0)
    a *= flip[:, None]
    rhs = rhs * flip

    n_struct = n + m_ge
    n_tot = n_struct + m
    ub = np.concatenate([width, np.full(m_ge, np.inf), np.full(m, np.inf)])
    cost = np.concatenate([np.zeros(n_struct), np.ones(m)])
    tab = np.hstack([a, np.eye(m)])
    basis = np.arange(n_struct, n_tot)
    at_upper = np.zeros(n_tot, dtype=bool)
    xb = rhs.copy()
    pivots = 0

    while True:
        is_basic = np.zeros(n_tot, dtype=bool)
        is_basic[basis] = True
        d = cost - cost[basis] @ tab
        eligible = ~is_basic & (((~at_upper) & (d < -_COST_EPS)) | (at_upper & (d > _COST_EPS)))
        # artificials never re-enter
        eligible[n_struct:] = False
        cand = np.nonzero(eligible)[0]
        if len(cand) == 0:
            break
        j = int(cand[0])
        direction = -1.0 if at_upper[j] else 1.0
        col = tab[:, j]
        rate = -direction * col
        theta = ub[j]
        leave = -1
        leave_to_upper = False
        for i in range(m):
            if rate[i] < -_PIVOT_EPS:
                lim = max(xb[i], 0.0) / -rate[i]
                to_upper = False
            elif rate[i] > _PIVOT_EPS and np.isfinite(ub[basis[i]]):
                lim = max(ub[basis[i]] - xb[i], 0.0) / rate[i]
                to_upper = True
            else:
                continue
            if lim < theta - 1e-15 or (leave >= 0 and abs(lim - theta) <= 1e-15
                                        and basis[i] < basis[leave]):
                theta, leave, leave_to_upper = lim, i, to_upper
        if not np.isfinite(theta):
            raise IllConditionedProblem("phase-1 objective unbounded; numerical breakdown")
        xb = xb + theta * rate
        pivots += 1
        if pivots > max_pivots:
            raise IllConditionedProblem(f"no convergence after {max_pivots} pivots")
        if leave < 0:
            at_upper[j] = not at_upper[j]
            continue
        entering_value = theta if direction > 0 else ub[j] - theta
        old = basis[leave]
        at_upper[old] = leave_to_upper
        at_upper[j] = False
        piv = tab[leave, j]
        tab[leave] /= piv
        others = np.arange(m) != leave
        tab[others] -= np.outer(tab[others, j], tab[leave])
        basis[leave] = j
        xb[leave] = entering_value

    x_all = np.where(at_upper, ub, 0.0)
    x_all[basis] = xb
    x = p.lower + x_all[:n]
    infeas = float(cost[basis] @ xb + np.sum(np.where(at_upper[n_struct:], ub[n_struct:], 0.0)))
    viol = p.violation(np.clip(x, p.lower, p.upper))
    if infeas <= tol:
        x = np.clip(x, p.lower, p.upper)
        if viol > max(10 * tol, 1e-7):
            cond = np.linalg.cond(np.hstack([a, np.eye(m)])[:, basis])
            raise IllConditionedProblem(
                f"phase-1 reports feasibility but residual is {viol:.3e}; basis condition {cond:.3e}")
        return FeasibilityResult(True, x, None, viol, pivots)
    # simplex multipliers of the phase-1 optimum; B^-1 sits in the artificial block
    y = cost[basis] @ tab[:, n_struct:]
    y = y * flip
    y_eq, y_ge = y[:m_eq], np.maximum(y[m_eq:], 0.0)
    gap = p.certificate_gap(y_eq, y_ge)
    if gap <= 0.5 * tol:
        cond = np.linalg.cond(np.hstack([a, np.eye(m)])[:, basis])
        raise IllConditionedProblem(
            f"phase-1 residual {infeas:.3e} but certificate gap {gap:.3e}; basis condition {cond:.3e}")
    return FeasibilityResult(False, None, (y_eq, y_ge), viol, pivots)


# ---------------------------------------------------------------------------
# max-flow

@dataclass(frozen=True)
class FlowNetwork:
    n_nodes: int
    arcs: tuple  # (tail, head, capacity)
    source: int
    sink: int

    def __post_init__(self):
        object.__setattr__(self, "arcs", tuple((int(u), int(v), float(c)) for u, v, c in self.arcs))
        for u, v, c in self.arcs:
            if not (0 <= u < self.n_nodes and 0 <= v < self.n_nodes):
                raise ValueError(f"arc ({u}, {v}) leaves the node range")
            if not (np.isfinite(c) and c >= 0):
                raise ValueError(f"capacity {c} must be finite and nonnegative")


_RESIDUAL_EPS = 1e-15


def max_flow(net: FlowNetwork) -> tuple[float, np.ndarray]:
    """Edmonds-Karp.  Returns the flow value and the flow on each arc (input order)."""
    arcs = net.arcs
    n_arcs = len(arcs)
    # residual edges 2k (forward) and 2k+1 (backward)
    head = np.empty(2 * n_arcs, dtype=np.int64)
    cap = np.empty(2 * n_arcs)
    adj: list[list[int]] = [[] for _ in range(net.n_nodes)]
    for k, (u, v, c) in enumerate(arcs):
        head[2 * k], cap[2 * k] = v, c
        head[2 * k + 1], cap[2 * k + 1] = u, 0.0
        adj[u].append(2 * k)
        adj[v].append(2 * k + 1)
    value = 0.0
    s, t = net.source, net.sink
    if s == t:
        return 0.0, np.zeros(n_arcs)
    while True:
        via = [-1] * net.n_nodes
        via[s] = -2
        queue = deque([s])
        while queue and via[t] == -1:
            u = queue.popleft()
            for e in adj[u]:
                w = head[e]
                if via[w] == -1 and cap[e] > _RESIDUAL_EPS:
                    via[w] = e
                    queue.append(w)
        if via[t] == -1:
            break
        push = np.inf
        w = t
        while w != s:
            e = via[w]
            push = min(push, cap[e])
            w = head[e ^ 1]
        w = t
        while w != s:
            e = via[w]
            cap[e] -= push
            cap[e ^ 1] += push
            w = head[e ^ 1]
        value += push
    flow = np.array([cap[2 * k + 1] for k in range(n_arcs)])
    return value, flow


def min_cut_side(net: FlowNetwork, flow) -> np.ndarray:
    """Source side of a minimum cut given a maximum ``flow``."""
    residual = [[] for _ in range(net.n_nodes)]
    for (u, v, c), f in zip(net.arcs, flow):
        if c - f > _RESIDUAL_EPS:
            residual[u].append(v)
        if f > _RESIDUAL_EPS:
            residual[v].append(u)
    seen = np.zeros(net.n_nodes, dtype=bool)
    seen[net.source] = True
    queue = deque([net.source])
    while queue:
        u = queue.popleft()
        for v in residual[u]:
            if not seen[v]:
                seen[v] = True
                queue.append(v)
    return seen
