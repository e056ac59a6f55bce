"""Min-max fair base of the multi-access power region.

The min-max fair (lexicographically optimal) power allocation at fixed rates
is the point of the dominant face closest to the equal-allocation point, so
it can be computed by minimizing a convex quadratic over the time-sharing
weights of the decoding-order vertices.  Two backends are provided:

* :func:`solve_enumeration` materializes all ``n!`` vertices and finds the
  nearest point of their convex hull with Wolfe's minimum-norm-point
  active-set method (exact, for small ``n``).
* :func:`solve_frank_wolfe` runs away-step conditional gradient with exact
  line search, using the greedy rule as the linear-minimization oracle, so
  the vertex set is never materialized and any ``n`` is supported.  Periodic
  exact corrections over the active set push the iterate to machine
  precision.

Both backends work on the received-power region normalized by the conserved
sum power, which makes every output exactly linear in the noise power.  With
unequal channel gains the objective is the gain-weighted squared distance to
the equal-allocation level ``sum_power / sum(gains)``; unit gains reduce this
to the plain Euclidean projection of the equal-power point.

The dual problem, max-min fair rate allocation in the capacity region, is
solved by :func:`max_min_rates` with the mirrored greedy oracle.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .polymatroid import (
    LN2,
    EnumerationLimitError,
    NoiseModel,
    _as_vector,
    _chain_received_trusted,
    capacity_chain,
    capacity_rank,
    is_lex_optimal_base,
    sum_power,
)

# Diagnostic tolerance (relative) for the case classification; loose enough
# to recognize equal points specified with a handful of decimals.
CASE_TOL = 1e-5

# Time-sharing weights below this are dropped and the rest renormalized;
# epochs that short are physically meaningless.
WEIGHT_PRUNE = 1e-10

ENUMERATION_MAX_N = 7

# Numerical-floor guard on the duality gap, scaled by the squared data norm.
_GAP_FLOOR = 1e-13


class CaseLabel(enum.Enum):
    """Geometric relation between the equal-allocation point and the face."""

    VERTEX_COINCIDENT = "VertexCoincident"
    INTERIOR_FEASIBLE = "InteriorFeasible"
    INFEASIBLE = "Infeasible"

    def __str__(self) -> str:  # pragma: no cover - trivial
        return self.value


class SolverFailureError(RuntimeError):
    """The solver did not reach the requested duality gap."""

    def __init__(self, message: str, gap: float = float("nan"),
                 iterations: int = 0):
        super().__init__(message)
        self.gap = gap
        self.iterations = iterations


@dataclass(frozen=True)
class MinMaxSolution:
    """Result of a min-max fair power solve.

    ``received`` is the optimal base in received-power coordinates (the
    space all subset constraints live in); ``transmit`` divides out the
    channel gains.  The two coincide in the symmetric channel.
    ``coefficients`` are ``(decoding order, weight)`` pairs forming a convex
    combination of vertices that reconstructs the base; the optimal base is
    unique but the weights need not be.  ``distance`` is the (gain-weighted)
    squared distance to the equal-allocation target and ``gap`` the certified
    duality gap, both in physical units.
    """

    received: np.ndarray
    transmit: np.ndarray
    coefficients: tuple[tuple[tuple[int, ...], float], ...]
    case: CaseLabel
    distance: float
    iterations: int
    gap: float

    def __post_init__(self):
        self.received.flags.writeable = False
        self.transmit.flags.writeable = False

    @property
    def base(self) -> np.ndarray:
        """The min-max optimal base (received-power coordinates)."""
        return self.received


def equal_allocation(rates, noise: NoiseModel) -> np.ndarray:
    """Transmit powers of the equal-allocation point.

    Every node receives ``sum_power / n`` watts at the sink, so node ``i``
    transmits ``sum_power / n / gain_i``.
    """
    r = _as_vector(rates, "rates")
    level = sum_power(r, noise) / r.size
    return level / noise.gains_for(r.size)


def _normalized_marginals(rates_sorted_desc: np.ndarray, total: float) -> np.ndarray:
    """Prefix ranks of the descending-sorted rates, in units of the sum power."""
    prefix = np.cumsum(rates_sorted_desc)
    return np.expm1(2.0 * LN2 * prefix) / total


def _classify_normalized(rates: np.ndarray, weights: np.ndarray, total: float,
                         tol: float) -> tuple[CaseLabel, tuple[int, ...] | None]:
    """Classify the equal-allocation target against the normalized face.

    Returns the label and, when the target coincides with a vertex, the
    decoding order realizing it.  Works for any ``n``: membership of an
    equal-coordinate point only needs the largest-rate prefix ranks, and
    coincidence is decided by greedily matching rank increments along a
    chain (increments are strictly increasing in the rate, so the greedy
    choice is canonical).
    """
    n = rates.size
    level = 1.0 / float(weights.sum())

    order = np.argsort(-rates, kind="stable")
    topk = _normalized_marginals(rates[order], total)
    ks = np.arange(1, n + 1)
    member = bool(np.all(ks * level >= topk - tol * (1.0 + topk)))

    # Chain-marginal matching for vertex coincidence: at each step exactly
    # one rate value (if any) yields the equal-level increment, because the
    # increment is strictly increasing in the rate.
    remaining = np.array(sorted(range(n), key=lambda i: (rates[i], i)),
                         dtype=np.intp)
    chain_order: list[int] = []
    cum = 0.0
    coincident = True
    for _ in range(n):
        marginals = np.exp2(2.0 * cum) * np.expm1(2.0 * LN2 * rates[remaining])
        hits = np.nonzero(np.abs(marginals / total - level)
                          <= tol * (1.0 + level))[0]
        if hits.size == 0:
            coincident = False
            break
        pick = int(hits[0])
        chain_order.append(int(remaining[pick]))
        cum += float(rates[remaining[pick]])
        remaining = np.delete(remaining, pick)
    if coincident:
        return CaseLabel.VERTEX_COINCIDENT, tuple(chain_order)
    if member:
        return CaseLabel.INTERIOR_FEASIBLE, None
    return CaseLabel.INFEASIBLE, None


def classify_case(rates, noise: NoiseModel, tol: float = CASE_TOL) -> CaseLabel:
    """Diagnose where the equal-allocation target sits relative to the face.

    ``VertexCoincident``: a single decoding order realizes it exactly;
    ``InteriorFeasible``: realizable only by time sharing;
    ``Infeasible``: outside the region, so the optimum is a strict
    projection.  Purely diagnostic -- the solvers run the same quadratic
    program in every case.
    """
    r = _as_vector(rates, "rates")
    w = noise.gains_for(r.size)
    total = float(np.expm1(2.0 * LN2 * r.sum()))
    if total == 0.0:
        return CaseLabel.VERTEX_COINCIDENT
    label, _ = _classify_normalized(r, w, total, tol)
    return label


@lru_cache(maxsize=None)
def _all_orders(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n))), dtype=np.intp)


def _batch_chains(rates: np.ndarray, total: float) -> np.ndarray:
    """All n! received-power vertices at once, in units of the sum power."""
    perms = _all_orders(rates.size)
    along = rates[perms]
    prefix = np.cumsum(along, axis=1) - along
    coords = np.exp2(2.0 * prefix) * np.expm1(2.0 * LN2 * along) / total
    out = np.empty_like(coords)
    np.put_along_axis(out, perms, coords, axis=1)
    return out


def _unit_chain(rates: np.ndarray, order: tuple[int, ...], total: float) -> np.ndarray:
    """One received-power vertex in units of the sum power (trusted inputs)."""
    idx = np.asarray(order, dtype=np.intp)
    return _chain_received_trusted(rates, 1.0, idx) / total


def _affine_min_coeffs(points: np.ndarray) -> np.ndarray:
    """Coefficients of the min-norm point of the affine hull of the rows."""
    m = points.shape[0]
    if m == 1:
        return np.ones(1)
    if m == 2:
        diff = points[0] - points[1]
        denom = float(diff @ diff)
        if denom <= 0.0:
            return np.array([1.0, 0.0])
        t = float(points[0] @ diff) / denom
        return np.array([1.0 - t, t])
    system = np.zeros((m + 1, m + 1))
    system[0, 1:] = 1.0
    system[1:, 0] = 1.0
    system[1:, 1:] = points @ points.T
    rhs = np.zeros(m + 1)
    rhs[0] = 1.0
    try:
        sol = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(system, rhs, rcond=None)[0]
    return sol[1:]


def _wolfe_min_norm(points: np.ndarray, tol: float, max_iter: int
                    ) -> tuple[np.ndarray, list[int], np.ndarray, int, float]:
    """Wolfe's active-set method for the nearest point of a convex hull.

    Returns ``(x, corral indices, coefficients, major cycles, gap)`` where
    ``gap`` is the final linear-minimization duality gap of ``0.5*||x||^2``.
    """
    norms = np.einsum("ij,ij->i", points, points)
    start = int(np.argmin(norms))
    corral = [start]
    coeffs = np.array([1.0])
    x = points[start].copy()
    guard = _GAP_FLOOR * (1.0 + float(norms.max(initial=0.0)))
    majors = 0
    gap = 0.0
    while True:
        dots = points @ x
        j = int(np.argmin(dots))
        xx = float(x @ x)
        gap = xx - float(dots[j])
        if gap <= max(tol, guard) or j in corral:
            break
        if majors >= max_iter:
            raise SolverFailureError(
                f"minimum-norm point did not converge in {max_iter} cycles",
                gap=gap, iterations=majors)
        majors += 1
        corral.append(j)
        coeffs = np.append(coeffs, 0.0)
        while True:
            sub = points[corral]
            target = _affine_min_coeffs(sub)
            if target.min() >= -1e-12:
                coeffs = np.maximum(target, 0.0)
                coeffs /= coeffs.sum()
                x = coeffs @ sub
                break
            shrink = coeffs - target
            move = shrink > 1e-14
            theta = float(np.min(coeffs[move] / shrink[move]))
            theta = min(max(theta, 0.0), 1.0)
            coeffs = coeffs + theta * (target - coeffs)
            keep = coeffs > 1e-14
            if not keep.any():
                keep[int(np.argmax(coeffs))] = True
            corral = [c for c, k in zip(corral, keep) if k]
            coeffs = coeffs[keep]
            coeffs /= coeffs.sum()
            x = coeffs @ points[corral]
    return x, corral, coeffs, majors, max(gap, 0.0)


def _solve_hull_enumeration(vertices, orders, n, weights, level, tol, max_iter):
    """Exact nearest-point solve over the explicitly enumerated vertex hull."""
    root_w = np.sqrt(weights)
    target = np.full(n, level)
    points = (vertices - target) * root_w
    x, corral, coeffs, iters, gap = _wolfe_min_norm(points, tol, max_iter)
    u = x / root_w + target
    support = {tuple(int(i) for i in orders[k]): float(c)
               for k, c in zip(corral, coeffs)}
    return u, support, iters, gap


def _solve_hull_frank_wolfe(chain, lmo, n, weights, level, tol, max_iter):
    """Away-step conditional gradient with exact line search and corrections.

    The linear subproblems are solved by the greedy rule (``lmo`` maps a
    gradient to a decoding order), so the ``n!`` vertex set is never formed.
    Every 50 iterations, and at termination, the quadratic is minimized
    exactly over the current active set, which drives the iterate to the
    optimal face at machine precision.
    """
    target = np.full(n, level)
    root_w = np.sqrt(weights)

    def polish(active: dict) -> tuple[np.ndarray, dict]:
        orders = list(active.keys())
        pts = np.stack([chain(o) for o in orders])
        shifted = (pts - target) * root_w
        x, corral, coeffs, _, _ = _wolfe_min_norm(shifted, 0.0, 10 * (n + 2))
        new = {orders[k]: float(c) for k, c in zip(corral, coeffs) if c > 1e-15}
        if not new:
            new = {orders[corral[int(np.argmax(coeffs))]]: 1.0}
        u = x / root_w + target
        return u, new

    start = lmo(-weights * target)
    active: dict[tuple[int, ...], float] = {start: 1.0}
    cache: dict[tuple[int, ...], np.ndarray] = {start: chain(start)}
    u = cache[start].copy()
    guard = _GAP_FLOOR * float(weights.sum()) * (1.0 + level) ** 2
    stop = max(tol, guard)
    gap = float("inf")
    iters = 0
    while True:
        grad = weights * (u - target)
        order = lmo(grad)
        v = cache.get(order)
        if v is None:
            v = cache[order] = chain(order)
        gap = float(grad @ (u - v))
        if gap <= stop:
            break
        if iters >= max_iter:
            raise SolverFailureError(
                f"conditional gradient did not reach gap {tol:g} in "
                f"{max_iter} iterations", gap=gap, iterations=iters)
        if iters and iters % 50 == 0:
            u, active = polish(active)
            iters += 1
            continue
        away_order = max((o for o in active if active[o] > 0.0),
                         key=lambda o: float(grad @ cache[o]))
        a = cache[away_order]
        if gap >= float(grad @ (a - u)):
            direction = v - u
            gamma_max = 1.0
            is_away = False
        else:
            alpha = active[away_order]
            direction = u - a
            gamma_max = alpha / (1.0 - alpha) if alpha < 1.0 else 1.0
            is_away = True
        denom = float(weights @ (direction * direction))
        if denom <= 0.0:
            u, active = polish(active)
            iters += 1
            continue
        gamma = min(gamma_max, max(0.0, -float(grad @ direction) / denom))
        if is_away:
            for o in active:
                active[o] *= 1.0 + gamma
            active[away_order] -= gamma
            if active[away_order] <= 1e-14:
                del active[away_order]
        else:
            for o in active:
                active[o] *= 1.0 - gamma
            active[order] = active.get(order, 0.0) + gamma
        u = u + gamma * direction
        iters += 1
        if iters % 100 == 0:
            total = sum(active.values())
            for o in active:
                active[o] /= total
            u = sum(c * cache[o] for o, c in active.items())
    u, active = polish(active)
    grad = weights * (u - target)
    order = lmo(grad)
    v = cache.get(order)
    if v is None:
        v = chain(order)
    gap = max(float(grad @ (u - v)), 0.0)
    return u, active, iters, gap


def _prune_support(support: dict) -> tuple[tuple[tuple[int, ...], float], ...]:
    kept = {o: w for o, w in support.items() if w > WEIGHT_PRUNE}
    if not kept:
        top = max(support, key=support.get)
        kept = {top: 1.0}
    total = sum(kept.values())
    items = [(o, w / total) for o, w in kept.items()]
    items.sort(key=lambda ow: (-ow[1], ow[0]))
    return tuple(items)


def _solve_power(rates, noise: NoiseModel, tol: float, max_iter: int,
                 backend: str, check: bool) -> MinMaxSolution:
    r = _as_vector(rates, "rates")
    n = r.size
    gains = noise.gains_for(n)
    total = float(np.expm1(2.0 * LN2 * r.sum()))

    if total == 0.0:
        received = np.zeros(n)
        identity = tuple(range(n))
        return MinMaxSolution(
            received=received, transmit=received.copy(),
            coefficients=((identity, 1.0),),
            case=CaseLabel.VERTEX_COINCIDENT,
            distance=0.0, iterations=0, gap=0.0)

    level = 1.0 / float(gains.sum())
    case, coincident_order = _classify_normalized(r, gains, total, CASE_TOL)

    def chain(order: tuple[int, ...]) -> np.ndarray:
        return _unit_chain(r, order, total)

    def lmo(grad: np.ndarray) -> tuple[int, ...]:
        return tuple(int(i) for i in np.argsort(-grad, kind="stable"))

    if n == 1:
        u = np.ones(1)
        support = {(0,): 1.0}
        iters = 0
        gap = 0.0
    elif backend == "enumeration":
        if n > ENUMERATION_MAX_N:
            raise EnumerationLimitError(
                f"vertex enumeration is capped at n <= {ENUMERATION_MAX_N}; "
                f"got n = {n}")
        u, support, iters, gap = _solve_hull_enumeration(
            _batch_chains(r, total), _all_orders(n), n, gains, level, tol,
            max_iter)
    elif backend == "frank_wolfe":
        u, support, iters, gap = _solve_hull_frank_wolfe(
            chain, lmo, n, gains, level, tol, max_iter)
    else:
        raise ValueError(f"unknown backend {backend!r}")

    if case is CaseLabel.VERTEX_COINCIDENT and coincident_order is not None:
        support = {coincident_order: 1.0}
        u = chain(coincident_order)

    coefficients = _prune_support(support)
    scale = noise.sigma_sq
    received = scale * (total * u)
    transmit = received / gains
    dist_norm = float(gains @ (u - level) ** 2)
    distance = (scale * scale) * (total * total * dist_norm)
    gap_phys = (scale * scale) * (total * total * gap)

    unit_gains = noise.gains is None or bool(np.all(gains == 1.0))
    if check and n <= 12 and unit_gains:
        if not is_lex_optimal_base(transmit, r, noise):
            raise SolverFailureError(
                "solver output failed the lexicographic optimality check",
                gap=gap_phys, iterations=iters)

    return MinMaxSolution(
        received=received, transmit=transmit, coefficients=coefficients,
        case=case, distance=distance, iterations=iters, gap=gap_phys)


def solve_enumeration(rates, noise: NoiseModel, tol: float = 1e-12,
                      max_iter: int = 2000, check: bool = True) -> MinMaxSolution:
    """Exact min-max fair base over the enumerated vertex hull (n <= 7).

    ``tol`` is the duality-gap tolerance of the quadratic program, measured
    on the sum-power-normalized problem.
    """
    return _solve_power(rates, noise, tol, max_iter, "enumeration", check)


def solve_frank_wolfe(rates, noise: NoiseModel, tol: float = 1e-12,
                      max_iter: int = 20000, check: bool = True) -> MinMaxSolution:
    """Min-max fair base by away-step conditional gradient (any n).

    The linear subproblem is solved by the greedy descending sort of the
    gradient, so each iteration costs ``O(n log n)``.
    """
    return _solve_power(rates, noise, tol, max_iter, "frank_wolfe", check)


def solve(rates, noise: NoiseModel, backend: str = "auto", tol: float = 1e-12,
          max_iter: int | None = None, check: bool = True) -> MinMaxSolution:
    """Dispatch to the enumeration backend for small n, Frank-Wolfe otherwise."""
    r = _as_vector(rates, "rates")
    if backend == "auto":
        backend = "enumeration" if r.size <= ENUMERATION_MAX_N else "frank_wolfe"
    if backend == "enumeration":
        return solve_enumeration(r, noise, tol, max_iter or 2000, check)
    if backend == "frank_wolfe":
        return solve_frank_wolfe(r, noise, tol, max_iter or 20000, check)
    raise ValueError(f"unknown backend {backend!r}")


def solve_weighted(rates, noise: NoiseModel, tol: float = 1e-12,
                   backend: str = "auto", max_iter: int | None = None,
                   check: bool = True) -> MinMaxSolution:
    """Gain-weighted min-max fair base.

    Minimizes ``sum_i g_i * (Q_i - c)^2`` over the received-power face with
    ``c = sum_power / sum(gains)``; the gains act as fairness weights for
    heterogeneous nodes.  With unit gains this is exactly the unweighted
    solve (same code path, identical output).
    """
    return solve(rates, noise, backend=backend, tol=tol, max_iter=max_iter,
                 check=check)


def max_min_rates(powers, noise: NoiseModel, tol: float = 1e-12,
                  backend: str = "auto", max_iter: int | None = None
                  ) -> tuple[np.ndarray, tuple[tuple[tuple[int, ...], float], ...]]:
    """Max-min fair rate base of the capacity region, with time sharing.

    The dual of the power problem: the fairest achievable rate vector at
    fixed powers is the base of the capacity region closest to the equal
    split of the sum capacity.  Returns the rate vector and the
    ``(decoding order, weight)`` pairs realizing it.
    """
    p = _as_vector(powers, "powers")
    n = p.size
    total = capacity_rank(p, noise, range(n))
    identity = tuple(range(n))
    if total == 0.0:
        return np.zeros(n), ((identity, 1.0),)
    level = 1.0 / n
    weights = np.ones(n)

    def chain(order: tuple[int, ...]) -> np.ndarray:
        return capacity_chain(p, noise, order) / total

    def lmo(grad: np.ndarray) -> tuple[int, ...]:
        # Polymatroid side: chain increments decrease, so the smallest
        # gradient entry takes the first (largest) share.
        return tuple(int(i) for i in np.argsort(grad, kind="stable"))

    if n == 1:
        u = np.ones(1)
        support = {(0,): 1.0}
    elif backend in ("auto", "enumeration") and n <= ENUMERATION_MAX_N:
        orders = _all_orders(n)
        vertices = np.stack([chain(tuple(int(i) for i in o)) for o in orders])
        u, support, _, _ = _solve_hull_enumeration(
            vertices, orders, n, weights, level, tol, max_iter or 2000)
    else:
        u, support, _, _ = _solve_hull_frank_wolfe(
            chain, lmo, n, weights, level, tol, max_iter or 20000)

    return total * u, _prune_support(support)
