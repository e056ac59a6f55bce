"""Rank functions, membership tests, vertices and fairness oracles for the
Gaussian multiple-access power and capacity regions.

At fixed per-node rates R the feasible power vectors of an N-user Gaussian
multiple-access channel form a contra-polymatroid: every node subset A must
receive at least ``sigma^2 * (2^(2*R(A)) - 1)`` watts in aggregate.  Dually,
at fixed powers the achievable rate vectors form a polymatroid whose rank is
the Shannon sum capacity ``0.5 * log2(1 + Q(A)/sigma^2)``.  Each extreme
point (vertex) of either region is realized by one successive-decoding order,
so any point of the dominant face can be scheduled by time sharing among
decoding orders.

This module implements the two rank functions, exhaustive subset-constraint
membership, vertex construction along decoding chains, Edmonds-style greedy
linear optimization, and the saturated-set / dependent-set machinery that
certifies lexicographic (min-max fair) optimality of a base.

Conventions
-----------
* Nodes are indexed ``0 .. n-1``.
* Rates are in bits per channel use, powers in watts (linear scale).
* With unequal channel gains every subset constraint applies to the
  *received* powers ``g_i * p_i``; transmit powers are recovered by dividing
  by the gains at the boundary.  The symmetric channel is ``gains == 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable

import numpy as np

LN2 = float(np.log(2.0))

# Relative tolerance for tightness/feasibility of subset constraints; scaled
# by (1 + |rank|) because rank values span many orders of magnitude.
TIGHT_RTOL = 1e-9

# Two power levels are considered distinct fairness levels only if they
# differ by more than this (absolute + relative); solver outputs are numeric.
LEVEL_ATOL = 1e-6
LEVEL_RTOL = 1e-6

# Hard caps on exhaustive enumeration.  Exceeding a cap raises
# EnumerationLimitError; there is never a silent approximate fallback.
MEMBERSHIP_MAX_N = 20   # 2^n subset constraints
TIGHT_SET_MAX_N = 16    # 2^n tight-set enumeration (sat/dep)
MODULARITY_MAX_N = 12   # 2^n x 2^n subset pairs
LEX_CHECK_MAX_N = 12    # dependent-set checks per fairness level
PERTURB_MAX_N = 8       # pairwise transfer probing

# Default perturbation size for the min-max transfer oracle, as a fraction
# of the conserved received-power sum.
PERTURB_STEP_FRACTION = 1e-4


class InvalidSubsetError(ValueError):
    """A subset refers to node indices outside the ground set."""


class EnumerationLimitError(ValueError):
    """The requested exhaustive check exceeds its enumeration cap."""


class NotAMemberError(ValueError):
    """The point violates a subset constraint of the region."""


class NotABaseError(ValueError):
    """The point is not on the dominant face of the region."""


@dataclass(frozen=True)
class NoiseModel:
    """Receiver noise power and per-node channel gains.

    ``gains is None`` means the symmetric channel (all gains one).
    """

    sigma_sq: float = 1.0
    gains: np.ndarray | None = None

    def __post_init__(self):
        if not self.sigma_sq > 0.0:
            raise ValueError(f"noise power must be positive, got {self.sigma_sq}")
        if self.gains is not None:
            g = np.asarray(self.gains, dtype=float)
            if g.ndim != 1 or g.size < 1:
                raise ValueError("gains must be a non-empty 1-D vector")
            if not np.all(g > 0.0):
                raise ValueError("every channel gain must be positive")
            g.flags.writeable = False
            object.__setattr__(self, "gains", g)

    @classmethod
    def from_db(cls, noise_db: float, gains=None) -> "NoiseModel":
        """Build a model from a noise power in dB (e.g. -30 dB -> 1e-3 W)."""
        return cls(sigma_sq=10.0 ** (noise_db / 10.0), gains=gains)

    def gains_for(self, n: int) -> np.ndarray:
        if self.gains is None:
            return np.ones(n)
        if self.gains.size != n:
            raise ValueError(
                f"gain vector has length {self.gains.size}, expected {n}"
            )
        return self.gains

    def received(self, powers: np.ndarray) -> np.ndarray:
        """Received powers g_i * p_i for a transmit power vector."""
        p = np.asarray(powers, dtype=float)
        return p * self.gains_for(p.size)


def _as_vector(values, name: str, nonneg: bool = True) -> np.ndarray:
    x = np.asarray(values, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.ndim != 1 or x.size < 1:
        raise ValueError(f"{name} must be a non-empty 1-D vector")
    if nonneg and not np.all(x >= 0.0):
        raise ValueError(f"every entry of {name} must be non-negative")
    return x


def _as_subset(members: Iterable[int], n: int) -> np.ndarray:
    idx = np.asarray(sorted(set(int(i) for i in members)), dtype=np.intp)
    if idx.size and (idx[0] < 0 or idx[-1] >= n):
        raise InvalidSubsetError(
            f"subset {idx.tolist()} is not contained in the ground set 0..{n - 1}"
        )
    return idx


def _as_order(order, n: int) -> tuple[int, ...]:
    pi = tuple(int(i) for i in order)
    if sorted(pi) != list(range(n)):
        raise ValueError(f"{order!r} is not a permutation of 0..{n - 1}")
    return pi


def _tight_tol(rank_value: float) -> float:
    return TIGHT_RTOL * (1.0 + abs(rank_value))


def subset_sum(values, members) -> float:
    """Sum of the vector entries indexed by ``members`` (0 for the empty set)."""
    x = _as_vector(values, "values", nonneg=False)
    idx = _as_subset(members, x.size)
    return float(x[idx].sum())


def power_rank(rates, noise: NoiseModel, members) -> float:
    """Minimum aggregate received power a node subset needs at the given rates.

    This is the supermodular rank function of the power contra-polymatroid:
    ``sigma^2 * (2^(2*R(A)) - 1)``.
    """
    r = _as_vector(rates, "rates")
    idx = _as_subset(members, r.size)
    return noise.sigma_sq * float(np.expm1(2.0 * LN2 * r[idx].sum()))


def capacity_rank(powers, noise: NoiseModel, members) -> float:
    """Shannon sum capacity of a node subset, in bits per channel use.

    This is the submodular rank function of the capacity polymatroid:
    ``0.5 * log2(1 + Q(A)/sigma^2)`` with Q the received powers.
    """
    p = _as_vector(powers, "powers")
    idx = _as_subset(members, p.size)
    q = float((p[idx] * noise.gains_for(p.size)[idx]).sum())
    return 0.5 * float(np.log1p(q / noise.sigma_sq)) / LN2


def sum_power(rates, noise: NoiseModel) -> float:
    """Common received-power sum of every base: sigma^2 * (2^(2*sum(R)) - 1)."""
    r = _as_vector(rates, "rates")
    return noise.sigma_sq * float(np.expm1(2.0 * LN2 * r.sum()))


def _chain_received_trusted(r: np.ndarray, sigma_sq: float,
                            idx: np.ndarray) -> np.ndarray:
    rp = r[idx]
    prefix = np.cumsum(rp) - rp
    coords = sigma_sq * np.exp2(2.0 * prefix) * np.expm1(2.0 * LN2 * rp)
    out = np.empty_like(coords)
    out[idx] = coords
    return out


def chain_received(rates, sigma_sq: float, order) -> np.ndarray:
    """Received-power vertex of the power region for one decoding chain.

    Entry ``order[i]`` is the increment of the rank along the nested chain
    ``{order[0]}, {order[0], order[1]}, ...``; the receiver decodes
    ``order[-1]`` first and ``order[0]`` last, so ``order[0]`` gets the
    smallest share.
    """
    r = _as_vector(rates, "rates")
    pi = _as_order(order, r.size)
    return _chain_received_trusted(r, sigma_sq, np.asarray(pi, dtype=np.intp))


def vertex(rates, noise: NoiseModel, order) -> np.ndarray:
    """Transmit-power vertex of the power region for one decoding order."""
    q = chain_received(rates, noise.sigma_sq, order)
    return q / noise.gains_for(q.size)


@lru_cache(maxsize=None)
def _subset_bits(n: int) -> np.ndarray:
    """Boolean matrix (2^n, n): row m has the members of bitmask m."""
    masks = np.arange(1 << n, dtype=np.uint32)
    return (masks[:, None] >> np.arange(n)) & 1 > 0


class _RankTable:
    """All 2^n subset ranks of the power region, for exhaustive oracles."""

    def __init__(self, rates, noise: NoiseModel, max_n: int, what: str):
        r = _as_vector(rates, "rates")
        if r.size > max_n:
            raise EnumerationLimitError(
                f"{what} enumerates 2^n subsets and is capped at n <= {max_n}; "
                f"got n = {r.size}"
            )
        self.n = r.size
        self.noise = noise
        self.bits = _subset_bits(self.n)
        self.rank = noise.sigma_sq * np.expm1(2.0 * LN2 * (self.bits @ r))
        self.tol = TIGHT_RTOL * (1.0 + np.abs(self.rank))

    def subset_sums(self, x: np.ndarray) -> np.ndarray:
        return self.bits @ x

    def slack(self, received: np.ndarray) -> np.ndarray:
        return self.subset_sums(received) - self.rank

    def is_member(self, received: np.ndarray) -> bool:
        return bool(np.all(self.slack(received) >= -self.tol))

    def tight_masks(self, received: np.ndarray) -> np.ndarray:
        """Bitmasks of the subsets whose constraint holds with equality."""
        tight = np.abs(self.slack(received)) <= self.tol
        return np.nonzero(tight)[0]


def contains(powers, rates, noise: NoiseModel) -> bool:
    """Whether the transmit powers satisfy all 2^n received-power constraints."""
    p = _as_vector(powers, "powers")
    table = _RankTable(rates, noise, MEMBERSHIP_MAX_N, "membership test")
    if p.size != table.n:
        raise ValueError("powers and rates must have the same length")
    return table.is_member(noise.received(p))


def is_base(powers, rates, noise: NoiseModel) -> bool:
    """Whether the powers are feasible and lie on the dominant face.

    A base saturates the full-set constraint: the received-power sum equals
    ``sum_power(rates, noise)``.
    """
    p = _as_vector(powers, "powers")
    total = sum_power(rates, noise)
    q = noise.received(p)
    if abs(float(q.sum()) - total) > _tight_tol(total):
        return False
    return contains(powers, rates, noise)


def check_rank_modularity(rank_fn: Callable[[frozenset], float], n: int,
                          mode: str = "super") -> bool:
    """Exhaustively check that a set function is a valid (contra-)polymatroid rank.

    Verifies ``rank({}) == 0``, monotonicity under inclusion, and the
    sub/supermodular exchange inequality over all subset pairs, within
    relative tolerance ``TIGHT_RTOL``.
    """
    if mode not in ("sub", "super"):
        raise ValueError(f"mode must be 'sub' or 'super', got {mode!r}")
    if n > MODULARITY_MAX_N:
        raise EnumerationLimitError(
            f"modularity check enumerates all subset pairs and is capped at "
            f"n <= {MODULARITY_MAX_N}; got n = {n}"
        )
    size = 1 << n
    bits = _subset_bits(n)
    values = np.array(
        [rank_fn(frozenset(np.nonzero(bits[m])[0].tolist())) for m in range(size)]
    )
    tol = TIGHT_RTOL * (1.0 + np.abs(values))
    if abs(values[0]) > tol[0]:
        return False
    # Monotonicity: adding one element never decreases the rank.
    for i in range(n):
        without = np.nonzero(~bits[:, i])[0]
        with_i = without | (1 << i)
        if np.any(values[without] > values[with_i] + tol[with_i]):
            return False
    masks = np.arange(size, dtype=np.intp)
    for a in range(size):
        union = masks | a
        inter = masks & a
        lhs = values[a] + values
        rhs = values[union] + values[inter]
        margin = lhs - rhs if mode == "sub" else rhs - lhs
        if np.any(margin < -(tol[union] + tol[inter])):
            return False
    return True


def greedy_linear_min(theta, rates, noise: NoiseModel) -> tuple[tuple[int, ...], np.ndarray]:
    """Minimize ``theta . Q`` over the power region by Edmonds' greedy rule.

    The optimum is the vertex of the permutation sorting theta in descending
    order (ties broken by ascending node index): the node with the largest
    coefficient is placed first on the decoding chain, where the rank
    increment is smallest.  Returns the permutation and the transmit-power
    vertex.
    """
    t = _as_vector(theta, "theta", nonneg=False)
    r = _as_vector(rates, "rates")
    if t.size != r.size:
        raise ValueError("theta and rates must have the same length")
    if not np.all(np.isfinite(t)):
        raise ValueError("every entry of theta must be finite")
    pi = tuple(int(i) for i in np.argsort(-t, kind="stable"))
    return pi, vertex(r, noise, pi)


def capacity_chain(powers, noise: NoiseModel, order) -> np.ndarray:
    """Rate vertex of the capacity region for one decoding chain."""
    p = _as_vector(powers, "powers")
    pi = _as_order(order, p.size)
    idx = np.asarray(pi, dtype=np.intp)
    q = noise.received(p)[idx]
    cum = 0.5 * np.log1p(np.cumsum(q) / noise.sigma_sq) / LN2
    coords = np.diff(cum, prepend=0.0)
    out = np.empty_like(coords)
    out[idx] = coords
    return out


def greedy_linear_max_rates(lam, powers, noise: NoiseModel) -> tuple[tuple[int, ...], np.ndarray]:
    """Maximize ``lam . R`` over the capacity region by the greedy rule.

    The node with the largest coefficient is decoded last (first on the
    chain), where it sees no interference and gets its single-user capacity.
    """
    w = _as_vector(lam, "lam", nonneg=False)
    p = _as_vector(powers, "powers")
    if w.size != p.size:
        raise ValueError("lam and powers must have the same length")
    if not np.all(np.isfinite(w)):
        raise ValueError("every entry of lam must be finite")
    pi = tuple(int(i) for i in np.argsort(-w, kind="stable"))
    return pi, capacity_chain(p, noise, pi)


def _mask_to_set(mask: int) -> frozenset[int]:
    out = []
    i = 0
    m = int(mask)
    while m:
        if m & 1:
            out.append(i)
        m >>= 1
        i += 1
    return frozenset(out)


def sat(powers, rates, noise: NoiseModel) -> frozenset[int]:
    """Saturated set: the union of all tight subsets at the given point.

    The union of tight sets is itself tight (tight sets form a lattice), so
    the result is the unique maximal tight set.  Empty for interior points;
    the full ground set for any base.
    """
    p = _as_vector(powers, "powers")
    table = _RankTable(rates, noise, TIGHT_SET_MAX_N, "tight-set enumeration")
    if p.size != table.n:
        raise ValueError("powers and rates must have the same length")
    q = noise.received(p)
    if not table.is_member(q):
        raise NotAMemberError("the point violates a subset power constraint")
    tight = table.tight_masks(q)
    union = 0
    for m in tight:
        union |= int(m)
    members = _mask_to_set(union)
    if union:
        top = power_rank(rates, noise, members)
        assert abs(subset_sum(q, members) - top) <= _tight_tol(top), \
            "union of tight sets is not tight"
    return members


def dep(powers, i: int, rates, noise: NoiseModel) -> frozenset[int]:
    """Dependent set of node ``i``: the minimal tight set containing it.

    Equals the intersection of all tight sets containing ``i``; empty when
    ``i`` is not saturated (its power can be decreased without leaving the
    region).
    """
    p = _as_vector(powers, "powers")
    table = _RankTable(rates, noise, TIGHT_SET_MAX_N, "tight-set enumeration")
    if p.size != table.n:
        raise ValueError("powers and rates must have the same length")
    if not 0 <= int(i) < table.n:
        raise InvalidSubsetError(f"node index {i} outside ground set 0..{table.n - 1}")
    i = int(i)
    q = noise.received(p)
    if not table.is_member(q):
        raise NotAMemberError("the point violates a subset power constraint")
    tight = table.tight_masks(q)
    containing = [int(m) for m in tight if (int(m) >> i) & 1]
    if not containing:
        return frozenset()
    inter = containing[0]
    for m in containing[1:]:
        inter &= m
    members = _mask_to_set(inter)
    assert i in members, "dependent set lost its own node"
    bottom = power_rank(rates, noise, members)
    assert abs(subset_sum(q, members) - bottom) <= _tight_tol(bottom), \
        "intersection of tight sets is not tight"
    return members


def sort_desc(values) -> np.ndarray:
    """The entries of a vector in non-increasing order."""
    x = _as_vector(values, "values", nonneg=False)
    return np.sort(x)[::-1]


def lex_leq(x, y) -> bool:
    """Lexicographic order on raw vectors: equal, or smaller at the first
    differing position.  Compose with :func:`sort_desc` for fairness
    comparisons of allocation vectors."""
    a = _as_vector(x, "x", nonneg=False)
    b = _as_vector(y, "y", nonneg=False)
    if a.size != b.size:
        raise ValueError("vectors must have the same length")
    diff = np.nonzero(a != b)[0]
    if diff.size == 0:
        return True
    k = diff[0]
    return bool(a[k] < b[k])


def distinct_levels(values) -> list[np.ndarray]:
    """Cluster vector entries into distinct levels, highest first.

    Two entries belong to the same level when they differ by at most
    ``LEVEL_ATOL + LEVEL_RTOL * max(|a|, |b|)``.  Returns the node indices of
    each level.
    """
    x = _as_vector(values, "values", nonneg=False)
    order = np.argsort(-x, kind="stable")
    groups: list[list[int]] = [[int(order[0])]]
    for k in order[1:]:
        prev = x[groups[-1][-1]]
        cur = x[k]
        gap_tol = LEVEL_ATOL + LEVEL_RTOL * max(abs(prev), abs(cur))
        if prev - cur > gap_tol:
            groups.append([int(k)])
        else:
            groups[-1].append(int(k))
    return [np.asarray(g, dtype=np.intp) for g in groups]


def is_lex_optimal_base(powers, rates, noise: NoiseModel) -> bool:
    """Certify that a base is the lexicographically optimal (min-max fair) one.

    Clusters the received powers into distinct levels C_1 > ... > C_p and
    checks, for every prefix set S_j of nodes at level >= C_j, that each
    member's dependent set is non-empty and contained in S_j.  Any node
    failing this could shed power onto a strictly lower node, contradicting
    min-max fairness.
    """
    p = _as_vector(powers, "powers")
    if p.size > LEX_CHECK_MAX_N:
        raise EnumerationLimitError(
            f"lexicographic check is capped at n <= {LEX_CHECK_MAX_N}; got {p.size}"
        )
    if not is_base(p, rates, noise):
        raise NotABaseError("the point is not on the dominant face")
    q = noise.received(p)
    prefix: set[int] = set()
    for group in distinct_levels(q):
        prefix.update(int(i) for i in group)
        for i in prefix:
            d = dep(p, i, rates, noise)
            if not d or not d.issubset(prefix):
                return False
    return True


def is_minmax(powers, rates, noise: NoiseModel, step: float | None = None) -> bool:
    """Finite perturbation probe for min-max fairness of a base.

    For every ordered node pair tries to move ``e`` watts of received power
    from a higher coordinate onto a strictly lower one (probing ``e`` and
    ``e/10``); any feasible such transfer improves fairness, so the point is
    not min-max optimal.  This is a practical finite test of the definition;
    :func:`is_lex_optimal_base` is the exact certificate.
    """
    p = _as_vector(powers, "powers")
    if p.size > PERTURB_MAX_N:
        raise EnumerationLimitError(
            f"perturbation probe is capped at n <= {PERTURB_MAX_N}; got {p.size}"
        )
    if not is_base(p, rates, noise):
        raise NotABaseError("the point is not on the dominant face")
    table = _RankTable(rates, noise, PERTURB_MAX_N, "perturbation probe")
    q = noise.received(p)
    if step is None:
        step = PERTURB_STEP_FRACTION * sum_power(rates, noise)
    if not step > 0.0:
        return True  # zero rates: the origin admits no transfers
    for e in (step, step / 10.0):
        for i in range(table.n):
            if q[i] < e:
                continue
            for j in range(table.n):
                # Only a transfer that keeps the receiving coordinate below
                # the donor's old value improves the sorted profile.
                if j == i or not q[j] + e < q[i]:
                    continue
                trial = q.copy()
                trial[i] -= e
                trial[j] += e
                if table.is_member(trial):
                    return False
    return True


def capacity_tight_masks(rates, powers, noise: NoiseModel) -> np.ndarray:
    """Bitmasks of capacity constraints that hold with equality at ``rates``."""
    r = _as_vector(rates, "rates")
    p = _as_vector(powers, "powers")
    if r.size != p.size:
        raise ValueError("rates and powers must have the same length")
    if r.size > TIGHT_SET_MAX_N:
        raise EnumerationLimitError(
            f"tight-set enumeration is capped at n <= {TIGHT_SET_MAX_N}; got {r.size}"
        )
    bits = _subset_bits(r.size)
    q = noise.received(p)
    rank = 0.5 * np.log1p((bits @ q) / noise.sigma_sq) / LN2
    tol = TIGHT_RTOL * (1.0 + np.abs(rank))
    sums = bits @ r
    if np.any(sums > rank + tol):
        raise NotAMemberError("the rate point violates a capacity constraint")
    return np.nonzero(np.abs(sums - rank) <= tol)[0]


def is_lex_optimal_rate_base(rates, powers, noise: NoiseModel) -> bool:
    """Mirrored fairness certificate for a rate base of the capacity region.

    Max-min fairness over rates is the mirror of min-max fairness over
    powers: cluster the rates into levels C_1 < ... < C_p from the bottom and
    require every node in a low prefix to have its minimal tight set inside
    that prefix (no node can take rate from a strictly higher one).
    """
    r = _as_vector(rates, "rates")
    if r.size > LEX_CHECK_MAX_N:
        raise EnumerationLimitError(
            f"lexicographic check is capped at n <= {LEX_CHECK_MAX_N}; got {r.size}"
        )
    total = capacity_rank(powers, noise, range(r.size))
    if abs(float(r.sum()) - total) > _tight_tol(total):
        raise NotABaseError("the rate point is not on the dominant face")
    tight = [int(m) for m in capacity_tight_masks(r, powers, noise)]
    prefix: set[int] = set()
    for group in reversed(distinct_levels(r)):
        prefix.update(int(i) for i in group)
        for i in prefix:
            containing = [m for m in tight if (m >> i) & 1]
            if not containing:
                return False
            inter = containing[0]
            for m in containing[1:]:
                inter &= m
            if not _mask_to_set(inter).issubset(prefix):
                return False
    return True
