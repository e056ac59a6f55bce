"""Collecting-period transmission schedules and their energy accounting.

Given the per-period backlogs, every strategy here delivers exactly
``b_i * B`` bits per node over the period ``T`` (one channel use per second,
so power x time is energy in joules):

* ``minicost``: a single epoch at the average rates with one fixed decoding
  order -- the minimum total-energy schedule.
* ``tdma``: each node transmits alone for a time slice proportional to its
  backlog; proportional slicing equalizes the slot rates and is the
  minimum-energy time-division split.
* ``minmax``: time shares the decoding-order vertices with the min-max
  solver's weights, so the time-averaged power vector is the min-max fair
  base; all three strategies spend the same total energy in a symmetric
  channel, but this one minimizes the largest per-node share.

Nodes with zero backlog are removed before scheduling and reported with zero
power and rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import minmax
from .polymatroid import (
    LN2,
    NoiseModel,
    _as_order,
    _as_vector,
    _chain_received_trusted,
    vertex,
)

STRATEGIES = ("minmax", "minicost", "tdma")


@dataclass(frozen=True)
class Backlog:
    """Per-node packet queues for one collecting period.

    Packets may be fractional (a packet can be split and encoded at any
    rate); ``packet_bits`` is the fixed packet length B.
    """

    packets: np.ndarray
    packet_bits: float

    def __post_init__(self):
        p = _as_vector(self.packets, "packets")
        if not self.packet_bits > 0:
            raise ValueError("packet_bits must be positive")
        p.flags.writeable = False
        object.__setattr__(self, "packets", p)

    @property
    def bits(self) -> np.ndarray:
        return self.packets * self.packet_bits


@dataclass(frozen=True)
class Epoch:
    """One constant-rate segment: duration share, powers, rates, and the
    decoding chain (the receiver decodes ``decode_order[-1]`` first and
    ``decode_order[0]`` last)."""

    duration_fraction: float
    powers: np.ndarray
    rates: np.ndarray
    decode_order: tuple[int, ...]

    def __post_init__(self):
        for name in ("powers", "rates"):
            v = _as_vector(getattr(self, name), name)
            v.flags.writeable = False
            object.__setattr__(self, name, v)
        object.__setattr__(
            self, "decode_order", _as_order(self.decode_order, self.powers.size))
        if not 0.0 <= self.duration_fraction <= 1.0 + 1e-12:
            raise ValueError("duration_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class Schedule:
    """A full collecting-period schedule: epochs whose fractions sum to one."""

    kind: str
    epochs: tuple[Epoch, ...]
    period: float

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise ValueError(f"kind must be one of {STRATEGIES}, got {self.kind!r}")
        if not self.period > 0:
            raise ValueError("period must be positive")
        object.__setattr__(self, "epochs", tuple(self.epochs))
        total = sum(e.duration_fraction for e in self.epochs)
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"epoch fractions sum to {total}, expected 1")

    @property
    def n_nodes(self) -> int:
        return self.epochs[0].powers.size

    def delivered_bits(self) -> np.ndarray:
        """Bits delivered per node over the period."""
        out = np.zeros(self.n_nodes)
        for e in self.epochs:
            out += e.duration_fraction * self.period * e.rates
        return out

    def average_powers(self) -> np.ndarray:
        """Time-averaged transmit power per node."""
        out = np.zeros(self.n_nodes)
        for e in self.epochs:
            out += e.duration_fraction * e.powers
        return out


@dataclass(frozen=True)
class EnergyReport:
    """Per-node energies over a period, with the period-normalized peak."""

    per_node_energy: np.ndarray
    max_power: float
    sum_energy: float

    def __post_init__(self):
        v = _as_vector(self.per_node_energy, "per_node_energy")
        v.flags.writeable = False
        object.__setattr__(self, "per_node_energy", v)


def average_rates(backlog: Backlog, period: float) -> np.ndarray:
    """Constant rates that clear the backlog: ``b_i * B / T`` bits per use."""
    if not period > 0:
        raise ValueError("period must be positive")
    return backlog.bits / period


def _active_split(backlog: Backlog) -> tuple[np.ndarray, np.ndarray]:
    packets = backlog.packets
    active = np.nonzero(packets > 0.0)[0]
    return active, packets[active]


def _embed(values: np.ndarray, active: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(n)
    out[active] = values
    return out


def _subnoise(noise: NoiseModel, active: np.ndarray) -> NoiseModel:
    if noise.gains is None:
        return noise
    return NoiseModel(noise.sigma_sq, noise.gains[active])


def minicost_schedule(backlog: Backlog, period: float,
                      noise: NoiseModel) -> Schedule:
    """Single-epoch schedule at the average rates with one fixed decoding order.

    Constant average rate minimizes the total energy, and one decoding order
    suffices; the order places higher-gain nodes later on the chain (decoded
    first), which in the symmetric channel is just the node order.
    """
    n = backlog.packets.size
    active, packets = _active_split(backlog)
    if active.size == 0:
        raise ValueError("at least one node must have a positive backlog")
    sub = _subnoise(noise, active)
    rates = packets * backlog.packet_bits / period
    theta = 1.0 / sub.gains_for(active.size)
    order = tuple(int(i) for i in np.argsort(-theta, kind="stable"))
    powers = vertex(rates, sub, order)
    epoch = Epoch(
        duration_fraction=1.0,
        powers=_embed(powers, active, n),
        rates=_embed(rates, active, n),
        decode_order=tuple(int(active[i]) for i in order) + tuple(
            int(i) for i in range(n) if i not in set(active.tolist())),
    )
    return Schedule(kind="minicost", epochs=(epoch,), period=period)


def tdma_schedule(backlog: Backlog, period: float,
                  noise: NoiseModel) -> Schedule:
    """Each node transmits alone for a slice proportional to its backlog.

    Proportional slices give every slot the same rate ``sum(b) * B / T``,
    which is the minimum-sum-energy time-division allocation.
    """
    n = backlog.packets.size
    active, packets = _active_split(backlog)
    if active.size == 0:
        raise ValueError("at least one node must have a positive backlog")
    gains = noise.gains_for(n)
    fractions = packets / packets.sum()
    slot_rate = float(packets.sum()) * backlog.packet_bits / period
    slot_received = noise.sigma_sq * float(np.expm1(2.0 * LN2 * slot_rate))
    identity = tuple(range(n))
    epochs = []
    for frac, i in zip(fractions, active):
        powers = np.zeros(n)
        powers[i] = slot_received / gains[i]
        rates = np.zeros(n)
        rates[i] = slot_rate
        epochs.append(Epoch(duration_fraction=float(frac), powers=powers,
                            rates=rates, decode_order=identity))
    return Schedule(kind="tdma", epochs=tuple(epochs), period=period)


def minmax_schedule(backlog: Backlog, period: float, noise: NoiseModel,
                    backend: str = "auto", tol: float = 1e-12,
                    max_iter: int | None = None, check: bool = True) -> Schedule:
    """Time-sharing schedule whose averaged powers are the min-max fair base.

    One epoch per time-sharing weight of the solver, each at the vertex of
    its decoding order; rates are the average rates in every epoch, so the
    delivered bits are unchanged while the per-node energies are equalized
    as far as the region allows.
    """
    n = backlog.packets.size
    active, packets = _active_split(backlog)
    if active.size == 0:
        raise ValueError("at least one node must have a positive backlog")
    sub = _subnoise(noise, active)
    rates = packets * backlog.packet_bits / period
    solution = minmax.solve(rates, sub, backend=backend, tol=tol,
                            max_iter=max_iter, check=check)
    gains = sub.gains_for(active.size)
    full_rates = _embed(rates, active, n)
    inactive = tuple(int(i) for i in range(n) if i not in set(active.tolist()))
    epochs = []
    for order, weight in solution.coefficients:
        received = _chain_received_trusted(
            rates, sub.sigma_sq, np.asarray(order, dtype=np.intp))
        epochs.append(Epoch(
            duration_fraction=weight,
            powers=_embed(received / gains, active, n),
            rates=full_rates,
            decode_order=tuple(int(active[i]) for i in order) + inactive,
        ))
    return Schedule(kind="minmax", epochs=tuple(epochs), period=period)


def energy_report(schedule: Schedule) -> EnergyReport:
    """Per-node energies of a schedule and the period-normalized peak power.

    ``max_power`` divides each node's energy by the full period, which is
    how bursty (TDMA) and continuous schedules are compared on one axis.
    """
    energy = np.zeros(schedule.n_nodes)
    for e in schedule.epochs:
        energy += e.duration_fraction * schedule.period * e.powers
    return EnergyReport(
        per_node_energy=energy,
        max_power=float(energy.max()) / schedule.period,
        sum_energy=float(energy.sum()),
    )


def build_schedule(strategy: str, backlog: Backlog, period: float,
                   noise: NoiseModel, **solver_options) -> Schedule:
    """Construct the named strategy's schedule for one period."""
    if strategy == "minmax":
        return minmax_schedule(backlog, period, noise, **solver_options)
    if strategy == "minicost":
        return minicost_schedule(backlog, period, noise)
    if strategy == "tdma":
        return tdma_schedule(backlog, period, noise)
    raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
