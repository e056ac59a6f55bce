"""Command-line surface: solve single instances, emit schedules, run the
lifetime simulation, and verify the library's invariants.

Commands
--------
``solve``     print the min-max fair power allocation for one rate vector
``schedule``  write a per-epoch schedule CSV and print its energy report
``simulate``  run the Monte Carlo comparison and write fig4/fig5/fig6 CSVs
``verify``    run the randomized property suites

Exit codes: 0 success, 1 usage or parse error, 2 solver failure,
3 verification failure.

Wire formats
------------
Decoding orders are ``>``-joined 1-based node indices in chain order
(``2>1`` puts node 2 first on the chain, so the receiver decodes node 1
first).  Schedule CSVs have one row per epoch::

    fraction,decode_order,power_1..power_N,rate_1..rate_N

with shortest round-trip decimal numbers.  The ``simulate`` config is a flat
``key=value`` file; quantities carry explicit units in the key name
(``noise_db`` or ``noise_w``, ``period_s``, ``initial_energy_j``).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import lifetime, minmax, scheduling, verify
from .minmax import SolverFailureError
from .polymatroid import NoiseModel
from .scheduling import Backlog, Epoch, Schedule, STRATEGIES

SEED_ENV_VAR = "MACFAIR_SEED"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SOLVER = 2
EXIT_VERIFY = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that raises instead of exiting with its own code."""

    def error(self, message):
        raise UsageError(message)


def fmt(x: float) -> str:
    """Numeric rendering shared by human and JSON output (12 significant digits)."""
    return f"{float(x):.12g}"


def order_to_wire(order) -> str:
    return ">".join(str(int(i) + 1) for i in order)


def wire_to_order(text: str, n: int) -> tuple[int, ...]:
    try:
        order = tuple(int(tok) - 1 for tok in text.split(">"))
    except ValueError as exc:
        raise UsageError(f"bad decode order {text!r}") from exc
    if sorted(order) != list(range(n)):
        raise UsageError(f"decode order {text!r} is not a permutation of 1..{n}")
    return order


def _parse_floats(text: str, flag: str) -> np.ndarray:
    try:
        values = np.array([float(tok) for tok in text.split(",") if tok != ""])
    except ValueError as exc:
        raise UsageError(f"could not parse {flag}={text!r} as numbers") from exc
    if values.size == 0:
        raise UsageError(f"{flag} must contain at least one number")
    return values


def _noise_from_args(args, n: int) -> NoiseModel:
    if args.noise_db is not None and args.noise is not None:
        raise UsageError("give either --noise (linear watts) or --noise-db, not both")
    gains = None
    if args.gains is not None:
        gains = _parse_floats(args.gains, "--gains")
        if gains.size != n:
            raise UsageError(f"--gains needs {n} entries, got {gains.size}")
        if not np.all(gains > 0):
            raise UsageError("--gains entries must be positive")
    try:
        if args.noise_db is not None:
            return NoiseModel.from_db(args.noise_db, gains=gains)
        return NoiseModel(args.noise if args.noise is not None else 1.0,
                          gains=gains)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_solve(args) -> int:
    rates = _parse_floats(args.rates, "--rates")
    if not np.all(rates >= 0):
        raise UsageError("--rates entries must be non-negative")
    noise = _noise_from_args(args, rates.size)
    solution = minmax.solve(rates, noise, backend=args.backend, tol=args.tol,
                            max_iter=args.max_iter)
    shares = [{"order": order_to_wire(o), "weight": float(fmt(w))}
              for o, w in solution.coefficients]
    if args.json:
        payload = {
            "case": solution.case.value,
            "received_power_w": [float(fmt(x)) for x in solution.received],
            "transmit_power_w": [float(fmt(x)) for x in solution.transmit],
            "distance": float(fmt(solution.distance)),
            "gap": float(fmt(solution.gap)),
            "iterations": solution.iterations,
            "time_sharing": shares,
        }
        print(json.dumps(payload))
        return EXIT_OK
    print(f"case: {solution.case.value}")
    print("received_power_w: " + " ".join(fmt(x) for x in solution.received))
    print("transmit_power_w: " + " ".join(fmt(x) for x in solution.transmit))
    print(f"distance: {fmt(solution.distance)}")
    print(f"gap: {fmt(solution.gap)}")
    print(f"iterations: {solution.iterations}")
    for share in shares:
        print(f"share: {share['order']} weight {fmt(share['weight'])}")
    return EXIT_OK


def schedule_rows(schedule: Schedule) -> list[list[str]]:
    n = schedule.n_nodes
    header = (["fraction", "decode_order"]
              + [f"power_{i + 1}" for i in range(n)]
              + [f"rate_{i + 1}" for i in range(n)])
    rows = [header]
    for e in schedule.epochs:
        rows.append([repr(float(e.duration_fraction)),
                     order_to_wire(e.decode_order)]
                    + [repr(float(p)) for p in e.powers]
                    + [repr(float(r)) for r in e.rates])
    return rows


def write_schedule_csv(schedule: Schedule, stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerows(schedule_rows(schedule))


def read_schedule_csv(path, kind: str, period: float) -> Schedule:
    """Re-parse a schedule CSV back into a validated Schedule."""
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    header = rows[0]
    n = sum(1 for name in header if name.startswith("power_"))
    epochs = []
    for row in rows[1:]:
        fraction = float(row[0])
        order = wire_to_order(row[1], n)
        powers = np.array([float(x) for x in row[2:2 + n]])
        rates = np.array([float(x) for x in row[2 + n:2 + 2 * n]])
        epochs.append(Epoch(duration_fraction=fraction, powers=powers,
                            rates=rates, decode_order=order))
    return Schedule(kind=kind, epochs=tuple(epochs), period=period)


def cmd_schedule(args) -> int:
    backlogs = _parse_floats(args.backlogs, "--backlogs")
    if not np.all(backlogs >= 0) or not np.any(backlogs > 0):
        raise UsageError("--backlogs must be non-negative with at least one "
                         "positive entry")
    if not args.packet_bits > 0:
        raise UsageError("--packet-bits must be positive")
    if not args.period > 0:
        raise UsageError("--period must be positive")
    noise = _noise_from_args(args, backlogs.size)
    backlog = Backlog(packets=backlogs, packet_bits=args.packet_bits)
    options = {}
    if args.strategy == "minmax":
        options = dict(backend=args.backend, tol=args.tol,
                       max_iter=args.max_iter)
    schedule = scheduling.build_schedule(args.strategy, backlog, args.period,
                                         noise, **options)
    if args.out:
        with open(args.out, "w", newline="") as handle:
            write_schedule_csv(schedule, handle)
    else:
        write_schedule_csv(schedule, sys.stdout)
    report = scheduling.energy_report(schedule)
    print(f"per_node_energy_j: "
          + " ".join(fmt(e) for e in report.per_node_energy))
    print(f"max_power_w: {fmt(report.max_power)}")
    print(f"sum_energy_j: {fmt(report.sum_energy)}")
    return EXIT_OK


_CONFIG_KEYS = {
    "nodes", "initial_energy_j", "period_s", "packet_bits", "noise_db",
    "noise_w", "gains", "lambda_packets", "lambda_sweep", "runs", "seed",
    "backend", "tol", "max_iter", "period_cap", "out_dir",
}


@dataclass
class ExperimentConfig:
    """Parsed `simulate` configuration (flat key=value file)."""

    nodes: int
    initial_energy_j: float
    period_s: float
    packet_bits: float
    sigma_sq: float
    lambda_packets: float
    runs: int
    seed: int
    gains: np.ndarray | None = None
    lambda_sweep: list[float] = field(default_factory=list)
    backend: str = "auto"
    tol: float = 1e-12
    max_iter: int | None = None
    period_cap: int = lifetime.DEFAULT_PERIOD_CAP
    out_dir: str = "."
    seed_source: str = "config"

    def sim_config(self, lam: float) -> lifetime.SimConfig:
        return lifetime.SimConfig(
            n_nodes=self.nodes, initial_energy=self.initial_energy_j,
            period=self.period_s, packet_bits=self.packet_bits,
            noise=NoiseModel(self.sigma_sq, gains=self.gains), lam=lam,
            runs=self.runs, seed=self.seed, period_cap=self.period_cap,
            backend=self.backend, tol=self.tol, max_iter=self.max_iter)


def parse_experiment_config(text: str) -> ExperimentConfig:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise UsageError(f"config line {lineno}: expected key=value, "
                             f"got {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in _CONFIG_KEYS:
            raise UsageError(f"config line {lineno}: unknown key {key!r}")
        if key in raw:
            raise UsageError(f"config line {lineno}: duplicate key {key!r}")
        raw[key] = value.strip()

    def need(key: str) -> str:
        if key not in raw:
            raise UsageError(f"config is missing required key {key!r}")
        return raw[key]

    def parse(key: str, kind, value: str):
        try:
            return kind(value)
        except ValueError as exc:
            raise UsageError(f"config key {key!r}: bad value {value!r}") from exc

    if ("noise_db" in raw) == ("noise_w" in raw):
        raise UsageError("config must set exactly one of noise_db / noise_w")
    if "noise_db" in raw:
        sigma_sq = 10.0 ** (parse("noise_db", float, raw["noise_db"]) / 10.0)
    else:
        sigma_sq = parse("noise_w", float, raw["noise_w"])
        if not sigma_sq > 0:
            raise UsageError("config key 'noise_w' must be positive")

    gains = None
    if "gains" in raw:
        gains = _parse_floats(raw["gains"], "gains")

    lam = parse("lambda_packets", float, need("lambda_packets"))
    sweep = [lam]
    if "lambda_sweep" in raw:
        sweep = [float(x) for x in _parse_floats(raw["lambda_sweep"],
                                                 "lambda_sweep")]

    config = ExperimentConfig(
        nodes=parse("nodes", int, need("nodes")),
        initial_energy_j=parse("initial_energy_j", float,
                               need("initial_energy_j")),
        period_s=parse("period_s", float, need("period_s")),
        packet_bits=parse("packet_bits", float, need("packet_bits")),
        sigma_sq=sigma_sq,
        lambda_packets=lam,
        runs=parse("runs", int, need("runs")),
        seed=parse("seed", int, need("seed")),
        gains=gains,
        lambda_sweep=sweep,
        backend=raw.get("backend", "auto"),
        tol=parse("tol", float, raw["tol"]) if "tol" in raw else 1e-12,
        max_iter=parse("max_iter", int, raw["max_iter"]) if "max_iter" in raw
        else None,
        period_cap=parse("period_cap", int, raw["period_cap"])
        if "period_cap" in raw else lifetime.DEFAULT_PERIOD_CAP,
        out_dir=raw.get("out_dir", "."),
    )
    if config.backend not in ("auto", "enumeration", "frank_wolfe"):
        raise UsageError(f"config key 'backend': unknown backend "
                         f"{config.backend!r}")
    if gains is not None and gains.size != config.nodes:
        raise UsageError(f"config key 'gains' needs {config.nodes} entries, "
                         f"got {gains.size}")
    try:
        config.sim_config(config.lambda_packets)
    except ValueError as exc:
        raise UsageError(f"config: {exc}") from exc
    return config


def _write_csv(path: Path, header_comment: str, header: list[str],
               rows: list[list[str]]) -> None:
    with open(path, "w", newline="") as handle:
        handle.write(header_comment + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def cmd_simulate(args) -> int:
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {args.config!r}: {exc}") from exc
    config = parse_experiment_config(text)
    if args.out_dir is not None:
        config.out_dir = args.out_dir
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            config.seed = int(env_seed)
        except ValueError as exc:
            raise UsageError(f"{SEED_ENV_VAR}={env_seed!r} is not an integer") from exc
        config.seed_source = f"env {SEED_ENV_VAR}"
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stamp = f"# seed={config.seed} source={config.seed_source}"

    table = lifetime.compare_strategies(config.sim_config(config.lambda_packets))
    _write_csv(out_dir / "fig4.csv", stamp, ["strategy", "mean_max_power_w"],
               [[s, repr(table.stats[s].mean_max_power)] for s in STRATEGIES])
    _write_csv(out_dir / "fig5.csv", stamp, ["strategy", "mean_sum_energy_j"],
               [[s, repr(table.stats[s].mean_sum_energy)] for s in STRATEGIES])

    sweep_rows = []
    for lam in config.lambda_sweep:
        if lam == config.lambda_packets:
            swept = table
        else:
            swept = lifetime.compare_strategies(config.sim_config(lam))
        for s in STRATEGIES:
            sweep_rows.append([repr(float(lam)), s,
                               repr(swept.stats[s].mean_lifetime)])
    _write_csv(out_dir / "fig6.csv", stamp,
               ["lambda_packets", "strategy", "mean_lifetime_periods"],
               sweep_rows)

    print(stamp)
    print(f"runs: {config.runs}")
    for s in STRATEGIES:
        st = table.stats[s]
        print(f"{s}: mean_lifetime={fmt(st.mean_lifetime)} "
              f"mean_max_power_w={fmt(st.mean_max_power)} "
              f"mean_sum_energy_j={fmt(st.mean_sum_energy)}")
    print(f"wrote {out_dir / 'fig4.csv'}, {out_dir / 'fig5.csv'}, "
          f"{out_dir / 'fig6.csv'}")
    return EXIT_OK


def cmd_verify(args) -> int:
    results = verify.run_all(args.n, args.instances, args.seed)
    failed = False
    for res in results:
        if not res.ran:
            print(f"suite {res.name}: {res.message}")
        elif res.passed:
            print(f"suite {res.name}: ok ({res.checks} checks)")
        else:
            failed = True
            print(f"suite {res.name}: FAILED after {res.checks} checks")
            print(f"  counterexample: {res.message}")
    return EXIT_VERIFY if failed else EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="macfair",
                     description="Min-max fair multi-access power scheduling")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_noise_flags(p):
        p.add_argument("--noise", type=float, default=None,
                       help="noise power in watts (linear scale)")
        p.add_argument("--noise-db", type=float, default=None,
                       help="noise power in dB (e.g. -30 for 1e-3 W)")
        p.add_argument("--gains", default=None,
                       help="comma-separated channel gains")

    def add_solver_flags(p):
        p.add_argument("--backend", default="auto",
                       choices=["auto", "enumeration", "frank_wolfe"])
        p.add_argument("--tol", type=float, default=1e-12,
                       help="duality-gap tolerance (sum-power normalized)")
        p.add_argument("--max-iter", type=int, default=None)

    p = sub.add_parser("solve", help="min-max fair allocation for one rate vector")
    p.add_argument("--rates", required=True,
                   help="comma-separated rates in bits per channel use")
    add_noise_flags(p)
    add_solver_flags(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("schedule", help="emit a per-epoch schedule CSV")
    p.add_argument("--backlogs", required=True,
                   help="comma-separated packet counts")
    p.add_argument("--packet-bits", type=float, default=30.0)
    p.add_argument("--period", type=float, default=30.0,
                   help="collecting period in seconds")
    p.add_argument("--strategy", default="minmax", choices=list(STRATEGIES))
    add_noise_flags(p)
    add_solver_flags(p)
    p.add_argument("--out", default=None, help="CSV output path (default stdout)")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("simulate", help="Monte Carlo lifetime comparison")
    p.add_argument("--config", required=True, help="key=value config file")
    p.add_argument("--out-dir", default=None,
                   help="override the config's out_dir")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the property suites")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--instances", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverFailureError as exc:
        print(f"solver failure: {exc} (gap {exc.gap:g})", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
