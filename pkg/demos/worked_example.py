"""Walk through one two-node instance end to end.

Two sensors must deliver 1 and 2 packets of 30 bits within a 30 s collecting
period, so they transmit at average rates (1, 2) bits per channel use.  The
script shows the feasible-region geometry, the min-max fair allocation, and
how the three scheduling strategies split the energy bill.
"""

import numpy as np

from macfair import (
    Backlog,
    NoiseModel,
    build_schedule,
    energy_report,
    equal_allocation,
    power_rank,
    solve_enumeration,
    sum_power,
    vertex,
)

noise = NoiseModel(sigma_sq=1.0)
rates = np.array([1.0, 2.0])

print("== feasible power region ==")
print(f"rates: {rates.tolist()} bits/use, noise power {noise.sigma_sq} W")
for subset, label in ([0], "node 1 alone"), ([1], "node 2 alone"), ([0, 1], "both"):
    print(f"  constraint {label}: received power >= "
          f"{power_rank(rates, noise, subset):.3f} W")
print(f"every minimal schedule spends {sum_power(rates, noise):.1f} W total")

print("\n== decoding-order vertices ==")
for order in ((0, 1), (1, 0)):
    p = vertex(rates, noise, order)
    first_decoded = order[-1] + 1
    print(f"  chain {order[0] + 1}->{order[1] + 1} "
          f"(node {first_decoded} decoded first): powers {p.round(3).tolist()}")

print("\n== min-max fair point ==")
g = equal_allocation(rates, noise)
print(f"equal-allocation point: {g.tolist()}")
solution = solve_enumeration(rates, noise)
print(f"case: {solution.case.value}")
print(f"fair base: {solution.received.round(6).tolist()}")
for order, weight in solution.coefficients:
    print(f"  spend {weight:.4f} of the period on chain "
          f"{'>'.join(str(i + 1) for i in order)}")

print("\n== energy bill per strategy ==")
backlog = Backlog(packets=np.array([1.0, 2.0]), packet_bits=30.0)
for strategy in ("minmax", "minicost", "tdma"):
    report = energy_report(build_schedule(strategy, backlog, 30.0, noise))
    print(f"  {strategy:9s} per-node {report.per_node_energy.round(1).tolist()} J, "
          f"total {report.sum_energy:.0f} J, peak {report.max_power:.1f} W")
print("\nSame total energy everywhere; min-max halves the worst node's bill.")
