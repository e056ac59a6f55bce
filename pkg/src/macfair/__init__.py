"""Min-max fair power scheduling for Gaussian multiple-access uplinks.

The feasible power region of a multi-access channel at fixed rates is a
contra-polymatroid; its fairest (min-max optimal) point is the base closest
to the equal-allocation point and is realized by time sharing successive
decoding orders.  This package computes such schedules, compares them with
minimum-cost and TDMA baselines, and measures the resulting sensor-network
lifetime by Monte Carlo simulation.
"""

from .polymatroid import (
    EnumerationLimitError,
    InvalidSubsetError,
    NoiseModel,
    NotABaseError,
    NotAMemberError,
    capacity_chain,
    capacity_rank,
    chain_received,
    check_rank_modularity,
    contains,
    dep,
    distinct_levels,
    greedy_linear_max_rates,
    greedy_linear_min,
    is_base,
    is_lex_optimal_base,
    is_lex_optimal_rate_base,
    is_minmax,
    lex_leq,
    power_rank,
    sat,
    sort_desc,
    subset_sum,
    sum_power,
    vertex,
)
from .minmax import (
    CaseLabel,
    MinMaxSolution,
    SolverFailureError,
    classify_case,
    equal_allocation,
    max_min_rates,
    solve,
    solve_enumeration,
    solve_frank_wolfe,
    solve_weighted,
)
from .scheduling import (
    Backlog,
    EnergyReport,
    Epoch,
    STRATEGIES,
    Schedule,
    average_rates,
    build_schedule,
    energy_report,
    minicost_schedule,
    minmax_schedule,
    tdma_schedule,
)
from .lifetime import (
    ComparisonTable,
    RunResult,
    SimConfig,
    StrategyStats,
    compare_strategies,
    draw_backlogs,
    period_backlog,
    run_period,
    simulate_lifetime,
)

__version__ = "0.1.0"
