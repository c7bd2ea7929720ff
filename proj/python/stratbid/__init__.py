"""Bilevel bidding of a price-maker battery in joint energy, reserve and regulation markets."""

from ._stratbid import (
    Bids,
    BessParams,
    CaseReport,
    MarketMask,
    Scenario,
    SizeGuardError,
    VerificationError,
    brute_force_oracle,
    clear_horizon,
    clear_interval,
    compare_cases,
    desk_scenario,
    generate_signal,
    milp_mps,
    reference_scenario,
    regulation_soc_delta,
    run_case,
)

__all__ = [
    "Bids",
    "BessParams",
    "CaseReport",
    "MarketMask",
    "Scenario",
    "SizeGuardError",
    "VerificationError",
    "brute_force_oracle",
    "clear_horizon",
    "clear_interval",
    "compare_cases",
    "desk_scenario",
    "generate_signal",
    "milp_mps",
    "reference_scenario",
    "regulation_soc_delta",
    "run_case",
]
