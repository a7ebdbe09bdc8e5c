"""Valuation of cross-owned firm networks and their reflexive dynamics.

Firms that hold fractions of each other's equity and debt have no
self-contained book value: each firm's value depends on the others'. This
package computes the consistent (fixed-point) valuation at given exogenous
prices, simulates how published balance sheets evolve period by period when
firms can only observe each other with a reporting lag, and classifies the
resulting feedback loop. JSON documents and a small CLI cover the scripting
side.
"""

from pathlib import Path

from .errors import (
    ColumnSumExceededError,
    DimensionMismatchError,
    DuplicateIdError,
    InsufficientDataError,
    InsufficientHistoryError,
    InvalidFractionError,
    NetworkValidationError,
    NoConvergenceError,
    ParseError,
    ReflexnetError,
    RegimeViolationError,
    ScenarioInvalidError,
    SchemaError,
    SingularSystemError,
    UnknownReferenceError,
)
from .network import (
    COLUMN_SUM_TOLERANCE,
    ColumnSums,
    DebtTranche,
    ExogenousHolding,
    Network,
    OwnershipMatrix,
    build_network,
    insider_column_sums,
)
from .valuation import (
    BalanceSheet,
    ValuationState,
    conservation_check,
    firm_asset_value,
    l1_diff,
    publish_balance_sheet,
    resolve_prices,
    revalue,
    sup_diff,
    waterfall,
)
from .solver import (
    ContractionReport,
    SolveDiagnostics,
    SolverConfig,
    UNIQUENESS_MARGIN,
    check_contraction,
    closed_form_linear,
    solve_equilibrium,
)
from .dynamics import (
    FeedbackClass,
    Scenario,
    Shock,
    Trajectory,
    build_scenario,
    classify_feedback,
    limit_gap,
    price_grid,
    simulate,
    step,
)
from .documents import (
    SCHEMA_VERSION,
    emit_trajectory,
    parse_network,
    parse_prices,
    parse_scenario,
    serialize_network,
    serialize_scenario,
    trajectory_columns,
)
from .cli import main, run_cli

__version__ = "0.1.0"


def fixture_path(name: str) -> Path:
    """Absolute path of a bundled example document, e.g.
    ``fixture_path("two_firm_reciprocal.network.json")``."""
    path = Path(__file__).resolve().parent / "fixtures" / name
    if not path.is_file():
        raise FileNotFoundError(f"no bundled fixture named {name!r}")
    return path


__all__ = [
    "BalanceSheet",
    "COLUMN_SUM_TOLERANCE",
    "ColumnSumExceededError",
    "ColumnSums",
    "ContractionReport",
    "DebtTranche",
    "DimensionMismatchError",
    "DuplicateIdError",
    "ExogenousHolding",
    "FeedbackClass",
    "InsufficientDataError",
    "InsufficientHistoryError",
    "InvalidFractionError",
    "Network",
    "NetworkValidationError",
    "NoConvergenceError",
    "OwnershipMatrix",
    "ParseError",
    "ReflexnetError",
    "RegimeViolationError",
    "SCHEMA_VERSION",
    "Scenario",
    "ScenarioInvalidError",
    "SchemaError",
    "Shock",
    "SingularSystemError",
    "SolveDiagnostics",
    "SolverConfig",
    "Trajectory",
    "UNIQUENESS_MARGIN",
    "UnknownReferenceError",
    "ValuationState",
    "build_network",
    "build_scenario",
    "check_contraction",
    "classify_feedback",
    "closed_form_linear",
    "conservation_check",
    "emit_trajectory",
    "firm_asset_value",
    "fixture_path",
    "insider_column_sums",
    "l1_diff",
    "limit_gap",
    "main",
    "parse_network",
    "parse_prices",
    "parse_scenario",
    "price_grid",
    "publish_balance_sheet",
    "resolve_prices",
    "revalue",
    "run_cli",
    "serialize_network",
    "serialize_scenario",
    "simulate",
    "solve_equilibrium",
    "step",
    "sup_diff",
    "trajectory_columns",
    "waterfall",
    "__version__",
]
