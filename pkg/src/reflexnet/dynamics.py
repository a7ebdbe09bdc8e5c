"""Time-stepped revaluation under delayed observation.

Firms republish balance sheets each period, marking other firms' claims at
the values those firms published some periods ago while marking their own
exogenous holdings at current prices. An exogenous price path with shock
overrides drives the process; the resulting trajectory is classified by how
its adjustments behave after the last price change.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import (
    InsufficientDataError,
    InsufficientHistoryError,
    ScenarioInvalidError,
    UnknownReferenceError,
)
from .network import Network
from .solver import SolverConfig, solve_equilibrium
from .valuation import (
    BalanceSheet,
    ValuationState,
    _cross_value,
    _waterfall_all,
    publish_balance_sheet,
    resolve_prices,
    revalue,
    sup_diff,
)

# classification thresholds on the median successive residual ratio
RATIO_MARGIN = 1e-6
STATIONARY_TOLERANCE = 1e-9

# halt when any value exceeds this multiple of the initial exogenous value
DIVERGENCE_CUTOFF = 1e12


class FeedbackClass(enum.Enum):
    """How the adjustment process behaves after the last price change."""

    NEGATIVE = "negative"
    POSITIVE = "positive"
    OSCILLATING = "oscillating"
    STATIONARY = "stationary"


@dataclass(frozen=True)
class Shock:
    """A price override at one time; persists until the path or a later
    shock supplies a new price for the same asset."""

    time: int
    asset: str
    price: float


@dataclass(frozen=True, eq=False)
class Scenario:
    """Price path, shocks, observation lags, horizon, and starting state.

    ``price_path`` maps asset ids to sorted (time, price) points that are
    forward-filled between points; assets without a path sit at price 1.0.
    ``lags`` holds one positive reporting lag per firm. Build through
    :func:`build_scenario`, which validates against a network.

    ``initial_directive`` records that ``initial_state`` came from a
    document directive (currently only "equilibrium-at-t0") rather than
    explicit numbers, so serialization can write the directive back out.
    The operative state is always ``initial_state``.
    """

    price_path: Mapping[str, tuple[tuple[int, float], ...]]
    shocks: tuple[Shock, ...]
    lags: np.ndarray
    horizon: int
    initial_state: ValuationState
    initial_directive: Optional[str] = None

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            dict(self.price_path) == dict(other.price_path)
            and self.shocks == other.shocks
            and np.array_equal(self.lags, other.lags)
            and self.horizon == other.horizon
            and self.initial_state == other.initial_state
            and self.initial_directive == other.initial_directive
        )


def _as_time(value, label: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ScenarioInvalidError("time must be an integer", path=label)
    return int(value)


def _as_price(value, label: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float, np.floating)):
        raise ScenarioInvalidError("price must be a number", path=label)
    out = float(value)
    if not np.isfinite(out) or out < 0.0:
        raise ScenarioInvalidError("price must be finite and >= 0", path=label)
    return out


def build_scenario(
    network: Network,
    *,
    price_path: Mapping[str, Sequence] | None = None,
    shocks: Sequence = (),
    lags=1,
    horizon: int,
    initial_state: ValuationState,
    initial_directive: Optional[str] = None,
) -> Scenario:
    """Validate scenario ingredients against ``network`` and assemble them.

    Raises ScenarioInvalidError for structural problems (bad times, prices,
    lags, horizon, initial state) and UnknownReferenceError when the path or
    a shock names an asset the network does not have.
    """
    if isinstance(horizon, bool) or not isinstance(horizon, (int, np.integer)):
        raise ScenarioInvalidError("horizon must be an integer >= 1", path="horizon")
    horizon = int(horizon)
    if horizon < 1:
        raise ScenarioInvalidError("horizon must be an integer >= 1", path="horizon")

    path: dict[str, tuple[tuple[int, float], ...]] = {}
    for asset, points in (price_path or {}).items():
        if asset not in network.assets:
            raise UnknownReferenceError(
                f"price path names unknown asset {asset!r}",
                path=f"price_path[{asset!r}]",
            )
        seen: dict[int, float] = {}
        for idx, point in enumerate(points):
            label = f"price_path[{asset!r}][{idx}]"
            try:
                t_raw, p_raw = point
            except (TypeError, ValueError):
                raise ScenarioInvalidError(
                    "price point must be a (time, price) pair", path=label
                ) from None
            t = _as_time(t_raw, label)
            if t < 0 or t > horizon:
                raise ScenarioInvalidError(
                    f"time {t} outside 0..{horizon}", path=label
                )
            if t in seen:
                raise ScenarioInvalidError(f"duplicate time {t}", path=label)
            seen[t] = _as_price(p_raw, label)
        path[asset] = tuple(sorted(seen.items()))

    shock_list: list[Shock] = []
    seen_shocks: set[tuple[int, str]] = set()
    for idx, shock in enumerate(shocks):
        label = f"shocks[{idx}]"
        if isinstance(shock, Shock):
            t_raw, asset, p_raw = shock.time, shock.asset, shock.price
        else:
            try:
                t_raw, asset, p_raw = shock
            except (TypeError, ValueError):
                raise ScenarioInvalidError(
                    "shock must be a (time, asset, price) triple", path=label
                ) from None
        if asset not in network.assets:
            raise UnknownReferenceError(
                f"shock names unknown asset {asset!r}", path=label
            )
        t = _as_time(t_raw, label)
        if t < 0 or t > horizon:
            raise ScenarioInvalidError(f"time {t} outside 0..{horizon}", path=label)
        if (t, asset) in seen_shocks:
            raise ScenarioInvalidError(
                f"duplicate shock for {asset!r} at time {t}", path=label
            )
        seen_shocks.add((t, asset))
        shock_list.append(Shock(time=t, asset=str(asset), price=_as_price(p_raw, label)))

    lag_vec = _resolve_lags(network, lags)

    if not isinstance(initial_state, ValuationState):
        raise ScenarioInvalidError(
            "initial_state must be a ValuationState", path="initial_state"
        )
    try:
        initial_state.validate(network)
    except Exception as exc:
        raise ScenarioInvalidError(
            f"initial_state invalid: {exc}", path="initial_state"
        ) from exc

    if initial_directive is not None and initial_directive != "equilibrium-at-t0":
        raise ScenarioInvalidError(
            f"unknown directive {initial_directive!r}", path="initial_state"
        )

    return Scenario(
        price_path=path,
        shocks=tuple(shock_list),
        lags=lag_vec,
        horizon=horizon,
        initial_state=initial_state,
        initial_directive=initial_directive,
    )


def _resolve_lags(network: Network, lags) -> np.ndarray:
    n = network.n_firms
    if isinstance(lags, bool):
        raise ScenarioInvalidError("lag must be an integer >= 1", path="lags")
    if isinstance(lags, (int, np.integer)):
        vec = np.full(n, int(lags), dtype=int)
    elif isinstance(lags, Mapping):
        vec = np.ones(n, dtype=int)
        for firm, lag in lags.items():
            i = network.firm_index(firm)
            if isinstance(lag, bool) or not isinstance(lag, (int, np.integer)):
                raise ScenarioInvalidError(
                    "lag must be an integer >= 1", path=f"lags[{firm!r}]"
                )
            vec[i] = int(lag)
    else:
        arr = np.asarray(lags)
        if arr.shape != (n,) or not np.issubdtype(arr.dtype, np.integer):
            raise ScenarioInvalidError(
                f"lags must be an integer, a firm mapping, or {n} integers",
                path="lags",
            )
        vec = arr.astype(int)
    if np.any(vec < 1):
        raise ScenarioInvalidError("every lag must be >= 1", path="lags")
    vec.flags.writeable = False
    return vec


def price_grid(network: Network, scenario: Scenario) -> np.ndarray:
    """Resolve path points and shocks into a (horizon+1, n_assets) array.

    Each asset starts at 1.0, takes path values when reached, and a shock
    overrides from its time until the next path point or shock (a shock
    wins over a path point at the same time).
    """
    grid = np.ones((scenario.horizon + 1, network.n_assets))
    events: dict[str, dict[int, float]] = {
        asset: dict(points) for asset, points in scenario.price_path.items()
    }
    for shock in scenario.shocks:
        events.setdefault(shock.asset, {})[shock.time] = shock.price
    for asset, series in events.items():
        j = network.asset_index(asset)
        current = 1.0
        for t in range(scenario.horizon + 1):
            if t in series:
                current = series[t]
            grid[t, j] = current
    grid.flags.writeable = False
    return grid


@dataclass(frozen=True)
class Trajectory:
    """A finished simulation: states, published sheets, residuals, label.

    ``states[t]`` is the time-t published valuation; ``sheets[t][i]`` the
    statement firm i publishes then; ``residuals[t]`` the sup-norm move from
    t-1 (0.0 at t=0). ``halted`` marks a run cut short by the divergence
    guard, in which case fewer than ``horizon + 1`` states are present.
    """

    network: Network
    states: tuple[ValuationState, ...]
    sheets: tuple[tuple[BalanceSheet, ...], ...]
    residuals: np.ndarray
    price_grid: np.ndarray
    classification: FeedbackClass
    halted: bool = False

    @property
    def horizon(self) -> int:
        return len(self.states) - 1


def step(network: Network, published: Sequence[ValuationState], prices_t, lag) -> ValuationState:
    """Advance one period: every firm revalues from lagged publications.

    ``published`` holds prior states oldest first, ending at time t-1; a
    firm with lag L marks the others at ``published[-L]``. With a uniform
    lag this is exactly one application of the revaluation map to that
    state, which keeps the dynamics aligned with the equilibrium solver's
    iteration down to the last bit.
    """
    lag_vec = _resolve_lags(network, lag)
    max_lag = int(np.max(lag_vec, initial=1))
    if len(published) < max_lag:
        raise InsufficientHistoryError(
            f"need {max_lag} published states, have {len(published)}"
        )
    if network.n_firms == 0 or np.all(lag_vec == lag_vec[0]):
        source = published[-int(lag_vec[0])] if network.n_firms else published[-1]
        return revalue(network, source, prices_t)

    p = resolve_prices(network, prices_t)
    values = network.quantity_matrix @ p
    for L in sorted(set(int(x) for x in lag_vec)):
        source = published[-L]
        source.validate(network)
        rows = lag_vec == L
        values[rows] += _cross_value(network, source)[rows]
    return _waterfall_all(network, values)


def simulate(network: Network, scenario: Scenario) -> Trajectory:
    """Run the scenario from its initial state over the full horizon.

    Publications before time 0 are taken to equal the initial state, so the
    process is well defined from the first period even with long lags. The
    run halts early, classified positive, if any value exceeds
    ``DIVERGENCE_CUTOFF`` times the initial exogenous value.
    """
    grid = price_grid(network, scenario)
    max_lag = int(np.max(scenario.lags, initial=1))
    ceiling = DIVERGENCE_CUTOFF * max(
        1.0, float(np.sum(network.quantity_matrix @ grid[0]))
    )

    states: list[ValuationState] = [scenario.initial_state]
    residuals: list[float] = [0.0]
    halted = False
    for t in range(1, scenario.horizon + 1):
        window = [states[max(tau, 0)] for tau in range(t - max_lag, t)]
        nxt = step(network, window, grid[t], scenario.lags)
        states.append(nxt)
        residuals.append(sup_diff(nxt, states[-2]))
        peak = max(
            float(np.max(nxt.equity, initial=0.0)),
            float(np.max(nxt.debt, initial=0.0)),
        )
        if peak > ceiling:
            halted = True
            break

    sheets = []
    for t in range(len(states)):
        row = []
        for i in range(network.n_firms):
            source = states[max(t - int(scenario.lags[i]), 0)]
            row.append(publish_balance_sheet(network, i, source, grid[t]))
        sheets.append(tuple(row))

    residual_arr = np.asarray(residuals)
    residual_arr.flags.writeable = False
    if halted:
        label = FeedbackClass.POSITIVE
    else:
        label = _classify(
            residual_arr, _last_change(grid), strict_window=None
        )
    return Trajectory(
        network=network,
        states=tuple(states),
        sheets=tuple(sheets),
        residuals=residual_arr,
        price_grid=grid,
        classification=label,
        halted=halted,
    )


def _last_change(grid: np.ndarray) -> int:
    """Time of the last exogenous price change; 0 for a constant grid."""
    for t in range(grid.shape[0] - 1, 0, -1):
        if np.any(grid[t] != grid[t - 1]):
            return t
    return 0


def _classify(
    residuals: np.ndarray,
    last_change: int,
    strict_window: Optional[int],
    tolerance: float = STATIONARY_TOLERANCE,
) -> FeedbackClass:
    """Label the tail of the residual sequence after the last price change.

    With ``strict_window`` set, exactly that many trailing residuals are
    required (InsufficientDataError otherwise); with None, the window
    shrinks to whatever the trajectory provides.
    """
    tail = residuals[last_change + 1 :]
    if strict_window is not None:
        if len(tail) < strict_window + 1:
            raise InsufficientDataError(
                f"need {strict_window + 1} residuals after the last price "
                f"change at time {last_change}, have {len(tail)}"
            )
        window = tail[-strict_window:]
    else:
        window = tail[-8:] if len(tail) else residuals[-1:]
    if np.all(window <= tolerance):
        return FeedbackClass.STATIONARY
    ratios = [
        window[i + 1] / window[i]
        for i in range(len(window) - 1)
        if window[i] > 0.0
    ]
    if not ratios:
        return FeedbackClass.OSCILLATING
    med = float(np.median(ratios))
    if med < 1.0 - RATIO_MARGIN:
        return FeedbackClass.NEGATIVE
    if med > 1.0 + RATIO_MARGIN:
        return FeedbackClass.POSITIVE
    return FeedbackClass.OSCILLATING


def classify_feedback(
    trajectory: Trajectory, window: int = 8, tolerance: float = STATIONARY_TOLERANCE
) -> FeedbackClass:
    """Classify the feedback loop over the final ``window`` residuals after
    the last exogenous price change.

    Negative when the median successive ratio falls below 1 - 1e-6,
    positive above 1 + 1e-6, stationary when the whole window is within
    ``tolerance``, oscillating otherwise. Raises InsufficientDataError when
    fewer than ``window + 1`` post-change residuals exist.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    return _classify(
        trajectory.residuals,
        _last_change(trajectory.price_grid),
        strict_window=window,
        tolerance=tolerance,
    )


def limit_gap(
    trajectory: Trajectory,
    network: Network,
    scenario: Scenario,
    config: SolverConfig | None = None,
) -> np.ndarray:
    """Per-time sup-norm distance from the equilibrium at final prices.

    The equilibrium is computed by the iterative solver at the last time
    point's prices (pass ``config`` to tighten its tolerance when the gaps
    under study are small). For a negative feedback loop with eventually
    constant prices the sequence is nonincreasing after the last shock.
    """
    final_prices = trajectory.price_grid[-1]
    equilibrium, _ = solve_equilibrium(network, final_prices, config)
    gaps = np.empty(len(trajectory.states))
    for t, state in enumerate(trajectory.states):
        gaps[t] = sup_diff(state, equilibrium)
    gaps.flags.writeable = False
    return gaps
