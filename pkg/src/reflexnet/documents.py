"""JSON document formats and trajectory emission.

Two document kinds exist: ``*.network.json`` describing firms, assets,
holdings, ownership, and debt tranches, and ``*.scenario.json`` describing a
price path with shocks, lags, a horizon, and a starting state (or the
directive "equilibrium-at-t0"). Parsing is strict: syntax problems raise
ParseError, shape and type problems raise SchemaError with a field path,
and semantic problems raise the same validation errors the builders use.
Serialization is canonical, so equal objects produce identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Mapping

import numpy as np

from .dynamics import Scenario, Trajectory, build_scenario
from .errors import (
    ParseError,
    RegimeViolationError,
    SchemaError,
    SingularSystemError,
    UnknownReferenceError,
)
from .network import (
    DebtTranche,
    ExogenousHolding,
    Network,
    OwnershipMatrix,
    build_network,
)
from .solver import closed_form_linear, solve_equilibrium
from .valuation import ValuationState

SCHEMA_VERSION = "1"

# hard caps so a hostile document cannot request absurd allocations: firm
# count drives n-squared matrices, horizon drives per-period state storage
MAX_HORIZON = 100_000
MAX_LAG = 100_000
MAX_FIRMS = 2_000
MAX_ASSETS = 2_000

EQUILIBRIUM_DIRECTIVE = "equilibrium-at-t0"


# ---------------------------------------------------------------- json walk

def _load_json(data):
    if isinstance(data, (bytes, bytearray)):
        try:
            text = bytes(data).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"document is not valid UTF-8: {exc}") from exc
    elif isinstance(data, str):
        text = data
    else:
        raise TypeError(f"expected bytes or str, got {type(data).__name__}")

    def reject_constant(name):
        raise ParseError(f"non-finite number {name} is not allowed")

    try:
        return json.loads(text, parse_constant=reject_constant)
    except ParseError:
        raise
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    except RecursionError as exc:
        raise ParseError("document nesting is too deep") from exc
    except ValueError as exc:
        # e.g. integer literals longer than the interpreter's digit limit
        raise ParseError(f"unparseable document: {exc}") from exc


def _expect_object(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(f"expected an object, got {type(value).__name__}", path=path)
    return value


def _expect_list(value, path: str) -> list:
    if not isinstance(value, list):
        raise SchemaError(f"expected a list, got {type(value).__name__}", path=path)
    return value


def _expect_str(value, path: str) -> str:
    if not isinstance(value, str):
        raise SchemaError(f"expected a string, got {type(value).__name__}", path=path)
    return value


def _expect_number(value, path: str, minimum: float | None = None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"expected a number, got {type(value).__name__}", path=path)
    try:
        out = float(value)
    except OverflowError:
        raise SchemaError("number is out of range", path=path) from None
    if not math.isfinite(out):
        raise SchemaError("number must be finite", path=path)
    if minimum is not None and out < minimum:
        raise SchemaError(f"number must be >= {minimum}", path=path)
    return out


def _expect_int(
    value, path: str, minimum: int | None = None, maximum: int | None = None
) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(
            f"expected an integer, got {type(value).__name__}", path=path
        )
    if minimum is not None and value < minimum:
        raise SchemaError(f"integer must be >= {minimum}", path=path)
    if maximum is not None and value > maximum:
        raise SchemaError(f"integer must be <= {maximum}", path=path)
    return value


def _check_keys(obj: dict, required: set, optional: set, path: str) -> None:
    for key in sorted(obj):
        if not isinstance(key, str) or key not in required | optional:
            raise SchemaError(f"unknown field {key!r}", path=path)
    for key in sorted(required):
        if key not in obj:
            raise SchemaError(f"missing required field {key!r}", path=path)


def _check_version(value, path: str = "schema_version") -> None:
    version = _expect_str(value, path)
    if version != SCHEMA_VERSION:
        raise SchemaError(
            f"unsupported schema_version {version!r} "
            f"(this build reads {SCHEMA_VERSION!r})",
            path=path,
        )


def _expect_matrix(value, path: str) -> np.ndarray:
    rows = _expect_list(value, path)
    parsed = []
    width = None
    for i, row in enumerate(rows):
        row = _expect_list(row, f"{path}[{i}]")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise SchemaError("matrix rows must have equal length", path=f"{path}[{i}]")
        parsed.append(
            [_expect_number(x, f"{path}[{i}][{j}]") for j, x in enumerate(row)]
        )
    if not parsed:
        return np.zeros((0, 0))
    return np.asarray(parsed, dtype=float)


def _expect_rank_key(key: str, path: str) -> int:
    if not isinstance(key, str) or not key.isdigit() or str(int(key)) != key:
        raise SchemaError(
            f"rank key must be a positive integer string, got {key!r}", path=path
        )
    rank = int(key)
    if rank < 1:
        raise SchemaError(f"rank must be >= 1, got {rank}", path=path)
    return rank


# ------------------------------------------------------------ network files

def parse_network(data) -> Network:
    """Read a ``*.network.json`` document into a validated Network.

    Accepts bytes or str. Raises ParseError for broken syntax (with line
    and column), SchemaError for unknown, missing, or mistyped fields, and
    the build-time validation errors for semantic problems.
    """
    doc = _expect_object(_load_json(data), "$")
    _check_keys(
        doc,
        required={"schema_version", "firms", "assets"},
        optional={"holdings", "ownership", "tranches"},
        path="$",
    )
    _check_version(doc["schema_version"])

    raw_firms = _expect_list(doc["firms"], "firms")
    if len(raw_firms) > MAX_FIRMS:
        raise SchemaError(f"at most {MAX_FIRMS} firms are supported", path="firms")
    firms = [_expect_str(x, f"firms[{i}]") for i, x in enumerate(raw_firms)]
    raw_assets = _expect_list(doc["assets"], "assets")
    if len(raw_assets) > MAX_ASSETS:
        raise SchemaError(f"at most {MAX_ASSETS} assets are supported", path="assets")
    assets = [_expect_str(x, f"assets[{i}]") for i, x in enumerate(raw_assets)]

    holdings = []
    for i, item in enumerate(_expect_list(doc.get("holdings", []), "holdings")):
        path = f"holdings[{i}]"
        item = _expect_object(item, path)
        _check_keys(item, {"firm", "asset", "quantity"}, set(), path)
        holdings.append(
            ExogenousHolding(
                firm=_expect_str(item["firm"], f"{path}.firm"),
                asset=_expect_str(item["asset"], f"{path}.asset"),
                quantity=_expect_number(item["quantity"], f"{path}.quantity"),
            )
        )

    tranches = []
    for i, item in enumerate(_expect_list(doc.get("tranches", []), "tranches")):
        path = f"tranches[{i}]"
        item = _expect_object(item, path)
        _check_keys(item, {"firm", "seniority", "face"}, set(), path)
        tranches.append(
            DebtTranche(
                firm=_expect_str(item["firm"], f"{path}.firm"),
                seniority=_expect_int(item["seniority"], f"{path}.seniority", minimum=1),
                face=_expect_number(item["face"], f"{path}.face"),
            )
        )

    ownership = None
    if "ownership" in doc:
        raw = _expect_object(doc["ownership"], "ownership")
        _check_keys(raw, set(), {"equity", "debt"}, "ownership")
        n = len(firms)
        if "equity" in raw:
            equity = _expect_matrix(raw["equity"], "ownership.equity")
        else:
            equity = np.zeros((n, n))
        debt = {}
        for key, mat in sorted(_expect_object(raw.get("debt", {}), "ownership.debt").items()):
            rank = _expect_rank_key(key, f"ownership.debt[{key!r}]")
            debt[rank] = _expect_matrix(mat, f"ownership.debt[{key!r}]")
        ownership = OwnershipMatrix(equity=equity, debt=debt)

    return build_network(firms, assets, holdings, ownership, tranches)


def serialize_network(network: Network) -> bytes:
    """Write a Network as canonical ``*.network.json`` bytes.

    Canonical means: holdings aggregated and sorted firm-major, tranches
    sorted by firm then seniority, only nonzero debt ownership matrices,
    stable key order, two-space indentation. Parsing the result yields a
    network equal to the input.
    """
    holdings = []
    for i, firm in enumerate(network.firms):
        for j in np.flatnonzero(network.quantity_matrix[i] != 0.0):
            holdings.append(
                {
                    "firm": firm,
                    "asset": network.assets[j],
                    "quantity": float(network.quantity_matrix[i, j]),
                }
            )
    tranches = []
    for i, firm in enumerate(network.firms):
        for k in range(network.tranche_count(i)):
            tranches.append(
                {"firm": firm, "seniority": k + 1, "face": float(network.faces[i, k])}
            )
    doc = {
        "schema_version": SCHEMA_VERSION,
        "firms": list(network.firms),
        "assets": list(network.assets),
        "holdings": holdings,
        "ownership": {
            "equity": network.equity_matrix.tolist(),
            "debt": {
                str(rank): matrix.tolist()
                for rank, matrix in sorted(network.ownership.debt.items())
            },
        },
        "tranches": tranches,
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


# ----------------------------------------------------------- scenario files

def _parse_state(obj, network: Network, path: str) -> ValuationState:
    obj = _expect_object(obj, path)
    _check_keys(obj, set(), {"equity", "debt"}, path)
    equity = np.zeros(network.n_firms)
    for firm, value in _expect_object(obj.get("equity", {}), f"{path}.equity").items():
        i = network.firm_index(_expect_str(firm, f"{path}.equity"))
        equity[i] = _expect_number(value, f"{path}.equity[{firm!r}]")
    debt = np.zeros((network.n_firms, network.max_rank))
    for firm, ranks in _expect_object(obj.get("debt", {}), f"{path}.debt").items():
        i = network.firm_index(_expect_str(firm, f"{path}.debt"))
        for key, value in _expect_object(ranks, f"{path}.debt[{firm!r}]").items():
            label = f"{path}.debt[{firm!r}][{key!r}]"
            rank = _expect_rank_key(key, label)
            if rank > network.tranche_count(i):
                raise UnknownReferenceError(
                    f"firm {firm!r} has no rank-{rank} tranche", path=label
                )
            debt[i, rank - 1] = _expect_number(value, label)
    return ValuationState(equity=equity, debt=debt)


def _initial_prices(price_path: dict, shocks: list) -> dict:
    prices = {}
    for asset, points in price_path.items():
        for t, p in points:
            if t == 0:
                prices[asset] = p
    for shock in shocks:
        if shock["time"] == 0:
            prices[shock["asset"]] = shock["price"]
    return prices


def parse_scenario(data, network: Network) -> Scenario:
    """Read a ``*.scenario.json`` document against its network.

    The ``initial_state`` field is either an explicit state object or the
    directive "equilibrium-at-t0", which solves for the equilibrium at the
    time-0 prices (direct linear solve when every firm stays solvent,
    iterative solve otherwise). Structural errors raise SchemaError,
    unresolved references UnknownReferenceError, semantic problems
    ScenarioInvalidError.
    """
    doc = _expect_object(_load_json(data), "$")
    _check_keys(
        doc,
        required={"schema_version", "horizon", "initial_state"},
        optional={"price_path", "shocks", "lags"},
        path="$",
    )
    _check_version(doc["schema_version"])
    horizon = _expect_int(doc["horizon"], "horizon", minimum=1, maximum=MAX_HORIZON)

    price_path = {}
    for asset, points in _expect_object(doc.get("price_path", {}), "price_path").items():
        label = f"price_path[{asset!r}]"
        parsed = []
        for i, point in enumerate(_expect_list(points, label)):
            pair = _expect_list(point, f"{label}[{i}]")
            if len(pair) != 2:
                raise SchemaError("expected a [time, price] pair", path=f"{label}[{i}]")
            parsed.append(
                (
                    _expect_int(pair[0], f"{label}[{i}][0]"),
                    _expect_number(pair[1], f"{label}[{i}][1]"),
                )
            )
        price_path[_expect_str(asset, "price_path")] = parsed

    shocks = []
    for i, item in enumerate(_expect_list(doc.get("shocks", []), "shocks")):
        path = f"shocks[{i}]"
        item = _expect_object(item, path)
        _check_keys(item, {"time", "asset", "price"}, set(), path)
        shocks.append(
            {
                "time": _expect_int(item["time"], f"{path}.time"),
                "asset": _expect_str(item["asset"], f"{path}.asset"),
                "price": _expect_number(item["price"], f"{path}.price"),
            }
        )

    lags = doc.get("lags", 1)
    if isinstance(lags, dict):
        lags = {
            _expect_str(firm, "lags"): _expect_int(
                value, f"lags[{firm!r}]", minimum=1, maximum=MAX_LAG
            )
            for firm, value in lags.items()
        }
    else:
        lags = _expect_int(lags, "lags", minimum=1, maximum=MAX_LAG)

    shock_triples = [(s["time"], s["asset"], s["price"]) for s in shocks]

    # validate path/shock/lag semantics before any solver work
    probe = ValuationState.zeros(network)
    build_scenario(
        network,
        price_path=price_path,
        shocks=shock_triples,
        lags=lags,
        horizon=horizon,
        initial_state=probe,
    )

    raw_state = doc["initial_state"]
    directive = None
    if isinstance(raw_state, str):
        if raw_state != EQUILIBRIUM_DIRECTIVE:
            raise SchemaError(
                f"initial_state must be a state object or "
                f"{EQUILIBRIUM_DIRECTIVE!r}, got {raw_state!r}",
                path="initial_state",
            )
        directive = raw_state
        t0 = _initial_prices(price_path, shocks)
        try:
            initial = closed_form_linear(network, t0)
        except (RegimeViolationError, SingularSystemError):
            initial, _ = solve_equilibrium(network, t0)
    else:
        initial = _parse_state(raw_state, network, "initial_state")

    return build_scenario(
        network,
        price_path=price_path,
        shocks=shock_triples,
        lags=lags,
        horizon=horizon,
        initial_state=initial,
        initial_directive=directive,
    )


def serialize_scenario(scenario: Scenario, network: Network) -> bytes:
    """Write a Scenario as canonical ``*.scenario.json`` bytes.

    When the scenario came from the "equilibrium-at-t0" directive the
    directive is written back, keeping the document stable under a
    parse/serialize cycle; otherwise the resolved state is written in full.
    """
    path_doc = {}
    for asset in network.assets:
        if asset in scenario.price_path:
            path_doc[asset] = [[t, p] for t, p in scenario.price_path[asset]]
    for asset in scenario.price_path:
        if asset not in path_doc:
            path_doc[asset] = [[t, p] for t, p in scenario.price_path[asset]]

    lag_values = set(int(x) for x in scenario.lags)
    if len(lag_values) <= 1:
        lags_doc = int(scenario.lags[0]) if scenario.lags.size else 1
    else:
        lags_doc = {
            firm: int(scenario.lags[i]) for i, firm in enumerate(network.firms)
        }

    if scenario.initial_directive is not None:
        state_doc = scenario.initial_directive
    else:
        state = scenario.initial_state
        state_doc = {
            "equity": {
                firm: float(state.equity[i]) for i, firm in enumerate(network.firms)
            },
            "debt": {
                firm: {
                    str(k + 1): float(state.debt[i, k])
                    for k in range(network.tranche_count(i))
                }
                for i, firm in enumerate(network.firms)
                if network.tranche_count(i)
            },
        }

    doc = {
        "schema_version": SCHEMA_VERSION,
        "price_path": path_doc,
        "shocks": [
            {"time": s.time, "asset": s.asset, "price": s.price}
            for s in scenario.shocks
        ],
        "lags": lags_doc,
        "horizon": scenario.horizon,
        "initial_state": state_doc,
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


# -------------------------------------------------------------- price files

def parse_prices(data) -> dict[str, float]:
    """Read a plain ``{asset: price}`` JSON object."""
    doc = _expect_object(_load_json(data), "$")
    return {
        asset: _expect_number(value, f"$[{asset!r}]", minimum=0.0)
        for asset, value in doc.items()
    }


# -------------------------------------------------------- trajectory output

def _format_value(x: float, round_2: bool) -> str:
    if round_2:
        return f"{x:.2f}"
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(float(x))


def trajectory_columns(trajectory: Trajectory) -> list[str]:
    """Column names: time, per-firm equity, per-firm-and-tranche debt,
    residual."""
    network = trajectory.network
    columns = ["time"]
    columns += [f"equity_{firm}" for firm in network.firms]
    for i, firm in enumerate(network.firms):
        columns += [f"debt_{firm}_{k + 1}" for k in range(network.tranche_count(i))]
    columns.append("residual")
    return columns


def _trajectory_rows(trajectory: Trajectory) -> list[list[float]]:
    network = trajectory.network
    rows = []
    for t, state in enumerate(trajectory.states):
        row: list[float] = [t]
        row += [float(x) for x in state.equity]
        for i in range(network.n_firms):
            row += [float(state.debt[i, k]) for k in range(network.tranche_count(i))]
        row.append(float(trajectory.residuals[t]))
        rows.append(row)
    return rows


def emit_trajectory(trajectory: Trajectory, format: str = "csv", *, round_2: bool = False) -> bytes:
    """Render a trajectory as CSV or JSON bytes.

    CSV holds one row per period with full-precision values (integers
    without a decimal point); ``round_2`` switches every value column to a
    fixed two-decimal display. JSON carries the same columns and rows plus
    the classification.
    """
    if format not in ("csv", "json"):
        raise ValueError(f"format must be 'csv' or 'json', got {format!r}")
    columns = trajectory_columns(trajectory)
    rows = _trajectory_rows(trajectory)
    if format == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow(
                [str(int(row[0]))]
                + [_format_value(x, round_2) for x in row[1:]]
            )
        return buffer.getvalue().encode("utf-8")
    doc = {
        "schema_version": SCHEMA_VERSION,
        "classification": trajectory.classification.value,
        "halted": trajectory.halted,
        "columns": columns,
        "rows": [
            [row[0]] + [round(x, 2) if round_2 else x for x in row[1:]]
            for row in rows
        ],
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")
