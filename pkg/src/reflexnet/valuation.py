"""One application of the revaluation operator.

Marking a firm to market has three parts: exogenous holdings at current
prices, cross-held claims at their recorded values, and the limited-liability
waterfall that apportions the resulting firm value to debt tranches (senior
first) and equity. Applying this to every firm simultaneously is one step of
the map whose fixed points are the network's no-arbitrage equilibria.

All operations here are pure functions of immutable inputs and can run
concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DimensionMismatchError
from .network import Network

BALANCE_IDENTITY_TOLERANCE = 1e-9


def resolve_prices(network: Network, prices) -> np.ndarray:
    """Normalize a price input to an array aligned with ``network.assets``.

    Accepts a mapping ``{asset: price}`` or an array of length ``n_assets``.
    Assets missing from a mapping default to price 1.0 (cash-like numeraire
    treatment). Prices must be finite and nonnegative.
    """
    if isinstance(prices, Mapping):
        vec = np.ones(network.n_assets)
        for asset, price in prices.items():
            vec[network.asset_index(asset)] = float(price)
    else:
        vec = np.asarray(prices, dtype=float)
        if vec.shape != (network.n_assets,):
            raise DimensionMismatchError(
                f"expected {network.n_assets} prices, got shape {vec.shape}"
            )
        vec = vec.copy()
    if not np.all(np.isfinite(vec)) or np.any(vec < 0.0):
        raise ValueError("prices must be finite and >= 0")
    vec.flags.writeable = False
    return vec


@dataclass(frozen=True, eq=False)
class ValuationState:
    """Per-firm equity values and per-tranche debt recovery values.

    ``equity`` has shape (n_firms,); ``debt`` has shape (n_firms, max_rank),
    zero-padded where a firm has fewer tranches. Limited liability requires
    equity >= 0, recoveries within [0, face], and zero equity whenever any
    own tranche is impaired.
    """

    equity: np.ndarray
    debt: np.ndarray

    @classmethod
    def build(cls, network: Network, equity, debt=None) -> "ValuationState":
        """Construct from arrays or ``{firm: value}`` / ``{firm: {rank: value}}``
        mappings; validates against ``network``."""
        n, k = network.n_firms, network.max_rank
        if isinstance(equity, Mapping):
            e = np.zeros(n)
            for firm, val in equity.items():
                e[network.firm_index(firm)] = float(val)
        else:
            e = np.asarray(equity, dtype=float)
        if debt is None:
            d = np.zeros((n, k))
        elif isinstance(debt, Mapping):
            d = np.zeros((n, k))
            for firm, ranks in debt.items():
                i = network.firm_index(firm)
                for rank, val in ranks.items():
                    d[i, int(rank) - 1] = float(val)
        else:
            d = np.asarray(debt, dtype=float)
            if d.ndim == 1 and k == 1:
                d = d.reshape(n, 1)
        state = cls(equity=e, debt=d)
        state.validate(network)
        return state

    @classmethod
    def zeros(cls, network: Network) -> "ValuationState":
        return cls(
            equity=np.zeros(network.n_firms),
            debt=np.zeros((network.n_firms, network.max_rank)),
        )

    def __post_init__(self):
        object.__setattr__(self, "equity", np.asarray(self.equity, dtype=float))
        object.__setattr__(self, "debt", np.asarray(self.debt, dtype=float))
        self.equity.flags.writeable = False
        self.debt.flags.writeable = False

    def validate(self, network: Network, tolerance: float = 1e-9) -> None:
        """Check dimensions and limited-liability invariants."""
        n, k = network.n_firms, network.max_rank
        if self.equity.shape != (n,) or self.debt.shape != (n, k):
            raise DimensionMismatchError(
                f"state shapes {self.equity.shape}/{self.debt.shape} do not match "
                f"network ({n},)/({n}, {k})"
            )
        if not (np.all(np.isfinite(self.equity)) and np.all(np.isfinite(self.debt))):
            raise ValueError("state values must be finite")
        if np.any(self.equity < 0.0):
            raise ValueError("equity values must be >= 0 (limited liability)")
        if np.any(self.debt < -0.0) or np.any(self.debt > network.faces + tolerance):
            raise ValueError("debt recoveries must lie in [0, face]")
        impaired = np.any(self.debt < network.faces - tolerance, axis=1)
        if np.any(impaired & (self.equity > tolerance)):
            i = int(np.flatnonzero(impaired & (self.equity > tolerance))[0])
            raise ValueError(
                f"firm {network.firms[i]!r} has impaired debt but positive equity"
            )

    def __eq__(self, other):
        if not isinstance(other, ValuationState):
            return NotImplemented
        return np.array_equal(self.equity, other.equity) and np.array_equal(
            self.debt, other.debt
        )

    def __repr__(self):
        return f"ValuationState(equity={self.equity!r}, debt={self.debt!r})"


def sup_diff(a: ValuationState, b: ValuationState) -> float:
    """Sup-norm distance across all equity and recovery components."""
    d_equity = float(np.max(np.abs(a.equity - b.equity))) if a.equity.size else 0.0
    d_debt = float(np.max(np.abs(a.debt - b.debt))) if a.debt.size else 0.0
    return max(d_equity, d_debt)


def l1_diff(a: ValuationState, b: ValuationState) -> float:
    """Total-value (1-norm) distance; the norm in which the operator contracts."""
    return float(np.sum(np.abs(a.equity - b.equity)) + np.sum(np.abs(a.debt - b.debt)))


def waterfall(value: float, faces: Sequence[float]) -> tuple[np.ndarray, float]:
    """Apportion firm value ``value`` to debt tranches and equity.

    ``faces`` are tranche face values ordered most-senior first. Each tranche
    recovers ``clip(value - senior faces, 0, face)``; equity takes what is
    left above total face, floored at zero. The outputs always sum to
    ``value`` and are componentwise nondecreasing in it.
    """
    if value < 0.0:
        raise AssertionError("firm value cannot be negative")
    faces = np.asarray(faces, dtype=float)
    senior = np.concatenate(([0.0], np.cumsum(faces)[:-1])) if faces.size else faces
    recoveries = np.clip(value - senior, 0.0, faces)
    equity = max(value - float(faces.sum()), 0.0)
    return recoveries, equity


def _waterfall_all(network: Network, values: np.ndarray) -> "ValuationState":
    """Vectorized waterfall over every firm; ``values`` has shape (n_firms,)."""
    faces = network.faces
    if faces.shape[1]:
        debt = np.clip(values[:, None] - network._senior_faces, 0.0, faces)
        equity = np.maximum(values - network._cum_faces[:, -1], 0.0)
    else:
        debt = np.zeros_like(faces)
        equity = np.maximum(values, 0.0)
    return ValuationState(equity=equity, debt=debt)


def _cross_value(network: Network, state: ValuationState) -> np.ndarray:
    """Per-firm value of cross-held claims marked at ``state``."""
    v = network.equity_matrix @ state.equity
    for k in range(network.max_rank):
        v = v + network.debt_matrices[k] @ state.debt[:, k]
    return v


def firm_asset_value(
    network: Network, firm: str | int, state: ValuationState, prices
) -> float:
    """Total asset value of one firm: exogenous holdings at current prices
    plus cross-held claims at the values recorded in ``state``."""
    state.validate(network)
    p = resolve_prices(network, prices)
    i = network.firm_index(firm)
    v = float(network.quantity_matrix[i] @ p)
    v += float(network.equity_matrix[i] @ state.equity)
    for k in range(network.max_rank):
        v += float(network.debt_matrices[k, i] @ state.debt[:, k])
    return v


def _revalue_resolved(
    network: Network,
    state: ValuationState,
    p: np.ndarray,
    exogenous: np.ndarray | None = None,
) -> ValuationState:
    # hot path shared with the solver loop; callers guarantee a valid state,
    # an already-resolved price vector, and (optionally) its exogenous value
    if exogenous is None:
        exogenous = network.quantity_matrix @ p
    return _waterfall_all(network, exogenous + _cross_value(network, state))


def revalue(network: Network, state: ValuationState, prices) -> ValuationState:
    """One simultaneous revaluation of every firm.

    Each firm's asset value is computed from ``state`` (all firms at once, so
    no firm sees another's same-round update), then apportioned by the
    seniority waterfall. The map is monotone: componentwise larger inputs or
    prices never decrease any output. Its fixed points are the equilibria the
    Picard solver looks for.
    """
    state.validate(network)
    p = resolve_prices(network, prices)
    return _revalue_resolved(network, state, p)


@dataclass(frozen=True)
class BalanceSheet:
    """A firm's published statement: itemized assets, liabilities, equity.

    ``asset_items`` lists (label, value) pairs covering exogenous holdings at
    current prices and each cross-held claim at its recorded value. Labels are
    the asset name for exogenous positions, ``equity:<firm>`` for equity
    stakes, and ``debt:<firm>#<rank>`` for debt stakes. Liabilities carry own
    debt at its recovery value, so assets = liabilities + equity holds even
    under impairment.
    """

    firm: str
    asset_items: tuple[tuple[str, float], ...]
    liabilities: float
    equity: float

    @property
    def total_assets(self) -> float:
        return float(sum(value for _, value in self.asset_items))


def publish_balance_sheet(
    network: Network, firm: str | int, state: ValuationState, prices
) -> BalanceSheet:
    """Produce the statement ``firm`` publishes when it marks cross-held
    claims at ``state`` and exogenous holdings at ``prices``.

    Liabilities and equity are the waterfall split of the itemized asset
    total, which is what makes the accounting identity hold by construction.
    """
    state.validate(network)
    p = resolve_prices(network, prices)
    i = network.firm_index(firm)

    items: list[tuple[str, float]] = []
    for m in np.flatnonzero(network.quantity_matrix[i] > 0.0):
        items.append((network.assets[m], float(network.quantity_matrix[i, m] * p[m])))
    for j in np.flatnonzero(network.equity_matrix[i] > 0.0):
        items.append(
            (f"equity:{network.firms[j]}",
             float(network.equity_matrix[i, j] * state.equity[j]))
        )
    for k in range(network.max_rank):
        for j in np.flatnonzero(network.debt_matrices[k, i] > 0.0):
            items.append(
                (f"debt:{network.firms[j]}#{k + 1}",
                 float(network.debt_matrices[k, i, j] * state.debt[j, k]))
            )

    value = float(sum(v for _, v in items))
    recoveries, equity = waterfall(value, network.faces[i, : network.tranche_count(i)])
    return BalanceSheet(
        firm=network.firms[i],
        asset_items=tuple(items),
        liabilities=float(recoveries.sum()),
        equity=equity,
    )


def conservation_check(network: Network, state: ValuationState, prices) -> float:
    """Outside-held value minus total exogenous value.

    At any fixed point of :func:`revalue` the value held by outside investors
    (the non-insider share of every claim) must equal the network's total
    exogenous asset value, so the residual certifies a candidate equilibrium.
    """
    state.validate(network)
    p = resolve_prices(network, prices)
    eq_outside = (1.0 - network.equity_matrix.sum(axis=0)) @ state.equity
    debt_outside = 0.0
    for k in range(network.max_rank):
        debt_outside += (1.0 - network.debt_matrices[k].sum(axis=0)) @ state.debt[:, k]
    exogenous = float(np.sum(network.quantity_matrix @ p))
    return float(eq_outside + debt_outside - exogenous)
