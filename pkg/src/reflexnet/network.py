"""Static financial network: firms, exogenous holdings, cross-ownership, debt.

A :class:`Network` is immutable after :func:`build_network` and safe to share
across threads. Firms and assets are identified by name; a firm's index is its
position in ``network.firms``. Ownership entry ``(i, j)`` is the fraction of
firm ``j``'s claim (equity, or one debt tranche) held by firm ``i``; whatever
is not held inside the network belongs to outside investors and is never
tracked individually.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    ColumnSumExceededError,
    DuplicateIdError,
    InvalidFractionError,
    NetworkValidationError,
    UnknownReferenceError,
)

COLUMN_SUM_TOLERANCE = 1e-12


@dataclass(frozen=True)
class ExogenousHolding:
    """``quantity`` units of ``asset`` on ``firm``'s balance sheet."""

    firm: str
    asset: str
    quantity: float


@dataclass(frozen=True)
class DebtTranche:
    """One debt tranche issued by ``firm``; seniority 1 is repaid first."""

    firm: str
    seniority: int
    face: float


@dataclass(frozen=True, eq=False)
class OwnershipMatrix:
    """Cross-ownership fractions.

    ``equity[i, j]``: fraction of firm j's equity held by firm i.
    ``debt[rank][i, j]``: fraction of firm j's rank-``rank`` tranche held by
    firm i (ranks are 1-based; missing ranks mean no cross-held debt there).
    """

    equity: np.ndarray
    debt: Mapping[int, np.ndarray] = field(default_factory=dict)

    def __eq__(self, other):
        if not isinstance(other, OwnershipMatrix):
            return NotImplemented
        if not np.array_equal(self.equity, other.equity):
            return False
        if set(self.debt) != set(other.debt):
            return False
        return all(np.array_equal(self.debt[k], other.debt[k]) for k in self.debt)


@dataclass(frozen=True, eq=False)
class Network:
    """Validated, immutable network definition.

    Besides the raw components, carries dense arrays derived once at build
    time: ``quantity_matrix`` (n_firms x n_assets), ``faces`` (n_firms x
    max_rank, zero-padded), and ``debt_matrices`` (max_rank x n x n).
    """

    firms: tuple[str, ...]
    assets: tuple[str, ...]
    holdings: tuple[ExogenousHolding, ...]
    ownership: OwnershipMatrix
    tranches: tuple[DebtTranche, ...]
    quantity_matrix: np.ndarray
    equity_matrix: np.ndarray
    debt_matrices: np.ndarray
    faces: np.ndarray

    @property
    def n_firms(self) -> int:
        return len(self.firms)

    @property
    def n_assets(self) -> int:
        return len(self.assets)

    @property
    def max_rank(self) -> int:
        """Largest number of debt tranches any single firm has."""
        return self.faces.shape[1]

    def firm_index(self, firm: str | int) -> int:
        if isinstance(firm, (int, np.integer)) and not isinstance(firm, bool):
            if not 0 <= firm < self.n_firms:
                raise UnknownReferenceError(f"firm index {firm} out of range")
            return int(firm)
        try:
            return self._firm_lookup[firm]
        except KeyError:
            raise UnknownReferenceError(f"unknown firm {firm!r}") from None

    def asset_index(self, asset: str) -> int:
        try:
            return self._asset_lookup[asset]
        except KeyError:
            raise UnknownReferenceError(f"unknown asset {asset!r}") from None

    def tranche_count(self, firm: str | int) -> int:
        """Number of debt tranches issued by ``firm``."""
        return int(self._tranche_counts[self.firm_index(firm)])

    @property
    def total_face(self) -> np.ndarray:
        """Per-firm total debt face value, shape (n_firms,)."""
        return self._total_face

    def __eq__(self, other):
        # semantic equality: two networks that value identically are equal,
        # regardless of the order holdings or tranches were listed in
        if not isinstance(other, Network):
            return NotImplemented
        return (
            self.firms == other.firms
            and self.assets == other.assets
            and np.array_equal(self.quantity_matrix, other.quantity_matrix)
            and np.array_equal(self.equity_matrix, other.equity_matrix)
            and np.array_equal(self.debt_matrices, other.debt_matrices)
            and np.array_equal(self.faces, other.faces)
            and np.array_equal(self._tranche_counts, other._tranche_counts)
        )

    def __repr__(self):
        return (
            f"Network(n_firms={self.n_firms}, n_assets={self.n_assets}, "
            f"n_tranches={len(self.tranches)})"
        )


@dataclass(frozen=True)
class ColumnSums:
    """Insider column sums per claim: ``equity`` (n,), ``debt`` (max_rank, n)."""

    equity: np.ndarray
    debt: np.ndarray


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def _check_unique(names: Sequence[str], kind: str) -> None:
    seen = set()
    for pos, name in enumerate(names):
        if not isinstance(name, str) or not name:
            raise NetworkValidationError(
                f"{kind} name must be a non-empty string, got {name!r}",
                path=f"{kind}s[{pos}]",
            )
        if name in seen:
            raise DuplicateIdError(f"duplicate {kind} {name!r}", path=f"{kind}s[{pos}]")
        seen.add(name)


def _validate_fraction_matrix(
    mat: np.ndarray,
    n: int,
    label: str,
    allow_supercritical: bool,
) -> np.ndarray:
    try:
        mat = np.asarray(mat, dtype=float)
    except (TypeError, ValueError):
        raise NetworkValidationError("not a numeric matrix", path=label) from None
    if mat.shape != (n, n):
        raise NetworkValidationError(
            f"expected a {n}x{n} matrix, got shape {mat.shape}", path=label
        )
    if not np.all(np.isfinite(mat)):
        i, j = np.argwhere(~np.isfinite(mat))[0]
        raise InvalidFractionError("entry is not finite", path=f"{label}[{i}][{j}]")
    bad = (mat < 0.0) if allow_supercritical else ((mat < 0.0) | (mat > 1.0))
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise InvalidFractionError(
            f"entry {mat[i, j]} outside [0, 1]", path=f"{label}[{i}][{j}]"
        )
    diag = np.flatnonzero(np.diagonal(mat))
    if diag.size:
        i = int(diag[0])
        raise InvalidFractionError(
            f"nonzero diagonal entry {mat[i, i]} (self-ownership)",
            path=f"{label}[{i}][{i}]",
        )
    return mat


def build_network(
    firms: Iterable[str],
    assets: Iterable[str],
    holdings: Iterable[ExogenousHolding] = (),
    ownership: OwnershipMatrix | None = None,
    tranches: Iterable[DebtTranche] = (),
    *,
    allow_supercritical: bool = False,
) -> Network:
    """Validate raw components and assemble an immutable :class:`Network`.

    Raises the specific validation error for each broken invariant:
    :class:`DuplicateIdError`, :class:`UnknownReferenceError`,
    :class:`InvalidFractionError` (ownership entry outside [0, 1] or on the
    diagonal), :class:`ColumnSumExceededError` (insider holdings of one claim
    exceed 1, beyond a 1e-12 tolerance), or :class:`NetworkValidationError`
    for the remaining structural rules (negative quantity or face, non-dense
    seniority ranks, wrong matrix shape).

    ``allow_supercritical=True`` drops only the upper bounds (entries <= 1 and
    column sums <= 1); it exists so divergent feedback configurations can be
    studied deliberately. The equilibrium solver will report such networks as
    not guaranteed unique.
    """
    firms = tuple(firms)
    assets = tuple(assets)
    holdings = tuple(holdings)
    tranches = tuple(tranches)
    n = len(firms)

    _check_unique(firms, "firm")
    _check_unique(assets, "asset")
    firm_lookup = {name: i for i, name in enumerate(firms)}
    asset_lookup = {name: i for i, name in enumerate(assets)}

    quantity = np.zeros((n, len(assets)))
    for pos, h in enumerate(holdings):
        path = f"holdings[{pos}]"
        if h.firm not in firm_lookup:
            raise UnknownReferenceError(f"unknown firm {h.firm!r}", path=path)
        if h.asset not in asset_lookup:
            raise UnknownReferenceError(f"unknown asset {h.asset!r}", path=path)
        q = float(h.quantity)
        if not np.isfinite(q) or q < 0.0:
            raise NetworkValidationError(
                f"quantity must be finite and >= 0, got {h.quantity}",
                path=f"{path}.quantity",
            )
        quantity[firm_lookup[h.firm], asset_lookup[h.asset]] += q

    # Seniority ranks must be dense 1..K_i per firm.
    by_firm: dict[str, list[DebtTranche]] = {}
    for pos, t in enumerate(tranches):
        path = f"tranches[{pos}]"
        if t.firm not in firm_lookup:
            raise UnknownReferenceError(f"unknown firm {t.firm!r}", path=path)
        f = float(t.face)
        if not np.isfinite(f) or f < 0.0:
            raise NetworkValidationError(
                f"face must be finite and >= 0, got {t.face}", path=f"{path}.face"
            )
        by_firm.setdefault(t.firm, []).append(t)
    tranche_counts = np.zeros(n, dtype=int)
    for firm_name, ts in by_firm.items():
        ranks = sorted(t.seniority for t in ts)
        if ranks != list(range(1, len(ranks) + 1)):
            raise NetworkValidationError(
                f"seniority ranks for {firm_name!r} must be dense 1..{len(ranks)}, "
                f"got {ranks}",
                path="tranches",
            )
        tranche_counts[firm_lookup[firm_name]] = len(ranks)
    max_rank = int(tranche_counts.max()) if n else 0

    faces = np.zeros((n, max_rank))
    for t in tranches:
        faces[firm_lookup[t.firm], t.seniority - 1] = float(t.face)

    if ownership is None:
        ownership = OwnershipMatrix(equity=np.zeros((n, n)))
    equity = _validate_fraction_matrix(
        ownership.equity, n, "ownership.equity", allow_supercritical
    )

    for rank in ownership.debt:
        if not isinstance(rank, int) or isinstance(rank, bool) or rank < 1:
            raise NetworkValidationError(
                f"debt ownership rank must be a positive integer, got {rank!r}",
                path="ownership.debt",
            )
    debt_stack = np.zeros((max_rank, n, n))
    for rank, mat in ownership.debt.items():
        label = f"ownership.debt[{rank}]"
        mat = _validate_fraction_matrix(mat, n, label, allow_supercritical)
        # A nonzero column requires the obligor to actually have that tranche.
        held = np.flatnonzero(mat.sum(axis=0) > 0.0)
        for j in held:
            if rank > tranche_counts[j]:
                raise UnknownReferenceError(
                    f"firm {firms[j]!r} has no rank-{rank} tranche",
                    path=f"{label}[:][{j}]",
                )
        if rank <= max_rank:
            debt_stack[rank - 1] = mat

    if not allow_supercritical:
        eq_sums = equity.sum(axis=0)
        over = np.flatnonzero(eq_sums > 1.0 + COLUMN_SUM_TOLERANCE)
        if over.size:
            j = int(over[0])
            raise ColumnSumExceededError(
                f"insider equity holdings of {firms[j]!r} sum to {eq_sums[j]}",
                path=f"ownership.equity[:][{j}]",
            )
        for k in range(max_rank):
            d_sums = debt_stack[k].sum(axis=0)
            over = np.flatnonzero(d_sums > 1.0 + COLUMN_SUM_TOLERANCE)
            if over.size:
                j = int(over[0])
                raise ColumnSumExceededError(
                    f"insider holdings of {firms[j]!r} rank-{k + 1} tranche "
                    f"sum to {d_sums[j]}",
                    path=f"ownership.debt[{k + 1}][:][{j}]",
                )

    net = Network(
        firms=firms,
        assets=assets,
        holdings=holdings,
        ownership=OwnershipMatrix(
            equity=_freeze(equity.copy()),
            # all-zero matrices normalize away so equality and serialization
            # do not depend on how the input spelled "no cross-held debt"
            debt={k: _freeze(np.asarray(m, dtype=float).copy())
                  for k, m in ownership.debt.items()
                  if np.any(np.asarray(m, dtype=float) != 0.0)},
        ),
        tranches=tranches,
        quantity_matrix=_freeze(quantity),
        equity_matrix=_freeze(equity.copy()),
        debt_matrices=_freeze(debt_stack),
        faces=_freeze(faces),
    )
    object.__setattr__(net, "_firm_lookup", firm_lookup)
    object.__setattr__(net, "_asset_lookup", asset_lookup)
    object.__setattr__(net, "_tranche_counts", _freeze(tranche_counts))
    object.__setattr__(net, "_total_face", _freeze(faces.sum(axis=1)))
    # waterfall constants, precomputed so the revaluation hot path does not
    # redo the cumulative sums every iteration
    cum = np.cumsum(faces, axis=1) if faces.shape[1] else faces
    object.__setattr__(net, "_cum_faces", _freeze(cum.copy()))
    object.__setattr__(net, "_senior_faces", _freeze(cum - faces))
    return net


def insider_column_sums(network: Network) -> ColumnSums:
    """Total insider-held fraction of each claim.

    Returns the per-firm equity column sums and, per seniority rank, the
    per-firm debt column sums. These are the quantities that govern whether
    the revaluation operator is a contraction.
    """
    return ColumnSums(
        equity=network.equity_matrix.sum(axis=0),
        debt=network.debt_matrices.sum(axis=1),
    )
