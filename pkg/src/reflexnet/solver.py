"""Fixed-point computation of the full-information equilibrium.

The revaluation map is iterated from a componentwise lower bound until
successive states agree in sup norm, with an independent residual check
before accepting the answer. A contraction report based on insider column
sums says when the fixed point is provably unique, and a direct linear
solve provides an oracle for the regime where every firm stays solvent.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NoConvergenceError, RegimeViolationError, SingularSystemError
from .network import Network, insider_column_sums
from .valuation import ValuationState, _revalue_resolved, resolve_prices

UNIQUENESS_MARGIN = 1e-12

# bail out well before float overflow when iterates grow without bound
DIVERGENCE_FACTOR = 1e15


@dataclass(frozen=True)
class SolverConfig:
    """Iteration policy: stopping threshold, budget, starting point.

    ``tolerance`` bounds the sup-norm successive difference and the final
    independent residual. ``initial`` of None means the exogenous-only
    valuation (cross-claims at zero, then the waterfall), which starts the
    iteration at a componentwise lower bound so convergence is monotone.
    """

    tolerance: float = 1e-9
    max_iterations: int = 10_000
    initial: Optional[ValuationState] = None

    def __post_init__(self):
        if not (isinstance(self.tolerance, float) or isinstance(self.tolerance, int)):
            raise ValueError("tolerance must be a positive number")
        if not (float(self.tolerance) > 0.0 and np.isfinite(self.tolerance)):
            raise ValueError("tolerance must be a positive number")
        if isinstance(self.max_iterations, bool) or not isinstance(
            self.max_iterations, int
        ):
            raise ValueError("max_iterations must be an integer >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be an integer >= 1")


@dataclass(frozen=True)
class SolveDiagnostics:
    """Convergence record for one solve.

    ``iterations`` counts the applications needed to reach the returned
    state; the verification step that certifies it is not included.
    ``final_residual`` is the independently measured distance the map moves
    the returned state. ``contraction_estimate`` is the median of the last
    ten successive residual ratios in the total-value norm (0.0 when
    convergence was immediate). Residual histories carry the sup-norm
    sequence used for stopping and the total-value sequence whose ratios
    are bounded by the worst insider column sum.
    """

    iterations: int
    final_residual: float
    contraction_estimate: float
    guaranteed_unique: bool
    residual_history: tuple[float, ...]
    residual_history_l1: tuple[float, ...]


@dataclass(frozen=True)
class ContractionReport:
    """Uniqueness certificate derived from insider column sums."""

    guaranteed_unique: bool
    worst_column_sum: float
    offending_claims: tuple[str, ...]


def check_contraction(network: Network) -> ContractionReport:
    """Report whether the fixed point is provably unique.

    The revaluation map shrinks total-value distances by at least the worst
    insider column sum, so a worst sum strictly below one certifies a unique
    equilibrium and geometric convergence. Claims whose insider share
    reaches one are listed as offenders.
    """
    sums = insider_column_sums(network)
    worst = 0.0
    offending: list[str] = []
    for j, firm in enumerate(network.firms):
        s = float(sums.equity[j])
        worst = max(worst, s)
        if s >= 1.0 - UNIQUENESS_MARGIN:
            offending.append(f"equity:{firm}")
    for k in range(network.max_rank):
        for j, firm in enumerate(network.firms):
            if k >= network.tranche_count(j):
                continue
            s = float(sums.debt[k, j])
            worst = max(worst, s)
            if s >= 1.0 - UNIQUENESS_MARGIN:
                offending.append(f"debt:{firm}#{k + 1}")
    return ContractionReport(
        guaranteed_unique=worst < 1.0 - UNIQUENESS_MARGIN,
        worst_column_sum=worst,
        offending_claims=tuple(offending),
    )


def _estimate_contraction(history_l1: tuple[float, ...]) -> float:
    ratios = [
        history_l1[i + 1] / history_l1[i]
        for i in range(len(history_l1) - 1)
        if history_l1[i] > 0.0
    ]
    if not ratios:
        return 0.0
    return float(statistics.median(ratios[-10:]))


def solve_equilibrium(
    network: Network, prices, config: SolverConfig | None = None
) -> tuple[ValuationState, SolveDiagnostics]:
    """Find the equilibrium valuation at fixed prices by Picard iteration.

    Starts from ``config.initial`` (default: exogenous-only valuation) and
    applies the revaluation map until two conditions hold: the successive
    difference is within tolerance, and one further application moves the
    candidate by no more than tolerance. That second check is the reported
    ``final_residual``; it spends one extra map application, which counts
    against ``max_iterations`` but not in ``iterations``.

    Raises NoConvergenceError, with partial state and diagnostics attached,
    when the budget runs out or the iterates grow past any plausible scale.
    """
    if config is None:
        config = SolverConfig()
    p = resolve_prices(network, prices)
    if config.initial is None:
        state = _revalue_resolved(network, ValuationState.zeros(network), p)
    else:
        config.initial.validate(network)
        state = config.initial

    report = check_contraction(network)
    exogenous = network.quantity_matrix @ p
    scale = float(np.sum(exogenous)) + float(network.faces.sum())
    ceiling = DIVERGENCE_FACTOR * max(1.0, scale)

    history_sup: list[float] = []
    history_l1: list[float] = []

    def diagnostics(iterations: int, final_residual: float) -> SolveDiagnostics:
        return SolveDiagnostics(
            iterations=iterations,
            final_residual=final_residual,
            contraction_estimate=_estimate_contraction(tuple(history_l1)),
            guaranteed_unique=report.guaranteed_unique,
            residual_history=tuple(history_sup),
            residual_history_l1=tuple(history_l1),
        )

    for application in range(1, config.max_iterations + 1):
        nxt = _revalue_resolved(network, state, p, exogenous)
        d_equity = np.abs(nxt.equity - state.equity)
        d_debt = np.abs(nxt.debt - state.debt)
        r_sup = max(float(d_equity.max(initial=0.0)), float(d_debt.max(initial=0.0)))
        history_sup.append(r_sup)
        history_l1.append(float(d_equity.sum() + d_debt.sum()))

        if r_sup == 0.0:
            # exact fixed point; a recheck would recompute the same state
            return nxt, diagnostics(application, 0.0)
        if r_sup <= config.tolerance and len(history_sup) >= 2:
            if history_sup[-2] <= config.tolerance:
                # previous residual stopped the loop; this application is the
                # independent verification of the previous iterate
                return state, diagnostics(application - 1, r_sup)
        growing = len(history_sup) < 2 or r_sup >= history_sup[-2]
        if growing and float(nxt.equity.sum() + nxt.debt.sum()) > ceiling:
            raise NoConvergenceError(
                f"iterates diverged past {ceiling:.3g} after "
                f"{application} applications",
                state=nxt,
                diagnostics=diagnostics(application, r_sup),
            )
        state = nxt

    raise NoConvergenceError(
        f"no fixed point within {config.max_iterations} iterations "
        f"(residual {history_sup[-1]:.3g}, tolerance {config.tolerance:.3g})",
        state=state,
        diagnostics=diagnostics(config.max_iterations, history_sup[-1]),
    )


def closed_form_linear(network: Network, prices) -> ValuationState:
    """Direct equilibrium for the regime where every firm stays solvent.

    With all debt recovered at face, equity solves the linear system
    (I - E) e = q + c - f, where E is the equity cross-holding matrix, q the
    exogenous values, c the cross-held debt at face, and f each firm's own
    total face. Serves as an oracle for the iterative solver.

    Raises SingularSystemError when the system cannot be solved reliably and
    RegimeViolationError when the solution has a negative equity entry,
    meaning some firm is insolvent and the waterfall must decide recoveries.
    """
    p = resolve_prices(network, prices)
    n = network.n_firms
    rhs = network.quantity_matrix @ p
    for k in range(network.max_rank):
        rhs = rhs + network.debt_matrices[k] @ network.faces[:, k]
    rhs = rhs - network.faces.sum(axis=1)
    system = np.eye(n) - network.equity_matrix
    try:
        equity = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc
    residual = float(np.max(np.abs(system @ equity - rhs), initial=0.0))
    if residual > 1e-10 * max(1.0, float(np.max(np.abs(rhs), initial=0.0))):
        raise SingularSystemError(
            f"linear solve residual {residual:.3g} exceeds tolerance"
        )
    if np.any(equity < 0.0):
        raise RegimeViolationError(
            "solvent-regime assumption violated: negative equity in linear solution",
            equity=equity,
        )
    return ValuationState(equity=equity, debt=network.faces.copy())
