"""
Solver diagnostics: when is the fixed point trustworthy, and how fast
does the iteration close in on it?

Usage: python3 02_equilibrium_solver.py
"""

import numpy as np

from reflexnet import (
    ExogenousHolding,
    NoConvergenceError,
    OwnershipMatrix,
    build_network,
    check_contraction,
    closed_form_linear,
    solve_equilibrium,
    sup_diff,
)


def reciprocal_pair(frac, supercritical=False):
    return build_network(
        firms=["a", "b"],
        assets=["xa", "xb"],
        holdings=[ExogenousHolding("a", "xa", 100.0), ExogenousHolding("b", "xb", 100.0)],
        ownership=OwnershipMatrix(equity=[[0.0, frac], [frac, 0.0]]),
        allow_supercritical=supercritical,
    )


def main():
    net = reciprocal_pair(0.5)
    prices = {"xa": 1.0, "xb": 1.0}

    report = check_contraction(net)
    print("contraction report:")
    print(f"  guaranteed_unique: {report.guaranteed_unique}")
    print(f"  worst_column_sum:  {report.worst_column_sum}")

    state, diag = solve_equilibrium(net, prices)
    print()
    print(f"equity: {state.equity}")
    print(f"iterations: {diag.iterations}")
    print(f"contraction_estimate: {diag.contraction_estimate:.4f}")

    # successive residuals shrink by the column sum, here one half
    hist = np.asarray(diag.residual_history)
    print("residual history (first 8):", [f"{r:.3g}" for r in hist[:8]])
    print("ratios:", [f"{b / a:.3f}" for a, b in zip(hist[:7], hist[1:8])])

    # the solvent regime has a closed form to check against
    exact = closed_form_linear(net, prices)
    print(f"gap to direct linear solve: {sup_diff(state, exact):.2e}")

    print()
    print("insider claims above 100% of a firm break the guarantee:")
    wild = reciprocal_pair(1.2, supercritical=True)
    report = check_contraction(wild)
    print(f"  guaranteed_unique: {report.guaranteed_unique}")
    print(f"  offending columns: {report.offending_claims}")
    try:
        solve_equilibrium(wild, prices)
    except NoConvergenceError as err:
        print(f"  solve fails as it should: {err}")


if __name__ == "__main__":
    main()
