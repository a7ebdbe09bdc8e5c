"""
Two reciprocally cross-owned firms absorb a commodity price shock.

Firm1 holds one unit of a commodity, firm2 holds cash. Each owns half of
the other's equity and has issued senior debt with face 500. When the
commodity halves, firm1's loss propagates to firm2 through the equity
stake, comes partly back, and the book values spiral down to a new
equilibrium instead of repricing in one step.

Usage: python3 01_two_firm_shock.py
"""

from reflexnet import (
    DebtTranche,
    ExogenousHolding,
    OwnershipMatrix,
    build_network,
    build_scenario,
    revalue,
    simulate,
    solve_equilibrium,
)


def make_network():
    return build_network(
        firms=["firm1", "firm2"],
        assets=["commodities", "cash"],
        holdings=[
            ExogenousHolding("firm1", "commodities", 1.0),
            ExogenousHolding("firm2", "cash", 1000.0),
        ],
        ownership=OwnershipMatrix(equity=[[0.0, 0.5], [0.5, 0.0]]),
        tranches=[DebtTranche("firm1", 1, 500.0), DebtTranche("firm2", 1, 500.0)],
    )


def main():
    net = make_network()

    print("=== before the shock ===")
    state, diag = solve_equilibrium(net, {"commodities": 1000.0, "cash": 1.0})
    print(f"equity: {state.equity.round(6)}")
    print(f"debt recoveries: {state.debt.ravel().round(6)}")
    print(f"({diag.iterations} iterations, residual {diag.final_residual:.2e})")

    print()
    print("=== the commodity halves: one revaluation round at a time ===")
    prices = {"commodities": 500.0, "cash": 1.0}
    x = state
    for round_no in range(1, 5):
        x = revalue(net, x, prices)
        print(f"round {round_no}: equity = {x.equity.round(4)}")
    print("each round, half of the newly revealed loss crosses the network")

    print()
    print("=== where it settles ===")
    final, diag = solve_equilibrium(net, prices)
    print(f"equity: {final.equity.round(6)}   (exact limit: 1000/3, 2000/3)")

    print()
    print("=== the same story as a dated trajectory ===")
    scenario = build_scenario(
        net,
        shocks=[(1, "commodities", 700.0), (2, "commodities", 500.0)],
        lags=1,
        horizon=12,
        initial_state=state,
    )
    traj = simulate(net, scenario)
    print(f"{'t':>3} {'e_firm1':>10} {'e_firm2':>10} {'residual':>10}")
    for t, s in enumerate(traj.states):
        print(f"{t:>3} {s.equity[0]:>10.3f} {s.equity[1]:>10.3f}"
              f" {traj.residuals[t]:>10.3f}")
    print(f"classification: {traj.classification.value}")


if __name__ == "__main__":
    main()
