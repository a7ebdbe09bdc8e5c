"""Seniority waterfall and the balance sheets it produces.

A firm with a senior and a junior tranche is swept through falling asset
values. Senior debt is whole until the junior tranche is wiped out, and
equity exists only above total face. The published balance sheet keeps
assets = liabilities + equity at every point, impaired or not.

Usage: python3 03_seniority_waterfall.py
"""

from reflexnet import (
    DebtTranche,
    ExogenousHolding,
    OwnershipMatrix,
    ValuationState,
    build_network,
    publish_balance_sheet,
    waterfall,
)


def main():
    faces = [600.0, 400.0]  # senior first
    print("firm with senior face 600, junior face 400")
    print(f"{'value':>8} {'senior':>8} {'junior':>8} {'equity':>8}")
    for value in [1500.0, 1100.0, 1000.0, 800.0, 600.0, 350.0, 0.0]:
        rec, eq = waterfall(value, faces)
        print(f"{value:>8.0f} {rec[0]:>8.0f} {rec[1]:>8.0f} {eq:>8.0f}")

    # the same mechanics drive published statements
    net = build_network(
        firms=["issuer", "holder"],
        assets=["plant"],
        holdings=[ExogenousHolding("issuer", "plant", 1.0)],
        ownership=OwnershipMatrix(
            equity=[[0.0, 0.0], [0.3, 0.0]],
            debt={2: [[0.0, 0.0], [0.5, 0.0]]},
        ),
        tranches=[DebtTranche("issuer", 1, 600.0), DebtTranche("issuer", 2, 400.0)],
    )

    print()
    print("holder owns 30% of issuer equity and half its junior tranche")
    for plant_price in [1500.0, 800.0]:
        rec, eq = waterfall(plant_price, faces)
        state = ValuationState.build(
            net, {"issuer": eq, "holder": 0.0},
            {"issuer": {1: rec[0], 2: rec[1]}},
        )
        sheet = publish_balance_sheet(net, "holder", state, {"plant": plant_price})
        print(f"\nplant at {plant_price:.0f}:")
        for label, value in sheet.asset_items:
            print(f"  {label:>16}: {value:10.2f}")
        print(f"  {'liabilities':>16}: {sheet.liabilities:10.2f}")
        print(f"  {'equity':>16}: {sheet.equity:10.2f}")
        gap = sheet.total_assets - sheet.liabilities - sheet.equity
        print(f"  identity gap: {gap:.2e}")


if __name__ == "__main__":
    main()
