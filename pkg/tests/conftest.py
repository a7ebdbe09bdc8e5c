"""Shared fixtures: the two-firm reference network and a seeded random
network generator used by the equivalence and property suites."""

import numpy as np
import pytest

from reflexnet import (
    DebtTranche,
    ExogenousHolding,
    Network,
    OwnershipMatrix,
    build_network,
)


def two_firm_network() -> Network:
    """Two firms, 50% reciprocal equity stakes, one 500-face tranche each.

    firm1 holds 1 unit of commodities, firm2 holds 1000 units of cash.
    """
    return build_network(
        firms=["firm1", "firm2"],
        assets=["commodities", "cash"],
        holdings=[
            ExogenousHolding("firm1", "commodities", 1.0),
            ExogenousHolding("firm2", "cash", 1000.0),
        ],
        ownership=OwnershipMatrix(
            equity=np.array([[0.0, 0.5], [0.5, 0.0]]),
        ),
        tranches=[
            DebtTranche("firm1", 1, 500.0),
            DebtTranche("firm2", 1, 500.0),
        ],
    )


def random_network(
    rng: np.random.Generator,
    n_firms: int | None = None,
    max_firms: int = 10,
    colsum_low: float = 0.1,
    colsum_high: float = 0.9,
    max_tranches: int = 2,
    solvent: bool = False,
) -> Network:
    """Draw a valid random network with insider column sums in the given band.

    Each claim column gets its own target sum, split across a random holder
    subset, so contraction moduli vary per draw. With ``solvent=True`` every
    firm's exogenous asset value covers its total face, which keeps the
    linear (all-solvent) regime's solution nonnegative.
    """
    n = n_firms if n_firms is not None else int(rng.integers(2, max_firms + 1))
    n_assets = int(rng.integers(1, 4))
    firms = [f"f{i}" for i in range(n)]
    assets = [f"a{j}" for j in range(n_assets)]

    counts = rng.integers(0, max_tranches + 1, size=n)
    tranches = []
    total_face = np.zeros(n)
    for i in range(n):
        for k in range(counts[i]):
            face = float(rng.uniform(10.0, 400.0))
            tranches.append(DebtTranche(firms[i], k + 1, face))
            total_face[i] += face

    holdings = []
    for i in range(n):
        if solvent:
            # enough exogenous value at unit prices to cover all faces
            qty = total_face[i] + float(rng.uniform(50.0, 500.0))
            holdings.append(ExogenousHolding(firms[i], assets[0], qty))
        else:
            for j in range(n_assets):
                if rng.random() < 0.7:
                    holdings.append(
                        ExogenousHolding(firms[i], assets[j], float(rng.uniform(0.0, 300.0)))
                    )

    def column(j: int) -> np.ndarray:
        col = np.zeros(n)
        holders = [i for i in range(n) if i != j and rng.random() < 0.6]
        if holders:
            w = rng.random(len(holders)) + 0.05
            col[holders] = w / w.sum() * rng.uniform(colsum_low, colsum_high)
        return col

    equity = np.zeros((n, n))
    for j in range(n):
        equity[:, j] = column(j)

    max_rank = int(counts.max()) if n else 0
    debt: dict[int, np.ndarray] = {}
    for rank in range(1, max_rank + 1):
        m = np.zeros((n, n))
        any_entry = False
        for j in range(n):
            if counts[j] >= rank and rng.random() < 0.7:
                m[:, j] = column(j)
                any_entry = True
        if any_entry:
            debt[rank] = m

    return build_network(
        firms=firms,
        assets=assets,
        holdings=holdings,
        ownership=OwnershipMatrix(equity=equity, debt=debt),
        tranches=tranches,
    )


def random_state(rng: np.random.Generator, net: Network, scale: float = 1000.0):
    """A random admissible state: each firm's claim values are a waterfall
    split of a random total, so limited-liability invariants hold."""
    from reflexnet import ValuationState, waterfall

    debt = np.zeros((net.n_firms, net.max_rank))
    equity = np.zeros(net.n_firms)
    for i in range(net.n_firms):
        k = net.tranche_count(i)
        v = float(rng.uniform(0.0, scale + net.total_face[i]))
        debt[i, :k], equity[i] = waterfall(v, net.faces[i, :k])
    return ValuationState(equity=equity, debt=debt)


@pytest.fixture
def net2() -> Network:
    return two_firm_network()


@pytest.fixture
def p1000() -> dict:
    return {"commodities": 1000.0, "cash": 1.0}


@pytest.fixture
def p500() -> dict:
    return {"commodities": 500.0, "cash": 1.0}
