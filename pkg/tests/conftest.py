import numpy as np
import pytest

from qznet.core import MutualCapacitance, mutual_to_maxwell
from qznet.decay import LossSpec
from qznet.distributed import SeriesCapacitor, ShuntBranch, TLine, TwoPortChain
from qznet.synthesis import CLCascade

FF = 1e-15
NH = 1e-9


def build_coupler_chain() -> TwoPortChain:
    """Two transmon pads coupled through a 12 mm line via 6.5 fF gaps."""
    return TwoPortChain((
        ShuntBranch(c=70 * FF),
        SeriesCapacitor(6.5 * FF),
        TLine(l_per_m=0.438e-6, c_per_m=0.159e-9, length=12e-3),
        SeriesCapacitor(6.5 * FF),
        ShuntBranch(c=72 * FF),
    ))


def build_tc_cascade() -> CLCascade:
    """Two transmons bridged by a large tunable-coupler pad; purely capacitive."""
    mut = np.array([
        [70.0, 4.0, 0.1],
        [4.0, 200.0, 4.2],
        [0.1, 4.2, 72.0],
    ]) * FF
    maxwell = mutual_to_maxwell(
        MutualCapacitance(mut, ("Q1", "C", "Q2")), require_spd=True
    )
    return CLCascade(maxwell, 3, np.zeros(0))


def build_decay_cascade(all_to_all: bool = False) -> CLCascade:
    """Two transmons, readout resonators and a bus, four 50-ohm environments.

    all_to_all adds a 1 fF parasitic between every otherwise uncoupled pair.
    """
    names = ("PortL", "PortR", "Drive1", "Drive2", "Q1", "Q2", "R1", "Bus", "R2")
    shunt = dict(PortL=100, PortR=100, Drive1=100, Drive2=100,
                 Q1=70, Q2=75, R1=300, Bus=300, R2=300)
    pairs = {
        ("PortL", "R1"): 10, ("R1", "Q1"): 10, ("Q1", "Bus"): 10,
        ("Bus", "Q2"): 10, ("Q2", "R2"): 10, ("R2", "PortR"): 10,
        ("Q1", "Drive1"): 0.15, ("Q2", "Drive2"): 0.15,
    }
    n = len(names)
    mut = np.zeros((n, n))
    idx = {nm: i for i, nm in enumerate(names)}
    for nm, c in shunt.items():
        mut[idx[nm], idx[nm]] = c * FF
    for (a, b), c in pairs.items():
        mut[idx[a], idx[b]] = mut[idx[b], idx[a]] = c * FF
    if all_to_all:
        for i in range(n):
            for j in range(i + 1, n):
                if mut[i, j] == 0.0:
                    mut[i, j] = mut[j, i] = 1 * FF
    maxwell = mutual_to_maxwell(MutualCapacitance(mut, names), require_spd=True)
    return CLCascade(maxwell, 6, np.array([2.1, 3.25, 1.6]) * NH)


def build_decay_loss() -> LossSpec:
    return LossSpec(
        external_ports=(("PortL", 50.0), ("PortR", 50.0),
                        ("Drive1", 50.0), ("Drive2", 50.0)),
        junction_ports=(("Q1", 18 * NH), ("Q2", 15.5 * NH)),
    )


@pytest.fixture
def coupler_chain():
    return build_coupler_chain()


@pytest.fixture
def tc_cascade():
    return build_tc_cascade()


@pytest.fixture
def decay_cascade():
    return build_decay_cascade()


@pytest.fixture
def decay_cascade_all():
    return build_decay_cascade(all_to_all=True)


@pytest.fixture
def decay_loss():
    return build_decay_loss()
