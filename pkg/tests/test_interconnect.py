import numpy as np
import pytest

from oracles import (
    block_diag_s,
    cascade_load_z,
    cascade_nodal_z,
    pole_free_grid,
    random_cascade,
)
from qznet.core import (
    MaxwellCapacitance,
    SampledNetwork,
    sample_rational,
    z_to_s,
)
from qznet.errors import SingularSampleError, ValidationError
from qznet.interconnect import (
    ConnectionPlan,
    cascade_load_s,
    cascade_load_s_sweep,
    connect_rational,
    filipsson_connect,
    joined_name,
    merge_capacitance_ports,
)
from qznet.synthesis import cascade_to_rational

FF = 1e-15


# ---------------------------------------------------------------------------
# plan validation


def test_plan_rejects_duplicate_networks():
    with pytest.raises(ValidationError):
        ConnectionPlan(("a", "a"))


def test_plan_rejects_self_join():
    with pytest.raises(ValidationError):
        ConnectionPlan(("a",), joins=(("a.P1", "a.P1"),))


def test_plan_rejects_port_in_two_joins():
    with pytest.raises(ValidationError):
        ConnectionPlan(
            ("a", "b", "c"),
            joins=(("a.P1", "b.P1"), ("a.P1", "c.P1")),
        )


def test_plan_rejects_leaving_join_member_open():
    with pytest.raises(ValidationError, match="join members"):
        ConnectionPlan(
            ("a", "b"), joins=(("a.P1", "b.P1"),), leave_open=("a.P1",)
        )


# ---------------------------------------------------------------------------
# capacitance merges


def test_merge_capacitance_ports_adds_rows():
    m = np.array([
        [5.0, -1.0, -2.0],
        [-1.0, 4.0, -1.5],
        [-2.0, -1.5, 6.0],
    ])
    c = MaxwellCapacitance(m, ("x", "y", "z"))
    merged = merge_capacitance_ports(c, "x", "z")
    assert merged.node_names == ("x", "y")
    expected = np.array([
        [5.0 - 2.0 - 2.0 + 6.0, -1.0 - 1.5],
        [-1.0 - 1.5, 4.0],
    ])
    assert np.allclose(merged.matrix, expected)


def test_merge_preserves_positive_definiteness():
    rng = np.random.default_rng(6)
    casc = random_cascade(rng, 4, 0)
    merged = merge_capacitance_ports(casc.capacitance, "P1", "P3")
    assert np.linalg.eigvalsh(merged.matrix).min() > 0.0


def test_merge_same_node_rejected():
    c = MaxwellCapacitance(np.eye(2), ("a", "b"))
    with pytest.raises(ValidationError):
        merge_capacitance_ports(c, "a", "a")


# ---------------------------------------------------------------------------
# scattering-route primitives


def test_cascade_load_matched_load_keeps_s11():
    rng = np.random.default_rng(1)
    sigma = rng.standard_normal((5, 5)) * 0.2 + 1j * rng.standard_normal((5, 5)) * 0.2
    out = cascade_load_s(sigma, np.zeros((2, 2)))
    assert np.allclose(out, sigma[:3, :3])


def test_cascade_load_through_two_port_is_transparent():
    through = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    gamma = np.array([[0.3 + 0.4j]])
    out = cascade_load_s(through, gamma)
    assert np.allclose(out, gamma)


def test_cascade_load_resonant_sample_raises():
    sigma = np.array([[0.0, 1.0], [1.0, 1.0]], dtype=complex)  # s22 = 1
    open_load = np.array([[1.0]], dtype=complex)
    with pytest.raises(SingularSampleError):
        cascade_load_s(sigma, open_load)


def test_cascade_load_sweep_reports_indices():
    sigma = np.zeros((3, 2, 2), dtype=complex)
    sigma[:, 0, 1] = sigma[:, 1, 0] = 1.0
    sigma[1, 1, 1] = 1.0
    load = np.ones((3, 1, 1), dtype=complex)
    with pytest.raises(SingularSampleError) as err:
        cascade_load_s_sweep(sigma, load)
    assert err.value.sample_indices == (1,)


def test_cl_cascade_load_route_matches_nodal():
    """Closing the bare-capacitance multiport on its inductors through the
    S route reproduces the direct nodal inversion."""
    rng = np.random.default_rng(3)
    casc = random_cascade(rng, 3, 5)
    z, _ = cascade_to_rational(casc)
    freqs = pole_free_grid(z, (1e9, 20e9), 200)
    a = cascade_load_z(casc, freqs)
    b = cascade_nodal_z(casc, freqs)
    err = np.abs(a - b).max(axis=(1, 2)) / np.abs(b).max(axis=(1, 2))
    assert err.max() < 1e-8


# ---------------------------------------------------------------------------
# Filipsson reduction


def _three_port_with_load(gamma):
    freqs = np.linspace(1e9, 5e9, 7)
    data = np.zeros((7, 3, 3), dtype=complex)
    data[:, 0, 1] = data[:, 1, 0] = 1.0  # through between A and B
    data[:, 2, 2] = gamma
    return SampledNetwork("S", freqs, data, port_names=("A", "B", "L"))


def test_filipsson_through_returns_load():
    gamma = 0.3 + 0.4j
    out = filipsson_connect(_three_port_with_load(gamma), "B", "L")
    assert out.port_names == ("A",)
    assert np.allclose(out.data[:, 0, 0], gamma)


def test_filipsson_matches_cascade_load():
    rng = np.random.default_rng(8)
    freqs = np.linspace(1e9, 2e9, 5)
    sigma = 0.2 * (rng.standard_normal((5, 4, 4)) + 1j * rng.standard_normal((5, 4, 4)))
    gamma = 0.3 * (rng.standard_normal((5, 1, 1)) + 1j * rng.standard_normal((5, 1, 1)))
    via_cascade = cascade_load_s_sweep(sigma, gamma)

    big = np.zeros((5, 5, 5), dtype=complex)
    big[:, :4, :4] = sigma
    big[:, 4:, 4:] = gamma
    net = SampledNetwork("S", freqs, big, port_names=("P1", "P2", "P3", "P4", "L"))
    via_filipsson = filipsson_connect(net, "P4", "L")
    assert via_filipsson.port_names == ("P1", "P2", "P3")
    assert np.abs(via_filipsson.data - via_cascade).max() < 1e-12


def test_filipsson_requires_three_ports():
    freqs = np.array([1e9])
    two = SampledNetwork("S", freqs, np.zeros((1, 2, 2), dtype=complex))
    with pytest.raises(ValidationError):
        filipsson_connect(two, "P1", "P2")


def test_filipsson_rejects_z_data():
    z = SampledNetwork("Z", np.array([1e9]), 50.0 * np.eye(3)[None].astype(complex))
    with pytest.raises(ValidationError):
        filipsson_connect(z, "P1", "P2")


def test_filipsson_vanishing_denominator():
    freqs = np.array([1e9, 2e9])
    data = np.zeros((2, 3, 3), dtype=complex)
    data[1, 0, 1] = data[1, 1, 0] = 1.0  # D = 0 at the second sample
    net = SampledNetwork("S", freqs, data)
    with pytest.raises(SingularSampleError) as err:
        filipsson_connect(net, "P1", "P2")
    assert err.value.sample_indices == (1,)


# ---------------------------------------------------------------------------
# rational-route interconnection


def _rational(seed, n_ports, n_modes):
    rng = np.random.default_rng(seed)
    return cascade_to_rational(random_cascade(rng, n_ports, n_modes))[0]


def test_connect_rational_single_join_against_filipsson():
    za = _rational(100, 2, 3)
    zb = _rational(101, 2, 2)
    join = ("a.P1", "b.P1")
    plan = ConnectionPlan(
        ("a", "b"), joins=(join,), leave_open=(joined_name(*join),)
    )
    zc = connect_rational((za, zb), plan)
    assert zc.port_names == ("a.P2", "b.P2")

    freqs = pole_free_grid(
        np.concatenate([zc.omegas, za.omegas, zb.omegas]), (1e9, 18e9), 600
    )
    s_rational = z_to_s(sample_rational(zc, freqs)).data
    nets = [
        z_to_s(sample_rational(z, freqs)) for z in (za, zb)
    ]
    big = block_diag_s(nets, ("a", "b"))
    reduced = filipsson_connect(big, *join)
    cols = [reduced.port_index(p) for p in zc.port_names]
    s_filipsson = reduced.data[:, cols][:, :, cols]
    assert np.abs(s_rational - s_filipsson).max() < 1e-8


def test_connect_rational_merge_order_is_bitwise():
    za = _rational(110, 2, 2)
    zb = _rational(111, 3, 2)
    joins = (("a.P1", "b.P1"), ("a.P2", "b.P3"))
    z1 = connect_rational(
        (za, zb), ConnectionPlan(("a", "b"), joins=joins)
    )
    z2 = connect_rational(
        (za, zb), ConnectionPlan(("a", "b"), joins=joins[::-1])
    )
    assert z1.port_names == z2.port_names
    assert z1.dc_residue.tobytes() == z2.dc_residue.tobytes()
    assert z1.r_matrix().tobytes() == z2.r_matrix().tobytes()
    assert z1.omegas.tobytes() == z2.omegas.tobytes()


def test_connect_rational_port_bookkeeping():
    za = _rational(120, 2, 1)
    zb = _rational(121, 2, 1)
    join = ("a.P2", "b.P1")
    zc = connect_rational((za, zb), ConnectionPlan(("a", "b"), joins=(join,)))
    assert zc.port_names == ("a.P1", joined_name(*join), "b.P2")
    assert zc.n_ports == 3


def test_connect_rational_unknown_port_lists_candidates():
    za = _rational(130, 2, 1)
    zb = _rational(131, 2, 1)
    plan = ConnectionPlan(("a", "b"), joins=(("a.P9", "b.P1"),))
    with pytest.raises(ValidationError, match="a.P1"):
        connect_rational((za, zb), plan)


def test_connect_rational_rejects_dropping_every_port():
    za = _rational(140, 1, 1)
    plan = ConnectionPlan(("a",), leave_open=("a.P1",))
    with pytest.raises(ValidationError):
        connect_rational((za,), plan)


def test_connect_rational_network_count_mismatch():
    za = _rational(150, 1, 1)
    with pytest.raises(ValidationError):
        connect_rational((za,), ConnectionPlan(("a", "b")))
