import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import loglinear_fit, nodal_admittance, random_rational
from qznet.core import (
    CauerFactorization,
    MaxwellCapacitance,
    Mode,
    MutualCapacitance,
    RationalImpedance,
    SampledNetwork,
    drop_ports,
    ensure_spd,
    eval_rational,
    grid_capacitance,
    kron_reduce,
    maxwell_to_mutual,
    mutual_to_maxwell,
    s_to_z,
    sample_rational,
    sign_normalize_row,
    symmetrize,
    z_to_s,
    z_to_y,
)
from qznet.errors import (
    PoleHitError,
    SingularSampleError,
    SPDError,
    ValidationError,
)

FF = 1e-15


# ---------------------------------------------------------------------------
# capacitance forms


def test_maxwell_to_mutual_two_node():
    c = MaxwellCapacitance(np.array([[110.0, -10.0], [-10.0, 60.0]]) * FF, ("a", "b"))
    m = maxwell_to_mutual(c)
    assert m.node_names == ("a", "b")
    assert np.allclose(np.diag(m.matrix), np.array([100.0, 50.0]) * FF)
    assert m.matrix[0, 1] == pytest.approx(10 * FF)


def test_maxwell_to_mutual_uncoupled():
    c = MaxwellCapacitance(np.eye(2) * 5 * FF, ("a", "b"))
    m = maxwell_to_mutual(c)
    assert np.allclose(np.diag(m.matrix), 5 * FF)
    assert m.matrix[0, 1] == 0.0


def test_maxwell_to_mutual_synthesized_network_goes_negative():
    """A synthesized Maxwell matrix can imply a negative coupling capacitor."""
    c1 = c2 = 1.0
    m = np.array([
        [c1, 0.0, -c1],
        [0.0, c2, c2],
        [-c1, c2, 1.0 + c1 + c2],
    ])
    mut = maxwell_to_mutual(MaxwellCapacitance(m, ("p", "r", "g")))
    expected = np.array([
        [0.0, 0.0, c1],
        [0.0, 2.0 * c2, -c2],
        [c1, -c2, 1.0 + 2.0 * c2],
    ])
    assert np.allclose(mut.matrix, expected)
    assert mut.matrix[1, 2] < 0.0


def test_mutual_to_maxwell_all_zero():
    zero = MutualCapacitance(np.zeros((3, 3)), ("a", "b", "c"))
    back = mutual_to_maxwell(zero)
    assert np.all(back.matrix == 0.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_mutual_maxwell_roundtrip(n, seed):
    rng = np.random.default_rng(seed)
    mut = rng.uniform(0.0, 10.0 * FF, (n, n))
    mut = 0.5 * (mut + mut.T)
    c = MutualCapacitance(mut, tuple(f"n{i}" for i in range(n)))
    back = maxwell_to_mutual(mutual_to_maxwell(c))
    assert np.abs(back.matrix - mut).max() < 1e-18


def test_kron_reduce_chain_matches_schur():
    c = grid_capacitance(1, 3, 100 * FF, 10 * FF)
    reduced = kron_reduce(c, ("n0_1",))
    m = c.matrix
    names = list(c.node_names)
    mid = names.index("n0_1")
    keep = [i for i in range(3) if i != mid]
    expected = m[np.ix_(keep, keep)] - np.outer(m[keep, mid], m[mid, keep]) / m[mid, mid]
    assert reduced.node_names == ("n0_0", "n0_2")
    assert np.allclose(reduced.matrix, expected)


def test_symmetrize_rejects_gross_asymmetry():
    with pytest.raises(ValidationError):
        symmetrize(np.array([[1.0, 2.0], [1.0, 1.0]]), "test matrix")


def test_ensure_spd_clamps_roundoff_boundary():
    m = np.diag([1.0, -1e-14])
    with pytest.warns(UserWarning):
        out = ensure_spd(m, "boundary case")
    assert np.linalg.eigvalsh(out).min() >= 0.0


def test_ensure_spd_rejects_indefinite():
    with pytest.raises(SPDError):
        ensure_spd(np.diag([1.0, -1.0]))


def test_sign_normalize_row():
    assert np.array_equal(sign_normalize_row(np.array([-3.0, 2.0])), [3.0, -2.0])
    assert np.array_equal(sign_normalize_row(np.array([1.0, -2.0]), ), [-1.0, 2.0])
    zero = np.zeros(3)
    assert np.array_equal(sign_normalize_row(zero), zero)


# ---------------------------------------------------------------------------
# S/Z/Y conversions


def _one_port(value, kind="Z"):
    return SampledNetwork(kind, np.array([1e9]), np.full((1, 1, 1), complex(value)))


def test_z_to_s_matched_load_is_zero():
    s = z_to_s(_one_port(50.0))
    assert abs(s.data).max() < 1e-15


def test_z_to_s_reactive_load_is_unimodular():
    s = z_to_s(_one_port(37.0j))
    assert abs(s.data[0, 0, 0]) == pytest.approx(1.0, abs=1e-12)


def test_s_to_z_endpoints():
    assert s_to_z(_one_port(0.0, "S")).data[0, 0, 0] == pytest.approx(50.0)
    assert abs(s_to_z(_one_port(-1.0, "S")).data[0, 0, 0]) < 1e-12


def test_z_s_roundtrip():
    rng = np.random.default_rng(3)
    freqs = np.linspace(1e9, 10e9, 16)
    a = rng.standard_normal((16, 3, 3)) + 1j * rng.standard_normal((16, 3, 3))
    z = a + np.transpose(a, (0, 2, 1)) + 200.0 * np.eye(3)
    net = SampledNetwork("Z", freqs, z)
    s = z_to_s(net)
    cond = np.linalg.cond(np.eye(3) - s.data)
    assert cond.max() < 1e8
    back = s_to_z(s)
    rel = np.abs(back.data - z).max() / np.abs(z).max()
    assert rel < 1e-10


def test_z_to_y_is_per_sample_inverse():
    rng = np.random.default_rng(5)
    freqs = np.linspace(1e9, 2e9, 4)
    z = rng.standard_normal((4, 2, 2)) + 1j * rng.standard_normal((4, 2, 2))
    z = z + np.transpose(z, (0, 2, 1)) + 10.0 * np.eye(2)
    y = z_to_y(SampledNetwork("Z", freqs, z))
    assert y.kind == "Y"
    prod = np.einsum("fij,fjk->fik", y.data, z)
    assert np.abs(prod - np.eye(2)).max() < 1e-12


def test_z_to_y_diagonal_is_reciprocal():
    z = SampledNetwork("Z", np.array([1e9]), np.diag([5.0 + 0j, 2.0j])[None])
    y = z_to_y(z)
    assert np.allclose(y.data[0], np.diag([0.2, -0.5j]))


def test_z_to_y_reports_singular_samples():
    freqs = np.array([1e9, 2e9, 3e9])
    z = np.tile(np.eye(2, dtype=complex), (3, 1, 1))
    z[1] = 0.0
    with pytest.raises(SingularSampleError) as err:
        z_to_y(SampledNetwork("Z", freqs, z))
    assert err.value.sample_indices == (1,)


def test_z_to_y_passive_loaded_network(decay_cascade, decay_loss):
    """Looking into the two junction nodes of the resistively loaded chip,
    the converted admittance keeps a nonnegative real part everywhere."""
    c = decay_cascade.capacitance.matrix
    names = list(decay_cascade.capacitance.node_names)
    n_p = decay_cascade.n_ports
    inv_l = np.zeros(c.shape[0])
    inv_l[n_p:] = 1.0 / decay_cascade.shunt_inductors
    g = np.zeros(c.shape[0])
    for nm, l in decay_loss.junction_ports:
        inv_l[names.index(nm)] = 1.0 / l
    for nm, r in decay_loss.external_ports:
        g[names.index(nm)] = 1.0 / r
    freqs = np.linspace(2e9, 9e9, 301)
    q = [names.index("Q1"), names.index("Q2")]
    zdata = np.empty((freqs.size, 2, 2), dtype=complex)
    for i, f in enumerate(freqs):
        y_full = nodal_admittance(c, 2j * np.pi * f, inv_l, g)
        zdata[i] = np.linalg.inv(y_full)[np.ix_(q, q)]
    y = z_to_y(SampledNetwork("Z", freqs, zdata, port_names=("Q1", "Q2")))
    diag = np.stack([y.data[:, 0, 0], y.data[:, 1, 1]])
    assert diag.real.min() >= -1e-12 * np.abs(diag).max()


def test_kind_mismatch_raises():
    with pytest.raises(ValidationError):
        z_to_s(_one_port(0.0, "S"))
    with pytest.raises(ValidationError):
        s_to_z(_one_port(50.0))


# ---------------------------------------------------------------------------
# rational impedance


def test_eval_rational_bare_capacitor():
    c = 100 * FF
    z = RationalImpedance(np.array([[1.0 / c]]), ())
    s = 2j * np.pi * 5e9
    assert eval_rational(z, s)[0, 0] == pytest.approx(1.0 / (s * c))


def test_eval_rational_pole_hits():
    z = RationalImpedance(np.eye(2), (Mode(1e10, np.array([1.0, 2.0])),))
    with pytest.raises(PoleHitError):
        eval_rational(z, 0.0)
    with pytest.raises(PoleHitError):
        eval_rational(z, 1e10j)


def test_sample_rational_rejects_dc():
    z = RationalImpedance(np.eye(1), ())
    with pytest.raises(PoleHitError):
        sample_rational(z, np.array([0.0, 1e9]))


def test_modes_sorted_and_frozen():
    z = RationalImpedance(
        np.eye(2),
        (Mode(3e10, np.array([1.0, 0.0])), Mode(1e10, np.array([0.0, 1.0]))),
    )
    assert np.array_equal(z.omegas, [1e10, 3e10])
    with pytest.raises(ValueError):
        z.dc_residue[0, 0] = 2.0


def test_imaginary_axis_lossless_and_reciprocal():
    rng = np.random.default_rng(7)
    z = random_rational(rng, 3, 4)
    net = sample_rational(z, np.linspace(1e9, 25e9, 400))
    assert np.abs(net.data.real).max() <= 1e-10 * np.abs(net.data.imag).max()
    asym = np.abs(net.data - net.data.transpose(0, 2, 1)).max()
    assert asym <= 1e-12 * np.abs(net.data).max()


def test_drop_ports_is_subblock():
    rng = np.random.default_rng(11)
    z = random_rational(rng, 4, 3)
    sub = drop_ports(z, ("P2", "P4"))
    assert sub.port_names == ("P1", "P3")
    s = 2j * np.pi * 6.1e9
    full = eval_rational(z, s)
    assert np.allclose(eval_rational(sub, s), full[np.ix_([0, 2], [0, 2])])
    with pytest.raises(ValidationError):
        drop_ports(z, z.port_names)


def test_cauer_factorization_reconstructs_r0():
    rng = np.random.default_rng(13)
    z = random_rational(rng, 3, 2)
    cf = CauerFactorization.from_rational(z)
    rel = np.abs(cf.dc_residue() - z.dc_residue).max() / np.abs(z.dc_residue).max()
    assert rel < 1e-12
    assert np.allclose(np.diag(cf.L_R), 1.0 / z.omegas**2)
    assert np.array_equal(cf.C_R, np.eye(2))


# ---------------------------------------------------------------------------
# capacitor grids


def test_grid_capacitance_1x2():
    c = grid_capacitance(1, 2, 100 * FF, 10 * FF)
    assert np.allclose(c.matrix, np.array([[110.0, -10.0], [-10.0, 110.0]]) * FF)
    assert c.node_names == ("n0_0", "n0_1")


def test_grid_capacitance_2x10_bandwidth():
    c = grid_capacitance(2, 10, 50 * FF, 5 * FF)
    assert c.n_nodes == 20
    # shorter axis fastest: bandwidth 2
    i, j = np.nonzero(c.matrix)
    assert np.abs(i - j).max() <= 2
    assert np.linalg.eigvalsh(c.matrix).min() > 0.0


def test_grid_inverse_decays_exponentially():
    c = grid_capacitance(10, 10, 50 * FF, 5 * FF)
    cinv = np.linalg.inv(c.matrix)
    names = list(c.node_names)
    row = names.index("n0_0")
    mags = np.array(
        [abs(cinv[row, names.index(f"n0_{j}")]) for j in range(1, 10)]
    )
    assert np.all(np.diff(mags) < 0.0)
    _, slope, r2 = loglinear_fit(np.arange(1, 10), np.log(mags))
    assert slope < 0.0
    assert r2 > 0.99
