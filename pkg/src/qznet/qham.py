"""Transmon-network Hamiltonian parameters and their effective-model reduction.

Ports of a lossless impedance are shunted by Josephson junctions; the
closed-form capacitance inverse then yields charging energies, Duffing
frequencies and exchange couplings. A Schrieffer-Wolff pass produces
effective (dressed) parameters, cross-checked here by exact diagonalization
on a truncated Fock space.

Energies named E_* are in joules; all frequencies, anharmonicities and
coupling rates are angular (rad/s). Divide by 2*pi for Hz.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .core import CONSTANTS, RationalImpedance, drop_ports
from .errors import DegeneracyError, IdentificationError, ValidationError
from .synthesis import CLCascade, cascade_to_rational, hamiltonian_cap_inverse

MAX_FOCK_DIM = 3 ** 7


def josephson_energy(l_j: float) -> float:
    """E_J of a junction with inductance l_j (H): Phi0^2 / (4 pi^2 L_J)."""
    if not (l_j > 0.0):
        raise ValidationError(f"junction inductance must be positive, got {l_j}")
    return CONSTANTS.Phi0 ** 2 / (4.0 * np.pi ** 2 * l_j)


def josephson_inductance(e_j: float) -> float:
    if not (e_j > 0.0):
        raise ValidationError(f"junction energy must be positive, got {e_j}")
    return CONSTANTS.Phi0 ** 2 / (4.0 * np.pi ** 2 * e_j)


def junction_energy_for_frequency(freq: float, e_c: float) -> float:
    """E_J that places a transmon at freq (Hz) given its charging energy (J).

    Inverts h_bar*omega = sqrt(8 E_J E_C) - E_C.
    """
    if not (freq > 0.0):
        raise ValidationError(f"target frequency must be positive, got {freq}")
    hw = CONSTANTS.h_bar * 2.0 * np.pi * freq
    return (hw + e_c) ** 2 / (8.0 * e_c)


@dataclass(frozen=True)
class JunctionSpec:
    """Junction at a named port, sized by exactly one of e_j (J), l_j (H) or
    freq_target (Hz)."""

    port: str
    e_j: float | None = None
    l_j: float | None = None
    freq_target: float | None = None

    def __post_init__(self):
        given = [v for v in (self.e_j, self.l_j, self.freq_target) if v is not None]
        if len(given) != 1:
            raise ValidationError(
                f"junction {self.port!r}: specify exactly one of e_j, l_j, "
                f"freq_target ({len(given)} given)"
            )
        if given[0] <= 0.0:
            raise ValidationError(f"junction {self.port!r}: value must be positive")


@dataclass(frozen=True)
class TransmonSpec:
    """Which ports carry junctions, which of those act as couplers, and which
    ports are left open (dropped before any analysis)."""

    junctions: tuple[JunctionSpec, ...]
    couplers: tuple[str, ...] = ()
    open_ports: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "junctions", tuple(self.junctions))
        object.__setattr__(self, "couplers", tuple(self.couplers))
        object.__setattr__(self, "open_ports", tuple(self.open_ports))
        if not self.junctions:
            raise ValidationError("at least one junction is required")
        ports = [j.port for j in self.junctions]
        if len(set(ports)) != len(ports):
            raise ValidationError(f"duplicate junction ports in {ports}")
        unknown = set(self.couplers) - set(ports)
        if unknown:
            raise ValidationError(f"couplers {sorted(unknown)} are not junction ports")
        clash = set(self.open_ports) & set(ports)
        if clash:
            raise ValidationError(f"ports {sorted(clash)} are both open and junction")


@dataclass(frozen=True)
class HamiltonianParams:
    """Duffing + exchange parameters of the full network.

    Qubit arrays follow qubit_names (the network port order); mode arrays
    follow mode_names. alpha_r is zero here and becomes a regrouped coupler's
    anharmonicity in effective_params. eff_c is the effective branch
    capacitance 1/(C^-1)_ii; e_c = e^2 (C^-1)_ii / 2 is its charging energy.
    """

    qubit_names: tuple[str, ...]
    mode_names: tuple[str, ...]
    omega_j: np.ndarray
    beta_j: np.ndarray
    omega_r: np.ndarray
    alpha_r: np.ndarray
    g_qq: np.ndarray
    g_qr: np.ndarray
    g_rr: np.ndarray
    eff_c: np.ndarray
    e_c: np.ndarray
    e_j: np.ndarray
    e_l: np.ndarray

    def __post_init__(self):
        for name in ("omega_j", "beta_j", "omega_r", "alpha_r", "g_qq", "g_qr",
                     "g_rr", "eff_c", "e_c", "e_j", "e_l"):
            v = np.asarray(getattr(self, name), dtype=float)
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        nq, nm = len(self.qubit_names), len(self.mode_names)
        if self.g_qq.shape != (nq, nq) or self.g_qr.shape != (nq, nm) \
                or self.g_rr.shape != (nm, nm):
            raise ValidationError("coupling block shapes do not match name counts")

    @property
    def n_qubits(self) -> int:
        return len(self.qubit_names)

    @property
    def n_modes(self) -> int:
        return len(self.mode_names)

    def coupling_matrix(self) -> np.ndarray:
        """Full symmetric exchange matrix over (qubits ++ modes)."""
        top = np.concatenate([self.g_qq, self.g_qr], axis=1)
        bot = np.concatenate([self.g_qr.T, self.g_rr], axis=1)
        return np.concatenate([top, bot])


def hamiltonian_params(
    network: RationalImpedance | CLCascade, spec: TransmonSpec
) -> HamiltonianParams:
    """Network plus junction energies -> full Hamiltonian parameter set.

    Every port remaining after open_ports are dropped must carry a junction.
    Charging energies come from the closed-form capacitance inverse; the
    resonator block of that inverse is the identity, so mode-mode couplings
    are exactly zero for rational-impedance input.
    """
    if isinstance(network, CLCascade):
        z, _ = cascade_to_rational(network)
    else:
        z = network
    if spec.open_ports:
        z = drop_ports(z, spec.open_ports)
    jmap = {j.port: j for j in spec.junctions}
    missing = set(z.port_names) - set(jmap)
    if missing:
        raise ValidationError(
            f"ports {sorted(missing)} have no junction and are not open"
        )
    absent = set(jmap) - set(z.port_names)
    if absent:
        raise ValidationError(f"junction ports {sorted(absent)} not in the network")

    nq, nm = z.n_ports, z.n_modes
    cinv = hamiltonian_cap_inverse(z)
    diag = cinv.diagonal().copy()
    e = CONSTANTS.e_charge
    hbar = CONSTANTS.h_bar
    eff_c = 1.0 / diag
    e_c = 0.5 * e ** 2 * diag

    e_j = np.empty(nq)
    for i, name in enumerate(z.port_names):
        j = jmap[name]
        if j.e_j is not None:
            e_j[i] = j.e_j
        elif j.l_j is not None:
            e_j[i] = josephson_energy(j.l_j)
        else:
            e_j[i] = junction_energy_for_frequency(j.freq_target, e_c[i])
    hw = np.sqrt(8.0 * e_j * e_c[:nq]) - e_c[:nq]
    bad = np.nonzero(hw <= 0.0)[0]
    if bad.size:
        name = z.port_names[bad[0]]
        raise ValidationError(
            f"junction at {name!r}: E_J/E_C = {e_j[bad[0]] / e_c[bad[0]]:.3g} "
            f"gives a nonpositive qubit frequency"
        )
    omega_j = hw / hbar
    beta_j = -e_c[:nq] / hbar

    omega_r = z.omegas
    e_l = CONSTANTS.Phi0 ** 2 * omega_r ** 2 / (4.0 * np.pi ** 2)

    energy = np.concatenate([e_j, e_l])
    ratio = energy / e_c
    g = (e ** 2 / hbar) * cinv * (np.outer(ratio, ratio) / 4.0) ** 0.25
    np.fill_diagonal(g, 0.0)
    return HamiltonianParams(
        qubit_names=z.port_names,
        mode_names=tuple(f"R{k + 1}" for k in range(nm)),
        omega_j=omega_j,
        beta_j=beta_j,
        omega_r=omega_r,
        alpha_r=np.zeros(nm),
        g_qq=g[:nq, :nq],
        g_qr=g[:nq, nq:],
        g_rr=g[nq:, nq:],
        eff_c=eff_c[:nq],
        e_c=e_c[:nq],
        e_j=e_j,
        e_l=e_l,
    )


@dataclass(frozen=True)
class EffectiveParams:
    """Second-order Schrieffer-Wolff output, including the nonlinear
    corrections: dressed frequencies, effective couplings, dispersive shifts
    chi (qubit x mode), dressed anharmonicities and qubit-qubit cross-Kerr.

    delta and sigma are the detuning tables omega_J_i -+ omega_R_k used in
    every denominator; max_g_over_delta is the dispersive-regime diagnostic.
    """

    qubit_names: tuple[str, ...]
    mode_names: tuple[str, ...]
    omega_j_eff: np.ndarray
    omega_r_eff: np.ndarray
    g_eff_qq: np.ndarray
    g_eff_rr: np.ndarray
    chi: np.ndarray
    beta_eff: np.ndarray
    alpha_eff: np.ndarray
    cross_kerr: np.ndarray
    delta: np.ndarray
    sigma: np.ndarray
    max_g_over_delta: float

    def __post_init__(self):
        for name in ("omega_j_eff", "omega_r_eff", "g_eff_qq", "g_eff_rr", "chi",
                     "beta_eff", "alpha_eff", "cross_kerr", "delta", "sigma"):
            v = np.asarray(getattr(self, name), dtype=float)
            v.setflags(write=False)
            object.__setattr__(self, name, v)


def _regroup(hp: HamiltonianParams, coupler_set):
    """Move coupler qubits into the mode block (appended after the true
    resonators, carrying their beta as the mode anharmonicity)."""
    couplers = tuple(coupler_set)
    unknown = set(couplers) - set(hp.qubit_names)
    if unknown:
        raise ValidationError(f"couplers {sorted(unknown)} are not qubits")
    nq = hp.n_qubits
    keep = [i for i, n in enumerate(hp.qubit_names) if n not in couplers]
    moved = [i for i, n in enumerate(hp.qubit_names) if n in couplers]
    omega_all = np.concatenate([hp.omega_j, hp.omega_r])
    anh_all = np.concatenate([hp.beta_j, hp.alpha_r])
    g_all = hp.coupling_matrix()
    q_idx = np.array(keep, dtype=int)
    m_idx = np.array([nq + k for k in range(hp.n_modes)] + moved, dtype=int)
    q_names = tuple(hp.qubit_names[i] for i in keep)
    m_names = hp.mode_names + tuple(hp.qubit_names[i] for i in moved)
    return (
        q_names, m_names,
        omega_all[q_idx], anh_all[q_idx],
        omega_all[m_idx], anh_all[m_idx],
        g_all[np.ix_(q_idx, q_idx)],
        g_all[np.ix_(q_idx, m_idx)],
        g_all[np.ix_(m_idx, m_idx)],
    )


def effective_params(hp: HamiltonianParams, coupler_set=()) -> EffectiveParams:
    """Dressed parameters after eliminating the qubit-mode exchange block.

    coupler_set names qubits to regroup with the modes first. Any exact
    qubit-mode degeneracy makes the transformation singular and raises.
    """
    (q_names, m_names, w_q, beta, w_m, alpha,
     g_qq, g_qm, g_mm) = _regroup(hp, coupler_set)

    delta = w_q[:, None] - w_m[None, :]
    sigma = w_q[:, None] + w_m[None, :]
    hits = np.argwhere(delta == 0.0)
    if hits.size:
        i, k = hits[0]
        raise DegeneracyError(
            f"qubit {q_names[i]!r} is exactly resonant with mode {m_names[k]!r} "
            f"at {w_q[i] / (2 * np.pi):.6e} Hz"
        )
    d1 = 1.0 / delta
    s1 = 1.0 / sigma
    g2 = g_qm ** 2

    omega_j_eff = w_q + np.sum(
        g2 * (d1 - s1) + 2.0 * beta[:, None] * g2 * s1 ** 2, axis=1
    )
    omega_r_eff = w_m + np.sum(
        -g2 * (d1 + s1) + 2.0 * alpha[None, :] * g2 * s1 ** 2, axis=0
    )

    m1 = (g_qm * d1) @ g_qm.T
    m2 = (g_qm * s1) @ g_qm.T
    g_eff_qq = g_qq + 0.5 * (m1 + m1.T - m2 - m2.T)
    np.fill_diagonal(g_eff_qq, 0.0)

    n1 = (g_qm * d1).T @ g_qm
    n2 = (g_qm * s1).T @ g_qm
    g_eff_rr = g_mm - 0.5 * (n1 + n1.T + n2 + n2.T)
    np.fill_diagonal(g_eff_rr, 0.0)

    chi = 2.0 * g2 * (beta[:, None] + alpha[None, :]) * (d1 ** 2 + s1 ** 2)
    beta_eff = beta * (1.0 - 2.0 * np.sum(g2 * d1 ** 2, axis=1))
    alpha_eff = alpha * (1.0 - 2.0 * np.sum(g2 * d1 ** 2, axis=0))

    p2 = (g_qm * d1) ** 2
    s0 = p2 @ p2.T
    cross = 0.5 * (
        beta[:, None] * s0 + beta[None, :] * s0 + 4.0 * (p2 * alpha[None, :]) @ p2.T
    )
    np.fill_diagonal(cross, 0.0)

    max_gd = float(np.abs(g_qm * d1).max()) if g_qm.size else 0.0
    return EffectiveParams(
        qubit_names=q_names,
        mode_names=m_names,
        omega_j_eff=omega_j_eff,
        omega_r_eff=omega_r_eff,
        g_eff_qq=g_eff_qq,
        g_eff_rr=g_eff_rr,
        chi=chi,
        beta_eff=beta_eff,
        alpha_eff=alpha_eff,
        cross_kerr=cross,
        delta=delta,
        sigma=sigma,
        max_g_over_delta=max_gd,
    )


@dataclass(frozen=True)
class FockModel:
    """Truncated product-Fock representation of the full Hamiltonian (rad/s).

    basis[i] is the occupation tuple of basis state i over
    (qubits ++ modes); the first label varies slowest.
    """

    labels: tuple[str, ...]
    levels: int
    basis: tuple[tuple[int, ...], ...]
    hamiltonian: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.hamiltonian, dtype=float)
        dim = self.levels ** len(self.labels)
        if h.shape != (dim, dim):
            raise ValidationError(
                f"hamiltonian shape {h.shape} != levels^modes = {dim}"
            )
        scale = float(np.abs(h).max()) or 1.0
        if float(np.abs(h - h.T).max()) > 1e-12 * scale:
            raise ValidationError("Fock Hamiltonian is not Hermitian")
        h.setflags(write=False)
        object.__setattr__(self, "hamiltonian", h)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]


def fock_hamiltonian(
    hp: HamiltonianParams, levels: int = 3, max_dim: int = MAX_FOCK_DIM
) -> FockModel:
    """Dense Duffing + exchange Hamiltonian on a truncated Fock product space.

    All displayed terms are kept, including the counter-rotating ones; no
    rotating-wave approximation is applied.
    """
    if levels < 2:
        raise ValidationError(f"need at least 2 levels, got {levels}")
    total = hp.n_qubits + hp.n_modes
    dim = levels ** total
    if dim > max_dim:
        raise ValidationError(
            f"Fock dimension {levels}^{total} = {dim} exceeds the cap {max_dim}"
        )
    omega = np.concatenate([hp.omega_j, hp.omega_r])
    anh = np.concatenate([hp.beta_j, hp.alpha_r])
    g = hp.coupling_matrix()

    occ = np.arange(levels, dtype=float)
    num = np.diag(occ)
    lower = np.diag(np.sqrt(occ[1:]), 1)
    drive = lower.T - lower  # b^dag - b, real antisymmetric

    def embed(op: np.ndarray, pos: int) -> np.ndarray:
        out = np.eye(1)
        for p in range(total):
            out = np.kron(out, op if p == pos else np.eye(levels))
        return out

    h = np.zeros((dim, dim))
    drives = [embed(drive, p) for p in range(total)]
    for p in range(total):
        n_p = embed(num, p)
        h += omega[p] * n_p + 0.5 * anh[p] * (n_p @ n_p - n_p)
    # g (b^dag a + b a^dag - b^dag a^dag - b a) == -g (b^dag - b)(a^dag - a)
    for p in range(total):
        for q in range(p + 1, total):
            if g[p, q] != 0.0:
                h -= g[p, q] * (drives[p] @ drives[q])
    labels = hp.qubit_names + hp.mode_names
    basis = tuple(itertools.product(range(levels), repeat=total))
    return FockModel(labels=labels, levels=levels, basis=basis, hamiltonian=h)


def oracle_effective_coupling(
    hp: HamiltonianParams, qubit_a: str, qubit_b: str, levels: int = 3
) -> float:
    """Half the eigen-gap between the two dressed single-excitation states
    supported on qubits a and b (caller puts the bare qubits on resonance).

    States are identified by combined overlap with the bare |1_a>, |1_b>
    product states; if both candidates fall below 0.5 the labeling is
    ambiguous and the oracle refuses.
    """
    names = hp.qubit_names + hp.mode_names
    try:
        pos_a = names.index(qubit_a)
        pos_b = names.index(qubit_b)
    except ValueError as exc:
        raise ValidationError(
            f"unknown qubit in ({qubit_a!r}, {qubit_b!r}); known: {list(names)}"
        ) from exc
    if pos_a == pos_b:
        raise ValidationError("qubit_a and qubit_b must differ")
    fm = fock_hamiltonian(hp, levels)
    total = len(names)
    idx_a = levels ** (total - 1 - pos_a)
    idx_b = levels ** (total - 1 - pos_b)
    evals, evecs = la.eigh(fm.hamiltonian)
    weight = evecs[idx_a, :] ** 2 + evecs[idx_b, :] ** 2
    top = np.argsort(weight)[-2:]
    if weight[top[0]] < 0.5 and weight[top[1]] < 0.5:
        raise IdentificationError(
            f"single-excitation states of {qubit_a!r}/{qubit_b!r} are too "
            f"hybridized to identify (best overlaps "
            f"{weight[top[1]]:.3f}, {weight[top[0]]:.3f})"
        )
    return 0.5 * float(abs(evals[top[1]] - evals[top[0]]))
