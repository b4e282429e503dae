"""Exact synthesis between the rational impedance form and CL cascade circuits.

A CL cascade is a capacitance matrix over (port nodes, resonator nodes) plus
one shunt inductor per resonator node. Both directions are closed-form linear
algebra; no fitting is involved.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .core import (
    MaxwellCapacitance,
    Mode,
    RationalImpedance,
    sign_normalize_row,
    spd_inverse,
    symmetrize,
)
from .errors import SPDError, ValidationError


@dataclass(frozen=True)
class CLCascade:
    """Capacitance-inductance cascade over named (port, resonator) nodes.

    The capacitance matrix orders port nodes first. shunt_inductors holds one
    positive inductance per resonator node (henry).
    """

    capacitance: MaxwellCapacitance
    n_ports: int
    shunt_inductors: np.ndarray

    def __post_init__(self):
        n_nodes = self.capacitance.n_nodes
        if not (0 <= self.n_ports <= n_nodes):
            raise ValidationError(
                f"n_ports {self.n_ports} out of range for {n_nodes} nodes"
            )
        ind = np.asarray(self.shunt_inductors, dtype=float)
        if ind.shape != (n_nodes - self.n_ports,):
            raise ValidationError(
                f"expected {n_nodes - self.n_ports} shunt inductors, got shape {ind.shape}"
            )
        if ind.size and not np.all((ind > 0.0) & np.isfinite(ind)):
            raise ValidationError("shunt inductors must be positive and finite")
        ind = ind.copy()
        ind.setflags(write=False)
        object.__setattr__(self, "shunt_inductors", ind)

    @property
    def n_modes(self) -> int:
        return self.capacitance.n_nodes - self.n_ports

    @property
    def port_names(self) -> tuple[str, ...]:
        return self.capacitance.node_names[: self.n_ports]

    @property
    def resonator_names(self) -> tuple[str, ...]:
        return self.capacitance.node_names[self.n_ports:]


@dataclass(frozen=True)
class ModeTransform:
    """Simultaneous diagonalization result: columns of S are the mode shapes.

    S satisfies S S^T = (C^{-1})_R and S^T M_R S = diag(omega^2).
    """

    S: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.S, dtype=float)
        w = np.asarray(self.omega, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or w.shape != (s.shape[0],):
            raise ValidationError(
                f"inconsistent transform shapes S {s.shape}, omega {w.shape}"
            )
        s = s.copy()
        w = w.copy()
        s.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "S", s)
        object.__setattr__(self, "omega", w)


def _unique_resonator_names(port_names, count, prefix="R"):
    taken = set(port_names)
    names = []
    for k in range(1, count + 1):
        name = f"{prefix}{k}"
        while name in taken:
            name = "_" + name
        taken.add(name)
        names.append(name)
    return tuple(names)


def hamiltonian_cap_inverse(z: RationalImpedance) -> np.ndarray:
    """Closed-form inverse of the cascade capacitance matrix.

    C^{-1} = [[R0 + R^T R, R^T], [R, I]]; no numerical inversion is performed.
    """
    n, m = z.n_ports, z.n_modes
    rows = z.r_matrix()
    out = np.empty((n + m, n + m))
    out[:n, :n] = z.dc_residue + rows.T @ rows
    out[:n, n:] = rows.T
    out[n:, :n] = rows
    out[n:, n:] = np.eye(m)
    return symmetrize(out, "capacitance inverse")


def synthesize_cascade(z: RationalImpedance, resonator_prefix: str = "R") -> CLCascade:
    """Build the canonical CL cascade realizing a rational impedance.

    The capacitance matrix is
        [[R0^{-1}, -R0^{-1} R^T], [-R R0^{-1}, I + R R0^{-1} R^T]]
    with one 1 F resonator capacitance per mode and shunt inductors
    L_k = 1/omega_k^2. Resonator node names are "<prefix>1..M", prefixed with
    underscores if that would collide with a port name.
    """
    n, m = z.n_ports, z.n_modes
    try:
        cho = la.cho_factor(z.dc_residue)
    except la.LinAlgError as exc:
        raise SPDError(f"DC residue is not positive definite: {exc}") from exc
    r0_inv = la.cho_solve(cho, np.eye(n))
    rows = z.r_matrix()
    x = la.cho_solve(cho, rows.T)  # R0^{-1} R^T, shape (n, m)
    cap = np.empty((n + m, n + m))
    cap[:n, :n] = r0_inv
    cap[:n, n:] = -x
    cap[n:, :n] = -x.T
    cap[n:, n:] = np.eye(m) + rows @ x
    cap = symmetrize(cap, "cascade capacitance")
    names = z.port_names + _unique_resonator_names(z.port_names, m, resonator_prefix)
    inductors = np.array([1.0 / mode.omega**2 for mode in z.modes])
    return CLCascade(MaxwellCapacitance(cap, names), n, inductors)


def resonant_modes(c: CLCascade) -> ModeTransform:
    """Simultaneously diagonalize (C^{-1})_R and M_R.

    (C^{-1})_R comes from one SPD solve of the full capacitance matrix, never
    from inverting blocks separately. Steps: eigendecompose (C^{-1})_R as
    O_C D O_C^T, form T = O_C D^{1/2}, eigendecompose T^T M_R T as
    O_M W O_M^T, and return S = T O_M with omega = sqrt(W).
    """
    n, m = c.n_ports, c.n_modes
    if m == 0:
        return ModeTransform(np.zeros((0, 0)), np.zeros(0))
    full = c.capacitance.matrix
    try:
        cho = la.cho_factor(full)
    except la.LinAlgError as exc:
        raise SPDError(f"cascade capacitance is not positive definite: {exc}") from exc
    rhs = np.zeros((n + m, m))
    rhs[n:] = np.eye(m)
    cinv_r = la.cho_solve(cho, rhs)[n:]
    cinv_r = 0.5 * (cinv_r + cinv_r.T)
    d, o_c = la.eigh(cinv_r)
    if d[0] <= 0.0:
        raise SPDError(
            f"resonator block of C^{{-1}} is not positive definite "
            f"(eigenvalue {d[0]:.3e})"
        )
    t = o_c * np.sqrt(d)
    inv_l = 1.0 / c.shunt_inductors
    core = (t.T * inv_l) @ t
    w2, o_m = la.eigh(0.5 * (core + core.T))
    if w2[0] <= 0.0:
        raise SPDError(f"nonpositive squared mode frequency {w2[0]:.3e}")
    return ModeTransform(t @ o_m, np.sqrt(w2))


def cascade_to_rational(c: CLCascade) -> tuple[RationalImpedance, ModeTransform]:
    """Recover the rational impedance of a CL cascade.

    R0 is the inverse of the port capacitance block (at DC every resonator
    node is shorted to ground through its inductor) and the turns-ratio rows
    are R = -S^T C_PR^T C_P^{-1}, sign-normalized per row.
    """
    if c.n_ports < 1:
        raise ValidationError("cascade_to_rational needs at least one port node")
    n = c.n_ports
    transform = resonant_modes(c)
    full = c.capacitance.matrix
    c_p = full[:n, :n]
    r0 = spd_inverse(c_p, "port capacitance block")
    if c.n_modes == 0:
        return RationalImpedance(r0, (), c.port_names), transform
    c_pr = full[:n, n:]
    rows = -(transform.S.T @ la.cho_solve(la.cho_factor(c_p), c_pr).T)
    modes = tuple(
        Mode(float(transform.omega[k]), sign_normalize_row(rows[k]))
        for k in range(c.n_modes)
    )
    return RationalImpedance(r0, modes, c.port_names), transform


@dataclass(frozen=True)
class FullCapacitance:
    """Lagrangian capacitance over (ports, resonators, inductive branches)
    when the impedance keeps its infinite-frequency residue, plus the rank
    certificate demonstrating the singularity that blocks a Hamiltonian."""

    matrix: np.ndarray
    singular_values: np.ndarray
    rank: int
    deficiency: int
    threshold: float


def full_lagrangian_capacitance(z: RationalImpedance, t_rows) -> FullCapacitance:
    """Capacitance matrix including infinite-frequency turns ratios t_rows.

    The block structure is
        [[R0^{-1},    -R0^{-1}R^T,        -R0^{-1}T^T],
         [-R R0^{-1},  I + R R0^{-1}R^T,   R R0^{-1}T^T],
         [-T R0^{-1},  T R0^{-1}R^T,       T R0^{-1}T^T]]
    whose Schur complement onto the last two blocks is diag(I, 0), so the
    rank deficiency equals the number of inductive rows exactly. Singular
    values below 1e-12 * s_max count as zero in the certificate.
    """
    t = np.atleast_2d(np.asarray(t_rows, dtype=float))
    n, m = z.n_ports, z.n_modes
    if t.size and t.shape[1] != n:
        raise ValidationError(
            f"t_rows must have {n} columns to match the ports, got {t.shape}"
        )
    cho = la.cho_factor(z.dc_residue)
    r0_inv = la.cho_solve(cho, np.eye(n))
    rows = z.r_matrix()
    xr = la.cho_solve(cho, rows.T)  # R0^{-1} R^T
    xt = la.cho_solve(cho, t.T)    # R0^{-1} T^T
    k = t.shape[0]
    size = n + m + k
    cap = np.zeros((size, size))
    cap[:n, :n] = r0_inv
    cap[:n, n:n + m] = -xr
    cap[n:n + m, :n] = -xr.T
    cap[:n, n + m:] = -xt
    cap[n + m:, :n] = -xt.T
    cap[n:n + m, n:n + m] = np.eye(m) + rows @ xr
    cap[n:n + m, n + m:] = rows @ xt
    cap[n + m:, n:n + m] = (rows @ xt).T
    cap[n + m:, n + m:] = t @ xt
    cap = 0.5 * (cap + cap.T)
    svals = la.svdvals(cap)
    threshold = 1e-12 * (svals[0] if svals.size else 0.0)
    rank = int(np.sum(svals > threshold))
    return FullCapacitance(cap, svals, rank, size - rank, threshold)
