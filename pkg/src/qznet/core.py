"""Core network types and exact multiport parameter conversions.

Everything works in SI units internally: rad/s for angular frequencies, Hz at
file and CLI boundaries, farad, henry, ohm, joule. Ports and nodes are always
named; names survive every operation.

The central representation is the lossless reciprocal rational impedance

    Z(s) = R0 / s + sum_k s * R_k / (s^2 + omega_k^2)

with R0 symmetric positive definite and every R_k = outer(r_k, r_k) a rank-1
positive semidefinite residue.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
import scipy.constants as const
import scipy.linalg as la

from .errors import (
    PoleHitError,
    SingularSampleError,
    SPDError,
    ValidationError,
)

NetworkKind = Literal["S", "Z", "Y"]

# Eigenvalues no worse than -1e-12 * trace count as a roundoff-level PSD
# boundary hit and are clamped rather than rejected.
SPD_CLAMP_REL = 1e-12


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA values; Phi0 = h / (2 e) exactly, so Phi0 * 2 * e == h."""

    h_bar: float = const.hbar
    e_charge: float = const.e
    Phi0: float = const.h / (2.0 * const.e)


CONSTANTS = PhysicalConstants()


def _as_square(matrix, what: str) -> np.ndarray:
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ValidationError(f"{what} must be a nonempty square matrix, got shape {m.shape}")
    return m


def symmetrize(matrix, what: str = "matrix", rel_tol: float = 1e-9) -> np.ndarray:
    """Return the symmetric part after checking the asymmetry is roundoff-level."""
    m = _as_square(matrix, what)
    scale = float(np.abs(m).max()) or 1.0
    asym = float(np.abs(m - m.T).max())
    if asym > rel_tol * scale:
        raise ValidationError(
            f"{what} must be symmetric; max asymmetry {asym:.3e} at scale {scale:.3e}"
        )
    return 0.5 * (m + m.T)


def ensure_spd(matrix, what: str = "matrix") -> np.ndarray:
    """Symmetrize and verify positive definiteness via Cholesky.

    A smallest eigenvalue within -SPD_CLAMP_REL * trace of zero is treated as
    a roundoff hit of the PSD boundary: the matrix is shifted back onto it and
    a warning is issued. Anything worse raises SPDError.
    """
    sym = symmetrize(matrix, what)
    try:
        la.cholesky(sym, lower=True)
        return sym
    except la.LinAlgError:
        pass
    eigvals = la.eigvalsh(sym)
    lo = float(eigvals[0])
    tr = float(np.trace(sym))
    if lo >= -SPD_CLAMP_REL * max(tr, 0.0):
        warnings.warn(
            f"{what}: smallest eigenvalue {lo:.3e} clamped to the PSD boundary",
            stacklevel=2,
        )
        shift = -lo + SPD_CLAMP_REL * max(tr, 0.0)
        return sym + shift * np.eye(sym.shape[0])
    raise SPDError(f"{what} is not positive definite (smallest eigenvalue {lo:.3e})")


def spd_inverse(matrix, what: str = "matrix") -> np.ndarray:
    """Inverse of an SPD matrix through its Cholesky factor."""
    m = np.asarray(matrix, dtype=float)
    try:
        cho = la.cho_factor(m)
    except la.LinAlgError as exc:
        raise SPDError(f"{what} is not positive definite: {exc}") from exc
    inv = la.cho_solve(cho, np.eye(m.shape[0]))
    return 0.5 * (inv + inv.T)


def sign_normalize_row(row: np.ndarray) -> np.ndarray:
    """Flip a residue row so its largest-magnitude entry is positive.

    Ties resolve to the first index (argmax convention); an all-zero row is
    returned unchanged.
    """
    row = np.asarray(row, dtype=float)
    idx = int(np.argmax(np.abs(row)))
    if row[idx] < 0.0:
        return -row
    return row


def _check_names(names, count: int, what: str) -> tuple[str, ...]:
    names = tuple(str(n) for n in names)
    if len(names) != count:
        raise ValidationError(f"{what}: expected {count} names, got {len(names)}")
    if len(set(names)) != len(names):
        raise ValidationError(f"{what}: names must be unique, got {names}")
    return names


def default_port_names(n: int, prefix: str = "P") -> tuple[str, ...]:
    return tuple(f"{prefix}{i + 1}" for i in range(n))


@dataclass(frozen=True)
class MaxwellCapacitance:
    """Charge-voltage form Q = C V over named nodes.

    Diagonal entries are total node capacitances, off-diagonals are minus the
    pairwise capacitances. Physical networks are SPD; intermediate math may
    defer that check with require_spd=False.
    """

    matrix: np.ndarray
    node_names: tuple[str, ...]
    require_spd: bool = True

    def __post_init__(self):
        m = symmetrize(self.matrix, "Maxwell capacitance")
        names = _check_names(self.node_names, m.shape[0], "Maxwell capacitance")
        if self.require_spd:
            m = ensure_spd(m, "Maxwell capacitance")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "node_names", names)

    @property
    def n_nodes(self) -> int:
        return self.matrix.shape[0]

    def index(self, name: str) -> int:
        try:
            return self.node_names.index(name)
        except ValueError:
            raise ValidationError(
                f"unknown node {name!r}; known nodes: {list(self.node_names)}"
            ) from None


@dataclass(frozen=True)
class MutualCapacitance:
    """Ground/coupling form: diagonal holds capacitances to ground, off-diagonals
    hold pairwise coupling capacitances (sign convention: all nonnegative for a
    physical network, though negative values are representable)."""

    matrix: np.ndarray
    node_names: tuple[str, ...]

    def __post_init__(self):
        m = symmetrize(self.matrix, "mutual capacitance")
        names = _check_names(self.node_names, m.shape[0], "mutual capacitance")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "node_names", names)

    @property
    def n_nodes(self) -> int:
        return self.matrix.shape[0]


def maxwell_to_mutual(c: MaxwellCapacitance) -> MutualCapacitance:
    """Row sums become ground capacitances; off-diagonals flip sign."""
    m = c.matrix
    out = -m.copy()
    np.fill_diagonal(out, m.sum(axis=1))
    return MutualCapacitance(out, c.node_names)


def mutual_to_maxwell(c: MutualCapacitance, require_spd: bool = False) -> MaxwellCapacitance:
    """Inverse of maxwell_to_mutual; exact up to float summation."""
    m = c.matrix
    out = -m.copy()
    off_sums = m.sum(axis=1) - m.diagonal()
    np.fill_diagonal(out, m.diagonal() + off_sums)
    return MaxwellCapacitance(out, c.node_names, require_spd=require_spd)


@dataclass(frozen=True)
class SampledNetwork:
    """Network parameters sampled on a strictly increasing frequency grid (Hz).

    data has shape (F, N, N). z_ref is the single reference resistance used
    for S conversions. The reciprocal flag asserts per-sample symmetry.
    """

    kind: NetworkKind
    freqs: np.ndarray
    data: np.ndarray
    z_ref: float = 50.0
    port_names: tuple[str, ...] = ()
    reciprocal: bool = False

    def __post_init__(self):
        if self.kind not in ("S", "Z", "Y"):
            raise ValidationError(f"kind must be one of S/Z/Y, got {self.kind!r}")
        f = np.asarray(self.freqs, dtype=float)
        d = np.asarray(self.data, dtype=complex)
        if f.ndim != 1 or f.size == 0:
            raise ValidationError("freqs must be a nonempty 1-D array")
        if np.any(np.diff(f) <= 0.0):
            raise ValidationError("freqs must be strictly increasing")
        if d.ndim != 3 or d.shape[0] != f.size or d.shape[1] != d.shape[2]:
            raise ValidationError(
                f"data must have shape (F, N, N) with F = len(freqs), got {d.shape}"
            )
        if not (self.z_ref > 0.0 and np.isfinite(self.z_ref)):
            raise ValidationError(f"z_ref must be positive and finite, got {self.z_ref}")
        names = self.port_names or default_port_names(d.shape[1])
        names = _check_names(names, d.shape[1], "sampled network ports")
        if self.reciprocal:
            scale = float(np.abs(d).max()) or 1.0
            asym = float(np.abs(d - np.transpose(d, (0, 2, 1))).max())
            if asym > 1e-10 * scale:
                raise ValidationError(
                    f"reciprocal flag set but data asymmetry is {asym:.3e} "
                    f"at scale {scale:.3e}"
                )
        f.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "data", d)
        object.__setattr__(self, "port_names", names)
        object.__setattr__(self, "z_ref", float(self.z_ref))

    @property
    def n_ports(self) -> int:
        return self.data.shape[1]

    def port_index(self, name: str) -> int:
        try:
            return self.port_names.index(name)
        except ValueError:
            raise ValidationError(
                f"unknown port {name!r}; known ports: {list(self.port_names)}"
            ) from None


def _batched_solve(a: np.ndarray, b: np.ndarray, context: str) -> np.ndarray:
    """Per-sample solve a[i] x = b[i], reporting which samples are singular."""
    try:
        return np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        pass
    bad = []
    out = np.empty_like(b, dtype=complex)
    for i in range(a.shape[0]):
        try:
            out[i] = np.linalg.solve(a[i], b[i])
        except np.linalg.LinAlgError:
            bad.append(i)
            out[i] = np.nan
    raise SingularSampleError(context, bad)


def z_to_s(z: SampledNetwork, z0: float | None = None) -> SampledNetwork:
    """S = (Z + Z0 I)^(-1) (Z - Z0 I) per sample."""
    if z.kind != "Z":
        raise ValidationError(f"z_to_s needs Z data, got kind {z.kind!r}")
    z0 = float(z0 if z0 is not None else z.z_ref)
    if z0 <= 0.0:
        raise ValidationError(f"reference impedance must be positive, got {z0}")
    eye = np.eye(z.n_ports)
    s = _batched_solve(z.data + z0 * eye, z.data - z0 * eye, "Z + Z0*I is singular")
    return SampledNetwork("S", z.freqs, s, z_ref=z0, port_names=z.port_names)


def s_to_z(s: SampledNetwork, z0: float | None = None) -> SampledNetwork:
    """Z = Z0 (I + S)(I - S)^(-1) per sample.

    Samples with cond(I - S) near 1/eps are the caller's concern; an exactly
    singular I - S raises with the sample indices.
    """
    if s.kind != "S":
        raise ValidationError(f"s_to_z needs S data, got kind {s.kind!r}")
    z0 = float(z0 if z0 is not None else s.z_ref)
    if z0 <= 0.0:
        raise ValidationError(f"reference impedance must be positive, got {z0}")
    eye = np.eye(s.n_ports)
    # (I+S)(I-S)^{-1} == (I-S)^{-1}(I+S) since both factors commute.
    z = _batched_solve(eye - s.data, eye + s.data, "I - S is singular") * z0
    return SampledNetwork("Z", s.freqs, z, z_ref=z0, port_names=s.port_names)


def z_to_y(z: SampledNetwork) -> SampledNetwork:
    """Per-sample inverse."""
    if z.kind != "Z":
        raise ValidationError(f"z_to_y needs Z data, got kind {z.kind!r}")
    eye = np.broadcast_to(np.eye(z.n_ports), z.data.shape)
    y = _batched_solve(z.data, np.ascontiguousarray(eye), "Z is singular")
    return SampledNetwork("Y", z.freqs, y, z_ref=z.z_ref, port_names=z.port_names)


@dataclass(frozen=True)
class Mode:
    """One resonant term: residue R_k = outer(r_row, r_row) at +-i*omega."""

    omega: float
    r_row: np.ndarray

    def __post_init__(self):
        if not (self.omega > 0.0 and np.isfinite(self.omega)):
            raise ValidationError(f"mode frequency must be positive, got {self.omega}")
        row = np.asarray(self.r_row, dtype=float)
        if row.ndim != 1:
            raise ValidationError(f"r_row must be 1-D, got shape {row.shape}")
        row = row.copy()
        row.setflags(write=False)
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "r_row", row)

    @property
    def residue(self) -> np.ndarray:
        return np.outer(self.r_row, self.r_row)


@dataclass(frozen=True)
class RationalImpedance:
    """Z(s) = R0/s + sum_k s R_k/(s^2 + omega_k^2), R_k = outer(r_k, r_k).

    Modes are stored sorted ascending by omega; a degenerate frequency simply
    appears as multiple entries. R0 is validated SPD on construction.
    """

    dc_residue: np.ndarray
    modes: tuple[Mode, ...]
    port_names: tuple[str, ...] = ()

    def __post_init__(self):
        r0 = ensure_spd(self.dc_residue, "DC residue")
        if r0.shape[0] < 1:
            raise ValidationError("a rational impedance needs at least one port")
        n = r0.shape[0]
        modes = tuple(self.modes)
        for k, mode in enumerate(modes):
            if mode.r_row.shape != (n,):
                raise ValidationError(
                    f"mode {k}: r_row has shape {mode.r_row.shape}, expected ({n},)"
                )
        modes = tuple(sorted(modes, key=lambda m: m.omega))
        names = self.port_names or default_port_names(n)
        names = _check_names(names, n, "rational impedance ports")
        r0.setflags(write=False)
        object.__setattr__(self, "dc_residue", r0)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "port_names", names)

    @property
    def n_ports(self) -> int:
        return self.dc_residue.shape[0]

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def omegas(self) -> np.ndarray:
        return np.array([m.omega for m in self.modes])

    def r_matrix(self) -> np.ndarray:
        """Stacked residue rows, shape (n_modes, n_ports)."""
        if not self.modes:
            return np.zeros((0, self.n_ports))
        return np.vstack([m.r_row for m in self.modes])

    def port_index(self, name: str) -> int:
        try:
            return self.port_names.index(name)
        except ValueError:
            raise ValidationError(
                f"unknown port {name!r}; known ports: {list(self.port_names)}"
            ) from None


def eval_rational(z: RationalImpedance, s: complex) -> np.ndarray:
    """Evaluate Z(s) at one complex frequency (rad/s).

    s must not sit exactly on a pole: not 0 and not +-i*omega_k.
    """
    s = complex(s)
    if s == 0:
        raise PoleHitError("evaluation at the DC pole s = 0")
    out = np.asarray(z.dc_residue / s, dtype=complex)
    for k, mode in enumerate(z.modes):
        den = s * s + mode.omega**2
        if den == 0:
            raise PoleHitError(
                f"evaluation on the pole of mode {k} (omega = {mode.omega:.9e} rad/s)"
            )
        out = out + (s / den) * mode.residue
    return out


def sample_rational(z: RationalImpedance, freqs: Sequence[float]) -> SampledNetwork:
    """Sample Z at s = 2*pi*i*f over a grid of frequencies in Hz."""
    f = np.asarray(freqs, dtype=float)
    s = 2j * np.pi * f
    if np.any(s == 0):
        raise PoleHitError("sampling grid contains f = 0 (DC pole)")
    data = z.dc_residue[None, :, :] / s[:, None, None]
    omegas = z.omegas
    if z.n_modes:
        den = s[:, None] ** 2 + omegas[None, :] ** 2
        hit = np.argwhere(den == 0)
        if hit.size:
            i, k = hit[0]
            raise PoleHitError(
                f"sampling grid hits the pole of mode {k} "
                f"(omega = {omegas[k]:.9e} rad/s) at sample {i}"
            )
        rows = z.r_matrix()
        residues = rows[:, :, None] * rows[:, None, :]
        data = data + np.einsum("fk,kij->fij", s[:, None] / den, residues)
    return SampledNetwork("Z", f, data, port_names=z.port_names, reciprocal=True)


def drop_ports(z: RationalImpedance, names: Sequence[str]) -> RationalImpedance:
    """Leave ports open: delete their rows/columns from R0 and every r_k entry."""
    names = list(names)
    if not names:
        return z
    drop = {z.port_index(n) for n in names}
    if len(drop) == len(z.port_names):
        raise ValidationError("cannot leave every port open; no ports would remain")
    keep = [i for i in range(z.n_ports) if i not in drop]
    r0 = z.dc_residue[np.ix_(keep, keep)]
    modes = tuple(Mode(m.omega, m.r_row[keep]) for m in z.modes)
    kept_names = tuple(z.port_names[i] for i in keep)
    return RationalImpedance(r0, modes, kept_names)


@dataclass(frozen=True)
class CauerFactorization:
    """First Cauer stage of the rational form.

    R0 = U C0^{-1} U^T with orthonormal U and diagonal C0; each resonant mode
    becomes a unit capacitance (C_R = 1 F) in series with L_k = 1/omega_k^2.
    """

    U: np.ndarray
    C0: np.ndarray
    L_R: np.ndarray
    C_R: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.U, dtype=float)
        c0 = np.asarray(self.C0, dtype=float)
        lr = np.asarray(self.L_R, dtype=float)
        cr = np.asarray(self.C_R, dtype=float)
        if u.ndim != 2:
            raise ValidationError("U must be 2-D")
        gram = u.T @ u
        if np.abs(gram - np.eye(u.shape[1])).max() > 1e-8:
            raise ValidationError("U must have orthonormal columns")
        for name, m in (("C0", c0), ("L_R", lr), ("C_R", cr)):
            if m.ndim != 2 or np.abs(m - np.diag(np.diag(m))).max() > 0.0:
                raise ValidationError(f"{name} must be diagonal")
        if cr.size and np.abs(cr - np.eye(cr.shape[0])).max() > 0.0:
            raise ValidationError("C_R must be the identity (1 F convention)")
        for arr in (u, c0, lr, cr):
            arr.setflags(write=False)
        object.__setattr__(self, "U", u)
        object.__setattr__(self, "C0", c0)
        object.__setattr__(self, "L_R", lr)
        object.__setattr__(self, "C_R", cr)

    @classmethod
    def from_rational(cls, z: RationalImpedance) -> "CauerFactorization":
        w, v = la.eigh(z.dc_residue)
        if w[0] <= 0.0:
            raise SPDError(
                f"DC residue is not positive definite (eigenvalue {w[0]:.3e})"
            )
        # R0 = V diag(w) V^T  ->  U = V, C0 = diag(1/w)
        c0 = np.diag(1.0 / w)
        l_r = np.diag([1.0 / m.omega**2 for m in z.modes])
        c_r = np.eye(z.n_modes)
        return cls(v, c0, l_r, c_r)

    def dc_residue(self) -> np.ndarray:
        return self.U @ spd_inverse(self.C0, "C0") @ self.U.T


def grid_capacitance(rows: int, cols: int, c_shunt: float, c_couple: float) -> MaxwellCapacitance:
    """Maxwell matrix of a rows x cols nearest-neighbor capacitor grid.

    Every node carries c_shunt to ground and c_couple to each grid neighbor.
    Nodes are ordered with the shorter grid axis fastest so the matrix
    bandwidth equals min(rows, cols).
    """
    if rows < 1 or cols < 1:
        raise ValidationError(f"grid must be at least 1x1, got {rows}x{cols}")
    if not (c_shunt > 0.0 and c_couple >= 0.0):
        raise ValidationError("c_shunt must be positive and c_couple nonnegative")
    n = rows * cols

    if cols <= rows:
        def node(r, c):
            return r * cols + c
    else:
        def node(r, c):
            return c * rows + r

    names = [""] * n
    mut = np.zeros((n, n))
    for r in range(rows):
        for c in range(cols):
            i = node(r, c)
            names[i] = f"n{r}_{c}"
            mut[i, i] = c_shunt
            if c + 1 < cols:
                j = node(r, c + 1)
                mut[i, j] = mut[j, i] = c_couple
            if r + 1 < rows:
                j = node(r + 1, c)
                mut[i, j] = mut[j, i] = c_couple
    return mutual_to_maxwell(MutualCapacitance(mut, tuple(names)), require_spd=True)


def kron_reduce(c: MaxwellCapacitance, drop_names: Sequence[str]) -> MaxwellCapacitance:
    """Eliminate floating nodes: C_kk - C_kd C_dd^{-1} C_dk.

    Valid only for nodes whose every branch is capacitive; the reduction is
    then frequency independent.
    """
    drop = [c.index(n) for n in drop_names]
    if not drop:
        return c
    keep = [i for i in range(c.n_nodes) if i not in set(drop)]
    if not keep:
        raise ValidationError("cannot eliminate every node")
    m = c.matrix
    c_dd = m[np.ix_(drop, drop)]
    c_kd = m[np.ix_(keep, drop)]
    try:
        cho = la.cho_factor(c_dd)
    except la.LinAlgError as exc:
        raise SPDError(f"floating-node block is not positive definite: {exc}") from exc
    reduced = m[np.ix_(keep, keep)] - c_kd @ la.cho_solve(cho, c_kd.T)
    names = tuple(c.node_names[i] for i in keep)
    return MaxwellCapacitance(0.5 * (reduced + reduced.T), names, require_spd=c.require_spd)
