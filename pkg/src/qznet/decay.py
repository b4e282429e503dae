"""Relaxation estimates for resistor-loaded networks.

Two routes to qubit T1: the exact complex poles of the first-order equations
of motion (junctions replaced by inductors, external ports by resistors), and
the admittance approximation T1 = C_eff / Re Y(omega_q). Branch ordering
throughout is (junctions, externals, resonators).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as la
from scipy.optimize import linear_sum_assignment

from .core import RationalImpedance, SampledNetwork, drop_ports, kron_reduce
from .errors import NonphysicalAdmittanceError, ValidationError
from .qham import HamiltonianParams
from .synthesis import CLCascade, synthesize_cascade

# relative |Im| below which an eigenvalue counts as real (no resonance)
_REAL_POLE_TOL = 1e-9


@dataclass(frozen=True)
class LossSpec:
    """Resistances at external ports and inductances replacing junctions.

    Both are (name, value) pair tuples; the two port sets must be disjoint.
    Network ports appearing in neither are treated as open and dropped.
    """

    external_ports: tuple[tuple[str, float], ...] = ()
    junction_ports: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        ext = tuple((str(n), float(v)) for n, v in self.external_ports)
        jun = tuple((str(n), float(v)) for n, v in self.junction_ports)
        for name, r in ext:
            if not (r > 0.0):
                raise ValidationError(f"resistance at {name!r} must be positive")
        for name, l in jun:
            if not (l > 0.0):
                raise ValidationError(f"inductance at {name!r} must be positive")
        names = [n for n, _ in ext] + [n for n, _ in jun]
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate or overlapping loss ports in {names}")
        object.__setattr__(self, "external_ports", ext)
        object.__setattr__(self, "junction_ports", jun)

    @property
    def junction_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.junction_ports)

    @property
    def external_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.external_ports)

    def with_inductance(self, port: str, value: float) -> "LossSpec":
        if port not in self.junction_names:
            raise ValidationError(f"{port!r} is not a junction port")
        jun = tuple((n, value if n == port else v) for n, v in self.junction_ports)
        return replace(self, junction_ports=jun)


@dataclass(frozen=True)
class LossyModeSet:
    """Complex resonant poles, conjugate pairs adjacent (+Im first).

    attribution names the branch carrying most of the eigenvector flux for
    each pole. tracking_break marks poles whose identity could not be followed
    continuously through a parameter sweep.
    """

    poles: np.ndarray
    attribution: tuple[str, ...]
    tracking_break: tuple[bool, ...] = ()

    def __post_init__(self):
        p = np.asarray(self.poles, dtype=complex)
        if p.size % 2:
            raise ValidationError("poles must come in conjugate pairs")
        for i in range(0, p.size, 2):
            if p[i].imag <= 0.0 or p[i + 1] != np.conj(p[i]):
                raise ValidationError(
                    "poles must be conjugate pairs, +Im member first"
                )
        att = tuple(self.attribution)
        if len(att) != p.size:
            raise ValidationError("attribution must align with poles")
        brk = tuple(self.tracking_break) or (False,) * p.size
        if len(brk) != p.size:
            raise ValidationError("tracking_break must align with poles")
        p.setflags(write=False)
        object.__setattr__(self, "poles", p)
        object.__setattr__(self, "attribution", att)
        object.__setattr__(self, "tracking_break", brk)

    @property
    def n_pairs(self) -> int:
        return self.poles.size // 2

    @property
    def kappa(self) -> np.ndarray:
        """Energy decay rate per pole, -2 Re s."""
        return -2.0 * self.poles.real

    @property
    def omega(self) -> np.ndarray:
        return np.abs(self.poles.imag)


def _as_cascade(network, loss: LossSpec) -> CLCascade:
    listed = set(loss.junction_names) | set(loss.external_names)
    if isinstance(network, RationalImpedance):
        opens = [n for n in network.port_names if n not in listed]
        if opens:
            network = drop_ports(network, opens)
        return synthesize_cascade(network)
    if not isinstance(network, CLCascade):
        raise ValidationError(
            f"expected RationalImpedance or CLCascade, got {type(network).__name__}"
        )
    opens = [n for n in network.port_names if n not in listed]
    if opens:
        reduced = kron_reduce(network.capacitance, opens)
        return CLCascade(
            capacitance=reduced,
            n_ports=network.n_ports - len(opens),
            shunt_inductors=network.shunt_inductors,
        )
    return network


def _assemble(network, loss: LossSpec):
    """Permuted (C, G, M, branch_names) with branches ordered
    (junctions, externals, resonators)."""
    cascade = _as_cascade(network, loss)
    ports = cascade.port_names
    missing = (set(loss.junction_names) | set(loss.external_names)) - set(ports)
    if missing:
        raise ValidationError(f"loss ports {sorted(missing)} not in the network")
    port_pos = {n: i for i, n in enumerate(ports)}
    perm = [port_pos[n] for n in loss.junction_names]
    perm += [port_pos[n] for n in loss.external_names]
    perm += list(range(cascade.n_ports, cascade.n_ports + cascade.n_modes))
    perm = np.array(perm, dtype=int)
    c = cascade.capacitance.matrix[np.ix_(perm, perm)]
    nj = len(loss.junction_names)
    nk = len(loss.external_names)
    nm = cascade.n_modes
    m = np.zeros(nj + nk + nm)
    m[:nj] = [1.0 / l for _, l in loss.junction_ports]
    if nm:
        m[nj + nk:] = 1.0 / np.asarray(cascade.shunt_inductors)
    g = np.zeros(nj + nk + nm)
    g[nj:nj + nk] = [1.0 / r for _, r in loss.external_ports]
    names = loss.junction_names + loss.external_names + cascade.resonator_names
    return c, np.diag(g), np.diag(m), names


def _eig_modes(c: np.ndarray, g: np.ndarray, m: np.ndarray):
    """Complex-pair eigensolution of d/dt (flux, velocity).

    Returns (pair representatives sorted by |Im|, their flux eigenvectors as
    columns). Falls back to Schur eigenvalues with inverse-iteration vectors
    if the eigenbasis is numerically defective.
    """
    n = c.shape[0]
    cho = la.cho_factor(c)
    a = np.zeros((2 * n, 2 * n))
    a[:n, n:] = np.eye(n)
    a[n:, :n] = -la.cho_solve(cho, m)
    a[n:, n:] = -la.cho_solve(cho, g)
    vals, vecs = la.eig(a)
    defective = False
    if n:
        try:
            cond = np.linalg.cond(vecs)
        except np.linalg.LinAlgError:
            cond = np.inf
        if not np.isfinite(cond) or cond > 1e12:
            defective = True
    if defective:
        warnings.warn(
            "equation-of-motion matrix is numerically defective; falling back "
            "to Schur eigenvalues with inverse-iteration vectors",
            stacklevel=3,
        )
        t = la.schur(a, output="complex")[0]
        vals = np.diag(t)
    # global scale: clusters of near-zero real eigenvalues (external RC
    # branches) can round into tiny complex pairs that a per-eigenvalue
    # relative test would keep
    scale = np.abs(vals).max() if vals.size else 1.0
    keep = vals.imag > _REAL_POLE_TOL * scale
    reps = vals[keep]
    order = np.argsort(reps.imag)
    reps = reps[order]
    if defective:
        flux = np.empty((n, reps.size), dtype=complex)
        ident = np.eye(2 * n)
        for k, lam in enumerate(reps):
            shift = lam * (1.0 + 1e-10) + 1e-10 * abs(lam) * 1j
            x = np.ones(2 * n, dtype=complex)
            for _ in range(2):
                x = la.solve(a - shift * ident, x)
                x /= np.linalg.norm(x)
            flux[:, k] = x[:n]
        return reps, flux
    flux = vecs[:n][:, keep][:, order]
    return reps, flux


def _attribute(flux: np.ndarray, names, n_junctions: int, n_external: int):
    """Branch label per pair: a junction if it holds >50% of the flux norm,
    else the dominant resonator, else the overall dominant branch."""
    shares = np.abs(flux) ** 2
    total = shares.sum(axis=0)
    total[total == 0.0] = 1.0
    shares = shares / total
    labels = []
    res_lo = n_junctions + n_external
    for k in range(flux.shape[1]):
        col = shares[:, k]
        j_best = int(np.argmax(col[:n_junctions])) if n_junctions else -1
        if j_best >= 0 and col[j_best] > 0.5:
            labels.append(names[j_best])
        elif col[res_lo:].size:
            labels.append(names[res_lo + int(np.argmax(col[res_lo:]))])
        else:
            labels.append(names[int(np.argmax(col))])
    return tuple(labels)


def _lossy_modes(network, loss: LossSpec):
    c, g, m, names = _assemble(network, loss)
    nj = len(loss.junction_names)
    nk = len(loss.external_names)
    reps, flux = _eig_modes(c, g, m)
    labels = _attribute(flux, names, nj, nk)
    poles = np.empty(2 * reps.size, dtype=complex)
    poles[0::2] = reps
    poles[1::2] = np.conj(reps)
    attribution = tuple(labels[k // 2] for k in range(poles.size))
    return LossyModeSet(poles, attribution), flux, (c, g, m, names)


def lossy_mode_poles(network, loss: LossSpec) -> LossyModeSet:
    """Exact complex poles of the lossy network.

    network is a RationalImpedance or CLCascade; its ports must be covered by
    the loss spec (unlisted ports are dropped as open). Underdamped systems
    yield one conjugate pair per inductive or resonant branch; purely real
    (non-resonant) eigenvalues are not reported.
    """
    return _lossy_modes(network, loss)[0]


def lossy_port_admittance(
    network, loss: LossSpec, freqs, omit_junction_inductors: bool = True
) -> SampledNetwork:
    """Admittance seen from the junction ports of the loaded network.

    Builds the nodal admittance i*omega*C + M/(i*omega) + G and eliminates
    every non-junction node by Schur complement per frequency. By default the
    junction inductors themselves are left out (the qubit decays into the
    rest of the network); pass omit_junction_inductors=False to keep them.
    Frequencies where the internal block is singular are returned as NaN with
    a warning.
    """
    c, g, m, names = _assemble(network, loss)
    nj = len(loss.junction_names)
    if nj == 0:
        raise ValidationError("loss spec names no junction ports")
    m = m.copy()
    if omit_junction_inductors:
        m[:nj, :nj] = 0.0
    freqs = np.asarray(freqs, dtype=float)
    if freqs.ndim != 1 or np.any(freqs <= 0.0):
        raise ValidationError("freqs must be a 1-D array of positive Hz")
    out = np.empty((freqs.size, nj, nj), dtype=complex)
    bad = []
    for i, f in enumerate(freqs):
        s = 2j * np.pi * f
        y = s * c + m / s + g
        y_jj = y[:nj, :nj]
        y_ji = y[:nj, nj:]
        y_ii = y[nj:, nj:]
        if y_ii.size:
            try:
                out[i] = y_jj - y_ji @ la.solve(y_ii, y_ji.T)
            except la.LinAlgError:
                out[i] = np.nan
                bad.append(i)
        else:
            out[i] = y_jj
    if bad:
        warnings.warn(
            f"internal admittance block singular at {len(bad)} frequencies "
            f"(sample indices {bad[:5]}{'...' if len(bad) > 5 else ''}); "
            f"entries set to NaN",
            stacklevel=2,
        )
    return SampledNetwork("Y", freqs, out, port_names=loss.junction_names)


def t1_estimates(hp: HamiltonianParams, y: SampledNetwork, eff_c=None) -> np.ndarray:
    """T1 per qubit from the admittance rule T1 = C_eff / Re Y(omega_q).

    y must be junction-port admittance data covering every qubit frequency.
    eff_c defaults to hp.eff_c; pass the plain shunt capacitances instead for
    the alternative normalization.
    """
    if y.kind != "Y":
        raise ValidationError(f"t1_estimates needs Y data, got {y.kind!r}")
    if eff_c is None:
        eff_c = hp.eff_c
    eff_c = np.asarray(eff_c, dtype=float)
    if eff_c.shape != (hp.n_qubits,):
        raise ValidationError(
            f"eff_c must have one entry per qubit, got shape {eff_c.shape}"
        )
    t1 = np.empty(hp.n_qubits)
    for i, name in enumerate(hp.qubit_names):
        col = y.port_index(name)
        f_q = hp.omega_j[i] / (2.0 * np.pi)
        if not (y.freqs[0] <= f_q <= y.freqs[-1]):
            raise ValidationError(
                f"qubit {name!r} at {f_q:.4e} Hz is outside the sampled band "
                f"[{y.freqs[0]:.4e}, {y.freqs[-1]:.4e}]"
            )
        re_y = y.data[:, col, col].real
        finite = np.isfinite(re_y)
        re_at = float(np.interp(f_q, y.freqs[finite], re_y[finite]))
        if not (re_at > 0.0):
            raise NonphysicalAdmittanceError(
                f"Re Y at qubit {name!r} ({f_q:.4e} Hz) is {re_at:.3e}; "
                f"T1 is undefined"
            )
        t1[i] = eff_c[i] / re_at
    return t1


def sweep_junction_inductance(
    network, loss: LossSpec, port: str, l_values
) -> list[LossyModeSet]:
    """lossy_mode_poles over a junction-inductance sweep with mode tracking.

    Modes are reordered at each step to follow the previous step's
    eigenvectors (maximal-overlap assignment); a pole whose best overlap
    falls below 0.5 keeps its slot but is marked with tracking_break.
    """
    l_values = np.asarray(l_values, dtype=float)
    if l_values.ndim != 1 or l_values.size == 0 or np.any(l_values <= 0.0):
        raise ValidationError("l_values must be a nonempty 1-D array of positive H")
    results = []
    prev_flux = None
    for l_j in l_values:
        mode_set, flux, _ = _lossy_modes(network, loss.with_inductance(port, l_j))
        norms = np.linalg.norm(flux, axis=0)
        norms[norms == 0.0] = 1.0
        unit = flux / norms
        if prev_flux is None or prev_flux.shape[1] != unit.shape[1]:
            # first step, or the pair count jumped (e.g. a mode overdamped):
            # nothing to track against
            brk = (prev_flux is not None,) * mode_set.poles.size
            mode_set = replace(mode_set, tracking_break=brk)
        else:
            overlap = np.abs(prev_flux.conj().T @ unit)
            rows, cols = linear_sum_assignment(-overlap)
            order = np.empty(unit.shape[1], dtype=int)
            order[rows] = cols
            pair_idx = np.repeat(order * 2, 2)
            pair_idx[1::2] += 1
            lost = overlap[np.arange(order.size), order] < 0.5
            brk = tuple(bool(lost[k // 2]) for k in range(mode_set.poles.size))
            mode_set = LossyModeSet(
                mode_set.poles[pair_idx],
                tuple(mode_set.attribution[i] for i in pair_idx),
                brk,
            )
            unit = unit[:, order]
        prev_flux = unit
        results.append(mode_set)
    return results
