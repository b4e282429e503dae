"""Port interconnection: capacitance-level merges, rational reconnection,
S-parameter load cascading, and the two-port-at-a-time wave reduction.

Two independent routes to the same physics are kept deliberately separate so
they can cross-check each other: the capacitance/rational route (merge nodes,
resynthesize) and the scattering route (cascade or wave constraints).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import MaxwellCapacitance, RationalImpedance, SampledNetwork, drop_ports
from .errors import SingularSampleError, ValidationError
from .synthesis import CLCascade, cascade_to_rational, synthesize_cascade

JOIN_SEP = "⊕"  # circled plus, joins "a" and "b" into "a(+)b"


def joined_name(a: str, b: str) -> str:
    return f"{a}{JOIN_SEP}{b}"


@dataclass(frozen=True)
class ConnectionPlan:
    """Which ports of which networks get soldered together.

    joins lists (a, b) pairs of qualified port names "<network>.<port>"; each
    port may appear in at most one join. The merged port is named a(+)b and
    stays externally available unless listed in leave_open. A port that is a
    join member cannot also be left open; leave the merged name open instead.
    """

    networks: tuple[str, ...]
    joins: tuple[tuple[str, str], ...] = ()
    leave_open: tuple[str, ...] = ()

    def __post_init__(self):
        nets = tuple(str(n) for n in self.networks)
        if not nets:
            raise ValidationError("a connection plan needs at least one network")
        if len(set(nets)) != len(nets):
            raise ValidationError(f"duplicate network ids in {nets}")
        joins = tuple((str(a), str(b)) for a, b in self.joins)
        seen: set[str] = set()
        for a, b in joins:
            if a == b:
                raise ValidationError(f"cannot join port {a!r} to itself")
            for p in (a, b):
                if p in seen:
                    raise ValidationError(f"port {p!r} appears in more than one join")
                seen.add(p)
        opens = tuple(str(p) for p in self.leave_open)
        if len(set(opens)) != len(opens):
            raise ValidationError(f"duplicate names in leave_open: {opens}")
        bad = sorted(set(opens) & seen)
        if bad:
            raise ValidationError(
                f"ports {bad} are join members and cannot be left open; "
                f"leave the merged port open instead"
            )
        object.__setattr__(self, "networks", nets)
        object.__setattr__(self, "joins", joins)
        object.__setattr__(self, "leave_open", opens)


def merge_capacitance_ports(c: MaxwellCapacitance, j: str, k: str) -> MaxwellCapacitance:
    """Short nodes j and k: add row/column k into j, delete k. Keeps name j."""
    i_j, i_k = c.index(j), c.index(k)
    if i_j == i_k:
        raise ValidationError(f"cannot merge node {j!r} with itself")
    m = c.matrix.copy()
    m[i_j, :] += m[i_k, :]
    m[:, i_j] += m[:, i_k]
    keep = [i for i in range(c.n_nodes) if i != i_k]
    merged = m[np.ix_(keep, keep)]
    names = tuple(c.node_names[i] for i in keep)
    return MaxwellCapacitance(merged, names, require_spd=c.require_spd)


def _rename_node(c: MaxwellCapacitance, old: str, new: str) -> MaxwellCapacitance:
    names = tuple(new if n == old else n for n in c.node_names)
    return MaxwellCapacitance(c.matrix, names, require_spd=c.require_spd)


def _assemble_disconnected(cascades: list[CLCascade], ids: tuple[str, ...]) -> CLCascade:
    """Block-diagonal capacitance with every port block first, then every
    resonator block; names qualified as "<id>.<name>"."""
    port_names: list[str] = []
    res_names: list[str] = []
    for nid, casc in zip(ids, cascades):
        port_names.extend(f"{nid}.{p}" for p in casc.port_names)
        res_names.extend(f"{nid}.{r}" for r in casc.resonator_names)
    n_p = len(port_names)
    n_r = len(res_names)
    big = np.zeros((n_p + n_r, n_p + n_r))
    p_off = 0
    r_off = 0
    for casc in cascades:
        n, m = casc.n_ports, casc.n_modes
        cm = casc.capacitance.matrix
        big[p_off:p_off + n, p_off:p_off + n] = cm[:n, :n]
        big[p_off:p_off + n, n_p + r_off:n_p + r_off + m] = cm[:n, n:]
        big[n_p + r_off:n_p + r_off + m, p_off:p_off + n] = cm[n:, :n]
        big[n_p + r_off:n_p + r_off + m, n_p + r_off:n_p + r_off + m] = cm[n:, n:]
        p_off += n
        r_off += m
    inductors = np.concatenate([c.shunt_inductors for c in cascades]) if cascades else np.zeros(0)
    cap = MaxwellCapacitance(big, tuple(port_names) + tuple(res_names))
    return CLCascade(cap, n_p, inductors)


def connect_rational(zs, plan: ConnectionPlan) -> RationalImpedance:
    """Interconnect rational impedances through the capacitance route.

    Each network is synthesized to its cascade, the cascades are assembled
    block-diagonally with qualified port names, joins are applied with
    merge_capacitance_ports, and the merged circuit is converted back to a
    rational impedance. Ports in leave_open are then dropped.

    Joins are applied in sorted name order regardless of plan order, so plans
    that differ only in join ordering produce bitwise identical results.
    """
    zs = list(zs)
    if len(zs) != len(plan.networks):
        raise ValidationError(
            f"plan names {len(plan.networks)} networks but {len(zs)} were given"
        )
    cascades = [synthesize_cascade(z) for z in zs]
    big = _assemble_disconnected(cascades, plan.networks)
    cap = big.capacitance
    n_ports = big.n_ports
    port_set = list(cap.node_names[:n_ports])

    for a, b in sorted(plan.joins):
        for p in (a, b):
            if p not in port_set:
                raise ValidationError(
                    f"join references unknown port {p!r}; available ports: {port_set}"
                )
        cap = merge_capacitance_ports(cap, a, b)
        cap = _rename_node(cap, a, joined_name(a, b))
        port_set.remove(b)
        port_set[port_set.index(a)] = joined_name(a, b)
        n_ports -= 1

    merged = CLCascade(cap, n_ports, big.shunt_inductors)
    z_all, _ = cascade_to_rational(merged)
    if plan.leave_open:
        missing = [p for p in plan.leave_open if p not in z_all.port_names]
        if missing:
            raise ValidationError(
                f"leave_open references unknown ports {missing}; "
                f"available ports: {list(z_all.port_names)}"
            )
        if len(plan.leave_open) == z_all.n_ports:
            raise ValidationError(
                "every port would be left open; a network with no ports is not representable"
            )
        z_all = drop_ports(z_all, plan.leave_open)
    return z_all


def cascade_load_s(sigma: np.ndarray, s_load: np.ndarray) -> np.ndarray:
    """Close the last M ports of an (N+M)-port S matrix on an M-port load.

    S = S11 + S12 (I - S_l S22)^{-1} S_l S21, all at one frequency.
    """
    sigma = np.asarray(sigma, dtype=complex)
    s_load = np.asarray(s_load, dtype=complex)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValidationError(f"sigma must be square, got {sigma.shape}")
    if s_load.ndim != 2 or s_load.shape[0] != s_load.shape[1]:
        raise ValidationError(f"s_load must be square, got {s_load.shape}")
    m = s_load.shape[0]
    n = sigma.shape[0] - m
    if n < 1 or m < 1:
        raise ValidationError(
            f"need sigma larger than the load: sigma {sigma.shape}, load {s_load.shape}"
        )
    s11 = sigma[:n, :n]
    s12 = sigma[:n, n:]
    s21 = sigma[n:, :n]
    s22 = sigma[n:, n:]
    a = np.eye(m) - s_load @ s22
    try:
        x = np.linalg.solve(a, s_load @ s21)
    except np.linalg.LinAlgError as exc:
        raise SingularSampleError(f"load cascade is resonant: {exc}") from exc
    return s11 + s12 @ x


def cascade_load_s_sweep(sigma: np.ndarray, s_load: np.ndarray) -> np.ndarray:
    """Per-sample cascade_load_s over stacked (F, ., .) arrays, reporting the
    frequency indices of resonant samples."""
    out = np.empty((sigma.shape[0],) + (sigma.shape[1] - s_load.shape[1],) * 2, complex)
    bad = []
    for i in range(sigma.shape[0]):
        try:
            out[i] = cascade_load_s(sigma[i], s_load[i])
        except SingularSampleError:
            bad.append(i)
            out[i] = np.nan
    if bad:
        raise SingularSampleError("load cascade is resonant", bad)
    return out


def filipsson_connect(s: SampledNetwork, port_k: str, port_l: str) -> SampledNetwork:
    """Solder port k to port l and remove both from the scattering matrix.

    Per remaining entry (i, j):
        S'_ij = S_ij + [ S_il S_kj (1 - S_lk) + S_il S_kk S_lj
                       + S_ik S_lj (1 - S_kl) + S_ik S_ll S_kj ] / D
        D = 1 - S_kl - S_lk + S_kl S_lk - S_kk S_ll
    Near-zero denominators are reported with their sample indices, never
    regularized.
    """
    if s.kind != "S":
        raise ValidationError(f"filipsson_connect needs S data, got kind {s.kind!r}")
    k = s.port_index(port_k)
    l = s.port_index(port_l)
    if k == l:
        raise ValidationError(f"cannot connect port {port_k!r} to itself")
    if s.n_ports < 3:
        raise ValidationError("connecting both ports of a 2-port leaves no ports")
    d = s.data
    skl = d[:, k, l]
    slk = d[:, l, k]
    skk = d[:, k, k]
    sll = d[:, l, l]
    den = 1.0 - skl - slk + skl * slk - skk * sll
    bad = np.flatnonzero(np.abs(den) < 1e-12)
    if bad.size:
        raise SingularSampleError(
            "connection denominator vanishes (resonant at these samples)", bad
        )
    rest = [i for i in range(s.n_ports) if i not in (k, l)]
    sil = d[:, rest, l][:, :, None]
    sik = d[:, rest, k][:, :, None]
    slj = d[:, l, :][:, rest][:, None, :]
    skj = d[:, k, :][:, rest][:, None, :]
    one = np.ones_like(skl)
    num = (
        sil * skj * (one - slk)[:, None, None]
        + sil * slj * skk[:, None, None]
        + sik * slj * (one - skl)[:, None, None]
        + sik * skj * sll[:, None, None]
    )
    out = d[:, rest, :][:, :, rest] + num / den[:, None, None]
    names = tuple(s.port_names[i] for i in rest)
    return SampledNetwork("S", s.freqs, out, z_ref=s.z_ref, port_names=names)
