"""Rational fitting of sampled impedance data and projection onto the
lossless form.

The pipeline is: relocate a shared pole set by iterated linear least squares
(one weighting-function iteration per step), solve the final residue LS,
project onto the lossless structure (DC capture plus rank-1 resonant
residues), then refine the structured model with a nonlinear least-squares
polish. All fitting happens on s normalized by the geometric band mean; every
returned quantity is in physical rad/s.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.optimize as opt

from .core import (
    Mode,
    RationalImpedance,
    SampledNetwork,
    ensure_spd,
    s_to_z,
    sign_normalize_row,
)
from .errors import (
    ConditioningError,
    LosslessProjectionError,
    SPDError,
    ValidationError,
)

_MIN_SAMPLES_FACTOR = 2  # samples per unknown, per matrix entry


@dataclass(frozen=True)
class FitConfig:
    """Knobs for the fitting pipeline.

    band is in Hz. dc_capture_radius is in rad/s and defaults to half the
    band minimum (times 2*pi). weight_mode is "uniform" or
    "inverse_magnitude". relaxed switches the pole-relocation normalization;
    allow_degenerate_hf_pole lets the refinement carry one extra rank-1 row
    degenerate with the highest retained mode.
    """

    n_pole_pairs: int
    band: tuple[float, float]
    max_iterations: int = 30
    pole_convergence_tol: float = 1e-6
    dc_capture_radius: float | None = None
    rank1_eig_threshold: float = 1e-4
    refine_max_evals: int = 300
    weight_mode: str = "uniform"
    relaxed: bool = False
    allow_degenerate_hf_pole: bool = False

    def __post_init__(self):
        lo, hi = self.band
        if not (0.0 < lo < hi):
            raise ValidationError(f"band must satisfy 0 < lo < hi, got {self.band}")
        if self.n_pole_pairs < 1:
            raise ValidationError(f"need at least one pole pair, got {self.n_pole_pairs}")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be at least 1")
        if not (0.0 < self.rank1_eig_threshold < 1.0):
            raise ValidationError("rank1_eig_threshold must be in (0, 1)")
        if self.weight_mode not in ("uniform", "inverse_magnitude"):
            raise ValidationError(f"unknown weight_mode {self.weight_mode!r}")
        if self.dc_capture_radius is not None and self.dc_capture_radius <= 0.0:
            raise ValidationError("dc_capture_radius must be positive")
        object.__setattr__(self, "band", (float(lo), float(hi)))

    @property
    def dc_radius(self) -> float:
        if self.dc_capture_radius is not None:
            return float(self.dc_capture_radius)
        return 0.5 * 2.0 * np.pi * self.band[0]


@dataclass(frozen=True)
class VFState:
    """One pole-relocation iterate.

    poles are conjugate-closed (pairs adjacent, +Im first) with real parts
    <= 0. sigma_residues are the weighting-function residues from the last
    relocation; d is the weighting function's constant term (1 unless
    relaxed), e is kept for the scalar form and stays 0 in matrix fits.
    """

    poles: np.ndarray
    sigma_residues: np.ndarray
    d: float = 1.0
    e: float = 0.0
    iteration: int = 0

    def __post_init__(self):
        p = np.asarray(self.poles, dtype=complex)
        _validate_closed(p)
        if np.any(p.real > 0.0):
            raise ValidationError("pole real parts must be <= 0")
        c = np.asarray(self.sigma_residues, dtype=complex)
        p.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "poles", p)
        object.__setattr__(self, "sigma_residues", c)


@dataclass(frozen=True)
class GeneralRational:
    """Unstructured pole/residue model sum_j R_j/(s - p_j) + d + s e.

    Poles are conjugate-closed with nonpositive real parts; residues of a
    conjugate pair are complex conjugates of each other.
    """

    poles: np.ndarray
    residues: np.ndarray
    d: np.ndarray | None = None
    e: np.ndarray | None = None

    def __post_init__(self):
        p = np.asarray(self.poles, dtype=complex)
        _validate_closed(p)
        if np.any(p.real > 0.0):
            raise ValidationError("pole real parts must be <= 0")
        r = np.asarray(self.residues, dtype=complex)
        if r.ndim != 3 or r.shape[0] != p.size or r.shape[1] != r.shape[2]:
            raise ValidationError(
                f"residues must have shape (n_poles, N, N), got {r.shape}"
            )
        p.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "poles", p)
        object.__setattr__(self, "residues", r)
        for name in ("d", "e"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=float)
                v.setflags(write=False)
                object.__setattr__(self, name, v)

    @property
    def n_ports(self) -> int:
        return self.residues.shape[1]

    def evaluate(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=complex)
        terms = 1.0 / (s[:, None] - self.poles[None, :])
        out = np.einsum("fj,jab->fab", terms, self.residues)
        if self.d is not None:
            out = out + self.d[None, :, :]
        if self.e is not None:
            out = out + s[:, None, None] * self.e[None, :, :]
        return out


def _validate_closed(poles: np.ndarray) -> None:
    i = 0
    while i < poles.size:
        p = poles[i]
        if p.imag == 0.0:
            i += 1
            continue
        if p.imag < 0.0 or i + 1 >= poles.size or poles[i + 1] != np.conj(p):
            raise ValidationError(
                "poles must be conjugate-closed with pairs adjacent (+Im first)"
            )
        i += 2


def _cindex(poles: np.ndarray) -> np.ndarray:
    """0 = real pole, 1 = first of a conjugate pair, 2 = its partner."""
    ci = np.zeros(poles.size, dtype=int)
    i = 0
    while i < poles.size:
        if poles[i].imag != 0.0:
            ci[i] = 1
            ci[i + 1] = 2
            i += 2
        else:
            i += 1
    return ci


def _canonicalize(raw: np.ndarray) -> np.ndarray:
    """Sort eigenvalues into the canonical layout: real poles first (by value),
    then conjugate pairs by imaginary part."""
    reals = np.sort_complex(raw[raw.imag == 0.0])
    pos = raw[raw.imag > 0.0]
    neg = raw[raw.imag < 0.0]
    if pos.size != neg.size:
        raise ConditioningError("relocated poles are not conjugate-closed")
    order = np.lexsort((pos.real, pos.imag))
    out = list(reals)
    for p in pos[order]:
        out.extend([p, np.conj(p)])
    return np.asarray(out, dtype=complex)


def _pole_basis(sn: np.ndarray, poles: np.ndarray, ci: np.ndarray) -> np.ndarray:
    """Partial-fraction basis with real unknowns; complex valued, (F, n_poles)."""
    phi = np.empty((sn.size, poles.size), dtype=complex)
    for n in range(poles.size):
        if ci[n] == 0:
            phi[:, n] = 1.0 / (sn - poles[n])
        elif ci[n] == 1:
            phi[:, n] = 1.0 / (sn - poles[n]) + 1.0 / (sn - np.conj(poles[n]))
        else:
            p = poles[n - 1]
            phi[:, n] = 1j / (sn - p) - 1j / (sn - np.conj(p))
    return phi


def _coefs_to_residues(x: np.ndarray, ci: np.ndarray) -> np.ndarray:
    """Real LS coefficients -> complex residues in canonical pole order."""
    c = np.zeros(ci.size, dtype=complex)
    for n in range(ci.size):
        if ci[n] == 0:
            c[n] = x[n]
        elif ci[n] == 1:
            c[n] = x[n] + 1j * x[n + 1]
        else:
            c[n] = x[n - 1] - 1j * x[n]
    return c


def _real_blocks(poles: np.ndarray, ci: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = poles.size
    lam = np.zeros((n, n))
    b = np.zeros(n)
    for i in range(n):
        if ci[i] == 0:
            lam[i, i] = poles[i].real
            b[i] = 1.0
        elif ci[i] == 1:
            a, w = poles[i].real, poles[i].imag
            lam[i, i] = a
            lam[i + 1, i + 1] = a
            lam[i, i + 1] = w
            lam[i + 1, i] = -w
            b[i] = 2.0
    return lam, b


def initial_poles(cfg: FitConfig) -> np.ndarray:
    """Conjugate pairs with imaginary parts spread linearly over the band and
    real parts at -1% of the imaginary part."""
    lo, hi = cfg.band
    if cfg.n_pole_pairs == 1:
        centers = np.array([0.5 * (lo + hi)])
    else:
        centers = np.linspace(lo, hi, cfg.n_pole_pairs)
    poles = np.empty(2 * cfg.n_pole_pairs, dtype=complex)
    w = 2.0 * np.pi * centers
    poles[0::2] = -w / 100.0 + 1j * w
    poles[1::2] = -w / 100.0 - 1j * w
    return poles


def _entry_weights(data: SampledNetwork, weight_mode: str) -> np.ndarray:
    if weight_mode == "uniform":
        return np.ones(data.data.shape)
    mags = np.abs(data.data)
    floor = 1e-12 * (mags.max() or 1.0)
    return 1.0 / np.maximum(mags, floor)


def _check_sample_count(data: SampledNetwork, n_poles: int) -> None:
    needed = _MIN_SAMPLES_FACTOR * (n_poles + 2)
    if 2 * data.freqs.size < needed:
        raise ConditioningError(
            f"{data.freqs.size} samples cannot determine {n_poles} poles; "
            f"need at least {int(np.ceil(needed / 2))}"
        )


def vf_relocate(
    data: SampledNetwork, state: VFState, weights=None, relaxed: bool = False
) -> VFState:
    """One pole-relocation iteration over all matrix entries jointly.

    Solves the stacked linear LS for the weighting-function residues (the
    per-entry numerator unknowns are eliminated entry by entry with QR) and
    returns the zeros of the weighting function as the new pole set, flipped
    into the left half plane where needed. With relaxed=True the weighting
    function's constant term is an extra unknown pinned by a nontriviality
    constraint instead of being fixed at 1.
    """
    if data.kind != "Z":
        raise ValidationError(f"vf_relocate needs Z data, got {data.kind!r}")
    _check_sample_count(data, state.poles.size)
    f = data.freqs
    w0 = 2.0 * np.pi * float(np.sqrt(f[0] * f[-1]))
    sn = 2j * np.pi * f / w0
    pn = state.poles / w0
    ci = _cindex(pn)
    phi = _pole_basis(sn, pn, ci)
    n_poles = pn.size
    n1 = n_poles + 2  # per-entry unknowns: residues, d, e

    if weights is None:
        weights = np.ones(data.data.shape)
    else:
        weights = np.asarray(weights, dtype=float)
        if weights.shape == (f.size,):
            weights = np.broadcast_to(weights[:, None, None], data.data.shape)
        if weights.shape != data.data.shape:
            raise ValidationError(
                f"weights shape {weights.shape} does not match data {data.data.shape}"
            )

    a1_base = np.empty((f.size, n1), dtype=complex)
    a1_base[:, :n_poles] = phi
    a1_base[:, n_poles] = 1.0
    a1_base[:, n_poles + 1] = sn

    n_shared = n_poles + (1 if relaxed else 0)
    blocks = []
    rhss = []
    for i in range(data.n_ports):
        for j in range(data.n_ports):
            h = data.data[:, i, j]
            wt = weights[:, i, j]
            if relaxed:
                a2 = np.concatenate([-h[:, None] * phi, -h[:, None]], axis=1)
            else:
                a2 = -h[:, None] * phi
            a = np.concatenate([a1_base, a2], axis=1)
            ar = np.concatenate([a.real * wt[:, None], a.imag * wt[:, None]])
            br = np.concatenate([h.real * wt, h.imag * wt])
            if relaxed:
                br = np.zeros_like(br)  # relaxed form: residual of sigma*H - fit
            q, r = np.linalg.qr(ar, mode="reduced")
            qtb = q.T @ br
            blocks.append(r[n1:, n1:])
            rhss.append(qtb[n1:])

    a_shared = np.concatenate(blocks)
    b_shared = np.concatenate(rhss)
    if relaxed:
        # nontriviality: the weighted mean of Re(sigma) over the grid stays 1
        row = np.empty(n_shared)
        row[:n_poles] = phi.real.sum(axis=0)
        row[n_poles] = f.size
        scale = np.linalg.norm(b_shared) / max(f.size, 1) or 1.0
        a_shared = np.vstack([a_shared, scale * row])
        b_shared = np.concatenate([b_shared, [scale * f.size]])

    x, *_ = np.linalg.lstsq(a_shared, b_shared, rcond=None)
    c_real = x[:n_poles]
    d_sigma = float(x[n_poles]) if relaxed else 1.0
    if relaxed and abs(d_sigma) < 1e-12:
        raise ConditioningError("relaxed weighting function collapsed to zero")

    lam, bvec = _real_blocks(pn, ci)
    h_mat = lam - np.outer(bvec, c_real / d_sigma)
    new_n = _canonicalize(np.linalg.eigvals(h_mat))
    flip = new_n.real > 0.0
    new_n = np.where(flip, new_n - 2.0 * new_n.real, new_n)
    sigma_res = _coefs_to_residues(c_real, ci) * w0
    return VFState(
        poles=new_n * w0,
        sigma_residues=sigma_res,
        d=d_sigma,
        e=0.0,
        iteration=state.iteration + 1,
    )


def vf_residues(data: SampledNetwork, poles: np.ndarray, weights=None) -> GeneralRational:
    """Linear residue solve for a fixed pole set, one LS per matrix entry on a
    shared basis. Residue matrices are symmetrized as (R + R^T)/2."""
    if data.kind != "Z":
        raise ValidationError(f"vf_residues needs Z data, got {data.kind!r}")
    poles = np.asarray(poles, dtype=complex)
    _validate_closed(poles)
    _check_sample_count(data, poles.size)
    f = data.freqs
    w0 = 2.0 * np.pi * float(np.sqrt(f[0] * f[-1]))
    sn = 2j * np.pi * f / w0
    pn = poles / w0
    ci = _cindex(pn)
    n_poles = pn.size
    a = np.empty((f.size, n_poles + 2), dtype=complex)
    a[:, :n_poles] = _pole_basis(sn, pn, ci)
    a[:, n_poles] = 1.0
    a[:, n_poles + 1] = sn

    if weights is None:
        weights = np.ones(data.data.shape)
    n = data.n_ports
    residues = np.zeros((n_poles, n, n), dtype=complex)
    d = np.zeros((n, n))
    e = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            wt = weights[:, i, j]
            ar = np.concatenate([a.real * wt[:, None], a.imag * wt[:, None]])
            br = np.concatenate([data.data[:, i, j].real * wt,
                                 data.data[:, i, j].imag * wt])
            x, *_ = np.linalg.lstsq(ar, br, rcond=None)
            residues[:, i, j] = _coefs_to_residues(x[:n_poles], ci) * w0
            d[i, j] = x[n_poles]
            e[i, j] = x[n_poles + 1] / w0
    residues = 0.5 * (residues + np.transpose(residues, (0, 2, 1)))
    d = 0.5 * (d + d.T)
    e = 0.5 * (e + e.T)
    return GeneralRational(poles, residues, d, e)


def _project_lossless(gr: GeneralRational, cfg: FitConfig):
    """DC capture plus rank-1 resonant split. Returns (model, log lines)."""
    poles = gr.poles
    ci = _cindex(poles)
    radius = cfg.dc_radius
    dc_mask = (poles.imag == 0.0) | (np.abs(poles) < radius)
    log: list[str] = []

    if not np.any(dc_mask):
        raise LosslessProjectionError(
            f"no poles inside the DC capture radius {radius:.3e} rad/s; "
            f"the 1/s term cannot be formed (widen dc_capture_radius)"
        )
    r0 = np.sum(gr.residues[dc_mask].real, axis=0)
    r0 = 0.5 * (r0 + r0.T)
    try:
        r0 = ensure_spd(r0, "DC residue")
    except SPDError as exc:
        raise LosslessProjectionError(
            f"{exc} (formed from {int(np.sum(dc_mask))} captured poles); "
            f"widen dc_capture_radius"
        ) from exc
    log.append(f"dc: captured {int(np.sum(dc_mask))} poles into R0")

    modes: list[Mode] = []
    for idx in range(poles.size):
        if ci[idx] != 1 or dc_mask[idx]:
            continue
        omega = abs(poles[idx].imag)
        rk = 2.0 * gr.residues[idx].real
        rk = 0.5 * (rk + rk.T)
        modes.extend(_split_rank1(omega, rk, cfg.rank1_eig_threshold, log))
    model = RationalImpedance(r0, tuple(modes))
    return model, log


def _split_rank1(omega: float, rk: np.ndarray, threshold: float,
                 log: list[str]) -> list[Mode]:
    """Eigen-split one symmetric residue into rank-1 rows, dropping small and
    negative components."""
    lam, vec = la.eigh(rk)
    lam_max = lam[-1]
    if lam_max <= 0.0:
        warnings.warn(
            f"mode near {omega / (2 * np.pi):.4e} Hz has no positive residue "
            f"component and was dropped",
            stacklevel=4,
        )
        log.append(f"drop: whole mode at {omega:.6e} rad/s (no positive component)")
        return []
    rows: list[Mode] = []
    for i in range(lam.size - 1, -1, -1):
        if lam[i] >= threshold * lam_max:
            rows.append(Mode(omega, sign_normalize_row(np.sqrt(lam[i]) * vec[:, i])))
        elif lam[i] < 0.0:
            warnings.warn(
                f"negative residue component ({lam[i]:.3e}) at "
                f"{omega / (2 * np.pi):.4e} Hz dropped",
                stacklevel=4,
            )
            log.append(f"drop: negative component {lam[i]:.3e} at {omega:.6e} rad/s")
        else:
            log.append(f"drop: small component {lam[i]:.3e} at {omega:.6e} rad/s")
    return rows


def enforce_lossless(gr: GeneralRational, cfg: FitConfig) -> RationalImpedance:
    """Project a general stable fit onto the lossless rational structure.

    Real poles and poles within dc_capture_radius of the origin become the
    1/s term with R0 = sum of their real residue parts; every other conjugate
    pair moves onto the imaginary axis at |Im p| with residue 2 Re(R), split
    into rank-1 rows by eigendecomposition. Components below
    rank1_eig_threshold (relative to the largest) are dropped; negative
    components are dropped with a warning, never negated.
    """
    model, _ = _project_lossless(gr, cfg)
    return model


def _lossless_residues(data: SampledNetwork, omegas, cfg: FitConfig,
                       weights=None):
    """Linear re-solve of R0 and the residues at fixed resonant frequencies.

    The basis is the exact lossless form: Z_ij(i w) is purely imaginary with
    columns -1/w (the 1/s term) and w/(w_k^2 - w^2) per mode, so only Im(Z)
    carries information and the real part is ignored. One LS per upper
    triangle entry; columns are norm-scaled before the solve.
    """
    if data.kind != "Z":
        raise ValidationError(f"lossless_residues needs Z data, got {data.kind!r}")
    om = np.unique(np.asarray(omegas, dtype=float))
    if om.size and om[0] <= 0.0:
        raise ValidationError("mode frequencies must be positive")
    w = 2.0 * np.pi * data.freqs
    if w.size < om.size + 1:
        raise ConditioningError(
            f"{w.size} samples cannot determine {om.size} modes plus R0"
        )
    phi = np.empty((w.size, om.size + 1))
    phi[:, 0] = -1.0 / w
    if om.size:
        phi[:, 1:] = w[:, None] / (om[None, :] ** 2 - w[:, None] ** 2)
    col_scale = np.linalg.norm(phi, axis=0)
    col_scale[col_scale == 0.0] = 1.0

    if weights is None:
        weights = np.ones(data.data.shape)
    n = data.n_ports
    r0 = np.zeros((n, n))
    rks = np.zeros((om.size, n, n))
    for i in range(n):
        for j in range(i, n):
            b = data.data[:, i, j].imag
            wt = weights[:, i, j]
            good = np.isfinite(b) & np.isfinite(phi).all(axis=1)
            a = phi[good] * (wt[good, None] / col_scale[None, :])
            x, *_ = np.linalg.lstsq(a, b[good] * wt[good], rcond=None)
            x = x / col_scale
            r0[i, j] = r0[j, i] = x[0]
            rks[:, i, j] = rks[:, j, i] = x[1:]

    log: list[str] = []
    try:
        r0 = ensure_spd(r0, "DC residue")
    except SPDError as exc:
        raise LosslessProjectionError(
            f"{exc} (re-solved over {int(w.size)} samples)"
        ) from exc
    modes: list[Mode] = []
    for k in range(om.size):
        modes.extend(_split_rank1(float(om[k]), rks[k], cfg.rank1_eig_threshold, log))
    model = RationalImpedance(r0, tuple(modes), data.port_names)
    return model, log


def lossless_residues(data: SampledNetwork, omegas, cfg: FitConfig,
                      weights=None) -> RationalImpedance:
    """Re-solve R0 and rank-1 rows by linear LS with poles pinned at 0 and
    the given resonant frequencies. Fits Im(Z) in the exact lossless basis,
    so no projection bias enters the 1/s term."""
    model, _ = _lossless_residues(data, omegas, cfg, weights)
    return model


@dataclass(frozen=True)
class RefineInfo:
    model: RationalImpedance
    improved: bool
    cost_initial: float
    cost_final: float
    n_evals: int


def _pack(z: RationalImpedance, w0: float, tie_last_pair: bool):
    n, m = z.n_ports, z.n_modes
    u = la.cholesky(z.dc_residue / w0, lower=False)
    iu = np.triu_indices(n)
    rows = z.r_matrix() / np.sqrt(w0)
    n_logw = m - 1 if (tie_last_pair and m >= 2) else m
    x = np.concatenate([
        u[iu],
        rows.ravel(),
        np.log(z.omegas[:n_logw] / w0) if n_logw else np.zeros(0),
    ])
    return x, (n, m, n_logw, iu)


def _unpack(x: np.ndarray, struct, w0: float, port_names) -> RationalImpedance:
    n, m, n_logw, iu = struct
    n_u = len(iu[0])
    u = np.zeros((n, n))
    u[iu] = x[:n_u]
    r0 = w0 * (u.T @ u)
    rows = x[n_u:n_u + m * n].reshape(m, n) * np.sqrt(w0)
    logw = x[n_u + m * n:]
    omegas = w0 * np.exp(logw)
    if n_logw < m:
        omegas = np.concatenate([omegas, omegas[-1:]])  # tied degenerate pair
    modes = tuple(Mode(float(omegas[k]), rows[k]) for k in range(m))
    return RationalImpedance(r0, modes, port_names)


def _sample_z_fast(r0, rows, omegas, s) -> np.ndarray:
    out = r0[None, :, :] / s[:, None, None]
    if omegas.size:
        den = s[:, None] ** 2 + omegas[None, :] ** 2
        residues = rows[:, :, None] * rows[:, None, :]
        out = out + np.einsum("fk,kij->fij", s[:, None] / den, residues)
    return out


def _refine(z0: RationalImpedance, data: SampledNetwork, cfg: FitConfig) -> RefineInfo:
    if data.kind != "Z":
        raise ValidationError(f"refine needs Z data, got {data.kind!r}")
    f = data.freqs
    s = 2j * np.pi * f
    w0 = 2.0 * np.pi * float(np.sqrt(f[0] * f[-1]))
    z_ref = data.z_ref
    eye = np.eye(z0.n_ports)

    floor_z = 1e-16 * float(np.abs(data.data).max())
    log_zd = np.log10(np.maximum(np.abs(data.data), floor_z))
    s_data = np.linalg.solve(data.data + z_ref * eye, data.data - z_ref * eye)
    log_sd = np.log10(np.maximum(np.abs(s_data), 1e-16))
    res_size = 2 * data.data.size

    tie = cfg.allow_degenerate_hf_pole and z0.n_modes >= 1
    z_start = z0
    if tie:
        # seed one extra row degenerate with the top mode; zero rows are a
        # stationary point, so start slightly off it
        last = z0.modes[-1]
        extra = Mode(last.omega, 0.05 * last.r_row + 1e-3 * np.abs(last.r_row).max())
        z_start = RationalImpedance(
            z0.dc_residue, z0.modes + (extra,), z0.port_names
        )

    x0, struct = _pack(z_start, w0, tie)

    def residual(x):
        n, m, n_logw, iu = struct
        n_u = len(iu[0])
        u = np.zeros((n, n))
        u[iu] = x[:n_u]
        r0 = w0 * (u.T @ u)
        rows = x[n_u:n_u + m * n].reshape(m, n) * np.sqrt(w0)
        logw = np.clip(x[n_u + m * n:], -60.0, 60.0)
        omegas = w0 * np.exp(logw)
        if n_logw < m:
            omegas = np.concatenate([omegas, omegas[-1:]])
        zm = _sample_z_fast(r0, rows, omegas, s)
        try:
            sm = np.linalg.solve(zm + z_ref * eye, zm - z_ref * eye)
        except np.linalg.LinAlgError:
            return np.full(res_size, 1e6)
        rz = np.log10(np.maximum(np.abs(zm), floor_z)) - log_zd
        rs = np.log10(np.maximum(np.abs(sm), 1e-16)) - log_sd
        out = np.concatenate([rz.ravel(), rs.ravel()])
        return np.where(np.isfinite(out), out, 1e6)

    r_init = residual(x0)
    cost_init = 0.5 * float(r_init @ r_init)
    try:
        result = opt.least_squares(
            residual, x0, method="trf", max_nfev=cfg.refine_max_evals
        )
        cost_final = float(result.cost)
        x_best = result.x
        n_evals = int(result.nfev)
    except Exception:
        return RefineInfo(z0, False, cost_init, cost_init, 0)
    if not np.isfinite(cost_final) or cost_final > cost_init:
        return RefineInfo(z0, False, cost_init, cost_init, n_evals)
    model = _unpack(x_best, struct, w0, z0.port_names)
    # re-normalize row signs; the optimizer is free in sign
    modes = tuple(Mode(m.omega, sign_normalize_row(m.r_row)) for m in model.modes)
    model = RationalImpedance(model.dc_residue, modes, model.port_names)
    return RefineInfo(model, True, cost_init, cost_final, n_evals)


def refine_lossless(z0: RationalImpedance, data: SampledNetwork, cfg: FitConfig) -> RationalImpedance:
    """Nonlinear polish of a lossless model against sampled data.

    Free parameters: the Cholesky factor of R0 (structurally positive
    definite), every residue row, and log mode frequencies. The objective
    stacks log10 |Z_ij| and log10 |S_ij| residuals. If the optimizer fails to
    improve the starting cost the input model is returned unchanged.
    """
    return _refine(z0, data, cfg).model


def _rel_rms(model_vals: np.ndarray, data_vals: np.ndarray) -> float:
    num = np.sqrt(np.mean(np.abs(model_vals - data_vals) ** 2))
    den = np.sqrt(np.mean(np.abs(data_vals) ** 2)) or 1.0
    return float(num / den)


def fit_with_report(data: SampledNetwork, cfg: FitConfig):
    """Full pipeline returning (model, report dict)."""
    if data.kind == "S":
        data = s_to_z(data)
    elif data.kind != "Z":
        raise ValidationError("fit accepts Z or S data")
    lo, hi = cfg.band
    mask = (data.freqs >= lo) & (data.freqs <= hi)
    if int(mask.sum()) < 2:
        raise ValidationError(
            f"band [{lo:g}, {hi:g}] Hz selects {int(mask.sum())} samples; need >= 2"
        )
    data = SampledNetwork(
        "Z", data.freqs[mask], data.data[mask], z_ref=data.z_ref,
        port_names=data.port_names,
    )
    weights = _entry_weights(data, cfg.weight_mode)
    s = 2j * np.pi * data.freqs

    w0 = 2.0 * np.pi * float(np.sqrt(data.freqs[0] * data.freqs[-1]))
    state = VFState(initial_poles(cfg), np.zeros(2 * cfg.n_pole_pairs, dtype=complex))
    delta = np.inf
    converged = False
    for _ in range(cfg.max_iterations):
        new_state = vf_relocate(data, state, weights, relaxed=cfg.relaxed)
        old, new = state.poles, new_state.poles
        # movement relative to the pole magnitude, floored at the band center
        # so near-origin poles (headed for DC capture) cannot stall the loop
        scale = np.maximum(np.abs(old), w0)
        delta = float(
            np.max(np.min(np.abs(new[None, :] - old[:, None]), axis=1) / scale)
        )
        state = new_state
        if delta < cfg.pole_convergence_tol:
            converged = True
            break

    gr = vf_residues(data, state.poles, weights)
    rms_general = _rel_rms(gr.evaluate(s), data.data)
    model0, drop_log = _project_lossless(gr, cfg)
    rms_lossless = _rel_rms(
        _sample_z_fast(model0.dc_residue, model0.r_matrix(), model0.omegas, s),
        data.data,
    )
    model1, resolve_log = _lossless_residues(data, model0.omegas, cfg, weights)
    rms_resolve = _rel_rms(
        _sample_z_fast(model1.dc_residue, model1.r_matrix(), model1.omegas, s),
        data.data,
    )
    info = _refine(model1, data, cfg)
    rms_refined = _rel_rms(
        _sample_z_fast(info.model.dc_residue, info.model.r_matrix(),
                       info.model.omegas, s),
        data.data,
    )
    # the refinement optimizes log magnitudes; adopt it only when it does not
    # regress the linear misfit the report tracks
    accepted = bool(info.improved and rms_refined <= rms_resolve)
    model = info.model if accepted else model1
    final_rms = rms_refined if accepted else rms_resolve
    model = RationalImpedance(model.dc_residue, model.modes, data.port_names)
    report = {
        "n_samples": int(data.freqs.size),
        "band_hz": [lo, hi],
        "n_pole_pairs": cfg.n_pole_pairs,
        "final_rel_rms": final_rms,
        "stages": {
            "relocate": {
                "iterations": int(state.iteration),
                "converged": bool(converged),
                "final_pole_delta": delta,
            },
            "residues": {"rel_rms": rms_general},
            "lossless": {
                "rel_rms": rms_lossless,
                "n_modes": model0.n_modes,
                "dropped": drop_log,
            },
            "residue_resolve": {
                "rel_rms": rms_resolve,
                "n_modes": model1.n_modes,
                "dropped": resolve_log,
            },
            "refine": {
                "improved": bool(info.improved),
                "accepted": accepted,
                "cost_initial": info.cost_initial,
                "cost_final": info.cost_final,
                "rel_rms": rms_refined,
                "n_evals": info.n_evals,
            },
        },
        "pole_table": [
            {"freq_hz": m.omega / (2.0 * np.pi), "omega_rad_s": m.omega}
            for m in model.modes
        ],
    }
    return model, report


def fit(data: SampledNetwork, cfg: FitConfig) -> RationalImpedance:
    """Fit sampled Z (or S) data to the lossless rational impedance form."""
    return fit_with_report(data, cfg)[0]
