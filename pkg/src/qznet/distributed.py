"""Two-port element chains (ABCD cascades) and the closed-form rational model
of a capacitor-terminated ideal transmission line.

The chain sweep always works in ABCD space and converts to Z once at the end.
A chain whose total ABCD has C = 0 (for example a pure series capacitor) has
no Z representation; the conversion raises with the offending sample indices
instead of silently regularizing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Mode, RationalImpedance, SampledNetwork
from .errors import SingularSampleError, ValidationError
from .synthesis import synthesize_cascade


@dataclass(frozen=True)
class SeriesCapacitor:
    """Series capacitor between the two rails, farad."""

    c: float

    def __post_init__(self):
        if not (self.c > 0.0 and math.isfinite(self.c)):
            raise ValidationError(f"series capacitance must be positive, got {self.c}")


@dataclass(frozen=True)
class ShuntBranch:
    """Parallel C / L / R combination to ground; unset members are absent."""

    c: float | None = None
    l: float | None = None
    r: float | None = None

    def __post_init__(self):
        if self.c is None and self.l is None and self.r is None:
            raise ValidationError("a shunt branch needs at least one of c, l, r")
        for name, v in (("c", self.c), ("l", self.l), ("r", self.r)):
            if v is not None and not (v > 0.0 and math.isfinite(v)):
                raise ValidationError(f"shunt {name} must be positive, got {v}")


@dataclass(frozen=True)
class TLine:
    """Ideal lossless TEM line: L, C per meter and physical length.

    z0 may be given explicitly; otherwise sqrt(L/C) is used.
    """

    l_per_m: float
    c_per_m: float
    length: float
    z0: float | None = None

    def __post_init__(self):
        for name, v in (("l_per_m", self.l_per_m), ("c_per_m", self.c_per_m)):
            if not (v > 0.0 and math.isfinite(v)):
                raise ValidationError(f"tline {name} must be positive, got {v}")
        # length 0 is allowed and degenerates to the identity two-port
        if not (self.length >= 0.0 and math.isfinite(self.length)):
            raise ValidationError(f"tline length must be nonnegative, got {self.length}")
        if self.z0 is not None and not (self.z0 > 0.0 and math.isfinite(self.z0)):
            raise ValidationError(f"tline z0 must be positive, got {self.z0}")

    @property
    def z0_eff(self) -> float:
        return self.z0 if self.z0 is not None else math.sqrt(self.l_per_m / self.c_per_m)

    @property
    def delay(self) -> float:
        """One-way delay l*sqrt(LC), seconds."""
        return self.length * math.sqrt(self.l_per_m * self.c_per_m)


ChainElement = SeriesCapacitor | ShuntBranch | TLine


@dataclass(frozen=True)
class TwoPortChain:
    elements: tuple[ChainElement, ...]

    def __post_init__(self):
        if not self.elements:
            raise ValidationError("a chain needs at least one element")
        object.__setattr__(self, "elements", tuple(self.elements))


def element_abcd(element: ChainElement, omega: np.ndarray) -> np.ndarray:
    """ABCD matrices over an angular frequency grid, shape (F, 2, 2)."""
    w = np.asarray(omega, dtype=float)
    out = np.zeros((w.size, 2, 2), dtype=complex)
    if isinstance(element, SeriesCapacitor):
        out[:, 0, 0] = 1.0
        out[:, 1, 1] = 1.0
        out[:, 0, 1] = 1.0 / (1j * w * element.c)
    elif isinstance(element, ShuntBranch):
        y = np.zeros(w.size, dtype=complex)
        if element.c is not None:
            y = y + 1j * w * element.c
        if element.l is not None:
            y = y + 1.0 / (1j * w * element.l)
        if element.r is not None:
            y = y + 1.0 / element.r
        out[:, 0, 0] = 1.0
        out[:, 1, 1] = 1.0
        out[:, 1, 0] = y
    elif isinstance(element, TLine):
        beta_l = w * element.delay
        z0 = element.z0_eff
        out[:, 0, 0] = np.cos(beta_l)
        out[:, 1, 1] = np.cos(beta_l)
        out[:, 0, 1] = 1j * z0 * np.sin(beta_l)
        out[:, 1, 0] = 1j * np.sin(beta_l) / z0
    else:
        raise ValidationError(f"unknown chain element {element!r}")
    return out


def chain_abcd(chain: TwoPortChain, omega: np.ndarray) -> np.ndarray:
    total = element_abcd(chain.elements[0], omega)
    for el in chain.elements[1:]:
        total = total @ element_abcd(el, omega)
    return total


def abcd_to_z(abcd: np.ndarray) -> np.ndarray:
    """Z11 = A/C, Z12 = (AD-BC)/C, Z21 = 1/C, Z22 = D/C per sample."""
    a = abcd[:, 0, 0]
    b = abcd[:, 0, 1]
    c = abcd[:, 1, 0]
    d = abcd[:, 1, 1]
    bad = np.flatnonzero(c == 0)
    if bad.size:
        raise SingularSampleError(
            "chain has no Z representation (ABCD C entry is zero)", bad
        )
    z = np.empty_like(abcd)
    z[:, 0, 0] = a / c
    z[:, 0, 1] = (a * d - b * c) / c
    z[:, 1, 0] = 1.0 / c
    z[:, 1, 1] = d / c
    return z


def sweep_chain(chain: TwoPortChain, freqs, z_ref: float = 50.0) -> SampledNetwork:
    """Z-parameter sweep of a chain over a frequency grid in Hz."""
    f = np.asarray(freqs, dtype=float)
    if f.ndim != 1 or f.size == 0 or np.any(f <= 0.0):
        raise ValidationError("sweep needs a nonempty grid of positive frequencies")
    omega = 2.0 * np.pi * f
    z = abcd_to_z(chain_abcd(chain, omega))
    return SampledNetwork("Z", f, z, z_ref=z_ref)


@dataclass(frozen=True)
class AnalyticTLModel:
    """Exact modal data for port shunts c1, c2 joined by an ideal line.

    c_t is the total line capacitance; omegas are the retained resonance
    frequencies k*pi/delay for k = 1..K.
    """

    c1: float
    c2: float
    c_t: float
    omegas: tuple[float, ...]

    def __post_init__(self):
        for name, v in (("c1", self.c1), ("c2", self.c2), ("c_t", self.c_t)):
            if not (v > 0.0 and math.isfinite(v)):
                raise ValidationError(f"{name} must be positive, got {v}")
        w = tuple(float(x) for x in self.omegas)
        if any(x <= 0.0 for x in w):
            raise ValidationError("mode frequencies must be positive")
        object.__setattr__(self, "omegas", w)

    @classmethod
    def from_line(cls, c1: float, c2: float, line: TLine, n_modes: int) -> "AnalyticTLModel":
        if n_modes < 0:
            raise ValidationError(f"n_modes must be nonnegative, got {n_modes}")
        tau = line.delay
        c_t = tau / line.z0_eff
        omegas = tuple(k * math.pi / tau for k in range(1, n_modes + 1))
        return cls(c1, c2, c_t, omegas)

    def truncated(self, n_modes: int) -> "AnalyticTLModel":
        if n_modes > len(self.omegas):
            raise ValidationError(
                f"cannot truncate to {n_modes} modes, only {len(self.omegas)} available"
            )
        return AnalyticTLModel(self.c1, self.c2, self.c_t, self.omegas[:n_modes])


def analytic_tl_rational(model: AnalyticTLModel) -> RationalImpedance:
    """Closed-form rational impedance of the capacitor-terminated line.

    R0 = [[1/c1 + 1/c_t, 1/c_t], [1/c_t, 1/c2 + 1/c_t]] and mode k carries the
    row sqrt(2/c_t) * (1, (-1)^k).
    """
    inv_ct = 1.0 / model.c_t
    r0 = np.array([
        [1.0 / model.c1 + inv_ct, inv_ct],
        [inv_ct, 1.0 / model.c2 + inv_ct],
    ])
    amp = math.sqrt(2.0 / model.c_t)
    modes = tuple(
        Mode(w, np.array([amp, amp * (-1.0) ** k]))
        for k, w in enumerate(model.omegas, start=1)
    )
    return RationalImpedance(r0, modes, ("P1", "P2"))


def tl_cascade_divergence(model: AnalyticTLModel, k_max: int) -> np.ndarray:
    """Port-1 ground capacitance of the synthesized cascade versus the number
    of retained modes; grows without bound as k_max increases."""
    if k_max < 1:
        raise ValidationError(f"k_max must be at least 1, got {k_max}")
    if k_max > len(model.omegas):
        raise ValidationError(
            f"model holds {len(model.omegas)} modes, cannot truncate at {k_max}"
        )
    from .core import maxwell_to_mutual

    out = np.empty(k_max)
    for k in range(1, k_max + 1):
        casc = synthesize_cascade(analytic_tl_rational(model.truncated(k)))
        mut = maxwell_to_mutual(casc.capacitance)
        out[k - 1] = mut.matrix[0, 0]
    return out
