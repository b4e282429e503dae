"""Touchstone v1 (.sNp) reader and writer.

Supports S, Z and Y parameters in RI, MA and DB formats with Hz/kHz/MHz/GHz
frequency units and a single reference resistance. Comment lines are kept on
read and written back out (regenerated, not byte-preserved).

Z and Y values are raw SI (ohm, siemens), not normalized to the reference
resistance; v1 tools disagree on this point, so the convention is fixed here
and applied symmetrically by reader and writer.

The two-port data layout follows the v1 convention (S11 S21 S12 S22); every
other port count is row-major.
"""
from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .core import SampledNetwork, default_port_names
from .errors import ValidationError

_UNIT_SCALE = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
_FORMATS = ("RI", "MA", "DB")


def _ports_from_suffix(path: Path) -> int:
    m = re.fullmatch(r"\.s(\d+)p", path.suffix, flags=re.IGNORECASE)
    if not m:
        raise ValidationError(
            f"cannot infer port count from {path.name!r}; expected a .sNp suffix"
        )
    n = int(m.group(1))
    if n < 1:
        raise ValidationError(f"bad port count in suffix of {path.name!r}")
    return n


def _pairs_to_complex(a: np.ndarray, b: np.ndarray, fmt: str) -> np.ndarray:
    if fmt == "RI":
        return a + 1j * b
    if fmt == "MA":
        return a * np.exp(1j * np.deg2rad(b))
    if fmt == "DB":
        return 10.0 ** (a / 20.0) * np.exp(1j * np.deg2rad(b))
    raise ValidationError(f"unknown data format {fmt!r}")


def _complex_to_pairs(v: np.ndarray, fmt: str) -> tuple[np.ndarray, np.ndarray]:
    if fmt == "RI":
        return v.real, v.imag
    if fmt == "MA":
        return np.abs(v), np.rad2deg(np.angle(v))
    if fmt == "DB":
        with np.errstate(divide="ignore"):
            mag = 20.0 * np.log10(np.abs(v))
        return mag, np.rad2deg(np.angle(v))
    raise ValidationError(f"unknown data format {fmt!r}")


def read_touchstone(path) -> tuple[SampledNetwork, list[str]]:
    """Parse a v1 file. Returns (network, comment lines without the '!')."""
    path = Path(path)
    n = _ports_from_suffix(path)
    comments: list[str] = []
    unit, kind, fmt, z_ref = "ghz", "S", "MA", 50.0
    saw_options = False
    tokens: list[float] = []

    for raw in path.read_text().splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("!"):
            comments.append(line[1:].strip())
            continue
        if "!" in line:
            body, trailing = line.split("!", 1)
            comments.append(trailing.strip())
            line = body.strip()
            if not line:
                continue
        if line.startswith("#"):
            if saw_options:
                continue  # v1: only the first option line counts
            saw_options = True
            parts = line[1:].upper().split()
            i = 0
            while i < len(parts):
                p = parts[i]
                if p.lower() in _UNIT_SCALE:
                    unit = p.lower()
                elif p in ("S", "Z", "Y"):
                    kind = p
                elif p in _FORMATS:
                    fmt = p
                elif p == "R":
                    if i + 1 >= len(parts):
                        raise ValidationError(f"{path.name}: option 'R' missing a value")
                    z_ref = float(parts[i + 1])
                    i += 1
                elif p in ("G", "H"):
                    raise ValidationError(f"{path.name}: unsupported parameter type {p}")
                else:
                    raise ValidationError(f"{path.name}: unknown option token {p!r}")
                i += 1
            continue
        try:
            tokens.extend(float(t) for t in line.split())
        except ValueError as exc:
            raise ValidationError(f"{path.name}: bad data line {line!r}") from exc

    rec_len = 1 + 2 * n * n
    if not tokens or len(tokens) % rec_len != 0:
        raise ValidationError(
            f"{path.name}: data length {len(tokens)} is not a multiple of "
            f"{rec_len} (1 + 2*{n}^2 values per frequency)"
        )
    arr = np.asarray(tokens, dtype=float).reshape(-1, rec_len)
    freqs = arr[:, 0] * _UNIT_SCALE[unit]
    vals = _pairs_to_complex(arr[:, 1::2], arr[:, 2::2], fmt)
    if n == 2:
        data = np.empty((arr.shape[0], 2, 2), dtype=complex)
        data[:, 0, 0] = vals[:, 0]
        data[:, 1, 0] = vals[:, 1]
        data[:, 0, 1] = vals[:, 2]
        data[:, 1, 1] = vals[:, 3]
    else:
        data = vals.reshape(-1, n, n)
    return (
        SampledNetwork(kind, freqs, data, z_ref=z_ref, port_names=default_port_names(n)),
        comments,
    )


def write_touchstone(path, net: SampledNetwork, data_format: str = "RI",
                     freq_unit: str = "GHz", comments=()) -> None:
    """Write a v1 file; port count must match the .sNp suffix.

    Formatting is fixed (%.12e) so identical inputs produce identical bytes.
    """
    path = Path(path)
    n = _ports_from_suffix(path)
    if n != net.n_ports:
        raise ValidationError(
            f"{path.name}: suffix says {n} ports but network has {net.n_ports}"
        )
    fmt = data_format.upper()
    if fmt not in _FORMATS:
        raise ValidationError(f"data format must be one of {_FORMATS}, got {data_format!r}")
    unit = freq_unit.lower()
    if unit not in _UNIT_SCALE:
        raise ValidationError(f"frequency unit must be one of Hz/kHz/MHz/GHz, got {freq_unit!r}")

    lines = [f"! {c}" for c in comments]
    lines.append(f"# {freq_unit.upper() if unit != 'hz' else 'Hz'} {net.kind} {fmt} R {net.z_ref:g}")
    a, b = _complex_to_pairs(net.data, fmt)
    fscaled = net.freqs / _UNIT_SCALE[unit]

    def pair(i, r, c):
        return f"{a[i, r, c]:.12e} {b[i, r, c]:.12e}"

    for i in range(net.freqs.size):
        if n == 1:
            lines.append(f"{fscaled[i]:.12e} {pair(i, 0, 0)}")
        elif n == 2:
            lines.append(
                f"{fscaled[i]:.12e} {pair(i, 0, 0)} {pair(i, 1, 0)} "
                f"{pair(i, 0, 1)} {pair(i, 1, 1)}"
            )
        else:
            lines.append(f"{fscaled[i]:.12e} " + " ".join(pair(i, 0, c) for c in range(n)))
            for r in range(1, n):
                lines.append(" " + " ".join(pair(i, r, c) for c in range(n)))
    path.write_text("\n".join(lines) + "\n")
