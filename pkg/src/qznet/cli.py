"""Command-line workflows: sweep, fit, synth, analyze, connect, ham, eff, decay.

Every command is a deterministic file-in/file-out step; reports embed input
hashes instead of timestamps so re-runs are byte-identical. Quantities accept
SI-prefixed strings (4GHz, 70fF, 15.5nH, 10n); files store SI base units.

Exit codes: 0 success, 2 validation/usage, 3 numerical failure.
"""
from __future__ import annotations

import csv
import io
import re
import sys
from pathlib import Path

import click
import numpy as np

from . import serde
from .decay import LossSpec, lossy_mode_poles, sweep_junction_inductance
from .distributed import TwoPortChain, sweep_chain
from .errors import NumericalError, ValidationError
from .interconnect import connect_rational
from .qham import (
    TransmonSpec,
    effective_params,
    hamiltonian_params,
    josephson_inductance,
)
from .synthesis import CLCascade, cascade_to_rational, synthesize_cascade
from .touchstone import read_touchstone, write_touchstone
from .vfit import FitConfig, fit_with_report

# single-letter unit tails are matched before prefixes: "15fF" is 15 fF,
# while a bare "15f" parses as 15 farad (write 15e-15 or 15fF for femto)
_UNIT_WORDS = ("hz", "ohms", "ohm", "f", "h", "s", "m")
_SI_PREFIXES = {
    "f": 1e-15, "p": 1e-12, "n": 1e-9, "u": 1e-6, "µ": 1e-6,
    "m": 1e-3, "k": 1e3, "M": 1e6, "G": 1e9, "T": 1e12,
}


def parse_quantity(text: str) -> float:
    """'4GHz' -> 4e9, '70fF' -> 7e-14, '10n' -> 1e-8, '50' -> 50.0."""
    text = text.strip()
    m = re.fullmatch(r"([+-]?[0-9.]+(?:[eE][+-]?[0-9]+)?)\s*(\S*)", text)
    if not m:
        raise ValidationError(f"cannot parse quantity {text!r}")
    value, suffix = float(m.group(1)), m.group(2)
    for word in _UNIT_WORDS:
        if suffix.lower().endswith(word):
            suffix = suffix[: len(suffix) - len(word)]
            break
    if not suffix:
        return value
    if suffix in _SI_PREFIXES:
        return value * _SI_PREFIXES[suffix]
    raise ValidationError(f"unknown unit or prefix {suffix!r} in {text!r}")


def parse_band(text: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ValidationError(f"band must be lo:hi, got {text!r}")
    lo, hi = (parse_quantity(p) for p in parts)
    if not (0.0 < lo < hi):
        raise ValidationError(f"band must satisfy 0 < lo < hi, got {lo} .. {hi}")
    return lo, hi


def parse_sweep(text: str) -> tuple[str, np.ndarray]:
    """'Q1=10n:25n:200' -> ('Q1', 200 linspace values)."""
    if "=" not in text:
        raise ValidationError(f"sweep must be name=start:stop:count, got {text!r}")
    name, _, rng = text.partition("=")
    parts = rng.split(":")
    if len(parts) != 3:
        raise ValidationError(f"sweep range must be start:stop:count, got {rng!r}")
    start, stop = parse_quantity(parts[0]), parse_quantity(parts[1])
    count = int(parts[2])
    if count < 2:
        raise ValidationError(f"sweep needs at least 2 points, got {count}")
    return name.strip(), np.linspace(start, stop, count)


def parse_assignments(text: str) -> dict[str, float]:
    """'P1=50,P2=50' -> {'P1': 50.0, 'P2': 50.0}."""
    out: dict[str, float] = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise ValidationError(f"expected name=value, got {item!r}")
        name, _, value = item.partition("=")
        out[name.strip()] = parse_quantity(value)
    if not out:
        raise ValidationError(f"no assignments found in {text!r}")
    return out


def _write_text(out: str | None, text: str) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _emit_table(ctx_obj: dict, rows: list[dict], header: dict) -> None:
    """rows all share one key set; header rides along in JSON only."""
    out = ctx_obj.get("out")
    fmt = ctx_obj.get("format")
    if fmt is None:
        fmt = "csv" if out and out.endswith(".csv") else "json"
    if fmt == "json":
        _write_text(out, serde.dumps({**header, "rows": rows}))
        return
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _csv_cell(v) for k, v in row.items()})
    _write_text(out, buf.getvalue())


def _csv_cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.12e}"
    return str(v)


def _load_network(path: str):
    """A rational model or a cascade, either schema."""
    obj = serde.load(path)
    if not isinstance(obj, (CLCascade,)) and not hasattr(obj, "dc_residue"):
        raise ValidationError(
            f"{path}: expected rational_impedance.v1 or cl_cascade.v1, "
            f"got {type(obj).__name__}"
        )
    return obj


def _load_spec(path: str, qubit_flags) -> TransmonSpec:
    spec = serde.load(path)
    if not isinstance(spec, TransmonSpec):
        raise ValidationError(f"{path}: expected transmon_spec.v1")
    if not qubit_flags:
        return spec
    targets = {}
    for flag in qubit_flags:
        if "=" not in flag:
            raise ValidationError(f"--qubit expects NAME=FREQ, got {flag!r}")
        name, _, freq = flag.partition("=")
        targets[name.strip()] = parse_quantity(freq)
    junctions = []
    for j in spec.junctions:
        if j.port in targets:
            junctions.append(type(j)(j.port, freq_target=targets.pop(j.port)))
        else:
            junctions.append(j)
    if targets:
        raise ValidationError(
            f"--qubit names {sorted(targets)} not found among junction ports "
            f"{[j.port for j in spec.junctions]}"
        )
    return TransmonSpec(tuple(junctions), spec.couplers, spec.open_ports)


@click.group()
@click.option("--out", type=str, default=None, help="Output file ('-' = stdout).")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default=None,
              help="Table format; default json, or csv when --out ends in .csv.")
@click.option("--seed", type=int, default=None,
              help="Seed for randomized fixtures (unused by deterministic commands).")
@click.pass_context
def cli(ctx, out, fmt, seed):
    """Lossless-network fitting, synthesis, and transmon parameter estimation."""
    ctx.obj = {"out": out, "format": fmt, "seed": seed}


@cli.command()
@click.option("--chain", "chain_path", required=True, type=str, help="chain.v1 JSON.")
@click.option("--band", required=True, type=str, help="Frequency band lo:hi.")
@click.option("--points", type=int, default=2000, show_default=True)
@click.option("--z0", type=str, default="50", show_default=True,
              help="Reference resistance for S parameters.")
@click.pass_obj
def sweep(obj, chain_path, band, points, z0):
    """Discretize a two-port chain into a Touchstone .s2p file."""
    chain = serde.load(chain_path)
    if not isinstance(chain, TwoPortChain):
        raise ValidationError(f"{chain_path}: expected chain.v1")
    lo, hi = parse_band(band)
    if points < 2:
        raise ValidationError(f"--points must be at least 2, got {points}")
    freqs = np.linspace(lo, hi, points)
    net = sweep_chain(chain, freqs, z_ref=parse_quantity(z0))
    out = obj.get("out")
    if out is None or out == "-":
        raise ValidationError("sweep writes a .s2p file; pass --out path.s2p")
    write_touchstone(out, net, comments=[f"input sha256 {serde.sha256_file(chain_path)}"])
    click.echo(f"wrote {out} ({points} points, {lo:.4g}..{hi:.4g} Hz)")


@cli.command()
@click.option("--touchstone", "ts_path", required=True, type=str)
@click.option("--pairs", required=True, type=int, help="Resonant pole pairs to fit.")
@click.option("--band", type=str, default=None, help="Restrict the fit band, lo:hi.")
@click.option("--max-iter", type=int, default=30, show_default=True)
@click.option("--weight", type=click.Choice(["uniform", "inverse_magnitude"]),
              default="uniform", show_default=True)
@click.option("--relaxed", is_flag=True, help="Relaxed nontriviality constraint.")
@click.option("--degenerate-hf-pole", is_flag=True,
              help="Allow one shared-frequency high-frequency pole.")
@click.option("--dc-capture-radius", type=str, default=None,
              help="Override the DC pole-capture radius (rad/s).")
@click.option("--report", "report_path", type=str, default=None,
              help="Fit report path (default: alongside the model).")
@click.pass_obj
def fit(obj, ts_path, pairs, band, max_iter, weight, relaxed, degenerate_hf_pole,
        dc_capture_radius, report_path):
    """Fit a lossless rational impedance model to sampled S data."""
    net, _ = read_touchstone(ts_path)
    if band:
        band_t = parse_band(band)
    else:
        band_t = (float(net.freqs[0]), float(net.freqs[-1]))
    cfg = FitConfig(
        n_pole_pairs=pairs,
        band=band_t,
        max_iterations=max_iter,
        weight_mode=weight,
        relaxed=relaxed,
        allow_degenerate_hf_pole=degenerate_hf_pole,
        dc_capture_radius=(parse_quantity(dc_capture_radius)
                           if dc_capture_radius else None),
    )
    model, report = fit_with_report(net, cfg)
    report = {
        "schema": "fit_report.v1",
        "input": {"path": str(ts_path), "sha256": serde.sha256_file(ts_path)},
        **report,
    }
    rms = report["final_rel_rms"]
    if rms > 1e-2:
        report["warnings"] = [
            f"relative RMS {rms:.3e} is high; consider more pole pairs or a "
            f"narrower band"
        ]
    out = obj.get("out")
    _write_text(out, serde.dumps(model))
    if report_path is None and out not in (None, "-"):
        report_path = str(Path(out).with_suffix("")) + ".report.json"
    if report_path:
        _write_text(report_path, serde.dumps(report))
    target = out if out not in (None, "-") else "stdout"
    click.echo(f"fit: {pairs} pairs, rel RMS {rms:.3e} -> {target}", err=True)


@cli.command()
@click.option("--model", "model_path", required=True, type=str,
              help="rational_impedance.v1 JSON.")
@click.pass_obj
def synth(obj, model_path):
    """Synthesize the capacitor-inductor cascade of a rational model."""
    z = serde.load(model_path)
    if not hasattr(z, "dc_residue"):
        raise ValidationError(f"{model_path}: expected rational_impedance.v1")
    cascade = synthesize_cascade(z)
    _write_text(obj.get("out"), serde.dumps(cascade))


@cli.command()
@click.option("--cascade", "cascade_path", required=True, type=str,
              help="cl_cascade.v1 JSON.")
@click.pass_obj
def analyze(obj, cascade_path):
    """Convert a capacitor-inductor cascade back to a rational model."""
    cascade = serde.load(cascade_path)
    if not isinstance(cascade, CLCascade):
        raise ValidationError(f"{cascade_path}: expected cl_cascade.v1")
    z, _ = cascade_to_rational(cascade)
    _write_text(obj.get("out"), serde.dumps(z))


@cli.command()
@click.option("--plan", "plan_path", required=True, type=str,
              help="connection_plan.v1 JSON.")
@click.pass_obj
def connect(obj, plan_path):
    """Interconnect rational models following a connection plan."""
    plan, paths = serde.load(plan_path)
    base = Path(plan_path).parent
    zs = []
    for nid in plan.networks:
        p = Path(paths[nid])
        z = serde.load(p if p.is_absolute() else base / p)
        if not hasattr(z, "dc_residue"):
            raise ValidationError(f"network {nid!r}: expected rational_impedance.v1")
        zs.append(z)
    merged = connect_rational(zs, plan)
    _write_text(obj.get("out"), serde.dumps(merged))
    click.echo("ports: " + ", ".join(merged.port_names), err=True)


def _ham_rows(hp) -> list[dict]:
    rows = []
    two_pi = 2.0 * np.pi
    for i, name in enumerate(hp.qubit_names):
        rows.append({"type": "qubit_frequency", "name_a": name, "name_b": "",
                     "value_hz": hp.omega_j[i] / two_pi})
        rows.append({"type": "anharmonicity", "name_a": name, "name_b": "",
                     "value_hz": hp.beta_j[i] / two_pi})
    for k, name in enumerate(hp.mode_names):
        rows.append({"type": "mode_frequency", "name_a": name, "name_b": "",
                     "value_hz": hp.omega_r[k] / two_pi})
    names = list(hp.qubit_names)
    for i in range(hp.n_qubits):
        for j in range(i + 1, hp.n_qubits):
            rows.append({"type": "coupling", "name_a": names[i], "name_b": names[j],
                         "value_hz": hp.g_qq[i, j] / two_pi})
    for i in range(hp.n_qubits):
        for k, mode in enumerate(hp.mode_names):
            rows.append({"type": "coupling", "name_a": names[i], "name_b": mode,
                         "value_hz": hp.g_qr[i, k] / two_pi})
    return rows


@cli.command()
@click.option("--model", "model_path", required=True, type=str,
              help="rational_impedance.v1 or cl_cascade.v1 JSON.")
@click.option("--junctions", "spec_path", required=True, type=str,
              help="transmon_spec.v1 JSON.")
@click.option("--qubit", "qubit_flags", multiple=True,
              help="Override a junction frequency target, NAME=FREQ.")
@click.pass_obj
def ham(obj, model_path, spec_path, qubit_flags):
    """Emit qubit/mode frequencies, anharmonicities, and couplings."""
    network = _load_network(model_path)
    spec = _load_spec(spec_path, qubit_flags)
    hp = hamiltonian_params(network, spec)
    header = {
        "schema": "ham_report.v1",
        "inputs": {
            "model": {"path": str(model_path), "sha256": serde.sha256_file(model_path)},
            "junctions": {"path": str(spec_path), "sha256": serde.sha256_file(spec_path)},
        },
    }
    _emit_table(obj, _ham_rows(hp), header)


def _eff_rows(ep, sweep_value=None) -> list[dict]:
    rows = []
    two_pi = 2.0 * np.pi
    base = {} if sweep_value is None else {"sweep_value": sweep_value}
    names = list(ep.qubit_names)
    for i, name in enumerate(names):
        rows.append({**base, "type": "qubit_frequency_eff", "name_a": name,
                     "name_b": "", "value_hz": ep.omega_j_eff[i] / two_pi})
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            rows.append({**base, "type": "coupling_eff", "name_a": names[i],
                         "name_b": names[j], "value_hz": ep.g_eff_qq[i, j] / two_pi})
    for i, qn in enumerate(names):
        for k, mn in enumerate(ep.mode_names):
            rows.append({**base, "type": "dispersive_shift", "name_a": qn,
                         "name_b": mn, "value_hz": ep.chi[i, k] / two_pi})
    return rows


@cli.command()
@click.option("--model", "model_path", required=True, type=str)
@click.option("--junctions", "spec_path", required=True, type=str)
@click.option("--qubit", "qubit_flags", multiple=True,
              help="Override a junction frequency target, NAME=FREQ.")
@click.option("--sweep", "sweep_flag", type=str, default=None,
              help="Sweep a coupler/qubit frequency target, NAME=lo:hi:count.")
@click.pass_obj
def eff(obj, model_path, spec_path, qubit_flags, sweep_flag):
    """Emit effective (mode-eliminated) qubit parameters."""
    network = _load_network(model_path)
    spec = _load_spec(spec_path, qubit_flags)
    header = {
        "schema": "eff_report.v1",
        "inputs": {
            "model": {"path": str(model_path), "sha256": serde.sha256_file(model_path)},
            "junctions": {"path": str(spec_path), "sha256": serde.sha256_file(spec_path)},
        },
    }
    if sweep_flag is None:
        hp = hamiltonian_params(network, spec)
        ep = effective_params(hp, spec.couplers)
        _emit_table(obj, _eff_rows(ep), header)
        return
    name, values = parse_sweep(sweep_flag)
    if name not in {j.port for j in spec.junctions}:
        raise ValidationError(f"--sweep names unknown junction {name!r}")
    rows = []
    for freq in values:
        swept = _load_spec(spec_path, qubit_flags + (f"{name}={freq}",))
        hp = hamiltonian_params(network, swept)
        ep = effective_params(hp, swept.couplers)
        rows.extend(_eff_rows(ep, sweep_value=float(freq)))
    _emit_table(obj, rows, header)


@cli.command()
@click.option("--model", "model_path", required=True, type=str,
              help="rational_impedance.v1 or cl_cascade.v1 JSON.")
@click.option("--junctions", "spec_path", required=True, type=str,
              help="transmon_spec.v1 with junction inductances or frequency targets.")
@click.option("--resistors", required=True, type=str,
              help="External terminations, 'P1=50,P2=50' (ohm).")
@click.option("--sweep", "sweep_flag", type=str, default=None,
              help="Sweep one junction inductance, NAME=start:stop:count (henry).")
@click.pass_obj
def decay(obj, model_path, spec_path, resistors, sweep_flag):
    """Emit lossy-mode poles and 1/kappa lifetimes as a table."""
    network = _load_network(model_path)
    spec = _load_spec(spec_path, ())
    resist = parse_assignments(resistors)
    hp = hamiltonian_params(network, spec)
    l_j = {name: josephson_inductance(hp.e_j[i])
           for i, name in enumerate(hp.qubit_names)}
    loss = LossSpec(
        external_ports=tuple(sorted(resist.items())),
        junction_ports=tuple((n, l_j[n]) for n in hp.qubit_names),
    )
    header = {
        "schema": "decay_report.v1",
        "inputs": {
            "model": {"path": str(model_path), "sha256": serde.sha256_file(model_path)},
            "junctions": {"path": str(spec_path), "sha256": serde.sha256_file(spec_path)},
        },
    }
    rows = []
    if sweep_flag is None:
        modes = lossy_mode_poles(network, loss)
        for k in range(modes.n_pairs):
            rows.append(_decay_row("", k, modes))
    else:
        name, values = parse_sweep(sweep_flag)
        if name not in l_j:
            raise ValidationError(f"--sweep names unknown junction {name!r}")
        for l_value, modes in zip(values, sweep_junction_inductance(
                network, loss, name, values)):
            for k in range(modes.n_pairs):
                rows.append(_decay_row(float(l_value), k, modes))
    _emit_table(obj, rows, header)


def _decay_row(l_value, k: int, modes) -> dict:
    kappa = float(modes.kappa[2 * k])
    return {
        "L_H": l_value,
        "mode_id": k,
        "freq_Hz": float(modes.omega[2 * k] / (2.0 * np.pi)),
        "kappa_per_s": kappa,
        "T1_s": 1.0 / kappa if kappa > 0.0 else float("inf"),
        "attribution": modes.attribution[2 * k],
    }


def main(argv=None) -> int:
    """Run the CLI without exiting the interpreter; returns the exit code."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except (click.UsageError, ValidationError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except NumericalError as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        return 3
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
