"""JSON artifacts and the workspace manifest.

Every document carries a "schema" tag (<name>.v1) and stores SI base units.
Matrices are flattened row-major. dumps() output is deterministic: sorted
keys, two-space indent, trailing newline; floats use repr (shortest exact
round-trip), so identical objects always serialize to identical bytes.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import MaxwellCapacitance, Mode, RationalImpedance
from .distributed import SeriesCapacitor, ShuntBranch, TLine, TwoPortChain
from .errors import ValidationError
from .interconnect import ConnectionPlan
from .qham import JunctionSpec, TransmonSpec
from .synthesis import CLCascade

SCHEMA_KEY = "schema"


def _require(d: dict, key: str, schema: str):
    if key not in d:
        raise ValidationError(f"{schema}: missing required key {key!r}")
    return d[key]


def _check_schema(d: dict, expected: str):
    got = d.get(SCHEMA_KEY)
    if got != expected:
        raise ValidationError(f"expected schema {expected!r}, got {got!r}")


def _flat(matrix: np.ndarray) -> list:
    return [float(x) for x in np.asarray(matrix).reshape(-1)]


def _square(values, n: int, schema: str, key: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (n * n,):
        raise ValidationError(
            f"{schema}: {key} must hold {n * n} row-major entries, got {arr.size}"
        )
    return arr.reshape(n, n)


def rational_to_dict(z: RationalImpedance) -> dict:
    return {
        SCHEMA_KEY: "rational_impedance.v1",
        "ports": z.n_ports,
        "port_names": list(z.port_names),
        "dc_residue": _flat(z.dc_residue),
        "modes": [
            {"omega_rad_s": float(m.omega), "r_row": [float(x) for x in m.r_row]}
            for m in z.modes
        ],
    }


def rational_from_dict(d: dict) -> RationalImpedance:
    s = "rational_impedance.v1"
    _check_schema(d, s)
    n = int(_require(d, "ports", s))
    names = tuple(str(x) for x in _require(d, "port_names", s))
    r0 = _square(_require(d, "dc_residue", s), n, s, "dc_residue")
    modes = []
    for m in _require(d, "modes", s):
        row = np.asarray(_require(m, "r_row", s), dtype=float)
        if row.shape != (n,):
            raise ValidationError(f"{s}: r_row length {row.size} != ports {n}")
        modes.append(Mode(float(_require(m, "omega_rad_s", s)), row))
    return RationalImpedance(r0, tuple(modes), names)


def maxwell_to_dict(c: MaxwellCapacitance) -> dict:
    return {
        SCHEMA_KEY: "maxwell.v1",
        "nodes": list(c.node_names),
        "matrix": _flat(c.matrix),
    }


def maxwell_from_dict(d: dict) -> MaxwellCapacitance:
    s = "maxwell.v1"
    _check_schema(d, s)
    nodes = tuple(str(x) for x in _require(d, "nodes", s))
    m = _square(_require(d, "matrix", s), len(nodes), s, "matrix")
    return MaxwellCapacitance(m, nodes)


def cascade_to_dict(c: CLCascade) -> dict:
    return {
        SCHEMA_KEY: "cl_cascade.v1",
        "ports": list(c.port_names),
        "resonators": list(c.resonator_names),
        "maxwell": _flat(c.capacitance.matrix),
        "inductors_h": [float(x) for x in c.shunt_inductors],
    }


def cascade_from_dict(d: dict) -> CLCascade:
    s = "cl_cascade.v1"
    _check_schema(d, s)
    ports = tuple(str(x) for x in _require(d, "ports", s))
    res = tuple(str(x) for x in _require(d, "resonators", s))
    n = len(ports) + len(res)
    m = _square(_require(d, "maxwell", s), n, s, "maxwell")
    ind = np.asarray(_require(d, "inductors_h", s), dtype=float)
    cap = MaxwellCapacitance(m, ports + res)
    return CLCascade(cap, len(ports), ind)


def plan_to_dict(plan: ConnectionPlan, paths: dict[str, str]) -> dict:
    missing = set(plan.networks) - set(paths)
    if missing:
        raise ValidationError(f"no path given for networks {sorted(missing)}")
    return {
        SCHEMA_KEY: "connection_plan.v1",
        "networks": [{"id": nid, "path": str(paths[nid])} for nid in plan.networks],
        "joins": [[a, b] for a, b in plan.joins],
        "leave_open": list(plan.leave_open),
    }


def plan_from_dict(d: dict) -> tuple[ConnectionPlan, dict[str, str]]:
    s = "connection_plan.v1"
    _check_schema(d, s)
    nets = _require(d, "networks", s)
    ids = tuple(str(_require(x, "id", s)) for x in nets)
    paths = {str(x["id"]): str(_require(x, "path", s)) for x in nets}
    joins = tuple((str(a), str(b)) for a, b in d.get("joins", ()))
    leave_open = tuple(str(x) for x in d.get("leave_open", ()))
    return ConnectionPlan(ids, joins, leave_open), paths


_CHAIN_KINDS = {
    "series_capacitor": SeriesCapacitor,
    "shunt": ShuntBranch,
    "tline": TLine,
}


def _element_to_dict(e) -> dict:
    if isinstance(e, SeriesCapacitor):
        return {"kind": "series_capacitor", "c_f": e.c}
    if isinstance(e, ShuntBranch):
        out = {"kind": "shunt"}
        if e.c is not None:
            out["c_f"] = e.c
        if e.l is not None:
            out["l_h"] = e.l
        if e.r is not None:
            out["r_ohm"] = e.r
        return out
    if isinstance(e, TLine):
        out = {
            "kind": "tline",
            "l_per_m": e.l_per_m,
            "c_per_m": e.c_per_m,
            "length_m": e.length,
        }
        if e.z0 is not None:
            out["z0_ohm"] = e.z0
        return out
    raise ValidationError(f"unknown chain element type {type(e).__name__}")


def _element_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "series_capacitor":
        return SeriesCapacitor(float(_require(d, "c_f", "chain.v1")))
    if kind == "shunt":
        return ShuntBranch(
            c=float(d["c_f"]) if "c_f" in d else None,
            l=float(d["l_h"]) if "l_h" in d else None,
            r=float(d["r_ohm"]) if "r_ohm" in d else None,
        )
    if kind == "tline":
        return TLine(
            float(_require(d, "l_per_m", "chain.v1")),
            float(_require(d, "c_per_m", "chain.v1")),
            float(_require(d, "length_m", "chain.v1")),
            z0=float(d["z0_ohm"]) if "z0_ohm" in d else None,
        )
    raise ValidationError(
        f"chain.v1: unknown element kind {kind!r}; expected one of {sorted(_CHAIN_KINDS)}"
    )


def chain_to_dict(chain: TwoPortChain) -> dict:
    return {
        SCHEMA_KEY: "chain.v1",
        "elements": [_element_to_dict(e) for e in chain.elements],
    }


def chain_from_dict(d: dict) -> TwoPortChain:
    s = "chain.v1"
    _check_schema(d, s)
    return TwoPortChain(tuple(_element_from_dict(e) for e in _require(d, "elements", s)))


def transmon_spec_to_dict(spec: TransmonSpec) -> dict:
    junctions = []
    for j in spec.junctions:
        out = {"port": j.port}
        if j.e_j is not None:
            out["e_j_joule"] = j.e_j
        if j.l_j is not None:
            out["l_j_h"] = j.l_j
        if j.freq_target is not None:
            out["freq_target_hz"] = j.freq_target
        junctions.append(out)
    return {
        SCHEMA_KEY: "transmon_spec.v1",
        "junctions": junctions,
        "couplers": list(spec.couplers),
        "open_ports": list(spec.open_ports),
    }


def transmon_spec_from_dict(d: dict) -> TransmonSpec:
    s = "transmon_spec.v1"
    _check_schema(d, s)
    junctions = []
    for j in _require(d, "junctions", s):
        junctions.append(
            JunctionSpec(
                str(_require(j, "port", s)),
                e_j=float(j["e_j_joule"]) if "e_j_joule" in j else None,
                l_j=float(j["l_j_h"]) if "l_j_h" in j else None,
                freq_target=float(j["freq_target_hz"]) if "freq_target_hz" in j else None,
            )
        )
    couplers = tuple(str(x) for x in d.get("couplers", ()))
    open_ports = tuple(str(x) for x in d.get("open_ports", ()))
    return TransmonSpec(tuple(junctions), couplers, open_ports)


_TO_DICT = {
    RationalImpedance: rational_to_dict,
    MaxwellCapacitance: maxwell_to_dict,
    CLCascade: cascade_to_dict,
    TwoPortChain: chain_to_dict,
    TransmonSpec: transmon_spec_to_dict,
}

_FROM_DICT = {
    "rational_impedance.v1": rational_from_dict,
    "maxwell.v1": maxwell_from_dict,
    "cl_cascade.v1": cascade_from_dict,
    "connection_plan.v1": plan_from_dict,
    "chain.v1": chain_from_dict,
    "transmon_spec.v1": transmon_spec_from_dict,
}


def to_dict(obj) -> dict:
    fn = _TO_DICT.get(type(obj))
    if fn is None:
        raise ValidationError(f"no JSON schema for {type(obj).__name__}")
    return fn(obj)


def from_dict(d: dict):
    schema = d.get(SCHEMA_KEY)
    fn = _FROM_DICT.get(schema)
    if fn is None:
        raise ValidationError(
            f"unknown schema {schema!r}; expected one of {sorted(_FROM_DICT)}"
        )
    return fn(d)


def dumps(obj) -> str:
    d = obj if isinstance(obj, dict) else to_dict(obj)
    return json.dumps(d, sort_keys=True, indent=2) + "\n"


def save(obj, path) -> Path:
    path = Path(path)
    path.write_text(dumps(obj))
    return path


def load(path):
    """Parse any known artifact; dispatches on the document's schema tag."""
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(d, dict):
        raise ValidationError(f"{path}: expected a JSON object at top level")
    return from_dict(d)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


@dataclass
class Workspace:
    """Named artifact registry backed by a manifest.json.

    Artifacts are stored relative to the workspace root so a workspace
    directory can be moved or shared; verify() re-hashes and re-parses
    everything against the recorded state.
    """

    root: Path

    def __post_init__(self):
        self.root = Path(self.root)
        self._artifacts: dict[str, dict] = {}
        manifest = self.root / "manifest.json"
        if manifest.exists():
            d = json.loads(manifest.read_text())
            self._artifacts = d.get("artifacts", {})

    @property
    def artifacts(self) -> dict[str, dict]:
        return dict(self._artifacts)

    def add(self, name: str, path, schema: str | None = None) -> dict:
        path = Path(path)
        full = path if path.is_absolute() else self.root / path
        if not full.exists():
            raise ValidationError(f"artifact file {full} does not exist")
        rel = full.relative_to(self.root) if full.is_relative_to(self.root) else full
        if schema is None and full.suffix == ".json":
            doc = json.loads(full.read_text())
            schema = doc.get(SCHEMA_KEY) if isinstance(doc, dict) else None
        entry = {"path": str(rel), "sha256": sha256_file(full)}
        if schema:
            entry["schema"] = schema
        self._artifacts[name] = entry
        return entry

    def path_of(self, name: str) -> Path:
        if name not in self._artifacts:
            raise ValidationError(f"no artifact named {name!r} in the manifest")
        p = Path(self._artifacts[name]["path"])
        return p if p.is_absolute() else self.root / p

    def save_manifest(self) -> Path:
        out = self.root / "manifest.json"
        doc = {"artifacts": {k: self._artifacts[k] for k in sorted(self._artifacts)}}
        out.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
        return out

    def verify(self) -> list[str]:
        """Return problem descriptions; empty means every artifact checks out."""
        problems = []
        for name, entry in sorted(self._artifacts.items()):
            full = self.path_of(name)
            if not full.exists():
                problems.append(f"{name}: file {full} is missing")
                continue
            digest = sha256_file(full)
            if digest != entry["sha256"]:
                problems.append(f"{name}: content hash changed")
            schema = entry.get("schema")
            if schema:
                try:
                    obj = load(full)
                except Exception as exc:  # a verifier reports, it never raises
                    problems.append(f"{name}: does not parse ({exc})")
                    continue
                got = to_dict(obj).get(SCHEMA_KEY) if not isinstance(obj, tuple) else schema
                if got != schema:
                    problems.append(
                        f"{name}: declared schema {schema} but parsed as {got}"
                    )
        return problems
