"""JSON encoding of kets, operators, ensembles, POVMs and protocols.

A complex number is ``[re, im]``; an operator is a row-major nested list of
complex numbers; a ket is ``{"dim": n, "amps": [...]}``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .linalg import ComplexMatrix
from .locc import Leaf, LoccProtocol, Node, ProtocolError
from .quantum import DensityOperator, Ensemble, Ket, Povm


class InputError(ValueError):
    """Malformed JSON input; the message names the offending field."""


def complex_to_json(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def complex_from_json(obj: Any, where: str) -> complex:
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        return complex(obj)
    if (
        isinstance(obj, list)
        and len(obj) == 2
        and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in obj)
    ):
        return complex(obj[0], obj[1])
    raise InputError(f"{where}: expected a complex number [re, im], got {obj!r}")


def matrix_to_json(m: ComplexMatrix) -> list:
    return [[complex_to_json(z) for z in row] for row in np.asarray(m)]


def matrix_from_json(obj: Any, where: str) -> ComplexMatrix:
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise InputError(f"{where}: expected a non-empty nested list of rows")
    n = len(obj[0])
    if any(len(r) != n for r in obj):
        raise InputError(f"{where}: rows have different lengths")
    return np.array(
        [[complex_from_json(z, f"{where}[{i}][{j}]") for j, z in enumerate(r)] for i, r in enumerate(obj)],
        dtype=np.complex128,
    )


def ket_to_json(k: Ket) -> dict:
    return {"dim": k.dim, "amps": [complex_to_json(z) for z in k.amps]}


def ket_from_json(obj: Any, where: str) -> Ket:
    if not isinstance(obj, dict) or "amps" not in obj:
        raise InputError(f"{where}: expected a ket object with 'amps'")
    amps = obj["amps"]
    if not isinstance(amps, list):
        raise InputError(f"{where}.amps: expected a list")
    vec = np.array([complex_from_json(z, f"{where}.amps[{i}]") for i, z in enumerate(amps)])
    if "dim" in obj and obj["dim"] != vec.size:
        raise InputError(f"{where}.dim: {obj['dim']} does not match {vec.size} amplitudes")
    try:
        return Ket(vec)
    except ValueError as exc:
        raise InputError(f"{where}: {exc}") from None


def ensemble_to_json(e: Ensemble) -> dict:
    states = [ket_to_json(s) if isinstance(s, Ket) else matrix_to_json(s.matrix) for s in e.states]
    return {"name": e.name, "dims": list(e.dims), "priors": [float(p) for p in e.priors], "labels": list(e.labels), "states": states}


def ensemble_from_json(obj: Any) -> Ensemble:
    if not isinstance(obj, dict):
        raise InputError("ensemble: expected a JSON object")
    for key in ("dims", "priors", "states"):
        if key not in obj:
            raise InputError(f"ensemble.{key}: missing")
    dims = obj["dims"]
    if not isinstance(dims, list) or not dims or not all(isinstance(d, int) and d > 0 for d in dims):
        raise InputError("ensemble.dims: expected a list of positive integers")
    if not isinstance(obj["states"], list):
        raise InputError("ensemble.states: expected a list")
    priors = obj["priors"]
    if not isinstance(priors, list) or not all(isinstance(p, (int, float)) for p in priors):
        raise InputError("ensemble.priors: expected a list of numbers")
    states = []
    for i, s in enumerate(obj["states"]):
        where = f"ensemble.states[{i}]"
        if isinstance(s, dict):
            states.append(ket_from_json(s, where))
        else:
            try:
                states.append(DensityOperator(matrix_from_json(s, where)))
            except InputError:
                raise
            except ValueError as exc:
                raise InputError(f"{where}: {exc}") from None
    labels = obj.get("labels", [])
    try:
        return Ensemble(tuple(dims), tuple(states), np.array(priors, dtype=float), tuple(labels), obj.get("name", ""))
    except ValueError as exc:
        raise InputError(f"ensemble: {exc}") from None


def povm_to_json(p: Povm) -> dict:
    return {"effects": [matrix_to_json(e) for e in p.effects]}


def povm_from_json(obj: Any) -> Povm:
    if not isinstance(obj, dict) or not isinstance(obj.get("effects"), list):
        raise InputError("povm.effects: missing or not a list")
    mats = [matrix_from_json(e, f"povm.effects[{i}]") for i, e in enumerate(obj["effects"])]
    try:
        return Povm(tuple(mats))
    except ValueError as exc:
        raise InputError(f"povm: {exc}") from None


def _tree_to_json(t: Node | Leaf) -> dict:
    if isinstance(t, Leaf):
        return {"guess": t.guess}
    return {"party": t.party, "effects": [matrix_to_json(e) for e in t.effects], "children": [_tree_to_json(c) for c in t.children]}


def protocol_to_json(p: LoccProtocol) -> dict:
    return {
        "name": p.name,
        "parties": ["A", "B"],
        "dims": list(p.dims),
        "direction": p.direction,
        "description": p.description,
        "root": _tree_to_json(p.root),
    }


def _tree_from_json(obj: Any, where: str) -> Node | Leaf:
    if not isinstance(obj, dict):
        raise InputError(f"{where}: expected an object")
    if "guess" in obj:
        if not isinstance(obj["guess"], str):
            raise InputError(f"{where}.guess: expected a string label")
        return Leaf(obj["guess"])
    for key in ("party", "effects", "children"):
        if key not in obj:
            raise InputError(f"{where}.{key}: missing")
    if not isinstance(obj["effects"], list) or not isinstance(obj["children"], list):
        raise InputError(f"{where}: effects and children must be lists")
    effects = tuple(matrix_from_json(e, f"{where}.effects[{i}]") for i, e in enumerate(obj["effects"]))
    children = tuple(_tree_from_json(c, f"{where}.children[{i}]") for i, c in enumerate(obj["children"]))
    try:
        return Node(obj["party"], effects, children)
    except ValueError as exc:
        raise InputError(f"{where}: {exc}") from None


def protocol_from_json(obj: Any) -> LoccProtocol:
    if not isinstance(obj, dict):
        raise InputError("protocol: expected a JSON object")
    if obj.get("parties", ["A", "B"]) != ["A", "B"]:
        raise InputError("protocol.parties: must be [\"A\", \"B\"]")
    dims = obj.get("dims")
    if not isinstance(dims, list) or len(dims) != 2 or not all(isinstance(d, int) and d > 0 for d in dims):
        raise InputError("protocol.dims: expected two positive integers")
    if "root" not in obj:
        raise InputError("protocol.root: missing")
    root = _tree_from_json(obj["root"], "protocol.root")
    if not isinstance(root, Node):
        raise InputError("protocol.root: must be a measurement node")
    try:
        return LoccProtocol(obj.get("name", ""), tuple(dims), root, obj.get("direction", "two-way"), obj.get("description", ""))
    except (ProtocolError, ValueError) as exc:
        raise InputError(f"protocol: {exc}") from None


def load_json(path: str | Path) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def dump_json(obj: Any, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")
