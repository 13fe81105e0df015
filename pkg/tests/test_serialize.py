import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from localdisc import catalog
from localdisc.locc import builtin_protocols, evaluate_exact, builtin_ensemble
from localdisc.optimizer import random_povm
from localdisc.serialize import (
    InputError,
    ensemble_from_json,
    ensemble_to_json,
    load_json,
    povm_from_json,
    povm_to_json,
    protocol_from_json,
    protocol_to_json,
)


def _roundtrip(obj):
    return json.loads(json.dumps(obj))


@pytest.mark.parametrize("name", list(catalog.named_problems()))
def test_ensemble_roundtrip(name):
    ens = catalog.named_problems()[name].ensemble
    back = ensemble_from_json(_roundtrip(ensemble_to_json(ens)))
    assert back.labels == ens.labels and back.dims == ens.dims
    assert np.allclose(back.priors, ens.priors, atol=0)
    for a, b in zip(ens.matrices(), back.matrices()):
        assert np.array_equal(a, b)


@given(st.integers(0, 2**32 - 1), st.integers(2, 9), st.integers(1, 8))
def test_povm_roundtrip_is_exact(seed, dim, n):
    povm = random_povm(n, dim, seed)
    back = povm_from_json(_roundtrip(povm_to_json(povm)))
    for a, b in zip(povm.effects, back.effects):
        assert np.array_equal(a, b)


@pytest.mark.parametrize("name", sorted(builtin_protocols()))
def test_protocol_roundtrip_preserves_value(name):
    b = builtin_protocols()[name]
    back = protocol_from_json(_roundtrip(protocol_to_json(b.protocol)))
    ens = builtin_ensemble(b.ensemble)
    assert back.messages() == b.protocol.messages()
    assert abs(evaluate_exact(back, ens) - evaluate_exact(b.protocol, ens)) <= 1e-15


@pytest.mark.parametrize(
    "obj,field",
    [
        ({"priors": [1], "states": []}, "ensemble.dims"),
        ({"dims": [2], "priors": [1], "states": [{"amps": [[1, 0], "x"]}]}, r"ensemble.states\[0\].amps\[1\]"),
        ({"dims": [2], "priors": [1], "states": [{"amps": [1, 1]}]}, r"ensemble.states\[0\]"),
        ({"dims": [2], "priors": [0.5, 0.6], "states": [{"amps": [1, 0]}, {"amps": [0, 1]}]}, "ensemble"),
        ({"dims": [2], "priors": [1], "states": [[[1, 0], [0]]]}, r"ensemble.states\[0\]"),
    ],
)
def test_ensemble_errors_name_the_field(obj, field):
    with pytest.raises(InputError, match=field):
        ensemble_from_json(obj)


def test_povm_and_protocol_errors():
    with pytest.raises(InputError, match="povm.effects"):
        povm_from_json({"effect": []})
    with pytest.raises(InputError, match="protocol.dims"):
        protocol_from_json({"dims": [2], "root": {}})
    with pytest.raises(InputError, match="protocol.root.children"):
        protocol_from_json({"dims": [2, 2], "root": {"party": "A", "effects": []}})
    with pytest.raises(InputError, match="protocol"):
        protocol_from_json({"dims": [2, 2], "root": {"party": "A", "effects": [[[1, 0], [0, 0]]], "children": [{"guess": "x"}]}})


def test_load_json_errors(tmp_path):
    with pytest.raises(InputError, match="cannot read"):
        load_json(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(InputError, match="invalid JSON"):
        load_json(bad)
