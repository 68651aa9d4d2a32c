import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from oracles import example_two, random_additive
from recondiv.errors import InstanceFormatError
from recondiv.fileio import dumps, instance_to_dict, load, loads, save
from recondiv.generate import generate_instance

INSTANCES = Path(__file__).resolve().parent.parent / "instances"


@pytest.mark.parametrize("name", sorted(p.name for p in INSTANCES.glob("*.json")))
def test_shipped_instances_round_trip(name):
    inst = load(INSTANCES / name)
    again = loads(dumps(inst))
    assert again.values == inst.values
    assert again.agents == inst.agents


def test_exact_fractions_survive(tmp_path):
    inst = example_two(eps=Fraction(1, 3))
    path = tmp_path / "x.json"
    save(inst, path)
    back = load(path)
    assert back.exact and back.values == inst.values
    assert '"4/3"' in path.read_text()


def test_additive_without_names_round_trips():
    inst = random_additive(np.random.default_rng(0), 3, 4)
    assert loads(dumps(inst)).values == inst.values


def test_generated_instance_round_trips():
    inst = generate_instance(6, 3, endowment=True)
    back = loads(dumps(inst))
    for r1, r2 in zip(inst.values, back.values):
        assert r1 == pytest.approx(r2, rel=1e-15)


def _doc():
    return instance_to_dict(load(INSTANCES / "additive_example.json"))


def test_unknown_field_strict_and_lenient():
    doc = _doc()
    doc["colour"] = "blue"
    with pytest.raises(InstanceFormatError):
        loads(json.dumps(doc))
    with pytest.warns(UserWarning):
        inst = loads(json.dumps(doc), strict=False)
    assert inst.values[0] == (160, 210, 250, 290)


def test_missing_beta_rejected():
    doc = _doc()
    del doc["beta"]["a2"]
    with pytest.raises(InstanceFormatError) as info:
        loads(json.dumps(doc))
    assert info.value.violations


def test_null_indicator_rejected():
    doc = _doc()
    doc["beta"]["a1"][0] = None
    with pytest.raises(InstanceFormatError):
        loads(json.dumps(doc))


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(format="other"),
    lambda d: d.update(model="quadratic"),
    lambda d: d["scores"][0].__setitem__(0, -5),
    lambda d: d["beta"]["a1"].__setitem__(0, 2),
    lambda d: d.update(agents=["x"]),
])
def test_invalid_documents(mutate):
    doc = _doc()
    mutate(doc)
    with pytest.raises(InstanceFormatError):
        loads(json.dumps(doc))


def test_not_json():
    with pytest.raises(InstanceFormatError):
        loads("{not json")


def test_normalize_on_load():
    doc = instance_to_dict(load(INSTANCES / "rat_multiplicative.json"))
    doc["normalize"] = 2.0
    inst = loads(json.dumps(doc))
    assert max(max(r) for r in inst.valuation.products()) <= 2.0 + 1e-12
