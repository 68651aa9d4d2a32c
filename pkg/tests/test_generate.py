import numpy as np
import pytest

from recondiv.errors import ParameterError
from recondiv.fileio import dumps
from recondiv.generate import GeneratorConfig, generate_instance, sample_population
from recondiv.model import Additive, Multiplicative, validate


def test_same_seed_same_instance():
    assert dumps(generate_instance(8, 42)) == dumps(generate_instance(8, 42))
    assert dumps(generate_instance(8, 42)) != dumps(generate_instance(8, 43))


@pytest.mark.parametrize("model", ["additive", "multiplicative"])
@pytest.mark.parametrize("endowment", [False, True])
def test_valid_instances(model, endowment):
    inst = generate_instance(10, 1, model, endowment=endowment)
    assert validate(inst) == []
    assert isinstance(inst.valuation, Additive if model == "additive" else Multiplicative)
    assert inst.n == 10 and len(inst.valuation.beta) == 19


def test_normalization_bounds_products():
    inst = generate_instance(20, 5, normalize=1.5)
    prods = np.array(inst.valuation.products())
    assert prods.max() <= 1.5 + 1e-9 and prods.min() >= 1 / 1.5 - 1e-9


def test_endowment_only_moves_changed_ownership():
    pop = sample_population(5, 7)
    adjusted = pop.adjusted_influences()
    owned_now = [set(np.flatnonzero(pop.beta[:, i]).tolist()) for i in range(5)]
    for i in range(5):
        for t in range(19):
            if (t in pop.survey_owned[i]) == (t in owned_now[i]):
                assert adjusted[i, t] == pop.influences[i, t]


def test_config_validation():
    with pytest.raises(ParameterError):
        GeneratorConfig(presence=1.5)
    with pytest.raises(ParameterError):
        GeneratorConfig(size_range=(0, 10))
    with pytest.raises(ParameterError):
        GeneratorConfig(influence_mean=[1.0, 2.0])
    with pytest.raises(ParameterError):
        generate_instance(0, 1)
    with pytest.raises(ParameterError):
        generate_instance(3, 1, "direct")


def test_price_scale():
    pop = sample_population(50, 0)
    assert 60 * 20_000 <= pop.base_price.min() and pop.base_price.max() <= 140 * 40_000
