import json
import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from chopt.space import (
    Condition,
    ConditionGroup,
    ParamSpec,
    ParseError,
    ValidationError,
    append_param,
    narrow,
    parse_config,
    perturb,
    sample,
    serialize_config,
)
from conftest import BASE_CONFIG, FixedRng, make_config


# ---------------------------------------------------------------------------
# parsing


def test_parse_reference_document(base_config):
    lr = base_config.space.get("lr")
    assert lr.kind == "float"
    assert lr.distribution == "log_uniform"
    assert lr.parameters == (0.01, 0.09)
    assert lr.p_range == (0.001, 0.1)

    depth = base_config.space.get("depth")
    assert depth.kind == "int"
    assert depth.distribution == "uniform"
    assert depth.parameters == (5, 10)

    activation = base_config.space.get("activation")
    assert activation.kind == "categorical"
    assert activation.parameters == ("relu", "sigmoid")

    assert base_config.measure == "test/accuracy"
    assert base_config.order == "descending"
    assert base_config.step == 5
    assert base_config.population == 5
    assert base_config.tune.method == "pbt"
    assert base_config.termination.max_session_number == 50
    assert base_config.termination.time_budget is None


def test_parse_fills_defaults(base_config):
    # defaults: stop_ratio plus the unstated pbt knobs
    assert base_config.stop_ratio == 0.5
    assert base_config.tune.params["perturb_factors"] == (0.8, 1.2)
    assert base_config.tune.params["resample_prob"] == 0.1
    assert base_config.tune.params["quantile"] == 0.2


def test_parse_step_and_population_defaults():
    raw = {k: v for k, v in BASE_CONFIG.items() if k not in ("step", "population")}
    raw["tune"] = {"random_search": {}}
    config = parse_config(json.dumps(raw))
    assert config.step == -1
    assert config.population == 1


def test_step_minus_one_accepted():
    config = make_config(step=-1, tune={"random_search": {}})
    assert config.step == -1


def test_single_quoted_document_rejected():
    text = "{'measure': 'test/accuracy'}"
    with pytest.raises(ParseError) as info:
        parse_config(text)
    assert info.value.line == 1
    assert info.value.column == 2


def test_inverted_range_names_field():
    raw = json.loads(json.dumps(BASE_CONFIG))
    raw["h_params"]["lr"]["parameters"] = [0.2, 0.1]
    with pytest.raises(ValidationError) as info:
        parse_config(json.dumps(raw))
    assert info.value.field == "h_params.lr.parameters"


def test_unknown_top_level_key_rejected():
    with pytest.raises(ValidationError) as info:
        make_config(extra=1)
    assert info.value.field == "extra"


def test_missing_required_key():
    raw = {k: v for k, v in BASE_CONFIG.items() if k != "measure"}
    with pytest.raises(ValidationError) as info:
        parse_config(json.dumps(raw))
    assert info.value.field == "measure"


def test_hyperband_requires_resource_limit():
    with pytest.raises(ValidationError) as info:
        make_config(tune={"hyperband": {}})
    assert info.value.field == "tune.hyperband.R"


def test_hyperband_rejects_disabled_checkpoints():
    with pytest.raises(ValidationError) as info:
        make_config(step=-1, tune={"hyperband": {"R": 81}})
    assert info.value.field == "step"


def test_hyperband_eta_default():
    config = make_config(tune={"hyperband": {"R": 81}})
    assert config.tune.params == {"eta": 3, "R": 81}


def test_termination_must_set_a_condition():
    with pytest.raises(ValidationError) as info:
        make_config(termination={})
    assert info.value.field == "termination"


def test_constants_cannot_shadow_params():
    with pytest.raises(ValidationError) as info:
        make_config(constants={"depth": 20})
    assert info.value.field == "constants.depth"


def test_round_trip_identity(base_config):
    assert parse_config(serialize_config(base_config)) == base_config


def test_round_trip_with_conditions():
    config = make_config(
        h_params={
            "optimizer": {
                "parameters": ["sgd", "adam"],
                "distribution": "categorical",
                "type": "str",
            },
            "momentum": {
                "parameters": [0.1, 0.999],
                "distribution": "uniform",
                "type": "float",
            },
        },
        h_params_conditions=[
            {"child": "momentum", "parent": "optimizer", "values": ["sgd"]}
        ],
        tune={"random_search": {}},
    )
    again = parse_config(serialize_config(config))
    assert again == config
    assert again.space.conditions[0].parent == "optimizer"


def test_cyclic_conditions_rejected():
    with pytest.raises(ValidationError):
        make_config(
            h_params={
                "a": {"parameters": [0, 1], "distribution": "uniform", "type": "float"},
                "b": {"parameters": [0, 1], "distribution": "uniform", "type": "float"},
            },
            h_params_conditions=[
                {"child": "a", "parent": "b", "values": [1]},
                {"child": "b", "parent": "a", "values": [1]},
            ],
            tune={"random_search": {}},
        )


# ---------------------------------------------------------------------------
# sampling


def _lr_only_space():
    return make_config().space


def test_log_uniform_low_boundary():
    space = _lr_only_space()
    value = sample(space, FixedRng(u=0.0))["lr"]
    assert value == pytest.approx(0.01)


def test_log_uniform_geometric_midpoint():
    # u = 0.5 lands on sqrt(lo * hi)
    space = _lr_only_space()
    value = sample(space, FixedRng(u=0.5))["lr"]
    assert value == pytest.approx(math.sqrt(0.01 * 0.09))
    assert value == pytest.approx(0.03)


def test_inactive_child_not_sampled():
    config = make_config(
        h_params={
            "optimizer": {
                "parameters": ["sgd", "adam"],
                "distribution": "categorical",
                "type": "str",
            },
            "momentum": {
                "parameters": [0.1, 0.999],
                "distribution": "uniform",
                "type": "float",
            },
        },
        h_params_conditions=[
            {"child": "momentum", "parent": "optimizer", "values": ["sgd"]}
        ],
        tune={"random_search": {}},
    )
    # index 1 picks adam, so momentum must stay inactive
    drawn = sample(config.space, FixedRng(index=1))
    assert drawn["optimizer"] == "adam"
    assert "momentum" not in drawn

    drawn = sample(config.space, FixedRng(index=0))
    assert drawn["optimizer"] == "sgd"
    assert "momentum" in drawn


def test_log_uniform_equal_log_measure_halves():
    space = make_config(
        h_params={
            "lr": {
                "parameters": [0.001, 0.1],
                "distribution": "log_uniform",
                "type": "float",
            }
        },
        tune={"random_search": {}},
    ).space
    rng = random.Random(7)
    n = 10_000
    below = sum(1 for _ in range(n) if sample(space, rng)["lr"] <= 0.01)
    assert abs(below / n - 0.5) < 0.03


def test_int_uniform_inclusive_bounds():
    space = make_config().space
    rng = random.Random(3)
    values = {sample(space, rng)["depth"] for _ in range(500)}
    assert values == {5, 6, 7, 8, 9, 10}


def test_gaussian_clamped_to_p_range():
    space = make_config(
        h_params={
            "scale": {
                "parameters": [0.5, 10.0],
                "distribution": "gaussian",
                "type": "float",
                "p_range": [0.0, 1.0],
            }
        },
        tune={"random_search": {}},
    ).space
    rng = random.Random(11)
    for _ in range(200):
        assert 0.0 <= sample(space, rng)["scale"] <= 1.0


@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_sample_satisfies_assignment_invariants(seed):
    config = make_config(
        h_params={
            "optimizer": {
                "parameters": ["sgd", "adam"],
                "distribution": "categorical",
                "type": "str",
            },
            "momentum": {
                "parameters": [0.1, 0.999],
                "distribution": "uniform",
                "type": "float",
            },
            "lr": {
                "parameters": [0.01, 0.09],
                "distribution": "log_uniform",
                "type": "float",
                "p_range": [0.001, 0.1],
            },
        },
        h_params_conditions=[
            {"child": "momentum", "parent": "optimizer", "values": ["sgd"]}
        ],
        tune={"random_search": {}},
    )
    drawn = sample(config.space, random.Random(seed))
    assert drawn["optimizer"] in ("sgd", "adam")
    assert ("momentum" in drawn) == (drawn["optimizer"] == "sgd")
    if "momentum" in drawn:
        assert 0.1 <= drawn["momentum"] <= 0.999
    assert 0.001 <= drawn["lr"] <= 0.1


# ---------------------------------------------------------------------------
# perturbation


def test_perturb_scales_within_range():
    space = _lr_only_space()
    out = perturb(space, {"lr": 0.05, "depth": 9, "activation": "relu"}, FixedRng(index=1))
    assert out["lr"] == pytest.approx(0.06)


def test_perturb_clamps_to_p_range():
    space = _lr_only_space()
    out = perturb(space, {"lr": 0.09, "depth": 9, "activation": "relu"}, FixedRng(index=1))
    assert out["lr"] == pytest.approx(0.1)


def test_perturb_rounds_ints_half_away():
    # 9 * 0.8 = 7.2 rounds to 7
    space = _lr_only_space()
    out = perturb(space, {"lr": 0.05, "depth": 9, "activation": "relu"}, FixedRng(index=0))
    assert out["depth"] == 7


def test_perturb_keeps_categorical_without_resample():
    space = _lr_only_space()
    # u=0.5 >= resample_prob 0.1, so the category survives
    out = perturb(space, {"lr": 0.05, "depth": 9, "activation": "sigmoid"}, FixedRng(u=0.5))
    assert out["activation"] == "sigmoid"


def test_perturb_resamples_categorical_at_probability():
    space = _lr_only_space()
    rng = random.Random(5)
    flips = sum(
        1
        for _ in range(2000)
        if perturb(space, {"lr": 0.05, "depth": 9, "activation": "relu"}, rng)["activation"]
        != "relu"
    )
    # resample picks uniformly over both categories, so observed flip rate
    # is resample_prob / 2
    assert abs(flips / 2000 - 0.05) < 0.02


def test_perturb_repairs_conditional_activation():
    config = make_config(
        h_params={
            "optimizer": {
                "parameters": ["sgd", "adam"],
                "distribution": "categorical",
                "type": "str",
            },
            "momentum": {
                "parameters": [0.1, 0.999],
                "distribution": "uniform",
                "type": "float",
            },
        },
        h_params_conditions=[
            {"child": "momentum", "parent": "optimizer", "values": ["sgd"]}
        ],
        tune={"random_search": {}},
    )
    rng = random.Random(2)
    seen_drop = seen_add = False
    current = {"optimizer": "sgd", "momentum": 0.5}
    for _ in range(400):
        out = perturb(config.space, current, rng)
        if out["optimizer"] == "adam":
            assert "momentum" not in out
            seen_drop = True
        else:
            assert 0.1 <= out["momentum"] <= 0.999
        again = perturb(config.space, {"optimizer": "adam"}, rng)
        if again["optimizer"] == "sgd":
            assert "momentum" in again
            seen_add = True
    assert seen_drop and seen_add


@given(
    start=st.floats(min_value=0.001, max_value=0.1),
    seed=st.integers(min_value=0, max_value=2**32 - 1),
    rounds=st.integers(min_value=1, max_value=8),
)
@settings(max_examples=60, deadline=None)
def test_repeated_perturb_stays_in_p_range(start, seed, rounds):
    space = _lr_only_space()
    rng = random.Random(seed)
    a = {"lr": start, "depth": 7, "activation": "relu"}
    for _ in range(rounds):
        a = perturb(space, a, rng)
        assert 0.001 <= a["lr"] <= 0.1
        assert isinstance(a["depth"], int)


# ---------------------------------------------------------------------------
# narrow / append


def test_narrow_replaces_parameters():
    space = make_config(
        h_params={
            "lr": {
                "parameters": [0.001, 0.2],
                "distribution": "log_uniform",
                "type": "float",
                "p_range": [0.0001, 0.5],
            }
        },
        tune={"random_search": {}},
    ).space
    narrowed = narrow(space, {"lr": [0.0334, 0.0868]})
    assert narrowed.get("lr").parameters == (0.0334, 0.0868)
    # original untouched
    assert space.get("lr").parameters == (0.001, 0.2)


def test_narrow_empty_is_identity(base_config):
    assert narrow(base_config.space, {}) == base_config.space


def test_narrow_outside_p_range_rejected(base_config):
    with pytest.raises(ValidationError) as info:
        narrow(base_config.space, {"lr": [0.0001, 0.01]})
    assert info.value.field == "narrow.lr"


def test_narrow_then_sample_stays_inside(base_config):
    narrowed = narrow(base_config.space, {"lr": [0.02, 0.05]})
    rng = random.Random(13)
    for _ in range(300):
        assert 0.02 <= sample(narrowed, rng)["lr"] <= 0.05


def test_narrow_categorical_subset(base_config):
    narrowed = narrow(base_config.space, {"activation": ["relu"]})
    assert narrowed.get("activation").parameters == ("relu",)
    with pytest.raises(ValidationError):
        narrow(base_config.space, {"activation": ["gelu"]})


def test_append_numeric_param(base_config):
    momentum = ParamSpec(
        name="momentum", kind="float", distribution="uniform", parameters=(0.1, 0.999)
    )
    grown = append_param(base_config.space, momentum)
    assert grown.names() == ("lr", "depth", "activation", "momentum")
    assert grown.get("momentum").parameters == (0.1, 0.999)
    # original untouched
    assert "momentum" not in base_config.space.names()


def test_append_categorical_depth_list():
    space = make_config().space
    depth_list = ParamSpec(
        name="depth_choice",
        kind="categorical",
        distribution="categorical",
        parameters=(20, 92, 110, 122, 134, 140),
    )
    grown = append_param(space, depth_list)
    assert grown.get("depth_choice").parameters == (20, 92, 110, 122, 134, 140)


def test_append_duplicate_name_rejected(base_config):
    clash = ParamSpec(name="lr", kind="float", distribution="uniform", parameters=(0, 1))
    with pytest.raises(ValidationError) as info:
        append_param(base_config.space, clash)
    assert info.value.field == "append.lr"


def test_append_with_dangling_parent_rejected(base_config):
    child = ParamSpec(
        name="warmup", kind="float", distribution="uniform", parameters=(0, 1)
    )
    cond = Condition(child="warmup", parent="scheduler", parent_values=("cosine",))
    with pytest.raises(ValidationError):
        append_param(base_config.space, child, [cond])


def test_append_with_conjunction(base_config):
    child = ParamSpec(
        name="warmup", kind="float", distribution="uniform", parameters=(0, 1)
    )
    group = ConditionGroup(
        child="warmup",
        conditions=(
            Condition("warmup", "activation", ("relu",)),
            Condition("warmup", "depth", (5, 6)),
        ),
    )
    grown = append_param(base_config.space, child, [group])
    assert grown.is_active("warmup", {"activation": "relu", "depth": 5})
    assert not grown.is_active("warmup", {"activation": "relu", "depth": 9})
