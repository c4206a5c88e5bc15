import numpy as np
import pytest

from whatif.gower import gower_distance, gower_to_many
from whatif.schema import FeatureSchema, FeatureSpec, SchemaError

from conftest import random_instance, random_schema


def scalar_loop_oracle(a, b, schema):
    """Independent per-feature loop used to cross-check the implementation."""
    total = 0.0
    for j, spec in enumerate(schema):
        if spec.kind == "numeric":
            lo, hi = spec.domain
            rng = hi - lo
            d = 0.0 if rng == 0 else min(abs(a[j] - b[j]) / rng, 1.0)
        else:
            d = 0.0 if a[j] == b[j] else 1.0
        total += d
    return total / len(schema)


FOUR = FeatureSchema(
    (
        FeatureSpec("n", "numeric", (0.0, 10.0)),
        FeatureSpec("b", "binary", (0, 1)),
        FeatureSpec("c", "categorical", ("x", "y", "z")),
        FeatureSpec("m", "numeric", (0.0, 1.0)),
    )
)


def test_identity_is_zero():
    a = (2.0, 1, "x", 0.5)
    assert gower_distance(a, a, FOUR) == 0.0


def test_single_binary_mismatch_quarter():
    a = (2.0, 1, "x", 0.5)
    b = (2.0, 0, "x", 0.5)
    assert gower_distance(a, b, FOUR) == pytest.approx(0.25)


def test_numeric_normalized_difference():
    # range 10, |2 - 7| / 10 = 0.5, averaged over 4 features -> 0.125
    a = (2.0, 1, "x", 0.5)
    b = (7.0, 1, "x", 0.5)
    expected = scalar_loop_oracle(a, b, FOUR)
    assert expected == pytest.approx(0.125)
    assert gower_distance(a, b, FOUR) == pytest.approx(expected)


def test_zero_range_numeric_contributes_zero():
    schema = FeatureSchema(
        (FeatureSpec("n", "numeric", (3.0, 3.0)), FeatureSpec("b", "binary", (0, 1)))
    )
    assert gower_distance((3.0, 0), (3.0, 1), schema) == pytest.approx(0.5)


def test_schema_mismatch_errors():
    with pytest.raises(SchemaError):
        gower_distance((1.0,), (1.0, 2.0), FOUR)


def test_matches_oracle_on_random_pairs(rng):
    for _ in range(200):
        schema = random_schema(rng)
        a = random_instance(rng, schema)
        b = random_instance(rng, schema)
        assert gower_distance(a, b, schema) == pytest.approx(scalar_loop_oracle(a, b, schema))


def test_symmetry_bounds_identity(rng):
    violations = 0
    for _ in range(1000):
        schema = random_schema(rng)
        a = random_instance(rng, schema)
        b = random_instance(rng, schema)
        d_ab = gower_distance(a, b, schema)
        d_ba = gower_distance(b, a, schema)
        if d_ab != d_ba or not (0.0 <= d_ab <= 1.0) or gower_distance(a, a, schema) != 0.0:
            violations += 1
        if all(s.numeric_range > 0 for s in schema if s.kind == "numeric") and d_ab == 0.0:
            if any(x != y for x, y in zip(a, b)):
                violations += 1
    assert violations == 0


def test_vectorized_matches_scalar(rng):
    schema = random_schema(rng)
    x = random_instance(rng, schema)
    rows = [random_instance(rng, schema) for _ in range(50)]
    vec = gower_to_many(x, rows, schema)
    ref = np.asarray([gower_distance(x, r, schema) for r in rows])
    assert np.allclose(vec, ref)
