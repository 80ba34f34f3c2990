import numpy as np
import pytest
from hypothesis import given, strategies as st

from eventcast.algebra import (
    INTERVAL_PRUNING,
    And,
    Atom,
    Event,
    MintermClassifier,
    MissingAttributeError,
    NoMatchingMintermError,
    Not,
    SatOracle,
    classify,
    compute_minterms,
    evaluate,
)
from eventcast.geo import builtin_registry

from conftest import make_event

REG = builtin_registry()


def band(lo, hi, var="x"):
    return REG["SpeedBetween"](var, (lo, hi))


def test_evaluate_band():
    f = Atom(band(1.0, 9.0))
    assert evaluate(f, make_event(speed=5.0)) is True
    assert evaluate(f, make_event(speed=9.0)) is False  # half-open at hi
    assert evaluate(f, make_event(speed=1.0)) is True  # closed at lo


def test_evaluate_contradiction_always_false():
    psi = Atom(band(0.0, 10.0))
    f = psi & ~psi
    for speed in (0.0, 5.0, 10.0, 25.0):
        assert evaluate(f, make_event(speed=speed)) is False


def test_evaluate_conjoined_negations():
    psi1, psi2 = band(0.0, 10.0), band(10.0, 20.0)
    event = make_event(speed=25.0)
    # direct evaluation of both atoms is the oracle
    assert psi1.evaluate(event) is False
    assert psi2.evaluate(event) is False
    assert evaluate(Not(Atom(psi1)) & Not(Atom(psi2)), event) is True


def test_missing_attribute_is_an_error_not_false():
    f = Atom(band(0.0, 10.0))
    with pytest.raises(MissingAttributeError):
        evaluate(f, make_event(heading=90.0))


def test_minterms_two_predicates_canonical_order():
    psi1, psi2 = band(0.0, 10.0), band(10.0, 20.0)
    minterms = compute_minterms([psi1, psi2])
    assert [m.signs for m in minterms] == [
        (True, True),
        (True, False),
        (False, True),
        (False, False),
    ]
    assert all(m.atoms == (psi1, psi2) for m in minterms)


def test_minterms_empty_predicates_vacuous_top():
    (top,) = compute_minterms([])
    assert top.atoms == () and top.signs == ()
    assert top.evaluate(make_event(speed=3.0)) is True


def test_minterms_interval_pruning_disjoint_bands():
    psi1, psi2 = band(0.0, 10.0), band(10.0, 20.0)
    minterms = compute_minterms([psi1, psi2], SatOracle(INTERVAL_PRUNING))
    assert len(minterms) == 3
    assert (True, True) not in {m.signs for m in minterms}


def test_interval_pruning_keeps_overlapping_bands():
    psi1, psi2 = band(0.0, 10.0), band(5.0, 20.0)
    minterms = compute_minterms([psi1, psi2], SatOracle(INTERVAL_PRUNING))
    assert len(minterms) == 4


def test_interval_pruning_negative_band_covering_core():
    narrow, wide = band(3.0, 5.0), band(0.0, 10.0)
    minterms = compute_minterms([narrow, wide], SatOracle(INTERVAL_PRUNING))
    # narrow ∧ ¬wide is impossible: [3,5) sits inside [0,10)
    assert (True, False) not in {m.signs for m in minterms}
    assert len(minterms) == 3


def test_minterms_duplicate_predicates_rejected():
    with pytest.raises(ValueError, match="duplicate"):
        compute_minterms([band(0.0, 10.0), band(0.0, 10.0, var="y")])


def test_minterms_deterministic():
    preds = [band(0.0, 10.0), band(10.0, 20.0), band(20.0, 30.0)]
    assert compute_minterms(preds) == compute_minterms(list(preds))


def test_classify_satisfying_only_first():
    psi1, psi2 = band(0.0, 10.0), band(20.0, 30.0)
    minterms = compute_minterms([psi1, psi2])
    got = classify(make_event(speed=5.0), minterms)
    assert got.signs == (True, False)


def test_classify_vacuous_top():
    minterms = compute_minterms([])
    assert classify(make_event(speed=1.0), minterms) is minterms[0]


def test_classify_unique_over_three_bands():
    preds = [band(0.0, 10.0), band(10.0, 20.0), band(5.0, 15.0)]
    minterms = compute_minterms(preds)
    rng = np.random.default_rng(3)
    matched = 0
    for _ in range(10):
        event = make_event(speed=float(rng.uniform(0.0, 30.0)))
        hits = [m for m in minterms if m.evaluate(event)]  # exhaustive oracle
        assert len(hits) == 1
        assert classify(event, minterms) is hits[0]
        matched += 1
    assert matched == 10


def test_classify_consistent_with_formula_evaluation():
    preds = [band(0.0, 10.0), band(10.0, 20.0)]
    minterms = compute_minterms(preds)
    for speed in (0.0, 9.5, 10.0, 19.9, 44.0):
        event = make_event(speed=speed)
        assert evaluate(classify(event, minterms).formula(), event) is True


def test_classify_missing_combination_aborts():
    psi1, psi2 = band(0.0, 10.0), band(10.0, 20.0)
    minterms = compute_minterms([psi1, psi2])
    pruned = [m for m in minterms if m.signs != (False, False)]
    with pytest.raises(NoMatchingMintermError):
        classify(make_event(speed=50.0), pruned)


def test_classifier_agrees_with_classify():
    preds = [band(0.0, 10.0), band(10.0, 20.0), band(15.0, 40.0)]
    minterms = compute_minterms(preds)
    clf = MintermClassifier(minterms)
    rng = np.random.default_rng(11)
    for _ in range(50):
        event = make_event(speed=float(rng.uniform(-5.0, 50.0)))
        assert minterms[clf.symbol(event)] is classify(event, minterms)


@st.composite
def band_set(draw):
    k = draw(st.integers(min_value=1, max_value=3))
    edges = draw(
        st.lists(
            st.floats(min_value=0.0, max_value=100.0, allow_nan=False, width=32),
            min_size=2 * k,
            max_size=2 * k,
            unique=True,
        )
    )
    pairs = sorted(edges)
    bands = [tuple(sorted(pairs[2 * i : 2 * i + 2])) for i in range(k)]
    return [band(lo, hi) for lo, hi in dict.fromkeys(bands)]


@given(band_set(), st.floats(min_value=-10.0, max_value=120.0, allow_nan=False))
def test_partition_property(preds, speed):
    """Exactly one minterm of a sound alphabet matches any event."""
    minterms = compute_minterms(preds)
    event = make_event(speed=speed)
    assert sum(m.evaluate(event) for m in minterms) == 1
    assert classify(event, minterms).evaluate(event)


@given(band_set())
def test_minterm_count_and_mutual_exclusivity(preds):
    minterms = compute_minterms(preds)
    assert len(minterms) == 2 ** len(preds)
    signs = {m.signs for m in minterms}
    assert len(signs) == len(minterms)


def test_formula_str_readable():
    psi1, psi2 = band(1.0, 9.0), band(9.0, 20.0)
    f = And((Atom(psi1), Not(Atom(psi2))))
    assert str(f) == "SpeedBetween(x, 1.0, 9.0) ∧ ¬SpeedBetween(x, 9.0, 20.0)"


def test_unknown_oracle_strategy_rejected():
    with pytest.raises(ValueError):
        SatOracle("guess")
