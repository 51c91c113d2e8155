import math
from types import SimpleNamespace

import numpy as np
import pytest

from tubench import (
    Dataset,
    Label,
    Mode,
    QueryEvent,
    Sample,
    ScoreLog,
    ScoreRecord,
    ValidationError,
    dataset_violations,
    validate_dataset,
)
from conftest import make_sample


def test_sample_rejects_bad_session():
    with pytest.raises(ValidationError):
        make_sample("u", 0, 0, [1.0])


def test_sample_rejects_negative_order_index():
    with pytest.raises(ValidationError):
        make_sample("u", 1, -1, [1.0])


def test_sample_rejects_non_finite_features():
    with pytest.raises(ValidationError, match="non-finite"):
        make_sample("u", 1, 0, [1.0, math.nan])
    with pytest.raises(ValidationError):
        make_sample("u", 1, 0, [math.inf])


def test_sample_rejects_empty_features():
    with pytest.raises(ValidationError):
        make_sample("u", 1, 0, [])


def test_sample_features_are_immutable():
    sample = make_sample("u", 1, 0, [1.0, 2.0])
    with pytest.raises(ValueError):
        sample.features[0] = 3.0
    # a copy is taken, so mutating the source array does not leak in
    source = np.array([5.0, 6.0])
    other = make_sample("u", 1, 1, source)
    source[0] = -1.0
    assert other.features[0] == 5.0


def test_sample_age_is_session_then_order():
    early = make_sample("u", 1, 9, [0.0])
    late = make_sample("u", 2, 0, [0.0])
    assert early.age < late.age


def _ok_samples():
    return (
        make_sample("a", 1, 0, [0.0, 0.0]),
        make_sample("a", 1, 1, [1.0, 1.0]),
        make_sample("a", 2, 2, [2.0, 2.0]),
        make_sample("b", 1, 0, [3.0, 3.0]),
        make_sample("b", 2, 1, [4.0, 4.0]),
    )


def test_well_formed_dataset_has_no_violations():
    dataset = Dataset(dimension=2, num_sessions=2, samples=_ok_samples())
    assert validate_dataset(dataset) == []


def test_violation_for_missing_enrollment_session():
    samples = [make_sample("a", 1, 0, [0.0]), make_sample("b", 2, 0, [1.0])]
    problems = dataset_violations(1, 2, samples)
    assert len(problems) == 1
    assert "b" in problems[0] and "session-1" in problems[0]


def test_violation_for_non_finite_feature_names_sample():
    # Sample itself refuses non-finite values, so the scan is exercised
    # through a sample-shaped stub, the same way loaders stage raw rows.
    stub = SimpleNamespace(user_id="a", session=1, order_index=0, features=[math.nan])
    good = SimpleNamespace(user_id="a", session=2, order_index=1, features=[0.5])
    problems = dataset_violations(1, 2, [stub, good])
    assert len(problems) == 1
    assert "non-finite" in problems[0] and "a" in problems[0]


def test_violation_for_duplicate_sample_key():
    samples = [make_sample("a", 1, 0, [0.0]), make_sample("a", 1, 0, [1.0])]
    assert any("duplicate" in p for p in dataset_violations(1, 2, samples))


def test_violation_for_session_out_of_range():
    samples = [make_sample("a", 1, 0, [0.0]), make_sample("a", 5, 1, [1.0])]
    assert any("outside" in p for p in dataset_violations(1, 2, samples))


def test_violation_for_dimension_mismatch():
    samples = [make_sample("a", 1, 0, [0.0]), make_sample("a", 2, 1, [1.0, 2.0])]
    assert any("dimension" in p for p in dataset_violations(1, 2, samples))


def test_dataset_construction_rejects_violations():
    samples = [make_sample("a", 1, 0, [0.0]), make_sample("b", 2, 0, [1.0])]
    with pytest.raises(ValidationError) as err:
        Dataset(dimension=1, num_sessions=2, samples=tuple(samples))
    assert any("session-1" in v for v in err.value.violations)


def test_dataset_lookup_is_chronological():
    dataset = Dataset(dimension=2, num_sessions=2, samples=_ok_samples())
    assert dataset.users == ("a", "b")
    orders = [s.order_index for s in dataset.samples_for("a")]
    assert orders == sorted(orders)
    assert [s.order_index for s in dataset.samples_for("a", 1)] == [0, 1]
    assert dataset.samples_for("a", 2)[0].session == 2


def test_dataset_equality_is_field_for_field():
    first = Dataset(dimension=2, num_sessions=2, samples=_ok_samples())
    second = Dataset(dimension=2, num_sessions=2, samples=tuple(reversed(_ok_samples())))
    assert first == second


def test_query_event_rejects_inconsistent_label():
    sample = make_sample("a", 2, 0, [0.0])
    with pytest.raises(ValidationError):
        QueryEvent(sample, "a", Label.IMPOSTOR, 0)
    with pytest.raises(ValidationError):
        QueryEvent(sample, "b", Label.GENUINE, 0)
    QueryEvent(sample, "b", Label.IMPOSTOR, 0)  # consistent: fine


def test_score_record_rejects_bad_values():
    with pytest.raises(ValidationError):
        ScoreRecord(0, 2, "a", "a", Label.GENUINE, -0.5, 0.0, False)
    with pytest.raises(ValidationError):
        ScoreRecord(0, 2, "a", "a", Label.GENUINE, 1.0, math.nan, False)
    with pytest.raises(ValidationError):
        ScoreRecord(0, 2, "a", "b", Label.GENUINE, 1.0, 0.0, False)


def _record(repeat, session, target="t", source="s", centered=0.0):
    label = Label.GENUINE if target == source else Label.IMPOSTOR
    return ScoreRecord(repeat, session, target, source, label, 1.0, centered, False)


def test_online_log_must_cover_sessions_2_to_s():
    records = (_record(0, 2), _record(0, 3))
    log = ScoreLog(records, 3, Mode.ONLINE)
    assert list(log.covered_sessions) == [2, 3]
    with pytest.raises(ValidationError):
        ScoreLog((_record(0, 2),), 3, Mode.ONLINE)  # session 3 missing
    with pytest.raises(ValidationError):
        ScoreLog(records, 2, Mode.ONLINE)  # session 3 out of range


def test_offline_log_covers_3_to_s_only():
    log = ScoreLog((_record(0, 3),), 3, Mode.OFFLINE)
    assert list(log.covered_sessions) == [3]
    with pytest.raises(ValidationError):
        ScoreLog((_record(0, 2), _record(0, 3)), 3, Mode.OFFLINE)


def test_log_rejects_out_of_stream_order_records():
    records = (_record(0, 3), _record(0, 2))
    with pytest.raises(ValidationError, match="stream order"):
        ScoreLog(records, 3, Mode.ONLINE)


def test_log_for_repeat_filters_records():
    records = (_record(0, 2), _record(1, 2), _record(0, 3), _record(1, 3))
    log = ScoreLog(records, 3, Mode.ONLINE)
    assert log.repeat_ids == (0, 1)
    sub = log.for_repeat(1)
    assert all(r.repeat_id == 1 for r in sub.records)
    assert len(sub.records) == 2


def test_core_types_are_frozen():
    sample = make_sample("a", 1, 0, [0.0])
    with pytest.raises(AttributeError):
        sample.session = 2
    record = _record(0, 2)
    with pytest.raises(AttributeError):
        record.session = 5
