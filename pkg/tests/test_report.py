import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bindcert.onebody import ConvergenceStudy, SolveResult, StudyRow
from bindcert.operators import GridSpec
from bindcert.report import (
    CertificateRecord,
    canonical_digest,
    emit_convergence_csv,
    emit_json,
    parse_records,
)

finite_floats = st.floats(allow_nan=False, allow_infinity=False)

records = st.builds(
    CertificateRecord,
    kind=st.sampled_from(["binding", "lemma1", "theorem", "hypothesis"]),
    inputs_digest=st.text(st.characters(min_codepoint=48, max_codepoint=122), max_size=16),
    values=st.dictionaries(st.sampled_from(["e0", "slack", "margin", "x"]), finite_floats,
                           max_size=4),
    passed=st.booleans(),
    tolerances=st.dictionaries(st.sampled_from(["a", "b"]), finite_floats, max_size=2),
    flags=st.dictionaries(st.sampled_from(["binding_positive", "converged"]),
                          st.booleans(), max_size=2),
)


def test_empty_document_bytes():
    assert emit_json([]) == b'{"schema":"1","records":[]}'


def test_binding_record_surface():
    rec = CertificateRecord(
        kind="binding",
        inputs_digest="abc",
        values={"e0": -0.5, "lower_bound": 0.499},
        passed=True,
        tolerances={"residual": 1e-10},
        flags={"binding_positive": True},
    )
    doc = json.loads(emit_json([rec]))
    raw = doc["records"][0]
    assert raw["values"]["e0"] == -0.5
    assert raw["values"]["lower_bound"] == 0.499
    assert raw["flags"]["binding_positive"] is True


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        CertificateRecord("certificate", "x", {}, True)


def test_non_finite_values_rejected():
    rec = CertificateRecord("binding", "x", {"e0": float("nan")}, True)
    with pytest.raises(ValueError):
        emit_json([rec])


@given(st.lists(records, max_size=5))
@settings(max_examples=200, deadline=None)
def test_round_trip(recs):
    assert parse_records(emit_json(recs)) == recs


@given(st.lists(records, max_size=3))
@settings(max_examples=100, deadline=None)
def test_deterministic_bytes(recs):
    assert emit_json(recs) == emit_json(recs)
    assert emit_json(parse_records(emit_json(recs))) == emit_json(recs)


@given(finite_floats)
@settings(max_examples=300, deadline=None)
def test_seventeen_digit_floats_round_trip(x):
    assert float(format(x, ".17g")) == x


def _study():
    g1, g2 = GridSpec(1, 8.0, 16), GridSpec(1, 8.0, 32)
    rows = [
        StudyRow(g1, SolveResult(0.51, 1e-11, 40, g1, True), False, False),
        StudyRow(g2, SolveResult(0.505, 1e-11, 52, g2, True), True, False),
    ]
    return ConvergenceStudy(rows=rows, extrapolated=0.5033, empirical_order=None,
                            final=0.5033)


def test_convergence_csv_layout():
    data = emit_convergence_csv(_study()).decode("ascii")
    lines = data.strip().split("\n")
    assert lines[0] == "L,N,eigenvalue,residual,iterations"
    assert len(lines) == 3
    first = lines[1].split(",")
    assert first[0] == "8.0" and first[1] == "16"
    assert float(first[2]) == 0.51
    assert first[4] == "40"


def test_convergence_csv_rejects_empty():
    empty = ConvergenceStudy(rows=[], extrapolated=None, empirical_order=None, final=0.0)
    with pytest.raises(ValueError):
        emit_convergence_csv(empty)


def test_canonical_digest_stability():
    a = {"grid": {"dim": 1, "length": 8.0}, "solver": {"seed": 7}}
    b = {"solver": {"seed": 7}, "grid": {"length": 8.0, "dim": 1}}
    assert canonical_digest(a) == canonical_digest(b)
    assert canonical_digest(a) != canonical_digest({"grid": {"dim": 2}})
