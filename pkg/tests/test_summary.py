import io
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minnisens.errors import DegenerateSummaryError, SensitivityError
from minnisens.summary import (
    ObservedSummary,
    Record,
    budget_from_se,
    edinburgh_records,
    ingest_records,
    read_csv,
    summarize,
    synthesize_summary,
    write_csv,
)


def recs(values):
    return [Record(v) for v in values]


def test_ingest_counts_and_kind():
    d = ingest_records(recs([1, 0, None, 1, None]))
    assert (d.n_total, d.n_missing, d.outcome_kind) == (5, 2, "binary")


def test_all_missing_accepted_but_not_summarizable():
    d = ingest_records(recs([None, None, None]))
    assert d.n_missing == 3
    with pytest.raises(DegenerateSummaryError):
        summarize(d)


def test_empty_and_non_numeric_rejected():
    with pytest.raises(SensitivityError):
        ingest_records([])
    with pytest.raises(SensitivityError):
        ingest_records([Record("yes")])
    with pytest.raises(SensitivityError):
        ingest_records([Record(True)])


def test_kind_flag_resolves_ambiguity():
    assert ingest_records(recs([0, 1, 1]), outcome_kind="continuous").outcome_kind == "continuous"
    assert ingest_records(recs([0, 2.5])).outcome_kind == "continuous"
    with pytest.raises(SensitivityError):
        ingest_records(recs([0, 2.5]), outcome_kind="binary")


def test_edinburgh_summary(edinburgh):
    assert edinburgh.n_total == 6136 and edinburgh.n_missing == 2308
    assert edinburgh.frac_missing == pytest.approx(0.3761, abs=5e-5)
    assert round(edinburgh.mu_obs, 4) == 0.7320
    assert round(edinburgh.se_obs, 4) == 0.0072


def test_constant_sample():
    s = summarize(ingest_records(recs([1, 1, 1, 1])))
    assert (s.frac_missing, s.mu_obs, s.sd_obs) == (0.0, 1.0, 0.0)


def test_symmetric_binary():
    s = summarize(ingest_records(recs([1, 0, None, None])))
    assert (s.frac_missing, s.mu_obs, s.sd_obs) == (0.5, 0.5, 0.5)
    assert s.se_obs == pytest.approx(0.5 / math.sqrt(2))
    assert s.cv_obs == 1.0


def test_sample_sd_flag():
    d = ingest_records(recs([1.0, 2.0, 4.0, None]))
    pop, samp = summarize(d), summarize(d, ddof=1)
    assert pop.outcome_kind == "continuous"
    assert samp.sd_obs == pytest.approx(pop.sd_obs * math.sqrt(3 / 2))
    assert pop.se_obs == pytest.approx(pop.sd_obs / math.sqrt(3))


@given(st.lists(st.one_of(st.none(), st.sampled_from([0.0, 1.0])), min_size=2, max_size=60).filter(
    lambda v: any(x is not None for x in v)), st.randoms())
def test_permutation_invariance_and_binary_identity(values, rnd):
    s1 = summarize(ingest_records(recs(values)))
    shuffled = list(values)
    rnd.shuffle(shuffled)
    s2 = summarize(ingest_records(recs(shuffled)))
    assert s1.frac_missing == s2.frac_missing and s1.n_missing == s2.n_missing
    assert s1.mu_obs == pytest.approx(s2.mu_obs, abs=1e-15)
    assert s1.sd_obs ** 2 == pytest.approx(s1.mu_obs * (1 - s1.mu_obs), abs=1e-15)


@given(st.floats(0, 1), st.floats(0, 0.99), st.integers(1, 10_000))
@settings(max_examples=200)
def test_synthesize_preserves_inputs(mu, f, n):
    s = synthesize_summary(mu, f, n)
    assert s.mu_obs == mu and s.frac_missing == f
    assert s.se_obs == pytest.approx(math.sqrt(mu * (1 - mu) / n))
    assert abs(s.sd_obs ** 2 - mu * (1 - mu)) <= 1 / s.n_total


def test_synthesize_examples(published):
    assert round(published.se_obs, 4) == 0.0072
    s = synthesize_summary(0.7320, 0.1, 3828)
    assert s.frac_missing == 0.1 and s.n_observed == 3828
    assert synthesize_summary(0.5, 0.0, 100).frac_missing == 0.0


def test_synthesize_errors():
    with pytest.raises(SensitivityError):
        synthesize_summary(0.5, 1.0, 10)
    with pytest.raises(SensitivityError):
        synthesize_summary(1.2, 0.1, 10)
    with pytest.raises(SensitivityError):
        synthesize_summary(3.0, 0.1, 10, "continuous")
    s = synthesize_summary(3.0, 0.1, 10, "continuous", sd_obs=2.0)
    assert s.cv_obs == pytest.approx(2 / 3)


def test_csv_round_trip_and_missing_tokens():
    text = "outcome,stratum\n1,a\n,a\nNA,b\n0,b\n1,b\n"
    d = read_csv(io.StringIO(text))
    assert d.n_missing == 2 and d.stratum_labels() == ["a", "b"]
    buf = io.StringIO()
    write_csv(d, buf)
    d2 = read_csv(io.StringIO(buf.getvalue()))
    assert d2.outcomes == d.outcomes and d2.groups == d.groups


def test_csv_bad_field():
    with pytest.raises(SensitivityError, match="line 3"):
        read_csv(io.StringIO("outcome\n1\nmaybe\n"))
    with pytest.raises(SensitivityError):
        read_csv(io.StringIO("y\n1\n"))


def test_json_round_trip(edinburgh):
    back = ObservedSummary.from_json(edinburgh.to_json())
    assert set(edinburgh.to_dict()) == {
        "n_total", "n_missing", "frac_missing", "mu_obs", "sd_obs", "cv_obs", "se_obs", "outcome_kind"}
    assert back.mu_obs == pytest.approx(edinburgh.mu_obs, rel=1e-10)
    assert back.se_obs == pytest.approx(edinburgh.se_obs, rel=1e-10)


def test_budget_from_se(edinburgh):
    assert budget_from_se(edinburgh, 2) == 2 * edinburgh.se_obs


def test_edinburgh_records_counts():
    r = edinburgh_records()
    assert len(r) == 6136 and sum(1 for x in r if x.outcome == 1.0) == 2802
