import io

import pytest

import oracles
from runcount import estimator, outliers, synth
from runcount.errors import ProviderExhausted, RuncountError
from runcount.estimator import Decision, EstimatorConfig, StopReason


def symmetric_stream(n=50, centre=5.0, d=1.0):
    return [centre + (d if i % 2 else -d) * (1 + i // 2) for i in range(n)]


def lognormal_stream(seed, n=50):
    return synth.generate(synth.GeneratorSpec(synth.Family.LOGNORMAL, 0.0, 1.5, seed=seed), n).tolist()


@pytest.mark.parametrize("code", [1, 2, 3])
def test_symmetric_stream_stops_at_n0(code):
    cfg = EstimatorConfig(0.2, outliers.method_from_code(code))
    r = estimator.estimate_runs(symmetric_stream(), cfg)
    assert r.estimated_n == 10
    assert r.stop_reason is StopReason.SKEWNESS_WITHIN_THRESHOLD
    assert not r.reached_max
    assert len(r.trace) == 1


@pytest.mark.parametrize("seed", range(12))
@pytest.mark.parametrize("code", [1, 2, 3])
def test_skewed_stream_matches_scalar_replay(seed, code):
    stream = lognormal_stream(seed)
    r = estimator.estimate_runs(stream, EstimatorConfig(0.05, outliers.method_from_code(code)))
    n, by_skew = oracles.replay_estimate(stream, 0.05, code)
    assert r.estimated_n == n
    assert (r.stop_reason is StopReason.SKEWNESS_WITHIN_THRESHOLD) == by_skew


def test_skewed_generator_usually_hits_the_cap():
    hits = sum(
        estimator.estimate_runs(lognormal_stream(s), EstimatorConfig(0.05)).reached_max for s in range(40)
    )
    assert hits > 20


def test_looser_threshold_never_needs_more_runs():
    stream = lognormal_stream(5)
    n = [estimator.estimate_runs(stream, EstimatorConfig(t)).estimated_n for t in estimator.THRESHOLDS]
    assert n == sorted(n, reverse=True)


def test_result_invariants():
    for seed in range(20):
        r = estimator.estimate_runs(lognormal_stream(seed), EstimatorConfig(0.1, outliers.percentile_method()))
        assert 10 <= r.estimated_n <= 50
        assert r.reached_max == (r.estimated_n == 50 and r.stop_reason is StopReason.RUN_CAP_REACHED)
        steps = [rec.step_n for rec in r.trace]
        assert steps == list(range(10, 10 + len(steps)))
        assert r.trace[-1].decision is Decision.STOP or len(r.trace) == 50 - 10 + 1
        assert len(r.sample) == r.estimated_n


def test_retained_sample_keeps_outliers():
    stream = symmetric_stream()
    stream[3] = 1e6
    r = estimator.estimate_runs(stream, EstimatorConfig(0.2))
    assert 1e6 in r.sample


def test_check_stop_examples():
    cfg = EstimatorConfig(0.2)
    assert estimator.check_stop(symmetric_stream(10), cfg).decision is Decision.STOP
    const = estimator.check_stop([4.0] * 10, cfg)
    assert const.decision is Decision.CONTINUE and const.degenerate


def test_check_stop_skewed_padding_continues():
    # mirrored padding around the mean of [1,2,3,4,10] keeps m3 and the filter intact
    xs = [1, 2, 3, 4, 10, 4 - 0.5, 4 + 0.5, 4 - 0.25, 4 + 0.25, 4.0]
    rec = estimator.check_stop(xs, EstimatorConfig(0.2, outliers.percentile_method(0, 100)))
    assert rec.skewness == pytest.approx(oracles.skewness(xs), abs=1e-12)
    assert rec.skewness > 0.2
    assert rec.decision is Decision.CONTINUE


def test_check_stop_requires_min_filtered():
    cfg = EstimatorConfig(0.2, outliers.percentile_method(40, 60), n0=10, min_filtered=5)
    rec = estimator.check_stop(symmetric_stream(10), cfg)
    assert rec.filtered_count < 5 and rec.decision is Decision.CONTINUE


def test_provider_exhaustion_and_non_finite():
    with pytest.raises(ProviderExhausted, match="provider exhausted"):
        estimator.estimate_runs(lognormal_stream(0)[:15], EstimatorConfig(1e-9))
    with pytest.raises(RuncountError):
        estimator.estimate_runs([1.0] * 9 + [float("inf")], EstimatorConfig(0.2))


def test_provider_is_pulled_lazily():
    pulled = []

    def gen():
        for v in symmetric_stream():
            pulled.append(v)
            yield v

    estimator.estimate_runs(gen(), EstimatorConfig(0.2))
    assert len(pulled) == 10


@pytest.mark.parametrize("kwargs", [dict(tau=0), dict(tau=0.1, n0=2, min_filtered=2), dict(tau=0.1, n0=60)])
def test_invalid_config(kwargs):
    with pytest.raises(RuncountError):
        EstimatorConfig(**kwargs)


def test_trace_csv():
    r = estimator.estimate_runs(lognormal_stream(1), EstimatorConfig(0.05))
    buf = io.StringIO()
    estimator.write_trace(r, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "step_n,filtered_count,skewness,decision"
    assert len(lines) == len(r.trace) + 1
    first = lines[1].split(",")
    assert int(first[0]) == 10 and float(first[2]) == r.trace[0].skewness


def test_determinism():
    a = estimator.estimate_runs(lognormal_stream(9), EstimatorConfig(0.1))
    b = estimator.estimate_runs(lognormal_stream(9), EstimatorConfig(0.1))
    assert a == b
