import io
import json
import math

import mpmath
import numpy as np
import pytest

from regtrees.exactnum import to_mpf
from regtrees.moments import janson_constants
from regtrees.montecarlo import (
    WSimConfig,
    chunk_size,
    estimate_a2prime_ratio,
    estimate_ey,
    ks_statistic,
    ratio_from_batch,
    sample_batch,
    sample_simple,
    simulate_w,
    w_factor_mean,
    w_log_value,
)


def csv_text(batch):
    buf = io.StringIO()
    batch.write_csv_stream(buf)
    return buf.getvalue()


def test_record_count_and_schema():
    batch = sample_batch(3, 10, 300, seed=3, m=3)
    assert len(batch) == 300
    lines = csv_text(batch).splitlines()
    assert lines[0] == "index,log_tau,tau,simple,X1,X2,X3"
    assert len(lines) == 301


def test_csv_is_reproducible(tmp_path):
    a = sample_batch(3, 12, 500, seed=9, m=2)
    b = sample_batch(3, 12, 500, seed=9, m=2)
    a.write_csv(tmp_path / "a.csv")
    b.write_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    a.write_json_meta(tmp_path / "a.json")
    meta = json.loads((tmp_path / "a.json").read_text())
    assert meta["seed"] == 9 and meta["generator"] == "numpy.Philox"


def test_worker_count_does_not_change_samples():
    n = 40
    samples = 3 * chunk_size(n) + 17
    one = sample_batch(3, n, samples, seed=4, m=2, workers=1)
    three = sample_batch(3, n, samples, seed=4, m=2, workers=3)
    assert csv_text(one) == csv_text(three)


def test_different_seeds_differ():
    a = sample_batch(3, 10, 50, seed=1, m=0)
    b = sample_batch(3, 10, 50, seed=2, m=0)
    assert not np.array_equal(a.log_tau, b.log_tau)


def test_parity_rejected():
    with pytest.raises(ValueError):
        sample_batch(3, 7, 10, seed=0)


def test_first_moment_small():
    est = estimate_ey(3, 4, 100_000, seed=21)
    assert abs(est.first.z_score(72 / 11)) < 4


def test_ratio_estimators_are_scale_free():
    batch = sample_batch(3, 20, 2000, seed=8, m=2)
    for rho in [(1,), (0, 1), (2, 1)]:
        a = ratio_from_batch(batch, rho)
        b = ratio_from_batch(batch, rho, scale=1e-7)
        assert a.mean == pytest.approx(b.mean, rel=1e-12)
        assert a.std_error == pytest.approx(b.std_error, rel=1e-9)


def test_empty_profile_is_one():
    assert estimate_a2prime_ratio(3, 50, (), 10, seed=0).mean == 1.0
    batch = sample_batch(3, 10, 20, seed=0, m=1)
    assert ratio_from_batch(batch, ()).mean == 1.0


def test_shifted_cycle_mean_for_loops():
    est = estimate_a2prime_ratio(3, 60, (1,), 5000, seed=13)
    assert abs(est.mean - 0.25) < 0.03


def test_zero_draws_give_deterministic_value():
    d, J = 3, 10
    got = w_log_value(np.zeros((3, J), dtype=int), d, 1)
    with mpmath.workprec(128):
        want = -sum(to_mpf(janson_constants(d, j).lam * janson_constants(d, j).zeta) for j in range(1, J + 1))
    assert np.allclose(got, float(want), rtol=1e-14)


def test_w_config_validation():
    assert WSimConfig(3).j_max == 60
    with pytest.raises(ValueError):
        WSimConfig(3, j_min=2)
    with pytest.raises(ValueError):
        WSimConfig(3, j_max=10)
    with pytest.raises(ValueError):
        WSimConfig(2)
    assert WSimConfig(5).j_max >= 1


@pytest.mark.parametrize("j", [1, 2, 3, 8, 30])
def test_w_factor_unit_mean(j):
    est = w_factor_mean(3, j, 200_000, seed=17)
    assert abs(est.z_score(1.0)) < 4


def test_full_w_has_unit_mean():
    w = np.exp(simulate_w(WSimConfig(3, 1, None, 200_000, 5)))
    se = w.std(ddof=1) / math.sqrt(len(w))
    assert abs(w.mean() - 1) < 4 * se


def test_ks_self_test_is_zero():
    x = simulate_w(WSimConfig(3, 3, None, 500, 1))
    assert ks_statistic(x, x)[0] == 0.0


def test_sample_simple_only_keeps_simple_graphs():
    batch = sample_simple(3, 30, 100, seed=2)
    assert len(batch) == 100
    assert batch.simple.all()
    assert batch.metadata["pairings_drawn"] >= 100


def test_sample_simple_gives_up():
    with pytest.raises(RuntimeError):
        sample_simple(3, 30, 10_000, seed=2, max_pairings=100)
