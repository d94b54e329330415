import math

import numpy as np
import pytest

import mrlab

TINY = """
variant = g_mr2
dataset = cond_bimodal
n_train = 500
n_val = 100
n_test = 100
hidden_widths = 8,8
g_steps = 40
eval_interval = 20
K = 4
k_eval = 10
eval_samples = 1000
"""


def test_gradcheck_passes_and_detects_corruption():
    items = mrlab.gradcheck()
    assert len(items) > 30
    assert all(err <= thr for _, err, thr in items)
    bad = mrlab.gradcheck(corrupted_fixture=True)
    assert any(err > thr for _, err, thr in bad)


def test_decompose_two_point_case():
    r = mrlab.decompose([0.0, 2.0], [1.0, 1.0])
    assert (r["var_y"], r["se"], r["ve"]) == (1.0, 0.0, 0.0)


def test_median_scan_two_delta():
    r = mrlab.median_scan([(-1.0, 0.5), (1.0, 0.5)], -2.0, 2.0)
    assert math.isclose(r["min_value"], 1.0)
    assert len(r["argmin"]) == 2001
    assert r["median_interval"] == (-1.0, 1.0)


def test_make_dataset_shapes():
    x, y = mrlab.make_dataset("ring8", 100, seed=1)
    assert x.shape == (100, 0)
    assert y.shape == (100, 2)
    x, y = mrlab.make_dataset("hetero_gaussian", 50)
    assert x.shape == (50, 1)
    assert np.all(np.abs(x) <= 1.0)


def test_config_round_trip_and_errors():
    text = mrlab.normalize_config("variant = g_pmr2\n", {"lambda_aux": "2.5"})
    assert "lambda_aux = 2.5" in text
    assert mrlab.normalize_config(text) == text
    assert "K" in mrlab.config_keys()
    with pytest.raises(mrlab.ConfigError):
        mrlab.normalize_config("variant = bogus\n")


def test_train_is_reproducible(tmp_path):
    a = mrlab.train(TINY, tmp_path / "a")
    b = mrlab.train(TINY, tmp_path / "b")
    assert a["exit_code"] == 0
    assert a["step"] == 40
    assert a["run_id"] == mrlab.run_id(TINY)
    assert (tmp_path / "a" / "metrics.csv").read_bytes() == (tmp_path / "b" / "metrics.csv").read_bytes()
    assert a["metrics"]["mean_sample_variance"] >= 0.0
