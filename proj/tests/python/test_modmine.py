import os
import pathlib
import xml.etree.ElementTree as ET

import numpy as np
import pytest

import modmine

CONFIGS = pathlib.Path(os.environ.get("MODMINE_CONFIGS", pathlib.Path(__file__).resolve().parents[2] / "configs"))


def smoke_text():
    return (CONFIGS / "smoke.cfg").read_text()


def test_distance_matches_quadratic_form():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(1, 12))
        w = rng.normal(size=(n, n))
        x1, x2 = rng.normal(size=n), rng.normal(size=n)
        diff = x1 - x2
        expected = np.sqrt(diff @ (w @ w.T) @ diff)
        assert modmine.distance(w, x1, x2) == pytest.approx(expected, abs=1e-10)
        assert np.allclose(modmine.metric_matrix(w), w @ w.T)
        assert modmine.spectrum(w).min() >= -1e-10


def test_regularizer_and_gradient():
    w = 2 * np.eye(3)
    assert modmine.regularizer(w, 1.0) == pytest.approx(0.5 * 9 * 3)
    assert np.allclose(modmine.regularizer_grad(w, 0.5), 6 * np.eye(3))
    rng = np.random.default_rng(1)
    w = np.eye(4) + 0.3 * rng.normal(size=(4, 4))
    h = 1e-6
    fd = np.zeros_like(w)
    for i in range(4):
        for j in range(4):
            up, down = w.copy(), w.copy()
            up[i, j] += h
            down[i, j] -= h
            fd[i, j] = (modmine.regularizer(up, 0.1) - modmine.regularizer(down, 0.1)) / (2 * h)
    assert np.allclose(fd, modmine.regularizer_grad(w, 0.1), atol=1e-7)


def brute_force(pos, neg):
    hardest = min(range(len(neg)), key=lambda i: (neg[i], i))
    eligible = [i for i in range(len(pos)) if pos[i] <= neg[hardest]]
    if eligible:
        return min(eligible, key=lambda i: (-pos[i], i)), hardest, False
    return min(range(len(pos)), key=lambda i: (pos[i], i)), hardest, True


def test_mining_examples_and_oracle():
    r = modmine.mine_distances([0.5, 1.2, 1.8], [1.5, 2.0])
    assert (r["positive"], r["negative"], r["fallback"]) == (1, 0, False)
    assert modmine.mine_moderate_positive([2.0, 1.8], 1.5) == (1, True)
    assert modmine.mine_hardest_negative([2.0, 1.5, 3.0]) == 1
    rng = np.random.default_rng(2)
    for _ in range(2000):
        pos = np.round(rng.uniform(0, 2, size=int(rng.integers(1, 8))), 1)
        neg = np.round(rng.uniform(0, 2, size=int(rng.integers(1, 8))), 1)
        r = modmine.mine_distances(pos, neg)
        assert (r["positive"], r["negative"], r["fallback"]) == brute_force(list(pos), list(neg))


def test_contrastive_loss():
    assert modmine.contrastive_loss(0.0, 2.5, 2.0) == 0.0
    assert modmine.contrastive_loss(0.5, 1.0, 2.0) == pytest.approx(1.5)


def test_generate_synthetic():
    ids, views, x = modmine.generate_synthetic(num_identities=3, samples_per_view=3, input_dim=5, seed=4)
    assert x.shape == (18, 5)
    assert sorted(set(ids.tolist())) == [0, 1, 2]
    assert (np.bincount(views)[1:] == [9, 9]).all()
    _, _, again = modmine.generate_synthetic(num_identities=3, samples_per_view=3, input_dim=5, seed=4)
    assert np.array_equal(x, again)


def test_cmc():
    assert modmine.cmc_from_distances([[0.5, 0.5, 0.5]], [2]).tolist() == [0.0, 0.0, 1.0]
    rng = np.random.default_rng(3)
    d = rng.uniform(size=(20, 6))
    curve = modmine.cmc_from_distances(d, list(range(6)) * 3 + [0, 1])
    assert np.all(np.diff(curve) >= 0) and curve[-1] == 1.0
    with pytest.raises(ValueError):
        modmine.cmc_from_distances([[0.1, 0.2]], [5])


def test_run_experiment_is_deterministic():
    a = modmine.run_experiment(smoke_text(), str(CONFIGS))
    b = modmine.run_experiment(smoke_text(), str(CONFIGS))
    assert a["loss_history"] == b["loss_history"]
    assert np.array_equal(a["cmc"], b["cmc"])
    assert all(train >= 0 and val >= 0 for _, train, val in a["loss_history"])
    assert np.all(np.diff(a["cmc"]) >= 0)


def test_config_errors_name_the_field():
    with pytest.raises(ValueError, match="embedder.output_dim"):
        modmine.render_config(smoke_text().replace("output_dim = 4\n", ""))


def test_cli_commands(tmp_path):
    code, out, err = modmine.command("train", config=CONFIGS / "smoke.cfg", out=tmp_path)
    assert code == 0, err
    for name in ["checkpoint.txt", "loss_history.csv", "manifest.cfg"]:
        assert (tmp_path / name).exists()
    code, out, err = modmine.command("eval", config=CONFIGS / "smoke.cfg", checkpoint=tmp_path / "checkpoint.txt",
                                     out=tmp_path)
    assert code == 0, err
    assert "rank-1:" in out
    for svg in ["loss_history.svg", "cmc.svg"]:
        assert ET.parse(tmp_path / svg).getroot().tag.endswith("svg")
    code, _, err = modmine.command("spectrum", checkpoint=tmp_path / "checkpoint.txt", out=tmp_path)
    assert code == 0, err
    ET.parse(tmp_path / "spectrum.svg")
    code, _, err = modmine.command("eval", config=CONFIGS / "smoke.cfg", checkpoint=tmp_path / "nope.txt")
    assert code == 1 and "nope.txt" in err
