import json
import math
import os

import numpy as np
import pytest

import specrecon as sr

CONFIGS = os.environ.get("SPECRECON_CONFIG_DIR", os.path.join(os.path.dirname(__file__), "..", "..", "configs"))

SMOKE = json.dumps({
    "schema_version": 1,
    "seed": 7,
    "space": {"kind": "torus", "R": 10, "r": 0.5},
    "sampling": {"scheme": "helix", "n": 16, "m": 3},
})


def test_distances():
    t = sr.FlatTorus(10.0, 0.5)
    assert sr.distance(t, (0.0, 0.0), (math.pi, math.pi)) == pytest.approx(math.hypot(0.5 * math.pi, 10 * math.pi))
    cone = sr.FlatCone(3, 2.0)
    assert sr.distance(cone, (0.0, 0.0), (1.5, 0.3)) == pytest.approx(1.5)
    pts = sr.sample_uniform(cone, 30, 4)
    d = sr.pairwise_distances(cone, pts)
    assert d.shape == (30, 30)
    assert sr.is_metric(np.maximum(d, d.T))


def test_spectrum_is_orthonormal_on_the_circle():
    theta = 2 * np.pi * np.arange(64) / 64
    pts = np.column_stack([theta, np.zeros_like(theta)])
    sd = sr.spectrum(sr.Circle(1.0), 6, pts)
    phi, w = sd["eigfun"], sd["weights"]
    np.testing.assert_allclose(phi @ np.diag(w) @ phi.T, np.eye(7), atol=1e-12)
    np.testing.assert_allclose(sd["eigenvalues"], [0, 1, 1, 4, 4, 9, 9], atol=1e-12)


def test_arc_measure():
    est = sr.circle_arc_measure(64, 2048, 0.2, 1.0)
    assert abs(est - 2.4 / (2 * np.pi)) < 0.03


def test_metric_repair_and_gh():
    d = np.array([[0, 1, 3], [1, 0, 1], [3, 1, 0]], dtype=float)
    fixed, dev = sr.repair_metric(d)
    assert fixed[0, 2] == 2.0 and dev == 1.0
    a = np.array([[0.0, 1.0], [1.0, 0.0]])
    b = np.array([[0.0, 2.5], [2.5, 0.0]])
    assert sr.gh_exact_small(a, b)["upper"] == 0.75
    assert sr.gh_upper_bound(a, b, seed=1)["upper"] >= 0.75
    with pytest.raises(ValueError):
        sr.repair_metric(np.array([[0.0, 1.0], [2.0, 0.0]]))


def test_config_errors_are_value_errors():
    with pytest.raises(sr.ConfigError, match="unknown key"):
        sr.parse_config('{"schema_version": 1, "space": {"kind": "circle"}, "x": 1}')


def test_embed_round_trip(tmp_path):
    cfg = sr.parse_config(SMOKE)
    a = sr.embed(cfg, threads=1)
    b = sr.embed(cfg, threads=2)
    assert a["artifacts"] == b["artifacts"]
    assert set(a["artifacts"]) == {"samples.csv", "helix_3d.csv", "embedding.csv", "diagnostics.json"}
    assert a["summary"]["config_sha256"] == cfg.hash()
    sr.run_and_write("embed", cfg, str(tmp_path))
    ok, problems = sr.verify(str(tmp_path), cfg)
    assert ok, problems


def test_shipped_configs_load():
    for name in sorted(os.listdir(CONFIGS)):
        if name.endswith(".json"):
            sr.load_config(os.path.join(CONFIGS, name))
