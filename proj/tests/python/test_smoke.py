import json
import math

import pytest

import ztd


def test_belief_update_matches_hand_value():
    cfg = ztd.PomdpConfig()
    theta = ztd.Scenario()
    # continue from 0.5 predicts 0.35 legit; an alert then gives
    # 0.35*0.1 / (0.35*0.1 + 0.65*0.9)
    ts = ztd.belief_update(0.5, 1, 0, theta, cfg)
    assert ts == pytest.approx(0.035 / 0.62, abs=1e-12)


def test_exact_one_step():
    cfg = ztd.PomdpConfig()
    # ties reset: 0.5*10 + 0.5*3; below the trust score it continues: 0.5*15
    assert ztd.exact_value(ztd.Scenario(), cfg, 0.5, 1) == pytest.approx(6.5)
    assert ztd.exact_value(ztd.Scenario(), cfg, 0.4, 1) == pytest.approx(7.5)


def test_mc_agrees_with_exact():
    cfg = ztd.PomdpConfig()
    cfg.horizon = 6
    theta = ztd.Scenario()
    mean, se, n = ztd.mc_value_estimate(theta, cfg, 0.3, 20000, 5)
    assert n == 20000
    assert abs(mean - ztd.exact_value(theta, cfg, 0.3, 6)) <= 4 * se


def test_spsa_quadratic_is_exact():
    g = ztd.spsa_gradient(lambda t, s: (t - 0.3) ** 2, 0.5, 0.1, 7)
    assert g == pytest.approx(0.4, abs=1e-12)


def test_simplex_projection():
    p = ztd.simplex_project([1.2, 0.2, 0.0])
    assert sum(p) == pytest.approx(1.0)
    assert p[0] == pytest.approx(1.0)


def test_scaled_beta_sampling_respects_support():
    xs = ztd.sample_scaled_beta("p_u_n", 0.0, 0.7, 0.35, n=200, seed=3)
    assert len(xs) == 200
    assert all(0.0 <= s.p_u_n <= 0.7 for s in xs)
    assert all(s.in_threshold_regime() for s in xs)


def test_train_is_deterministic():
    xs = ztd.sample_scaled_beta("p_u_n", 0.0, 0.7, 0.35, n=20, seed=3)
    cfg = ztd.PomdpConfig()
    a = ztd.train(xs, cfg, n_rollouts=10, seed=4, max_iters=20, batch_size=5)
    b = ztd.train(xs, cfg, n_rollouts=10, seed=4, max_iters=20, batch_size=5)
    assert a == b
    assert 0.0 <= a["tau_meta"] <= 1.0
    assert len(a["history"]) == a["iterations"]


def test_spearman():
    assert ztd.spearman_correlation([1, 2, 3], [3, 5, 9]) == pytest.approx(1.0)


def test_invalid_input_raises():
    with pytest.raises(ztd.ZtdError):
        ztd.exact_value(ztd.Scenario(), ztd.PomdpConfig(), 0.4, 0)


def test_config_round_trip(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"pomdp": {"rho": 0.9}, "master_seed": 11}))
    cfg = ztd.load_config(path)
    assert cfg["pomdp"]["rho"] == 0.9
    assert cfg["master_seed"] == 11
    assert len(ztd.config_digest(str(path))) == 64


def test_invalid_config_raises_validation_error(tmp_path):
    path = tmp_path / "c.json"
    path.write_text('{"pomdp": {"rho": 1.5}}')
    with pytest.raises(ztd.ValidationError):
        ztd.load_config(path)


def test_run_cli_help():
    code, out, err = ztd.run_cli(["--help"])
    assert code == 0
    assert "train" in out


def test_schema_accepts_defaults_and_samples():
    jsonschema = pytest.importorskip("jsonschema")
    import pathlib

    root = pathlib.Path(__file__).resolve().parents[2]
    schema = json.loads((root / "docs" / "config.schema.json").read_text())
    for path in sorted((root / "configs").glob("*.json")):
        jsonschema.validate(json.loads(path.read_text()), schema)
        jsonschema.validate(ztd.load_config(path), schema)
