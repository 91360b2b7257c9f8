import json
import os

import numpy as np
import pytest
from click.testing import CliRunner

from seclink.rate_region import JointSource
from seclink.workbench import cli
from seclink.workbench.cache import CACHE_ENV, CacheError, ResultCache, ResultRecord
from seclink.workbench.config import ConfigError, digest, parse_config, serialize

UNIFORM = {"source": {"sizes": [2, 2, 2], "pmf": [0.125] * 8}}
BSC = {
    "source": {"generator": "bsc-pair", "p_y": 0.1, "p_z": 0.2},
    "rates": {"r1": 0.3, "r2": 0.25},
    "cardinalities": {"t": 2, "u": 2},
    "optimizer": {"restarts": 4},
    "aux": {"u_given_x": [[1, 0], [0, 1]], "t_given_u": [[1], [1]]},
    "codec": {"n": 6, "margin": 0.15, "trials": 40, "seed": 7},
}


@pytest.fixture
def cache_dir(tmp_path, monkeypatch):
    d = tmp_path / "cache"
    monkeypatch.setenv(CACHE_ENV, str(d))
    return d


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg) if not isinstance(cfg, str) else cfg)
    return str(p)


# --- config ------------------------------------------------------------------


def test_minimal_config():
    cfg = parse_config(json.dumps(UNIFORM))
    np.testing.assert_allclose(cfg.joint_source().array, np.full((2, 2, 2), 0.125))
    assert cfg.aux() is None


def test_sum_violation_names_field():
    bad = {"source": {"sizes": [2, 1, 1], "pmf": [0.5, 0.4]}}
    with pytest.raises(ConfigError) as exc:
        parse_config(json.dumps(bad))
    assert exc.value.violations[0].startswith("/source/pmf:")
    assert "sums to 0.9" in exc.value.violations[0]


def test_decimal_strings():
    cfg = parse_config(json.dumps({"source": {"sizes": [2, 1, 1], "pmf": ["0.3", "0.7"]}}))
    assert cfg.source.pmf == (0.3, 0.7)
    with pytest.raises(ConfigError, match="decimal"):
        parse_config(json.dumps({"source": {"sizes": [2, 1, 1], "pmf": ["x", "0.7"]}}))


def test_bsc_generator_expands_to_degraded_source():
    cfg = parse_config(json.dumps({"source": {"generator": "bsc-pair", "p_y": 0.1, "p_z": 0.2}}))
    arr = cfg.joint_source().array
    # p(x, y, z) = 0.5 * W_y(y|x) * W_z(z|x)
    for x in range(2):
        for y in range(2):
            for z in range(2):
                py = 0.9 if y == x else 0.1
                pz = 0.8 if z == x else 0.2
                assert arr[x, y, z] == pytest.approx(0.5 * py * pz, abs=1e-15)
    np.testing.assert_allclose(arr, JointSource.bsc_pair(0.1, 0.2).array)


@pytest.mark.parametrize("text,path", [
    ('{"source": {"generator": "bsc-pair", "p_y": 1.5, "p_z": 0.2}}', "/source"),
    ('{"source": {"sizes": [2, 1, 1], "pmf": [0.5, 0.5]}, "codec": {"n": 0}}', "/codec/n"),
    ('{"source": {"sizes": [2, 1, 1], "pmf": [0.5, 0.5]}, "extra": 1}', "/:"),
    ('{"source": {"sizes": [2, 1, 1], "pmf": [0.5, 0.5, 0.0]}}', "/source/pmf"),
    ('{"source": ', "malformed"),
])
def test_schema_violations(text, path):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert any(path in v for v in exc.value.violations)


def test_aux_card_mismatch():
    bad = dict(UNIFORM, aux={"u_given_x": [[1.0]] * 3, "t_given_u": [[1.0]]})
    with pytest.raises(ConfigError, match="aux"):
        parse_config(json.dumps(bad))


def test_round_trip():
    for raw in (UNIFORM, BSC, dict(BSC, sweep={"vary": "r2", "from": 0, "to": 0.5, "steps": 3, "fixed": 0.2})):
        cfg = parse_config(json.dumps(raw))
        assert parse_config(serialize(cfg)) == cfg


def test_digest_ignores_key_order():
    a = json.dumps(BSC)
    b = json.dumps({k: BSC[k] for k in reversed(list(BSC))})
    assert digest(parse_config(a)) == digest(parse_config(b))
    changed = dict(BSC, rates={"r1": 0.3, "r2": 0.26})
    assert digest(parse_config(json.dumps(changed))) != digest(parse_config(a))


# --- cache -------------------------------------------------------------------


def test_cache_store_lookup(tmp_path):
    c = ResultCache(tmp_path)
    rec = ResultRecord("d1", "point", 0, "0.1.0", {"csv": "a\n"})
    c.store(rec)
    hit = c.lookup("d1", "point", 0, "0.1.0")
    assert hit is not None and hit.outputs == {"csv": "a\n"} and hit.timestamp
    assert c.lookup("d2", "point", 0, "0.1.0") is None
    assert c.lookup("d1", "point", 1, "0.1.0") is None
    assert c.lookup("d1", "point", 0, "0.2.0") is None
    assert not [p for p in os.listdir(tmp_path) if p.startswith(".tmp")]


def test_cache_env_override(cache_dir):
    assert ResultCache().root == cache_dir


def test_cache_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(CacheError):
        ResultCache(blocker / "sub").store(ResultRecord("d", "c", 0, "v", {}))


# --- CLI ---------------------------------------------------------------------


def run(args):
    return CliRunner().invoke(cli.main, args)


def test_point_csv(tmp_path, cache_dir):
    res = run(["point", "--config", write(tmp_path, BSC)])
    assert res.exit_code == 0, res.output
    header, row = res.output.strip().split("\n")
    assert header.split(",")[:3] == ["r1", "r2", "joint_key_rate"]
    assert float(row.split(",")[2]) == pytest.approx(0.502933, abs=1e-6)


def test_point_infeasible_exit(tmp_path, cache_dir):
    res = run(["point", "--config", write(tmp_path, BSC), "--r1", "0"])
    assert res.exit_code == 3


def test_unknown_subcommand():
    res = run(["bogus"])
    assert res.exit_code == 2 and "Usage" in res.output


def test_config_error_exit(tmp_path, cache_dir):
    path = write(tmp_path, {"source": {"sizes": [2, 1, 1], "pmf": [0.5, 0.4]}})
    assert run(["point", "--config", path, "--r1", "1", "--r2", "0"]).exit_code == 2
    assert run(["validate-config", "--config", path]).exit_code == 2
    assert run(["point", "--config", str(tmp_path / "missing.json")]).exit_code == 2


def test_missing_rates_is_config_error(tmp_path, cache_dir):
    assert run(["point", "--config", write(tmp_path, UNIFORM)]).exit_code == 2


def test_inapplicable_exit(tmp_path, cache_dir):
    res = run(["simulate", "--config", write(tmp_path, BSC), "--r2", "0.1"])
    assert res.exit_code == 3


def test_validate_config_prints_digest(tmp_path):
    res = run(["validate-config", "--config", write(tmp_path, BSC)])
    assert res.exit_code == 0
    assert res.output.strip() == "ok " + digest(parse_config(json.dumps(BSC)))


def test_sweep_served_from_cache(tmp_path, cache_dir):
    path = write(tmp_path, BSC)
    args = ["sweep", "--config", path, "--vary", "r2", "--from", "0", "--to", "0.4", "--steps", "3"]
    first = run(args + ["--out", str(tmp_path / "a.csv")])
    assert first.exit_code == 0, first.output
    stored = sorted(cache_dir.iterdir())
    assert len(stored) == 1
    second = run(args + ["--out", str(tmp_path / "b.csv")])
    assert second.exit_code == 0
    assert sorted(cache_dir.iterdir()) == stored
    a, b = (tmp_path / "a.csv").read_bytes(), (tmp_path / "b.csv").read_bytes()
    assert a == b
    assert a.startswith(b"varied_rate,joint_key_rate,separation_key_rate,witness_digest\n")
    assert len(a.decode().strip().split("\n")) == 4


def test_no_cache_leaves_directory_empty(tmp_path, cache_dir):
    res = run(["point", "--config", write(tmp_path, BSC), "--no-cache"])
    assert res.exit_code == 0
    assert not cache_dir.exists()


def test_simulate_and_leakage_csv(tmp_path, cache_dir):
    path = write(tmp_path, BSC)
    sim = run(["simulate", "--config", path, "--no-cache"])
    assert sim.exit_code == 0, sim.output
    header, row = sim.output.strip().split("\n")
    assert header == "n,trials,p_e_hat,ci_lo,ci_hi,leakage,leakage_method,seed"
    fields = row.split(",")
    assert fields[0] == "6" and fields[1] == "40" and fields[6] == "exact" and fields[7] == "7"
    leak = run(["leakage", "--config", path, "--no-cache", "--seed", "7"])
    assert leak.exit_code == 0
    assert float(leak.output.strip().split("\n")[1].split(",")[2]) == pytest.approx(float(fields[5]), abs=1e-10)


def test_oracle_csv(tmp_path, cache_dir):
    cfg = dict(BSC, optimizer={"grid_resolution": 4})
    res = run(["oracle", "--config", write(tmp_path, cfg), "--no-cache"])
    assert res.exit_code == 0, res.output
    lines = res.output.strip().split("\n")
    assert lines[1].split(",")[2] == "joint" and lines[2].split(",")[2] == "separation"


def test_oracle_cap_exit(tmp_path, cache_dir):
    cfg = dict(BSC, cardinalities={"t": 4, "u": 5}, optimizer={"grid_resolution": 64})
    assert run(["oracle", "--config", write(tmp_path, cfg), "--no-cache"]).exit_code == 2


def test_run_command_returns_status(tmp_path, cache_dir):
    path = write(tmp_path, BSC)
    assert cli.run_command(["validate-config", "--config", path]) == 0
    assert cli.run_command(["point", "--config", path, "--r1", "0", "--out", str(tmp_path / "p.csv")]) == 3
    assert cli.run_command(["bogus"]) == 2
    assert cli.run_command(["point"]) == 2
