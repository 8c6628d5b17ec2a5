import json
from pathlib import Path

import pytest
import yaml

from monosync.cli import main
from monosync.config import ConfigError, load_config

GOLDEN = Path(__file__).parent / "golden"


def write_cfg(tmp_path, tree, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(tree))
    return str(path)


def small_model(sign=1, n=4):
    return {
        "model": {
            "coupling": {"family": "expfam", "s": sign, "a": 0.1, "N": n},
            "omega": 1.0,
            "N": n,
        }
    }


class TestConfig:
    def test_loads_minimal(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, small_model()))
        assert cfg.params.n == 4
        assert cfg.dt == 1e-2  # default applied

    def test_unknown_key_rejected(self, tmp_path):
        tree = small_model()
        tree["integrator"] = {"dt": 0.01, "stepsize": 0.1}
        with pytest.raises(ConfigError) as err:
            load_config(write_cfg(tmp_path, tree))
        assert "stepsize" in str(err.value)

    def test_zero_dt_rejected_naming_key(self, tmp_path):
        tree = small_model()
        tree["integrator"] = {"dt": 0}
        with pytest.raises(ConfigError) as err:
            load_config(write_cfg(tmp_path, tree))
        assert "dt" in str(err.value)

    def test_unknown_family_rejected(self, tmp_path):
        tree = {"model": {"coupling": {"family": "sine"}, "N": 4}}
        with pytest.raises(ConfigError) as err:
            load_config(write_cfg(tmp_path, tree))
        assert "family" in str(err.value)

    def test_tabulated_roundtrip(self, tmp_path):
        tree = {
            "model": {
                "coupling": {
                    "family": "tabulated",
                    "knots": [[0.5, 0.9], [3.0, 0.5], [5.5, 0.2]],
                },
                "N": 3,
            }
        }
        cfg = load_config(write_cfg(tmp_path, tree))
        assert cfg.params.gamma(3.0) == pytest.approx(0.5)

    def test_explicit_initial_diffs(self, tmp_path):
        tree = small_model()
        tree["initial"] = {"kind": "diffs", "values": [1.0, 2.0, 3.0]}
        cfg = load_config(write_cfg(tmp_path, tree))
        state = cfg.initial_state()
        assert list(state.diffs) == [1.0, 2.0, 3.0]

    def test_cone_validation(self, tmp_path):
        tree = small_model()
        tree["experiment"] = {"cone": [0]}
        with pytest.raises(ConfigError) as err:
            load_config(write_cfg(tmp_path, tree))
        assert "cone" in str(err.value)


class TestCliExitCodes:
    def test_invalid_config_exits_2(self, tmp_path, capsys):
        tree = small_model()
        tree["integrator"] = {"dt": 0}
        cfg = write_cfg(tmp_path, tree)
        code = main(["simulate", "-c", cfg, "-o", str(tmp_path / "out")])
        assert code == 2
        assert "dt" in capsys.readouterr().err

    def test_missing_config_exits_2(self, tmp_path):
        code = main(["simulate", "-c", str(tmp_path / "nope.yaml"), "-o", str(tmp_path)])
        assert code == 2

    def test_simulate_writes_outputs(self, tmp_path, capsys):
        tree = small_model(sign=-1)
        tree["integrator"] = {"dt": 0.01, "t_end": 200.0}
        tree["initial"] = {"kind": "random", "seed": 3}
        out = tmp_path / "out"
        code = main(["simulate", "-c", write_cfg(tmp_path, tree), "-o", str(out)])
        assert code == 0
        assert capsys.readouterr().out.strip() == "full_sync"
        csv = (out / "trajectory.csv").read_text().splitlines()
        assert csv[0].startswith("# provenance:")
        assert csv[1] == "t,phase_1,phase_2,phase_3,phase_4"
        events = json.loads((out / "events.json").read_text())
        assert events["terminal"]["kind"] == "full_sync"
        assert 1 <= len(events["events"]) <= 3
        assert events["provenance"]["config"]["model"]["N"] == 4

    def test_contract_certifies_and_exits_0(self, tmp_path, capsys):
        tree = small_model(sign=1)
        tree["integrator"] = {"dt": 0.001}
        tree["experiment"] = {"seed": 7, "n_pairs": 4, "horizon": 2.0}
        out = tmp_path / "out"
        code = main(["contract", "-c", write_cfg(tmp_path, tree), "-o", str(out)])
        assert code == 0
        assert capsys.readouterr().out.strip() == "contracting"
        report = json.loads((out / "contraction_report.json").read_text())
        assert report["verdict"] == "contracting"
        assert report["generator"] == "numpy-pcg64"

    def test_behavior_certifies_and_exits_0(self, tmp_path, capsys):
        tree = small_model(sign=-1)
        tree["integrator"] = {"dt": 0.01, "t_end": 300.0}
        tree["experiment"] = {"seed": 7, "n_trials": 2}
        out = tmp_path / "out"
        code = main(["behavior", "-c", write_cfg(tmp_path, tree), "-o", str(out)])
        assert code == 0
        report = json.loads((out / "behavior_report.json").read_text())
        assert report["summary"] == "all_full_sync"

    def test_decompose_reports_identity(self, capsys):
        code = main(["decompose", "--", "-1", "2", "-1"])
        assert code == 0
        out = capsys.readouterr().out
        assert "tv_distance: 8.0" in out
        assert "1:min 2:max 3:min" in out
        assert "alternating_sum: 4.0" in out
        assert "tv - 2*alt = 0.0" in out

    def test_decompose_rejects_zero_vector(self, capsys):
        code = main(["decompose", "0", "0"])
        assert code == 2


class TestGolden:
    def test_decompose_output_frozen(self, capsys):
        main(["decompose", "--", "-0.5", "1.25", "-0.75", "0.5"])
        out = capsys.readouterr().out
        assert out == (GOLDEN / "decompose.txt").read_text()

    def test_simulate_trajectory_frozen(self, tmp_path):
        tree = {
            "model": {
                "coupling": {"family": "expfam", "s": -1, "a": 0.1, "N": 5},
                "omega": 1.0,
                "N": 5,
            },
            "integrator": {"dt": 0.01, "t_end": 40.0, "record_every": 200},
            "initial": {"kind": "random", "seed": 11},
        }
        out = tmp_path / "out"
        code = main(["simulate", "-c", write_cfg(tmp_path, tree), "-o", str(out)])
        assert code == 0
        assert (out / "trajectory.csv").read_bytes() == (
            GOLDEN / "trajectory.csv"
        ).read_bytes()
        assert (out / "events.json").read_bytes() == (
            GOLDEN / "events.json"
        ).read_bytes()
