import json
import subprocess
import sys

import pytest

from nskgevrey import cli
from nskgevrey.config import ConfigError, config_from_dict, config_to_dict, dump_config, parse_config
from nskgevrey.presets import PRESETS

MINIMAL = """
[grid]
d = 2
N = 16

[physics]
kappa_bar = 1.0
"""


def write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestConfig:
    def test_minimal_defaults_and_round_trip(self, tmp_path):
        cfg = parse_config(write(tmp_path, MINIMAL))
        assert cfg.grid.N == 16 and cfg.params.mu_bar == 0.5 and cfg.dt > 0
        again = parse_config(write(tmp_path, dump_config(cfg), "echo.toml"))
        assert config_to_dict(again) == config_to_dict(cfg)
        assert dump_config(again) == dump_config(cfg)

    def test_p4_in_2d(self, tmp_path):
        with pytest.raises(ConfigError, match=r"diagnostics\.p.*p != 4 if d=2"):
            parse_config(write(tmp_path, MINIMAL + "\n[diagnostics]\np = 4.0\n"))

    def test_kappa_zero(self, tmp_path):
        text = MINIMAL.replace("kappa_bar = 1.0", "kappa_bar = 0.0")
        with pytest.raises(ConfigError, match=r"physics\.kappa_bar: capillarity must be positive"):
            parse_config(write(tmp_path, text))

    def test_unknown_key(self):
        raw = {"grid": {"d": 2, "N": 16, "n": 3}, "physics": {"kappa_bar": 1.0}}
        with pytest.raises(ConfigError, match=r"grid\.n: unknown key"):
            config_from_dict(raw)

    @pytest.mark.parametrize(
        "raw,key",
        [
            ({"grid": {"d": 2}, "physics": {"kappa_bar": 1.0}}, "grid.N"),
            ({"grid": {"d": 2, "N": 16}, "physics": {"kappa_bar": "x"}}, "physics.kappa_bar"),
            ({"grid": {"d": 2, "N": 16}, "physics": {"kappa_bar": 1.0}, "oops": {}}, "oops"),
            ({"grid": {"d": 2, "N": 16}, "physics": {"kappa_bar": 1.0}, "time": {"dt": -1.0}}, "time.dt"),
            ({"grid": {"d": 2, "N": 16}, "physics": {"kappa_bar": 1.0}, "coefficients": {"mu": [2.0]}}, "coefficients"),
            ({"grid": {"d": 2, "N": 16}, "physics": {"kappa_bar": 1.0}, "initial": {"kind": "blob"}}, "initial.kind"),
        ],
    )
    def test_errors_name_key(self, raw, key):
        with pytest.raises(ConfigError) as exc:
            config_from_dict(raw)
        assert str(exc.value).startswith(key)

    def test_malformed(self, tmp_path):
        with pytest.raises(ConfigError, match="malformed"):
            parse_config(write(tmp_path, "[grid\n"))


@pytest.fixture(scope="module")
def small_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("runs")
    out = {}
    for pid in PRESETS:
        status, d = cli.run_experiment(pid, seed=7, out=root / pid, size="small")
        out[pid] = (status, d)
    return out


class TestPresets:
    def test_all_pass(self, small_runs):
        for pid, (status, d) in small_runs.items():
            assert status == 0, cli.emit_report(d)

    def test_deterministic(self, small_runs, tmp_path):
        for pid, (_, d) in small_runs.items():
            _, d2 = cli.run_experiment(pid, seed=7, out=tmp_path / pid, size="small")
            csvs = sorted(p.name for p in d.glob("*.csv"))
            assert csvs, pid
            for name in csvs:
                assert (d / name).read_bytes() == (d2 / name).read_bytes(), (pid, name)

    def test_manifest(self, small_runs):
        m = json.loads((small_runs["kernels"][1] / "manifest.json").read_text())
        assert m["seed"] == 7 and m["status"] == "PASS" and len(m["config_hash"]) == 64
        assert "numpy" in m["versions"] and m["files"]

    def test_report_lines(self, small_runs):
        text = cli.emit_report(small_runs["lyapunov-sweep"][1])
        assert "PASS" in text and "FAIL" not in text
        text = cli.emit_report(small_runs["theorem51-decay"][1])
        assert "decay rates" in text

    def test_checks_map_to_criteria(self, small_runs):
        seen = set()
        for _, d in small_runs.values():
            seen |= {c["criterion"] for c in json.loads((d / "manifest.json").read_text())["checks"]}
        assert set(range(1, 12)) <= seen


class TestCli:
    def test_diverged_report(self, tmp_path, capsys):
        text = MINIMAL + "\n[time]\ndt = 0.05\nt_end = 1.0\n\n[initial]\namplitude = 0.8\nxi_c = 3.0\n\n[diagnostics]\nradius = false\n"
        code = cli.main(["run", str(write(tmp_path, text)), "--out", str(tmp_path / "div")])
        out = capsys.readouterr().out
        assert code == 1
        assert "DIVERGED at t=" in out and "last healthy norms: t=" in out

    def test_config_run(self, tmp_path, capsys):
        text = MINIMAL + "\n[time]\nt_end = 0.2\n"
        code = cli.main(["run", str(write(tmp_path, text)), "--out", str(tmp_path / "ok"), "--seed", "3"])
        assert code == 0
        assert (tmp_path / "ok" / "trajectory.csv").is_file()
        assert parse_config(tmp_path / "ok" / "config.toml").seed == 3
        m = json.loads((tmp_path / "ok" / "manifest.json").read_text())
        assert m["x_p0"] > 0
        assert "X_p,0" in cli.emit_report(tmp_path / "ok")

    def test_corrupt_manifest(self, tmp_path, capsys):
        (tmp_path / "manifest.json").write_text("{not json")
        assert cli.main(["report", str(tmp_path)]) == 2
        assert "corrupt manifest" in capsys.readouterr().err
        assert cli.main(["report", str(tmp_path / "missing")]) == 2

    def test_unknown_preset(self, capsys):
        assert cli.main(["run", "no-such-preset"]) == 2
        assert "unknown preset" in capsys.readouterr().err

    def test_bad_config_exit(self, tmp_path, capsys):
        code = cli.main(["run", str(write(tmp_path, MINIMAL + "\n[diagnostics]\np = 4.0\n"))])
        assert code == 2
        assert "diagnostics.p" in capsys.readouterr().err

    def test_list_presets(self, capsys):
        assert cli.main(["list-presets"]) == 0
        out = capsys.readouterr().out
        for pid in PRESETS:
            assert pid in out

    @pytest.mark.parametrize("module", ["nskgevrey", "nskgevrey.cli"])
    def test_module_entry(self, module):
        res = subprocess.run([sys.executable, "-m", module, "list-presets"], capture_output=True, text=True)
        assert res.returncode == 0 and "kernels" in res.stdout
