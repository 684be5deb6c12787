import json

import pytest
from click.testing import CliRunner

from kleinsigma.cli import main
from kleinsigma.errors import InvalidModuli
from kleinsigma.pipeline import STAGES, RunConfig, dumps_report, run_pipeline


def test_config_defaults_and_roundtrip(tmp_path):
    cfg = RunConfig(branch_points=["1/2", "2", "3", "4", "5"], seed=7, tolerances={"jacobi": 1e-6})
    text = cfg.dumps()
    path = tmp_path / "c.json"
    path.write_text(text)
    again = RunConfig.load(path)
    assert again == cfg
    assert again.dumps() == text
    assert RunConfig().stages == list(STAGES)


def test_config_toml(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text('curve = "x4"\nseed = 3\nbranch_points = ["1", "2", "3", "4", "11/2"]\n')
    cfg = RunConfig.load(path)
    assert cfg.seed == 3 and cfg.branch_points[-1] == "11/2"


@pytest.mark.parametrize("bad", [{"stages": ["nope"]}, {"precision": "quad"}, {"tolerances": {"x": 1}},
                                 {"colour": 1}])
def test_config_rejects(bad):
    with pytest.raises(ValueError):
        RunConfig.from_dict(bad)


def test_coincident_branch_points_fail_at_curve_stage():
    cfg = RunConfig(branch_points=["1", "1", "3", "4", "5"], stages=["semigroup", "curve", "forms"])
    report = run_pipeline(cfg)
    assert not report["passed"]
    last = report["stages"][-1]
    assert last["stage"] == "curve" and last["error"]["type"] == "InvalidModuli"
    assert [s["stage"] for s in report["stages"]] == ["semigroup", "curve"]
    with pytest.raises(InvalidModuli) as info:
        run_pipeline(cfg, raise_errors=True)
    assert info.value.stage == "curve"


def test_stage_selection_and_determinism():
    cfg = RunConfig(stages=["semigroup", "curve"], rank_samples=10)
    a, b = dumps_report(run_pipeline(cfg)), dumps_report(run_pipeline(cfg))
    assert a == b
    report = json.loads(a)
    assert [s["stage"] for s in report["stages"]] == ["semigroup", "curve"]
    assert report["schema"] == 1


def test_cli_semigroup_json():
    out = CliRunner().invoke(main, ["--json", "semigroup", "--gens", "3,7,8"])
    assert out.exit_code == 0
    assert json.loads(out.output)["gaps"] == [1, 2, 4, 5]


def test_cli_ring_reduce():
    out = CliRunner().invoke(main, ["ring", "reduce", "--poly", "y7^2"])
    assert out.exit_code == 0
    assert "y8" in out.output


def test_cli_pipeline_stages(tmp_path):
    target = tmp_path / "r.json"
    out = CliRunner().invoke(main, ["pipeline", "--stages", "periods,legendre", "--out", str(target)])
    assert out.exit_code == 0, out.output
    report = json.loads(target.read_text())
    assert [s["stage"] for s in report["stages"]] == ["periods", "legendre"]


def test_cli_pipeline_failure_exit_code(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(RunConfig(branch_points=["1", "1", "3", "4", "5"]).dumps())
    out = CliRunner().invoke(main, ["--config", str(path), "pipeline", "--stages", "curve"])
    assert out.exit_code == 1


def test_cli_periods_and_sigma(tmp_path):
    target = tmp_path / "p.json"
    r = CliRunner()
    out = r.invoke(main, ["--json", "periods", "compute", "--out", str(target)])
    assert out.exit_code == 0, out.output
    out = r.invoke(main, ["--json", "sigma", "eval", "--periods", str(target), "--u", "0.1,0.2i,0,0.05",
                          "--derivs", "1"])
    assert out.exit_code == 0, out.output
    data = json.loads(out.output)
    assert len(data["gradient"]) == 4 and len(data["value"]) == 2


def test_cli_moonshine():
    out = CliRunner().invoke(main, ["--json", "moonshine", "grunsky", "--order", "12"])
    assert out.exit_code == 0
    data = json.loads(out.output)
    assert data["replicable"] and data["symmetric"]
    assert all(i["holds"] for i in data["identities"])
