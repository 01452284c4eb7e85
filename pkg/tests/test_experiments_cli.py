import csv
import json

import pytest

from mp_spectra import __version__
from mp_spectra.cli import main
from mp_spectra.errors import CapacityError, ConfigError
from mp_spectra.experiments import ExperimentConfig, run


def _cfg(tmp_path, **kw):
    base = dict(experiment="esd", y=0.5, n_grid=[16, 32], delta=2.0, replicates=3, master_seed=5,
                output_dir=str(tmp_path), figures=False)
    base.update(kw)
    return ExperimentConfig(**base)


def test_validation_lists_every_problem():
    cfg = ExperimentConfig(experiment="nope", y=-1, n_grid=[4, 2], replicates=0, workers=0)
    with pytest.raises(ConfigError) as info:
        cfg.validate()
    text = " ".join(info.value.problems)
    for needle in ("experiment", "y must", "ascending", "replicates", "workers"):
        assert needle in text


def test_seed_required_for_simulation():
    with pytest.raises(ConfigError, match="master_seed"):
        ExperimentConfig(experiment="esd").validate()
    ExperimentConfig(experiment="combinatorics_audit").validate()


def test_p_must_be_positive():
    with pytest.raises(ConfigError, match="round"):
        ExperimentConfig(experiment="esd", y=0.1, n_grid=[2], master_seed=1).validate()


def test_unknown_field():
    with pytest.raises(ConfigError, match="unknown"):
        ExperimentConfig.from_dict({"experiment": "esd", "bogus": 1})


def test_workers_env_default(monkeypatch):
    monkeypatch.setenv("MP_SPECTRA_WORKERS", "3")
    assert ExperimentConfig(experiment="esd").workers == 3


def test_load_with_overrides(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"experiment": "esd", "y": 0.25, "replicates": 4, "master_seed": 9}))
    cfg = ExperimentConfig.load(path, {"replicates": 2, "y": None})
    assert cfg.replicates == 2 and cfg.y == 0.25 and cfg.master_seed == 9


def test_esd_run(tmp_path):
    report = run(_cfg(tmp_path))
    assert len(report.records) == 2 * 3
    assert report.version == __version__
    for rec in report.records:
        assert {"n", "p", "replicate", "seed"} <= set(rec)
        assert rec["p"] == round(0.5 * rec["n"])
    with open(tmp_path / "moments.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2 * 3 * 4 and set(rows[0]) == {"n", "p", "replicate", "seed", "k", "value"}
    assert (tmp_path / "eigenvalues_32_2.csv").exists()
    hist = (tmp_path / "histogram_16.csv").read_text().splitlines()
    assert hist[0] == "edge,count" and len(hist) == 52
    assert sum(int(line.split(",")[1]) for line in hist[1:]) == 3 * 8
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["summary"]["moments"][0]["mp_moment"] == 1.0


def test_esd_deterministic_across_workers(tmp_path):
    run(_cfg(tmp_path / "a"))
    run(_cfg(tmp_path / "b", workers=2))
    for name in ("moments.csv", "histogram_32.csv", "eigenvalues_16_1.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_esd_figures(tmp_path):
    report = run(_cfg(tmp_path, n_grid=[16], replicates=2, figures=True))
    assert (tmp_path / "esd_16.png").stat().st_size > 0
    assert "esd_16.png" in report.files


def test_opnorm_scan_shared_z(tmp_path):
    report = run(_cfg(tmp_path, experiment="opnorm_scan", coupling="shared_z", delta=1.0, figures=True))
    seeds = {rec["seed"] for rec in report.records if rec["replicate"] == 0}
    assert len(seeds) == 1
    assert (tmp_path / "opnorm.csv").exists() and (tmp_path / "opnorm.png").exists()


def test_limit_law_test_run(tmp_path):
    report = run(_cfg(tmp_path, experiment="limit_law_test", delta=0.5, n_grid=[32], replicates=20, figures=True))
    entry = report.summary["ks"][0]
    assert 0 <= entry["ks"] <= 1 and report.summary["regime"] == "subcritical"
    assert (tmp_path / "limit_cdf.csv").exists() and (tmp_path / "cdf_32.png").exists()


def test_wick_check_run(tmp_path):
    cfg = _cfg(tmp_path, experiment="wick_check", p=2, n=2, k=2, replicates=100000)
    report = run(cfg)
    exact, mc = report.summary["wick"]
    assert exact["value_exact"] == "5/2"
    assert abs(mc["z_score"]) < 4


def test_wick_check_capacity_propagates(tmp_path):
    with pytest.raises(CapacityError):
        run(_cfg(tmp_path, experiment="wick_check", p=6, n=6, k=5, replicates=1))


def test_combinatorics_audit_run(tmp_path):
    report = run(_cfg(tmp_path, experiment="combinatorics_audit", p=3, n=3, k=3))
    assert report.summary["violations"] == 0
    assert report.summary["tree_count"]["match"]
    assert (tmp_path / "profiles.csv").exists()


def test_divergence_run(tmp_path):
    report = run(_cfg(tmp_path, experiment="divergence_demo", n_grid=[3, 4, 5], k=3, figures=True))
    assert report.summary["increasing"] and report.summary["dominates_term"]
    assert (tmp_path / "divergence.csv").exists()


def test_cli_mp_moments(capsys):
    assert main(["mp-moments", "--y", "1", "--k", "3"]) == 0
    assert capsys.readouterr().out.split() == ["1", "2", "5"]
    main(["mp-moments", "--y", "0.5", "--k", "4", "--exact"])
    assert capsys.readouterr().out.split() == ["1", "3/2", "11/4", "45/8"]


def test_cli_audit(capsys, tmp_path):
    assert main(["combinatorics-audit", "--p", "2", "--n", "2", "--k", "2", "--output-dir", str(tmp_path)]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "0 violations"


def test_cli_requires_seed(capsys):
    with pytest.raises(SystemExit) as info:
        main(["simulate-esd"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["opnorm-scan", "--bogus"])
    assert info.value.code == 2


def test_cli_error_record(capsys):
    assert main(["simulate-esd", "--seed", "1", "--n", "8", "4", "--no-figures"]) == 1
    record = json.loads(capsys.readouterr().err)
    assert record["error"] == "ConfigError" and record["problems"]
    assert main(["wick-exact", "--p", "6", "--n", "6", "--k", "5"]) == 1
    record = json.loads(capsys.readouterr().err)
    assert record["error"] == "CapacityError" and record["cost"] > record["limit"]


def test_cli_config_file(capsys, tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"experiment": "esd", "master_seed": 3, "n_grid": [8], "replicates": 2,
                                "output_dir": str(tmp_path / "out")}))
    assert main(["simulate-esd", "--config", str(path), "--replicates", "3", "--no-figures"]) == 0
    data = json.loads((tmp_path / "out" / "report.json").read_text())
    assert data["config"]["replicates"] == 3 and len(data["records"]) == 3
