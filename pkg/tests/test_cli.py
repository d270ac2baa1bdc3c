import json

import numpy as np
import pytest

from cyclone_risk.core.cyclone_gev import PARAMETER_NAMES
from cyclone_risk.core.mcmc import PosteriorChain
from cyclone_risk.main import main
from cyclone_risk.schemas import IntensityGroup, SaffirSimpson
from cyclone_risk.services.chain_store import write_chain
from cyclone_risk.services.dataset import Dataset

from .conftest import make_season, random_covariate_rows, write_covariate_directory


def last_error(capsys) -> dict:
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


@pytest.fixture
def season_dataset(tmp_path, rng):
    rows = random_covariate_rows(rng, range(2000, 2015))
    seasons = []
    for row in rows:
        for group in IntensityGroup:
            n = int(rng.poisson(3 if group == IntensityGroup.LOW else 1.5))
            l = int(rng.binomial(n, 0.3))
            d = float(rng.lognormal(20, 1.5)) if l else 0.0
            seasons.append(make_season(row.season, group, n, l, d, covariates=row))
    dataset = Dataset(seasons=seasons, covariates={row.season: row for row in rows})
    return dataset.write_jsonl(tmp_path / "dataset.jsonl")


def test_ingest_fixtures(tmp_path, fixtures_dir, capsys):
    covariates = write_covariate_directory(tmp_path / "covariates", 2015, 2018)
    out = tmp_path / "dataset.jsonl"
    code = main([
        "ingest",
        "--hurdat2", str(fixtures_dir / "well_formed.txt"),
        "--covariates", str(covariates),
        "--damages", str(fixtures_dir / "damages.csv"),
        "--start-season", "2016",
        "--out", str(out),
    ])
    assert code == 0
    dataset = Dataset.read_jsonl(out)
    assert len(dataset.storms) == 3
    assert len(dataset.seasons) == 6
    assert sorted(dataset.standardizations) == ["log_min_pressure", "mean_latitude"]
    assert sorted(dataset.covariates) == [2016, 2017, 2018]
    manifest = json.loads((tmp_path / "dataset.manifest.json").read_text())
    assert manifest["command"] == "ingest"
    assert "hurdat2" in manifest["inputs"] and "dataset" in manifest["artifacts"]


def test_ingest_without_covariates(tmp_path, fixtures_dir, capsys):
    (tmp_path / "empty").mkdir()
    code = main([
        "ingest",
        "--hurdat2", str(fixtures_dir / "well_formed.txt"),
        "--covariates", str(tmp_path / "empty"),
        "--damages", str(fixtures_dir / "damages.csv"),
        "--out", str(tmp_path / "dataset.jsonl"),
    ])
    assert code == 2
    error = last_error(capsys)
    assert error["error"] == "MissingCovariateError"
    assert "SSN" in error["message"]


def test_ingest_uses_configured_thresholds(tmp_path, fixtures_dir):
    covariates = write_covariate_directory(tmp_path / "covariates", 2015, 2018)
    config = tmp_path / "run.env"
    config.write_text("SAFFIR_SIMPSON_KNOTS='{\"1\": 64, \"2\": 83, \"3\": 120, \"4\": 130, \"5\": 140}'\n")
    out = tmp_path / "dataset.jsonl"
    code = main([
        "--config", str(config),
        "ingest",
        "--hurdat2", str(fixtures_dir / "well_formed.txt"),
        "--covariates", str(covariates),
        "--damages", str(fixtures_dir / "damages.csv"),
        "--start-season", "2016",
        "--out", str(out),
    ])
    assert code == 0
    harvey = Dataset.read_jsonl(out).storm("AL092017")
    assert harvey.category == SaffirSimpson.CAT2
    assert harvey.intensity_group == IntensityGroup.LOW
    manifest = json.loads((tmp_path / "dataset.manifest.json").read_text())
    assert manifest["config"]["saffir_simpson_knots"]["3"] == 120


def test_unreadable_covariate_file_exits_with_input_error(tmp_path, fixtures_dir, capsys):
    covariates = write_covariate_directory(tmp_path / "covariates", 2015, 2018)
    (covariates / "sst.csv").write_text("year,month,value\n2016,5,warm\n")
    code = main([
        "ingest",
        "--hurdat2", str(fixtures_dir / "well_formed.txt"),
        "--covariates", str(covariates),
        "--damages", str(fixtures_dir / "damages.csv"),
        "--out", str(tmp_path / "dataset.jsonl"),
    ])
    assert code == 2
    error = last_error(capsys)
    assert error["error"] == "InputError"
    assert "sst.csv" in error["message"]


def test_malformed_hurdat2_reports_location(tmp_path, fixtures_dir, capsys):
    covariates = write_covariate_directory(tmp_path / "covariates", 2015, 2018)
    code = main([
        "ingest",
        "--hurdat2", str(fixtures_dir / "count_mismatch.txt"),
        "--covariates", str(covariates),
        "--damages", str(fixtures_dir / "damages.csv"),
        "--out", str(tmp_path / "dataset.jsonl"),
    ])
    assert code == 2
    error = last_error(capsys)
    assert error["line"] == 4


def fit_seasonal(dataset, out, *extra):
    return main(["--seed", "5", "fit-seasonal", "--group", "low", "--data", str(dataset),
                 "--iters", "300", "--out", str(out), *extra])


def test_fit_seasonal_is_deterministic(tmp_path, season_dataset):
    assert fit_seasonal(season_dataset, tmp_path / "a.csv") == 0
    assert fit_seasonal(season_dataset, tmp_path / "b.csv") == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    first = json.loads((tmp_path / "a.manifest.json").read_text())
    second = json.loads((tmp_path / "b.manifest.json").read_text())
    assert first["artifacts"]["chain"]["sha256"] == second["artifacts"]["chain"]["sha256"]


def test_predict_season(tmp_path, season_dataset, capsys):
    chain = tmp_path / "chain.csv"
    assert fit_seasonal(season_dataset, chain) == 0
    out = tmp_path / "pred.jsonl"
    code = main(["predict-season", "--chain", str(chain), "--data", str(season_dataset),
                 "--year", "2010", "--draws", "500", "--out", str(out)])
    assert code == 0
    records = [json.loads(line) for line in out.read_text().splitlines()]
    summary = records[0]
    assert summary["kind"] == "summary" and summary["n_draws"] == 500
    assert 0.0 <= summary["check"]["percentile"]["n"] <= 1.0
    assert {r["name"] for r in records if r["kind"] == "table"} == {"n_mass", "l_mass", "log_damage_density"}
    assert (tmp_path / "pred.n_mass.csv").exists()

    code = main(["predict-season", "--chain", str(chain), "--data", str(season_dataset),
                 "--year", "1900", "--out", str(out)])
    assert code == 2
    assert last_error(capsys)["error"] == "MissingYearError"


def test_predict_season_rejects_changed_dataset(tmp_path, season_dataset, capsys):
    chain = tmp_path / "chain.csv"
    assert fit_seasonal(season_dataset, chain) == 0
    with open(season_dataset, "a", encoding="utf-8") as f:
        f.write("\n")
    code = main(["predict-season", "--chain", str(chain), "--data", str(season_dataset),
                 "--year", "2010", "--out", str(tmp_path / "pred.jsonl")])
    assert code == 2
    assert last_error(capsys)["error"] == "ArtifactMismatchError"


def test_diagnose_short_chain(tmp_path, season_dataset, capsys):
    chain = tmp_path / "chain.csv"
    assert main(["fit-seasonal", "--group", "high", "--data", str(season_dataset),
                 "--iters", "50", "--out", str(chain)]) == 0
    assert main(["diagnose", "--chain", str(chain)]) == 2
    assert last_error(capsys)["error"] == "TooShortChainError"


def test_summary_reports_expected_damage(tmp_path, season_dataset, capsys):
    chain = tmp_path / "chain.csv"
    assert fit_seasonal(season_dataset, chain) == 0
    capsys.readouterr()
    assert main(["summary", "--chain", str(chain), "--out", str(tmp_path / "summary.csv")]) == 0
    out = capsys.readouterr().out
    payload = json.loads(out[out.index("{"):])
    assert payload["group"] == "low"
    assert set(payload["expected_damage"]) == {"median_damage", "mean_damage", "log_scale_mu"}


@pytest.fixture
def cyclone_chain(tmp_path):
    values = [-0.2, -0.3, 0.9, -0.2, 4.3, 0.3, -0.05, 0.15, -0.1, 19.5, 1.0, 0.5, -0.2, 2.0, -0.2]
    chain = PosteriorChain.point_mass(
        PARAMETER_NAMES, values, model="cyclone",
        cyclone_transform={
            "log_pressure": {"mean": float(np.log(980.0)), "sd": 0.02},
            "latitude": {"mean": 27.0, "sd": 4.0},
        },
    )
    return write_chain(chain, tmp_path / "cyclone.csv")


def test_predict_and_score_cyclone(tmp_path, cyclone_chain, capsys):
    out = tmp_path / "storm.jsonl"
    code = main(["predict-cyclone", "--chain", str(cyclone_chain), "--latitude", "27",
                 "--draws", "2000", "--out", str(out)])
    assert code == 0
    capsys.readouterr()

    assert main(["score", "--predictive", str(out), "--truth", "975,75,3e8"]) == 0
    result = json.loads(capsys.readouterr().out)
    assert set(result["row"]) == {"storm", "delta_min_pressure", "delta_max_wind", "delta_damage"}
    assert all(0.0 <= result["row"][k] <= 1.0 for k in result["row"] if k.startswith("delta_"))
    assert result["scores"]["damage"]["n_draws"] == 2000

    assert main(["score", "--predictive", str(out)]) == 2
    assert last_error(capsys)["error"] == "InputError"


def test_score_rejects_small_predictive(tmp_path, cyclone_chain, capsys):
    out = tmp_path / "storm.jsonl"
    assert main(["predict-cyclone", "--chain", str(cyclone_chain), "--latitude", "27",
                 "--draws", "100", "--out", str(out)]) == 0
    assert main(["score", "--predictive", str(out), "--truth", "975,75,3e8"]) == 2
    assert last_error(capsys)["error"] == "InsufficientDataError"


def test_config_file_overrides_flags(tmp_path, season_dataset):
    config = tmp_path / "run.env"
    config.write_text("SEASONAL_ITERATIONS=120\n")
    chain = tmp_path / "chain.csv"
    assert main(["--config", str(config), "fit-seasonal", "--group", "high", "--data", str(season_dataset),
                 "--iters", "5000", "--out", str(chain)]) == 0
    sidecar = json.loads(chain.with_suffix(".json").read_text())
    assert sidecar["config"]["iterations"] == 120
