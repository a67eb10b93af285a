import json
import subprocess
import sys

import pytest
from click.testing import CliRunner

from bannerforge.cli import cli
from bannerforge.ledger import read_ledger


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, args, **kwargs):
    return runner.invoke(cli, args, obj={}, **kwargs)


def stdout_json(result):
    return json.loads(result.stdout)


class TestIngestAndStats:
    def test_ingest_summarizes_catalog(self, runner, sample_catalog_path):
        result = invoke(runner, ["ingest", "--catalog", str(sample_catalog_path)])
        assert result.exit_code == 0
        body = stdout_json(result)
        assert body["products"] == 15
        assert "pet beds" in body["product_types"]

    def test_ingest_without_catalog_exits_1(self, runner):
        result = invoke(runner, ["ingest"])
        assert result.exit_code == 1
        assert "error:" in result.stderr

    def test_stats_reports_word_counts(self, runner, sample_catalog_path):
        result = invoke(runner, ["stats", "--catalog", str(sample_catalog_path)])
        assert result.exit_code == 0
        body = stdout_json(result)
        assert body["count"] == 15
        assert body["min"] >= 1
        assert body["max"] >= body["min"]

    def test_sample_is_deterministic(self, runner, sample_catalog_path):
        args = ["sample", "--catalog", str(sample_catalog_path),
                "--product-type", "pet beds", "--n", "1", "--seed", "4"]
        first = invoke(runner, args)
        second = invoke(runner, args)
        assert first.exit_code == 0
        assert stdout_json(first) == stdout_json(second)

    def test_sample_too_many_exits_1(self, runner, sample_catalog_path):
        result = invoke(runner, ["sample", "--catalog", str(sample_catalog_path),
                                 "--product-type", "pet beds", "--n", "99",
                                 "--seed", "1"])
        assert result.exit_code == 1


class TestExtract:
    def test_extract_single_product(self, runner, sample_catalog_path, tmp_path):
        result = invoke(runner, [
            "extract", "--catalog", str(sample_catalog_path),
            "--product-id", "p01", "--backend", "mock",
            "--ledgers-dir", str(tmp_path)])
        assert result.exit_code == 0
        body = stdout_json(result)
        assert len(body["extractions"]) == 1
        assert body["extractions"][0]["product_id"] == "p01"
        assert len(read_ledger(tmp_path / "extraction.jsonl")) == 1

    def test_extract_total_failure_exits_1(self, runner, sample_catalog_path,
                                           tmp_path):
        # The http backend points at localhost defaults; nothing is listening,
        # so a tiny retry budget makes every product fail fast.
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "textgen": {"base_url": "http://127.0.0.1:1/generate"}}))
        result = invoke(runner, [
            "--config", str(cfg), "extract",
            "--catalog", str(sample_catalog_path),
            "--product-id", "p01", "--backend", "mock",
            "--ledgers-dir", str(tmp_path)])
        assert result.exit_code == 0  # mock backend works regardless of config


class TestRun:
    def test_mock_run_over_full_catalog(self, runner, sample_catalog_path, tmp_path):
        result = invoke(runner, [
            "run", "--catalog", str(sample_catalog_path), "--backend", "mock",
            "--image-store", str(tmp_path / "images"),
            "--ledgers-dir", str(tmp_path / "ledgers"),
            "--width", "64", "--height", "64", "--steps", "2", "--seed", "1"])
        assert result.exit_code == 0, result.stderr
        body = stdout_json(result)
        assert body["products"] == 15
        assert body["records"] == 45
        assert body["failure_count"] == 0
        rows = read_ledger(tmp_path / "ledgers" / "generation.jsonl")
        assert len(rows) == 45

    def test_fault_injection_flags_failures(self, runner, sample_catalog_path,
                                            tmp_path):
        result = invoke(runner, [
            "run", "--catalog", str(sample_catalog_path), "--backend", "mock",
            "--image-store", str(tmp_path / "images"),
            "--ledgers-dir", str(tmp_path / "ledgers"),
            "--width", "64", "--height", "64", "--steps", "2", "--seed", "1",
            "--textgen-fail-contains", "Vibrant Life"])
        assert result.exit_code == 0
        body = stdout_json(result)
        assert body["records"] == 44
        assert body["failure_count"] == 1
        assert body["failures"][0]["stage"] == "extract"

    def test_type_filter_without_n_takes_whole_pool(self, runner,
                                                    sample_catalog_path, tmp_path):
        result = invoke(runner, [
            "run", "--catalog", str(sample_catalog_path), "--backend", "mock",
            "--product-type", "pet beds",
            "--image-store", str(tmp_path / "images"),
            "--ledgers-dir", str(tmp_path / "ledgers"),
            "--width", "64", "--height", "64", "--steps", "2"])
        assert result.exit_code == 0
        body = stdout_json(result)
        assert body["products"] == 1
        assert body["records"] == 3

    def test_unknown_type_exits_1(self, runner, sample_catalog_path, tmp_path):
        result = invoke(runner, [
            "run", "--catalog", str(sample_catalog_path), "--backend", "mock",
            "--product-type", "spaceships",
            "--image-store", str(tmp_path / "images"),
            "--ledgers-dir", str(tmp_path / "ledgers")])
        assert result.exit_code == 1

    def test_rerun_reproduces_record_ids(self, runner, sample_catalog_path, tmp_path):
        args_for = lambda sub: [
            "run", "--catalog", str(sample_catalog_path), "--backend", "mock",
            "--product-type", "pet beds",
            "--image-store", str(tmp_path / sub / "images"),
            "--ledgers-dir", str(tmp_path / sub / "ledgers"),
            "--width", "64", "--height", "64", "--steps", "2", "--seed", "9"]
        first = stdout_json(invoke(runner, args_for("a")))
        second = stdout_json(invoke(runner, args_for("b")))
        assert first["record_ids"] == second["record_ids"]


class TestGenerate:
    def test_generate_for_chosen_product(self, runner, sample_catalog_path, tmp_path):
        result = invoke(runner, [
            "generate", "--catalog", str(sample_catalog_path), "--backend", "mock",
            "--product-id", "p05", "--strategy", "PNAME", "--strategy", "PTYPE",
            "--image-store", str(tmp_path / "images"),
            "--ledgers-dir", str(tmp_path / "ledgers"),
            "--width", "64", "--height", "64", "--steps", "2"])
        assert result.exit_code == 0
        body = stdout_json(result)
        assert body["records"] == 2
        assert sorted(body["strategies"]) == ["PNAME", "PTYPE"]

    def test_unknown_product_id_exits_1(self, runner, sample_catalog_path, tmp_path):
        result = invoke(runner, [
            "generate", "--catalog", str(sample_catalog_path), "--backend", "mock",
            "--product-id", "p99",
            "--image-store", str(tmp_path / "images"),
            "--ledgers-dir", str(tmp_path / "ledgers")])
        assert result.exit_code == 1


class TestPersonalize:
    def test_selects_for_all_users(self, runner, sample_catalog_path, fixtures_dir):
        result = invoke(runner, [
            "personalize", "--catalog", str(sample_catalog_path),
            "--affinities", str(fixtures_dir / "affinities.jsonl")])
        assert result.exit_code == 0
        body = stdout_json(result)
        assert len(body["selections"]) == 5

    def test_unknown_user_exits_1(self, runner, sample_catalog_path, fixtures_dir):
        result = invoke(runner, [
            "personalize", "--catalog", str(sample_catalog_path),
            "--affinities", str(fixtures_dir / "affinities.jsonl"),
            "--user-id", "ghost"])
        assert result.exit_code == 1


class TestEvaluate:
    def test_brisque_scores_fixture_images(self, runner, fixtures_dir,
                                           toy_model_path, toy_range_path):
        result = invoke(runner, [
            "evaluate", "brisque", "--images", str(fixtures_dir / "brisque"),
            "--model", str(toy_model_path), "--range", str(toy_range_path)])
        assert result.exit_code == 0, result.stderr
        body = stdout_json(result)
        assert body["count"] == 6
        assert body["mean"] == pytest.approx(20.0, abs=1e-6)
        assert all("score" in e for e in body["per_image"])

    def test_brisque_features_flag(self, runner, fixtures_dir, toy_model_path,
                                   toy_range_path):
        result = invoke(runner, [
            "evaluate", "brisque", "--images", str(fixtures_dir / "brisque"),
            "--model", str(toy_model_path), "--range", str(toy_range_path),
            "--features"])
        body = stdout_json(result)
        assert len(body["per_image"][0]["features"]) == 36

    def test_brisque_empty_dir_exits_1(self, runner, tmp_path, toy_model_path,
                                       toy_range_path):
        result = invoke(runner, [
            "evaluate", "brisque", "--images", str(tmp_path),
            "--model", str(toy_model_path), "--range", str(toy_range_path)])
        assert result.exit_code == 1

    def test_par_over_mock_run(self, runner, sample_catalog_path, tmp_path):
        invoke(runner, [
            "run", "--catalog", str(sample_catalog_path), "--backend", "mock",
            "--product-type", "pet beds",
            "--image-store", str(tmp_path / "images"),
            "--ledgers-dir", str(tmp_path / "ledgers"),
            "--width", "64", "--height", "64", "--steps", "2"])
        result = invoke(runner, [
            "evaluate", "par", "--backend", "mock",
            "--run-ledger", str(tmp_path / "ledgers" / "generation.jsonl"),
            "--extraction-ledger", str(tmp_path / "ledgers" / "extraction.jsonl"),
            "--image-store", str(tmp_path / "images")])
        assert result.exit_code == 0, result.stderr
        body = stdout_json(result)
        assert 0.0 <= body["par"] <= 1.0
        assert body["prompts"] == 3
        assert len(body["per_prompt"]) == 3

    def test_par_without_run_exits_1(self, runner, tmp_path):
        result = invoke(runner, [
            "evaluate", "par", "--backend", "mock",
            "--run-ledger", str(tmp_path / "none.jsonl"),
            "--extraction-ledger", str(tmp_path / "none2.jsonl"),
            "--image-store", str(tmp_path)])
        assert result.exit_code == 1


class TestSurveyReport:
    def test_report_over_fixture_ratings(self, runner, fixtures_dir):
        result = invoke(runner, [
            "survey", "report",
            "--ratings-ledger", str(fixtures_dir / "survey" / "table_ratings.jsonl")])
        assert result.exit_code == 0
        body = stdout_json(result)
        assert round(body["methods"]["LLM"]["mean"], 3) == 2.077
        assert round(body["methods"]["PNAME"]["mean"], 3) == 2.413
        assert round(body["methods"]["PTYPE"]["mean"], 3) == 1.227


class TestEntryPoint:
    def test_console_script_responds(self):
        proc = subprocess.run([sys.executable, "-m", "bannerforge.cli", "--help"],
                              capture_output=True, text=True, timeout=60)
        assert proc.returncode == 0
        assert "pipeline" in proc.stdout
