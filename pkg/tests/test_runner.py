"""Tests for the subcommand workflows."""

import json
from pathlib import Path
from typing import Any

import pytest
from ruamel.yaml import YAML

from multipcl.config.models import ExperimentConfig
from multipcl.errors import ConfigurationError, ManifestValidationError, UsageError
from multipcl.runner import CommandInvocation, load_config, load_samples, run
from multipcl.types import Modality

SMALL_RUN: dict[str, Any] = {
    "fusion": {
        "model_dim": 4,
        "heads": 2,
        "input_dims": {"video": 8, "face": 8, "audio": 8, "text": 8},
    },
    "epochs": 2,
    "top_m": 1,
    "folds": 2,
    "seed": 5,
    "data": {"synthetic": "separable", "synthetic_size": 12},
}


def write_yaml(path: Path, data: dict[str, Any]) -> Path:
    """Write data to a YAML file."""
    yaml = YAML()
    with open(path, "w") as f:
        yaml.dump(data, f)
    return path


@pytest.fixture(autouse=True)
def isolated_cwd(tmp_path, monkeypatch):
    """Keep config discovery and artifacts inside the test directory."""
    monkeypatch.chdir(tmp_path)


@pytest.fixture
def small_config(tmp_path) -> Path:
    """A tiny synthetic setup that trains in well under a second."""
    return write_yaml(tmp_path / "small.yaml", SMALL_RUN)


def invoke(command: str, tmp_path: Path, **kwargs: Any) -> CommandInvocation:
    return CommandInvocation(command=command, out_dir=str(tmp_path / "out"), **kwargs)


def read_lines(path: Path) -> list[dict[str, Any]]:
    return [json.loads(line) for line in path.read_text().splitlines()]


class TestCommandInvocation:
    """Tests for invocation checks and override precedence."""

    def test_unknown_subcommand(self):
        """Only the eight workflows exist."""
        with pytest.raises(UsageError, match="serve"):
            CommandInvocation(command="serve")

    def test_both_variants_only_for_grid(self):
        """eval runs one variant."""
        with pytest.raises(UsageError, match="grid"):
            CommandInvocation(command="eval", variant="both")

    def test_single_subset_outside_grid(self):
        """train and eval take exactly one subset."""
        invocation = CommandInvocation(command="eval", subsets="V,T")
        with pytest.raises(UsageError, match="single"):
            invocation.all_overrides()

    def test_flags_become_overrides(self):
        """--seed, --variant and --subset map onto config keys."""
        invocation = CommandInvocation(command="eval", seed=3, variant="fc", subsets="V+T")
        config = load_config(invocation)
        assert config.seed == 3
        assert config.variant == "fc"
        assert config.modalities == [Modality.VIDEO, Modality.TEXT]

    def test_set_beats_flags_and_file(self, small_config):
        """--set wins over --seed, which wins over the config file."""
        from_file = CommandInvocation(command="eval", config_path=str(small_config))
        assert load_config(from_file).seed == 5
        flagged = CommandInvocation(command="eval", config_path=str(small_config), seed=7)
        assert load_config(flagged).seed == 7
        both = CommandInvocation(
            command="eval", config_path=str(small_config), seed=7, overrides=["seed=9"]
        )
        assert load_config(both).seed == 9

    def test_grid_keeps_subset_list(self):
        """grid subsets are not turned into a modality override."""
        invocation = CommandInvocation(command="grid", subsets="V,T,V+T")
        assert invocation.all_overrides() == []


class TestCorpusCommands:
    """Tests for validate, stats and kappa."""

    def test_stats_fixture_sums(self, tmp_path, fixture_manifest, capsys):
        """stats on the 6-entry fixture reproduces the hand sums."""
        assert run(invoke("stats", tmp_path, path=str(fixture_manifest))) == 0
        stats = json.loads((tmp_path / "out" / "stats.json").read_text())
        assert (stats["non_pcl"]["count"], stats["pcl"]["count"]) == (3, 3)
        assert stats["total"]["count"] == 6
        # 60*30 + 90*30 + 120*25 + 30*30 + 150*30 + 180*30
        assert stats["total"]["frames"] == 18300
        # spans: 150 + 150 + 300 frames on e4, 900 on e5
        assert (stats["spans"]["count"], stats["spans"]["frames"]) == (4, 1500)
        assert stats["positive_rate"] == 0.5
        assert "Total num" in capsys.readouterr().out

    def test_stats_idempotent(self, tmp_path, fixture_manifest):
        """Two runs write identical bytes and leave the manifest untouched."""
        before = fixture_manifest.read_bytes()
        run(invoke("stats", tmp_path, path=str(fixture_manifest)))
        first = (tmp_path / "out" / "stats.json").read_bytes()
        run(invoke("stats", tmp_path, path=str(fixture_manifest)))
        assert (tmp_path / "out" / "stats.json").read_bytes() == first
        assert fixture_manifest.read_bytes() == before

    def test_validate_clean_manifest(self, tmp_path, fixture_manifest, capsys):
        """A valid manifest reports ok and no violations."""
        assert run(invoke("validate", tmp_path, path=str(fixture_manifest))) == 0
        assert (tmp_path / "out" / "violations.jsonl").read_text() == ""
        assert "ok" in capsys.readouterr().out

    def test_validate_span_on_non_pcl(self, tmp_path, fixture_manifest):
        """A span on a label-0 entry fails and names the entry."""
        lines = fixture_manifest.read_text().splitlines()
        bad = json.loads(lines[0])
        bad.update(id="bad-entry", spans=[[0, 29]])
        manifest = tmp_path / "bad.jsonl"
        manifest.write_text("\n".join([json.dumps(bad), *lines[1:]]) + "\n")

        with pytest.raises(ManifestValidationError, match="bad-entry") as exc_info:
            run(invoke("validate", tmp_path, path=str(manifest)))
        assert exc_info.value.entry_id == "bad-entry"
        violations = read_lines(tmp_path / "out" / "violations.jsonl")
        assert [v["entry_id"] for v in violations] == ["bad-entry"]

    def test_kappa_fixture(self, tmp_path, fixture_annotations, capsys):
        """kappa on the fixture table matches the hand-derived value."""
        run(invoke("kappa", tmp_path, path=str(fixture_annotations)))
        record = json.loads((tmp_path / "out" / "kappa.json").read_text())
        assert record["kappa"] == pytest.approx(46 / 70)
        assert (record["items"], record["annotators"]) == (4, 3)
        assert "0.6571" in capsys.readouterr().out

    def test_stats_without_manifest(self, tmp_path):
        """No path and no data.manifest is a configuration problem."""
        with pytest.raises(ConfigurationError, match="data.manifest"):
            run(invoke("stats", tmp_path))

    def test_missing_manifest_file(self, tmp_path):
        """A manifest path that does not exist surfaces as FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            run(invoke("stats", tmp_path, path=str(tmp_path / "absent.jsonl")))


class TestExperimentCommands:
    """Tests for train, eval, grid and predict on the synthetic corpus."""

    def test_grid_three_subsets(self, tmp_path, small_config, capsys):
        """Subsets V,T,V+T give a three-row report and a summary."""
        invocation = invoke("grid", tmp_path, config_path=str(small_config), subsets="V,T,V+T")
        assert run(invocation) == 0
        records = read_lines(tmp_path / "out" / "grid.jsonl")
        assert [r["subset"] for r in records] == ["V", "T", "V+T"]
        assert {r["variant"] for r in records} == {"mhca"}
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert set(summary["best_by_size"]) == {"1", "2"}
        out = capsys.readouterr().out.splitlines()
        rows = [line.split()[0] for line in out if "MHCA" in line.split()]
        assert rows == ["V", "T", "V+T"]

    def test_grid_both_variants_byte_identical(self, tmp_path, small_config):
        """Both variants per subset; a rerun with the same seed writes the same bytes."""
        kwargs = {"config_path": str(small_config), "subsets": "V,V+T", "variant": "both"}
        run(invoke("grid", tmp_path, **kwargs))
        first = (tmp_path / "out" / "grid.jsonl").read_bytes()
        run(invoke("grid", tmp_path, **kwargs))
        assert (tmp_path / "out" / "grid.jsonl").read_bytes() == first
        records = [json.loads(line) for line in first.decode().splitlines()]
        assert [(r["subset"], r["variant"]) for r in records] == [
            ("V", "mhca"),
            ("V", "fc"),
            ("V+T", "mhca"),
            ("V+T", "fc"),
        ]

    def test_eval_single_report(self, tmp_path, small_config):
        """eval writes one record for the configured subset and variant."""
        invocation = invoke(
            "eval", tmp_path, config_path=str(small_config), subsets="V+T", variant="fc", jobs=2
        )
        run(invocation)
        (record,) = read_lines(tmp_path / "out" / "report.jsonl")
        assert (record["subset"], record["variant"]) == ("V+T", "fc")
        assert len(record["per_fold"]) == 2
        assert sum(record["confusion"].values()) == 12

    def test_train_then_predict(self, tmp_path, small_config):
        """train writes a checkpoint and trace; predict reuses the checkpoint."""
        run(invoke("train", tmp_path, config_path=str(small_config), subsets="V+T"))
        out = tmp_path / "out"
        assert (out / "model.pclm").exists()
        trace = read_lines(out / "trace.jsonl")
        assert [r["epoch"] for r in trace] == [0, 1]

        run(invoke("predict", tmp_path, config_path=str(small_config)))
        predictions = read_lines(out / "predictions.jsonl")
        assert len(predictions) == 12
        for record in predictions:
            assert set(record) == {"id", "label", "probability"}
            assert 0.0 <= record["probability"] <= 1.0
            assert record["label"] == int(record["probability"] >= 0.5)

    def test_predict_without_checkpoint(self, tmp_path, small_config):
        """No checkpoint in the output directory."""
        with pytest.raises(FileNotFoundError):
            run(invoke("predict", tmp_path, config_path=str(small_config)))

    def test_ingest_rejects_synthetic(self, tmp_path, small_config):
        """Generated corpora have nothing to cache."""
        with pytest.raises(ConfigurationError, match="synthetic"):
            run(invoke("ingest", tmp_path, config_path=str(small_config)))


class TestLoadSamples:
    """Tests for load_samples."""

    def test_encoder_width_mismatch(self, fixture_manifest):
        """Encoder widths must match fusion.input_dims."""
        config = ExperimentConfig(fusion={"modalities": "T", "input_dims": {"text": 8}})
        with pytest.raises(ConfigurationError, match="text"):
            load_samples(config, [Modality.TEXT], manifest=fixture_manifest)

    def test_synthetic_xor(self):
        """data.synthetic=xor generates the cross-modal corpus."""
        config = ExperimentConfig(data={"synthetic": "xor", "synthetic_size": 8})
        samples = load_samples(config, config.modalities)
        assert len(samples) == 8
        assert samples[0].bundle.get(Modality.VIDEO).shape == (2, 32)
