"""Command-line behaviour: config layering, subcommands, exit codes."""

import json

import numpy as np
import pytest

from pstnet.cli import (
    SCHEMA,
    _parse_attention,
    main,
    read_config_file,
    resolve_config,
)
from pstnet.dataio import read_dataset


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def make_dataset(tmp_path, capsys, name="data.pst", **overrides):
    args = ["generate", "--out", str(tmp_path / name), "--n-per-class", "3"]
    for key, value in overrides.items():
        args += [f"--{key.replace('_', '-')}", str(value)]
    code, out, err = run(capsys, *args)
    assert code == 0, err
    return tmp_path / name


class TestConfigResolution:
    def test_schema_defaults_cover_every_key(self):
        class NoArgs:
            pass

        values, explicit = resolve_config(NoArgs())
        assert set(values) == set(SCHEMA)
        assert explicit == set()
        assert values["epochs"] == 300
        assert values["attention"] == (True, True, True)

    def test_config_file_parsing(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("epochs = 7  # short run\n\nattention = ps\nsplit_ratio = 2:1\n")
        raw = read_config_file(path)
        assert raw == {"epochs": "7", "attention": "ps", "split_ratio": "2:1"}

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("epoch = 7\n")
        with pytest.raises(ValueError, match="unknown config key"):
            read_config_file(path)

    def test_duplicate_key_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("epochs = 7\nepochs = 8\n")
        with pytest.raises(ValueError, match="duplicate"):
            read_config_file(path)

    def test_line_without_equals_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("epochs\n")
        with pytest.raises(ValueError, match="key=value"):
            read_config_file(path)

    def test_flags_override_file_overrides_defaults(self, tmp_path, capsys):
        dataset = make_dataset(tmp_path, capsys)
        cfg = tmp_path / "run.cfg"
        cfg.write_text("epochs = 2\nbatch_size = 4\n")
        out_dir = tmp_path / "run"
        code, _, err = run(
            capsys, "train", str(dataset), "--config", str(cfg),
            "--epochs", "1", "--out", str(out_dir),
        )
        assert code == 0, err
        snapshot = (out_dir / "config_used.txt").read_text()
        assert "epochs = 1" in snapshot       # flag beat the file
        assert "batch_size = 4" in snapshot   # file beat the default
        assert "learning_rate = 0.001" in snapshot

    def test_attention_letters(self):
        assert _parse_attention("pst") == (True, True, True)
        assert _parse_attention("P") == (True, False, False)
        assert _parse_attention("ts") == (False, True, True)
        assert _parse_attention("none") == (False, False, False)
        with pytest.raises(ValueError, match="letters"):
            _parse_attention("xyz")


class TestGenerate:
    def test_writes_feature_dataset(self, tmp_path, capsys):
        path = tmp_path / "d.pst"
        code, out, _ = run(capsys, "generate", "--out", str(path), "--n-per-class", "2")
        assert code == 0
        assert "6 samples" in out and "(9,5,8,9)" in out
        samples, _ = read_dataset(path)
        assert len(samples) == 6
        assert sorted({s.label for s in samples}) == [0, 1, 2]

    def test_generation_is_deterministic(self, tmp_path, capsys):
        a = make_dataset(tmp_path, capsys, name="a.pst")
        b = make_dataset(tmp_path, capsys, name="b.pst")
        assert a.read_bytes() == b.read_bytes()

    def test_seed_changes_the_data(self, tmp_path, capsys):
        a = make_dataset(tmp_path, capsys, name="a.pst")
        b = make_dataset(tmp_path, capsys, name="b.pst", seed=1)
        assert a.read_bytes() != b.read_bytes()

    def test_bad_flag_value_exits_one(self, tmp_path, capsys):
        code, _, err = run(
            capsys, "generate", "--out", str(tmp_path / "d.pst"), "--n-per-class", "many"
        )
        assert code == 1
        assert err.startswith("error:")


class TestExtract:
    def test_raw_to_features_round(self, tmp_path, capsys):
        raw = tmp_path / "raw.pst"
        code, out, err = run(
            capsys, "generate", "--kind", "raw", "--out", str(raw),
            "--n-per-class", "1", "--t", "2",
        )
        assert code == 0, err
        assert "3 recordings" in out and "62 channels" in out
        features = tmp_path / "features.pst"
        code, out, err = run(capsys, "extract", str(raw), "--out", str(features))
        assert code == 0, err
        assert "(2, 5, 8, 9)" in out
        samples, layout_ref = read_dataset(features)
        assert len(samples) == 3
        assert layout_ref == "builtin:seed62_8x9"

    def test_extract_rejects_feature_files(self, tmp_path, capsys):
        dataset = make_dataset(tmp_path, capsys)
        code, _, err = run(capsys, "extract", str(dataset), "--out", str(tmp_path / "x.pst"))
        assert code == 1
        assert "not a raw recording set" in err


class TestTrainAndEvaluate:
    def train(self, tmp_path, capsys, dataset, out="run", *extra):
        out_dir = tmp_path / out
        code, out_text, err = run(
            capsys, "train", str(dataset), "--epochs", "2", "--batch-size", "8",
            "--out", str(out_dir), *extra,
        )
        assert code == 0, err
        return out_dir, out_text

    def test_train_writes_artifacts_and_summary_line(self, tmp_path, capsys):
        dataset = make_dataset(tmp_path, capsys)
        out_dir, out_text = self.train(tmp_path, capsys, dataset)
        assert (out_dir / "metrics.jsonl").exists()
        assert (out_dir / "checkpoint.bin").exists()
        assert (out_dir / "config_used.txt").exists()
        assert "epochs=2" in out_text
        assert "diverged=false" in out_text
        assert "params=" in out_text
        lines = (out_dir / "metrics.jsonl").read_text().splitlines()
        assert len(lines) == 3
        assert json.loads(lines[-1])["summary"] is True

    def test_repeat_run_is_byte_identical(self, tmp_path, capsys):
        dataset = make_dataset(tmp_path, capsys)
        run_a, _ = self.train(tmp_path, capsys, dataset, out="a")
        run_b, _ = self.train(tmp_path, capsys, dataset, out="b")
        assert (run_a / "metrics.jsonl").read_bytes() == (run_b / "metrics.jsonl").read_bytes()
        assert (run_a / "checkpoint.bin").read_bytes() == (run_b / "checkpoint.bin").read_bytes()

    def test_explicit_dim_mismatch_exits_one(self, tmp_path, capsys):
        dataset = make_dataset(tmp_path, capsys)
        cfg = tmp_path / "run.cfg"
        cfg.write_text("t = 7\n")
        code, _, err = run(
            capsys, "train", str(dataset), "--config", str(cfg),
            "--out", str(tmp_path / "run"),
        )
        assert code == 1
        assert "t=7" in err and "t=9" in err

    def test_train_on_raw_file_exits_one(self, tmp_path, capsys):
        raw = tmp_path / "raw.pst"
        code, _, _ = run(
            capsys, "generate", "--kind", "raw", "--out", str(raw),
            "--n-per-class", "1", "--t", "2",
        )
        assert code == 0
        code, _, err = run(capsys, "train", str(raw), "--out", str(tmp_path / "run"))
        assert code == 1
        assert "not a 4-D feature dataset" in err

    def test_evaluate_reports_accuracy(self, tmp_path, capsys):
        dataset = make_dataset(tmp_path, capsys)
        out_dir, _ = self.train(tmp_path, capsys, dataset)
        code, out_text, err = run(
            capsys, "evaluate", str(dataset),
            "--checkpoint", str(out_dir / "checkpoint.bin"),
        )
        assert code == 0, err
        assert out_text.startswith("accuracy=")
        acc = float(out_text.split()[0].split("=")[1])
        assert 0.0 <= acc <= 1.0
        assert "n=9" in out_text

    def test_evaluate_config_mismatch_exits_one(self, tmp_path, capsys):
        dataset = make_dataset(tmp_path, capsys)
        out_dir, _ = self.train(tmp_path, capsys, dataset)
        code, _, err = run(
            capsys, "evaluate", str(dataset),
            "--checkpoint", str(out_dir / "checkpoint.bin"),
            "--attention", "none",
        )
        assert code == 1
        assert "does not match config" in err

    def test_missing_dataset_exits_one(self, tmp_path, capsys):
        code, _, err = run(capsys, "train", str(tmp_path / "nope.pst"),
                           "--out", str(tmp_path / "run"))
        assert code == 1
        assert err.startswith("error:")


class TestAblate:
    def test_five_rows_and_per_run_metrics(self, tmp_path, capsys):
        dataset = make_dataset(tmp_path, capsys)
        out_dir = tmp_path / "ablation"
        code, out_text, err = run(
            capsys, "ablate", str(dataset), "--runs", "1", "--epochs", "1",
            "--batch-size", "8", "--out", str(out_dir),
        )
        assert code == 0, err
        rows = (out_dir / "ablation.csv").read_text().splitlines()
        assert len(rows) == 6
        labels = [r.split(",")[0] for r in rows[1:]]
        assert labels == [
            "3D-CNN",
            "3D-CNN & P-Attention",
            "3D-CNN & S-Attention",
            "3D-CNN & T-Attention",
            "3D-CNN & PST-Attention",
        ]
        assert (out_dir / "3d_cnn_seed0.jsonl").exists()
        assert (out_dir / "3d_cnn_pst_seed0.jsonl").exists()
        for label in labels:
            assert label in out_text

    def test_attention_variants_differ_in_parameter_count(self, tmp_path, capsys):
        dataset = make_dataset(tmp_path, capsys)
        out_dir = tmp_path / "ablation"
        code, _, _ = run(
            capsys, "ablate", str(dataset), "--runs", "1", "--epochs", "1",
            "--batch-size", "8", "--out", str(out_dir),
        )
        assert code == 0
        rows = (out_dir / "ablation.csv").read_text().splitlines()[1:]
        counts = {r.split(",")[0]: int(r.split(",")[-1]) for r in rows}
        assert counts["3D-CNN"] < counts["3D-CNN & P-Attention"] < counts["3D-CNN & PST-Attention"]


class TestReprAblate:
    def test_four_rows_with_shapes(self, tmp_path, capsys):
        dataset = make_dataset(tmp_path, capsys)
        out_dir = tmp_path / "repr"
        code, out_text, err = run(
            capsys, "repr-ablate", str(dataset), "--runs", "1", "--epochs", "1",
            "--batch-size", "8", "--out", str(out_dir),
        )
        assert code == 0, err
        rows = (out_dir / "repr_ablation.csv").read_text().splitlines()
        assert len(rows) == 5
        by_label = {r.split(",")[0]: r.split(",")[1] for r in rows[1:]}
        assert by_label == {
            "3D (VHS)": "5x8x9",
            "3D (VHT)": "9x8x9",
            "3D (PST)": "9x5x72",
            "4D (VHST)": "9x5x8x9",
        }
        assert (out_dir / "vhs_seed0.jsonl").exists()
        assert (out_dir / "vhst_seed0.jsonl").exists()

    def test_vht_band_selection_flag(self, tmp_path, capsys):
        dataset = make_dataset(tmp_path, capsys)
        out_dir = tmp_path / "repr"
        code, _, err = run(
            capsys, "repr-ablate", str(dataset), "--runs", "1", "--epochs", "1",
            "--batch-size", "8", "--vht-band", "2", "--out", str(out_dir),
        )
        assert code == 0, err


class TestTopLevelErrors:
    def test_unknown_subcommand_exits_one(self, capsys):
        code, _, err = run(capsys, "frobnicate")
        assert code == 1
        assert err.startswith("error:")

    def test_no_subcommand_exits_one(self, capsys):
        code, _, err = run(capsys)
        assert code == 1
        assert err.startswith("error:")
