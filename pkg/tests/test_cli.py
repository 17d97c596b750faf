"""End-to-end tests for the command line, using a small corpus."""

import csv
import os

import numpy as np
import pytest

from condlab import checkpoint, cli, nn, synth, tables


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Corpus plus one trained checkpoint, shared by the CLI tests."""
    root = tmp_path_factory.mktemp("cliws")
    data_dir = os.path.join(root, "data")
    synth.write_corpus(os.path.join(data_dir, "mnist"), 300, 100, seed=0)
    ckpt = os.path.join(root, "b.nnc")
    code = cli.main(["train", "--dataset", "mnist", "--arch", "b",
                     "--seed", "1", "--epochs", "2", "--data-dir", data_dir,
                     "--out", ckpt])
    assert code == 0
    return {"root": str(root), "data": data_dir, "ckpt": ckpt}


class TestSynthCommand:
    def test_writes_four_files(self, tmp_path, capsys):
        out = str(tmp_path / "mnist")
        assert cli.main(["synth", "--out", out, "--train-count", "40",
                         "--test-count", "20"]) == 0
        names = sorted(os.listdir(out))
        assert names == ["t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte",
                         "train-images-idx3-ubyte",
                         "train-labels-idx1-ubyte"]

    def test_missing_out_is_validation_error(self, capsys):
        assert cli.main(["synth"]) == 1
        assert "--out" in capsys.readouterr().err


class TestTrainCommand:
    def test_checkpoint_round_trips(self, workspace):
        net = checkpoint.load_checkpoint(workspace["ckpt"])
        assert net.name == "B"

    def test_reports_epochs(self, workspace, tmp_path, capsys):
        out = str(tmp_path / "n.nnc")
        code = cli.main(["train", "--data-dir", workspace["data"],
                         "--epochs", "1", "--out", out, "--seed", "2"])
        assert code == 0
        text = capsys.readouterr().out
        assert "epoch 1:" in text and "val_accuracy" in text

    def test_config_file_supplies_defaults(self, workspace, tmp_path,
                                           capsys):
        cfg = tmp_path / "train.cfg"
        cfg.write_text("epochs = 1\nseed = 7\nlambda_base = 0.01\n")
        out = str(tmp_path / "r.nnc")
        code = cli.main(["train", "--data-dir", workspace["data"],
                         "--config", str(cfg), "--out", out])
        assert code == 0
        assert os.path.exists(out)

    def test_divergence_exits_numerical(self, monkeypatch, capsys):
        """The end-to-end divergence path is covered by the training
        tests; here only the exit-code mapping is under test."""
        from condlab.exceptions import TrainingError

        def boom(args):
            raise TrainingError("non-finite loss at epoch 2 step 7")

        monkeypatch.setattr(cli, "cmd_train", boom)
        assert cli.main(["train"]) == 3
        assert "epoch 2" in capsys.readouterr().err


class TestAttackCommand:
    def test_reports_and_writes_csv(self, workspace, tmp_path, capsys):
        out = str(tmp_path / "row.csv")
        code = cli.main(["attack", "--checkpoint", workspace["ckpt"],
                         "--data-dir", workspace["data"], "--attack",
                         "fgsm", "--eps", "0.1", "--eval-count", "50",
                         "--out", out])
        assert code == 0
        text = capsys.readouterr().out
        assert "clean accuracy" in text and "adversarial accuracy" in text
        with open(out, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == list(tables.ACCURACY_HEADER)
        assert rows[1][4] == "fgsm"

    def test_cli_flag_overrides_config(self, workspace, tmp_path, capsys):
        cfg = tmp_path / "a.cfg"
        cfg.write_text("eps = 0.1\nattack = bim\neval_count = 30\n")
        code = cli.main(["attack", "--checkpoint", workspace["ckpt"],
                         "--data-dir", workspace["data"], "--config",
                         str(cfg), "--eps", "0.05"])
        assert code == 0
        assert "bim eps=0.05" in capsys.readouterr().out

    def test_missing_checkpoint_is_io_error(self, workspace, capsys):
        code = cli.main(["attack", "--checkpoint", "/nope.nnc",
                         "--data-dir", workspace["data"]])
        assert code == 2

    def test_bad_eps_is_validation_error(self, workspace, capsys):
        code = cli.main(["attack", "--checkpoint", workspace["ckpt"],
                         "--data-dir", workspace["data"], "--eps", "7"])
        assert code == 1

    def test_unknown_flag_exits_one(self, capsys):
        with pytest.raises(SystemExit) as info:
            cli.main(["attack", "--frobnicate"])
        assert info.value.code == 1

    def test_randfgsm_name_mapped(self, workspace, capsys):
        code = cli.main(["attack", "--checkpoint", workspace["ckpt"],
                         "--data-dir", workspace["data"], "--attack",
                         "randfgsm", "--eps", "0.2", "--eval-count", "30"])
        assert code == 0
        assert "rand_fgsm" in capsys.readouterr().out


class TestCondnumCommand:
    def test_prints_per_layer_rows(self, workspace, tmp_path, capsys):
        out = str(tmp_path / "k.csv")
        code = cli.main(["condnum", "--checkpoint", workspace["ckpt"],
                         "--out", out])
        assert code == 0
        text = capsys.readouterr().out
        assert "00-dense" in text and "max kappa" in text
        with open(out, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0][0] == "layer"
        assert len(rows) == 4

    def test_missing_checkpoint_flag(self, capsys):
        assert cli.main(["condnum"]) == 1


class TestBlackboxCommand:
    def test_runs_pipeline(self, workspace, capsys):
        code = cli.main(["blackbox", "--checkpoint", workspace["ckpt"],
                         "--data-dir", workspace["data"], "--rounds", "1",
                         "--seed-count", "20", "--eval-count", "40"])
        assert code == 0
        text = capsys.readouterr().out
        assert "round 0" in text and "transfer accuracy" in text
        assert "oracle queries" in text


class TestTableCommand:
    def test_writes_csv(self, workspace, tmp_path, capsys):
        out = str(tmp_path / "t6.csv")
        code = cli.main(["table", "--table", "vi", "--data-dir",
                         workspace["data"], "--dataset", "mnist",
                         "--arch", "b", "--epochs", "1", "--out", out])
        assert code == 0
        with open(out, newline="") as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 5

    def test_missing_table_flag(self, capsys):
        assert cli.main(["table"]) == 1


class TestFig3Command:
    def test_emits_images(self, workspace, tmp_path, capsys):
        net = checkpoint.load_checkpoint(workspace["ckpt"])
        scale = tables.Scale("t", subsample=None, epochs=0, eval_count=None)
        _, _, test, _ = tables.load_corpus(workspace["data"], "mnist",
                                           scale, seed=0)
        preds = nn.predict(net, test.images)
        index = int(np.flatnonzero(preds == test.labels)[0])
        out = str(tmp_path / "figs")
        code = cli.main(["fig3", "--checkpoint", workspace["ckpt"],
                         "--data-dir", workspace["data"], "--scale", "20",
                         "--sample-index", str(index), "--out", out])
        assert code == 0
        assert sorted(os.listdir(out)) == [
            "demo-clipped.pgm", "demo-original.pgm", "demo-report.json",
            "demo-unclipped.pgm"]

    def test_misclassified_sample_is_validation_error(self, workspace,
                                                      tmp_path, capsys):
        net = checkpoint.load_checkpoint(workspace["ckpt"])
        scale = tables.Scale("t", subsample=None, epochs=0, eval_count=None)
        _, _, test, _ = tables.load_corpus(workspace["data"], "mnist",
                                           scale, seed=0)
        preds = nn.predict(net, test.images)
        wrong = np.flatnonzero(preds != test.labels)
        if wrong.size == 0:
            pytest.skip("tiny model classified every sample correctly")
        code = cli.main(["fig3", "--checkpoint", workspace["ckpt"],
                         "--data-dir", workspace["data"], "--sample-index",
                         str(int(wrong[0])), "--out", str(tmp_path)])
        assert code == 1
        assert "pick another index" in capsys.readouterr().err
