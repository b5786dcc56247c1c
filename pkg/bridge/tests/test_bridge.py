import json
import struct

import numpy as np
import pytest

from plbridge import (
    NullEncoder,
    TrainSpec,
    embed_file,
    finetune,
    load_encoder,
    read_pairs,
    write_plemb,
)
from plbridge.cli import main

from conftest import write_topic_pairs


class TestNullEncoder:
    def test_deterministic(self):
        enc = NullEncoder(dim=64, seed=0)
        a = enc.encode(["guten morgen #klima", "anders"])
        b = enc.encode(["guten morgen #klima", "anders"])
        np.testing.assert_array_equal(a, b)

    def test_identical_texts_identical_rows(self):
        enc = NullEncoder()
        out = enc.encode(["same text", "same text"])
        np.testing.assert_array_equal(out[0], out[1])

    def test_empty_text_is_unit_not_zero(self):
        enc = NullEncoder()
        out = enc.encode([""])
        assert np.linalg.norm(out[0]) == pytest.approx(1.0, abs=1e-6)

    def test_rows_unit_normalized(self):
        enc = NullEncoder(dim=32, seed=3)
        out = enc.encode(["a b c", "d e", "f"])
        np.testing.assert_allclose(np.linalg.norm(out, axis=1), 1.0, atol=1e-6)

    def test_save_load_round_trip(self, tmp_path):
        enc = NullEncoder(dim=16, seed=5)
        enc.save(tmp_path / "model")
        loaded = load_encoder(tmp_path / "model")
        np.testing.assert_array_equal(
            enc.encode(["wieder da"]), loaded.encode(["wieder da"])
        )

    def test_name_parsing(self):
        assert load_encoder("null-32").dim == 32
        assert load_encoder("null:16:7").seed == 7


class TestEmbed:
    def test_jsonl_ids_preserved(self, tmp_path):
        src = tmp_path / "tweets.jsonl"
        src.write_text(
            '{"id": 9, "text": "erste"}\n{"id": 4, "text": "zweite"}\n',
            encoding="utf-8",
        )
        out = tmp_path / "e.plemb"
        assert embed_file(src, NullEncoder(), out) == 2
        raw = out.read_bytes()
        magic, dim, count = struct.unpack_from("<8sIQ", raw)
        assert magic == b"PLEMB001" and dim == 64 and count == 2
        first_id = struct.unpack_from("<Q", raw, 20)[0]
        assert first_id == 9

    def test_plain_text_lines(self, tmp_path):
        src = tmp_path / "lines.txt"
        src.write_text("eins\nzwei\ndrei\n", encoding="utf-8")
        out = tmp_path / "e.plemb"
        assert embed_file(src, NullEncoder(dim=8), out) == 3

    def test_empty_input_rejected(self, tmp_path):
        src = tmp_path / "empty.jsonl"
        src.write_text("", encoding="utf-8")
        with pytest.raises(ValueError, match="no texts"):
            embed_file(src, NullEncoder(), tmp_path / "e.plemb")

    def test_write_plemb_shape_check(self, tmp_path):
        with pytest.raises(ValueError):
            write_plemb(tmp_path / "x.plemb", [1, 2], np.zeros((3, 4), dtype=np.float32))


class TestReadPairs:
    def test_round_trip(self, toy_pairs):
        text_a, text_b, labels = read_pairs(toy_pairs)
        assert len(text_a) == len(text_b) == len(labels) == 1000
        assert labels.sum() == 500

    def test_unbalanced_warns(self, tmp_path):
        path = tmp_path / "unbal.csv"
        rows = ["text_a,text_b,label"] + ["a,b,1"] * 90 + ["c,d,0"] * 10
        path.write_text("\n".join(rows) + "\n", encoding="utf-8")
        with pytest.warns(UserWarning, match="unbalanced"):
            read_pairs(path)

    def test_empty_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("text_a,text_b,label\n", encoding="utf-8")
        with pytest.raises(ValueError, match="no training pairs"):
            read_pairs(path)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n", encoding="utf-8")
        with pytest.raises(ValueError, match="header"):
            read_pairs(path)


class TestFinetune:
    def test_defaults_mirror_training_recipe(self):
        spec = TrainSpec()
        assert spec.epochs == 2
        assert spec.batch_size == 32
        assert spec.warmup_steps == 1000
        assert spec.learning_rate == 2e-5

    def test_defaults_echoed_into_log(self, toy_pairs, tmp_path):
        log = finetune(toy_pairs, tmp_path / "model", TrainSpec(epochs=1))
        assert log["spec"]["batch_size"] == 32
        assert log["spec"]["warmup_steps"] == 1000
        assert log["spec"]["learning_rate"] == 2e-5
        saved = json.loads((tmp_path / "model" / "training_log.json").read_text())
        assert saved["spec"] == log["spec"]

    def test_seed_reproduces_loss_curve(self, toy_pairs, tmp_path):
        spec = TrainSpec(epochs=2, learning_rate=1e-2, warmup_steps=5, seed=11)
        log1 = finetune(toy_pairs, tmp_path / "m1", spec)
        log2 = finetune(toy_pairs, tmp_path / "m2", spec)
        assert log1["epochs"] == log2["epochs"]

    def test_best_checkpoint_kept(self, toy_pairs, tmp_path):
        spec = TrainSpec(epochs=3, learning_rate=1e-2, warmup_steps=5, seed=2)
        log = finetune(toy_pairs, tmp_path / "model", spec)
        best = min(log["epochs"], key=lambda e: e["val_loss"])
        assert log["best_epoch"] == best["epoch"]

    def test_transformer_path_refused_for_head_training(self, toy_pairs, tmp_path):
        spec = TrainSpec(base_model="definitely-not-null")
        with pytest.raises((ValueError, RuntimeError)):
            finetune(toy_pairs, tmp_path / "model", spec)


class TestCli:
    def test_embed_subcommand(self, tmp_path, capsys):
        src = tmp_path / "t.jsonl"
        src.write_text('{"id": 1, "text": "hallo"}\n', encoding="utf-8")
        out = tmp_path / "e.plemb"
        assert main(["embed", "--model", "null-16", "--in", str(src), "--out", str(out)]) == 0
        assert out.stat().st_size == 20 + (8 + 4 * 16)

    def test_finetune_subcommand(self, tmp_path, capsys):
        pairs = tmp_path / "p.csv"
        write_topic_pairs(pairs, 200, seed=3)
        model_dir = tmp_path / "model"
        code = main(
            ["finetune", "--pairs", str(pairs), "--out", str(model_dir),
             "--epochs", "1", "--warmup", "5", "--lr", "0.01"]
        )
        assert code == 0
        assert (model_dir / "head.npy").is_file()
        assert (model_dir / "config.json").is_file()

    def test_bad_input_exit_2(self, tmp_path, capsys):
        assert main(["embed", "--in", str(tmp_path / "nope.jsonl"), "--out", "x"]) == 2
