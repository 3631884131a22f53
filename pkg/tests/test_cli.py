import json

import numpy as np
import pytest

from conftest import random_cloud
from pccorrupt.cli import build_parser, main
from pccorrupt.dataset import export_ply, load_manifest, read_pcb, write_pcb
from pccorrupt.metrics import variant_names, write_predictions


@pytest.fixture
def clean(tmp_path, rng):
    path = tmp_path / "clean.pcb"
    write_pcb(path, [random_cloud(rng) for _ in range(4)], [0, 1, 2, 3])
    return path


@pytest.fixture
def suite(tmp_path, clean):
    out = tmp_path / "suite"
    assert main(["gen-suite", "--clean", str(clean), "--seed", "42", "--out-dir", str(out)]) == 0
    return out


def test_help_lists_every_flag(capsys):
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices
    for name, p in sub.items():
        with pytest.raises(SystemExit):
            main([name, "--help"])
        text = capsys.readouterr().out
        for action in p._actions:
            for flag in action.option_strings:
                assert flag in text, (name, flag)


def test_missing_required_is_usage_error(capsys):
    assert main(["corrupt", "--kind", "jitter"]) == 2
    assert "--input" in capsys.readouterr().err


def test_unknown_kind_lists_valid(tmp_path, clean, capsys):
    code = main(["corrupt", "--input", str(clean), "--kind", "blur", "--level", "1",
                 "--seed", "1", "--output", str(tmp_path / "o.pcb")])
    assert code == 2
    assert "drop_local" in capsys.readouterr().err


def test_bad_level(tmp_path, clean):
    assert main(["corrupt", "--input", str(clean), "--kind", "jitter", "--level", "6",
                 "--seed", "1", "--output", str(tmp_path / "o.pcb")]) == 2


def test_seed_required(tmp_path, clean, monkeypatch):
    monkeypatch.delenv("PCCORRUPT_SEED", raising=False)
    assert main(["corrupt", "--input", str(clean), "--kind", "jitter", "--level", "1",
                 "--output", str(tmp_path / "o.pcb")]) == 2


class TestConfig:
    def run(self, tmp_path, clean, extra, config=None):
        argv = []
        if config is not None:
            cfg = tmp_path / "cfg.json"
            cfg.write_text(json.dumps(config))
            argv = ["--config", str(cfg)]
        out = tmp_path / "o.pcb"
        argv += ["corrupt", "--input", str(clean), "--kind", "jitter", "--level", "2",
                 "--output", str(out)] + extra
        code = main(argv)
        return code, (out.read_bytes() if code == 0 else None)

    def test_flag_beats_config_beats_env(self, tmp_path, clean, monkeypatch):
        monkeypatch.setenv("PCCORRUPT_SEED", "3")
        _, env3 = self.run(tmp_path, clean, [])
        _, cfg5 = self.run(tmp_path, clean, [], {"seed": 5})
        _, flag7 = self.run(tmp_path, clean, ["--seed", "7"], {"seed": 5})
        monkeypatch.delenv("PCCORRUPT_SEED")
        refs = {s: self.run(tmp_path, clean, ["--seed", str(s)])[1] for s in (3, 5, 7)}
        assert env3 == refs[3] and cfg5 == refs[5] and flag7 == refs[7]
        assert len(set(refs.values())) == 3

    def test_unknown_config_key(self, tmp_path, clean, capsys):
        code, _ = self.run(tmp_path, clean, ["--seed", "1"], {"sead": 1})
        assert code == 2
        assert "sead" in capsys.readouterr().err

    def test_hex_seed(self, tmp_path, clean):
        _, a = self.run(tmp_path, clean, ["--seed", "0x2a"])
        _, b = self.run(tmp_path, clean, ["--seed", "42"])
        assert a == b


class TestConvert:
    def write_inputs(self, tmp_path, rng):
        src = tmp_path / "ply"
        src.mkdir()
        for i in range(3):
            export_ply(src / f"s{i}.ply", random_cloud(rng, 50 + i))
        return src

    def test_round_trip(self, tmp_path, rng):
        src = self.write_inputs(tmp_path, rng)
        (tmp_path / "labels.csv").write_text("file,label\ns0.ply,2\ns1.ply,0\ns2.ply,1\n")
        out = tmp_path / "o.pcb"
        assert main(["convert", "--input-dir", str(src), "--labels",
                     str(tmp_path / "labels.csv"), "--output", str(out)]) == 0
        clouds, labels = read_pcb(out)
        assert [c.shape[0] for c in clouds] == [50, 51, 52] and labels.tolist() == [2, 0, 1]

    def test_missing_label_row(self, tmp_path, rng, capsys):
        src = self.write_inputs(tmp_path, rng)
        (tmp_path / "labels.csv").write_text("s0.ply,2\ns2.ply,1\n")
        out = tmp_path / "o.pcb"
        assert main(["convert", "--input-dir", str(src), "--labels",
                     str(tmp_path / "labels.csv"), "--output", str(out)]) == 2
        assert "s1.ply" in capsys.readouterr().err
        assert not out.exists()

    def test_label_outside_map(self, tmp_path, rng):
        src = self.write_inputs(tmp_path, rng)
        (tmp_path / "labels.csv").write_text("s0.ply,0\ns1.ply,1\ns2.ply,5\n")
        (tmp_path / "names.txt").write_text("a\nb\nc\n")
        assert main(["convert", "--input-dir", str(src), "--labels",
                     str(tmp_path / "labels.csv"), "--label-map", str(tmp_path / "names.txt"),
                     "--output", str(tmp_path / "o.pcb")]) == 2


class TestSuite:
    def test_verify(self, suite, capsys):
        assert main(["verify", "--suite-dir", str(suite)]) == 0
        path = suite / "scale_3.pcb"
        data = bytearray(path.read_bytes())
        data[40] ^= 0xFF
        path.write_bytes(bytes(data))
        capsys.readouterr()
        assert main(["verify", "--suite-dir", str(suite)]) == 1
        assert json.loads(capsys.readouterr().out)["hash_mismatches"] == ["scale_3.pcb"]

    def test_corrupt_matches_suite_variant(self, tmp_path, clean, suite):
        out = tmp_path / "one.pcb"
        assert main(["corrupt", "--input", str(clean), "--kind", "add_global", "--level", "4",
                     "--seed", "42", "--output", str(out)]) == 0
        assert out.read_bytes() == (suite / "add_global_4.pcb").read_bytes()

    def test_severity_override_in_manifest(self, tmp_path, clean):
        sev = tmp_path / "sev.json"
        sev.write_text(json.dumps({"jitter_sigma": [0.1, 0.2, 0.3, 0.4, 0.5]}))
        out = tmp_path / "s2"
        assert main(["gen-suite", "--clean", str(clean), "--seed", "1", "--out-dir", str(out),
                     "--severity", str(sev)]) == 0
        m = load_manifest(out)
        assert m["severity"]["jitter_sigma"] == [0.1, 0.2, 0.3, 0.4, 0.5]
        assert m["config"]["severity_sha256"] == m["severity_sha256"]

    def test_generation_failure(self, tmp_path, clean):
        other = tmp_path / "busy"
        other.mkdir()
        (other / "x").write_text("x")
        assert main(["gen-suite", "--clean", str(clean), "--seed", "1",
                     "--out-dir", str(other)]) == 3

    def test_threads_identical(self, tmp_path, clean):
        outs = []
        for t in ("1", "4"):
            out = tmp_path / f"t{t}"
            assert main(["--threads", t, "gen-suite", "--clean", str(clean), "--seed", "9",
                         "--out-dir", str(out)]) == 0
            outs.append({p.name: p.read_bytes() for p in out.iterdir()})
        assert outs[0] == outs[1]


class TestEval:
    def predictions(self, tmp_path, suite, skip=()):
        pred = tmp_path / "pred"
        pred.mkdir()
        m = load_manifest(suite)
        for e in m["variants"]:
            name = "clean" if e["kind"] == "clean" else f"{e['kind']}_{e['level']}"
            if name in skip:
                continue
            _, labels = read_pcb(suite / e["path"])
            write_predictions(pred / f"{name}.csv", labels)
        return pred

    def test_oracle_predictions(self, tmp_path, suite, capsys):
        pred = self.predictions(tmp_path, suite)
        out = tmp_path / "r.json"
        assert main(["eval", "--suite-dir", str(suite), "--pred-dir", str(pred),
                     "--out", str(out), "--markdown", str(tmp_path / "r.md")]) == 0
        assert capsys.readouterr().out.startswith("mCE 0.000 RmCE 0.000 OA 1.000")
        assert json.loads(out.read_text())["mCE"] == 0.0
        assert "| method |" in (tmp_path / "r.md").read_text()

    def test_missing_variant(self, tmp_path, suite, capsys):
        pred = self.predictions(tmp_path, suite, skip={"add_local_5"})
        assert main(["eval", "--suite-dir", str(suite), "--pred-dir", str(pred),
                     "--out", str(tmp_path / "r.json")]) == 4
        assert "add_local_5.csv" in capsys.readouterr().err

    def test_baseline_self_comparison(self, tmp_path, capsys):
        table = tmp_path / "dgcnn.json"
        assert main(["baseline", "emit-dgcnn", "--out", str(table)]) == 0
        capsys.readouterr()
        assert main(["eval", "--oa-table", str(table), "--out", str(tmp_path / "r.json"),
                     "--figure", str(tmp_path / "r.png")]) == 0
        assert capsys.readouterr().out.strip() == "mCE 1.000 RmCE 1.000 OA 0.926"
        assert (tmp_path / "r.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


class TestAugment:
    def test_outputs(self, tmp_path, rng):
        src = tmp_path / "train.pcb"
        write_pcb(src, [random_cloud(rng) for _ in range(5)], [0, 1, 2, 3, 4])
        out, side = tmp_path / "aug.pcb", tmp_path / "aug.json"
        args = ["augment", "--input", str(src), "--seed", "4", "--output", str(out),
                "--labels-out", str(side)]
        assert main(args) == 0
        clouds, labels = read_pcb(out)
        mixed = json.loads(side.read_text())
        assert len(clouds) == 5 and all(c.shape == (1024, 3) for c in clouds)
        assert [m["a_label"] for m in mixed] == labels.tolist() == [0, 1, 2, 3, 4]
        assert sum(m["a_label"] == m["b_label"] for m in mixed) >= 1  # odd one out
        first = out.read_bytes()
        assert main(args) == 0 and out.read_bytes() == first

    def test_ragged_rejected(self, tmp_path, rng):
        src = tmp_path / "train.pcb"
        write_pcb(src, [random_cloud(rng, 100), random_cloud(rng, 90)], [0, 1])
        assert main(["augment", "--input", str(src), "--seed", "4", "--output",
                     str(tmp_path / "a.pcb"), "--labels-out", str(tmp_path / "a.json")]) == 2


class TestRender:
    def test_svg_highlight(self, tmp_path, clean, suite):
        out = tmp_path / "r.svg"
        assert main(["render", "--input", str(suite / "add_local_1.pcb"), "--index", "0",
                     "--output", str(out), "--highlight-from", str(clean)]) == 0
        text = out.read_text()
        assert text.count("<circle") == 3 * 1124
        assert text.count("rgb(255,0,0)") == 3 * 100

    def test_ply(self, tmp_path, clean):
        out = tmp_path / "r.ply"
        assert main(["render", "--input", str(clean), "--index", "1", "--mode", "ply",
                     "--output", str(out)]) == 0
        assert "element vertex 1024" in out.read_text()

    def test_bad_index(self, tmp_path, clean):
        assert main(["render", "--input", str(clean), "--index", "9",
                     "--output", str(tmp_path / "r.svg")]) == 2
