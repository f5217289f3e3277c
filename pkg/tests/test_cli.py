import json
import subprocess
import sys

import sharpv.cli as cli
from sharpv.errors import InvariantViolation
from sharpv.tensorio import read_video


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_report(capsys, *argv):
    code, out, err = run_cli(capsys, "run", *argv)
    assert code == 0, err
    return json.loads(out)


class TestRun:
    def test_default_run_emits_valid_report(self, capsys):
        report = run_report(capsys, "--decode-steps", "2")
        assert report["schema_version"] == 1
        assert 0 < report["vr"] <= 1
        assert 0 < report["mr"] <= 1
        assert report["token_budget"] == report["vr"] * report["mr"]

    def test_echoes_adaptive_defaults(self, capsys):
        report = run_report(capsys, "--decode-steps", "2")
        assert report["config"]["w"] == 1.0
        assert report["config"]["m"] == 0.2
        assert report["config"]["mode"] == "adaptive"

    def test_echoes_manual_threshold(self, capsys):
        report = run_report(capsys, "--mode", "manual", "--k", "1.6", "--decode-steps", "2")
        assert report["config"]["k"] == 1.6
        assert report["config"]["mode"] == "manual"

    def test_static_pattern_vr(self, capsys):
        report = run_report(capsys, "--pattern", "static", "--decode-steps", "2")
        assert report["vr"] == 1 / report["config"]["f"]

    def test_out_file(self, capsys, tmp_path):
        out = tmp_path / "report.json"
        code, stdout, _ = run_cli(
            capsys, "run", "--decode-steps", "2", "--out", str(out)
        )
        assert code == 0
        assert stdout == ""
        assert json.loads(out.read_text())["schema_version"] == 1

    def test_deterministic_modulo_timing(self, capsys):
        a = run_report(capsys, "--seed", "5", "--decode-steps", "4")
        b = run_report(capsys, "--seed", "5", "--decode-steps", "4")
        for key in ("ttft_seconds", "tpot_seconds"):
            a.pop(key), b.pop(key)
        assert a == b

    def test_run_from_tensor_file(self, capsys, tmp_path):
        path = tmp_path / "v.svt"
        code, _, _ = run_cli(
            capsys, "gen", "--out", str(path),
            "--pattern", "uniform:0.5", "--n", "4", "--f", "8", "--d", "64", "--seed", "3",
        )
        assert code == 0
        from_file = run_report(capsys, "--in", str(path), "--seed", "3", "--decode-steps", "2")
        inline = run_report(
            capsys, "--pattern", "uniform:0.5", "--n", "4", "--f", "8", "--d", "64",
            "--seed", "3", "--decode-steps", "2",
        )
        for key in ("ttft_seconds", "tpot_seconds", "config"):
            from_file.pop(key), inline.pop(key)
        assert from_file == inline


class TestExitCodes:
    def test_bad_pattern_is_config_error(self, capsys):
        code, _, err = run_cli(capsys, "run", "--pattern", "wiggle")
        assert code == 2
        assert "config error" in err

    def test_negative_seed_is_config_error(self, capsys):
        code, _, _ = run_cli(capsys, "run", "--seed", "-4")
        assert code == 2

    def test_gen_without_out_is_config_error(self, capsys):
        code, _, _ = run_cli(capsys, "gen")
        assert code == 2

    def test_missing_input_is_io_error(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "run", "--in", str(tmp_path / "nope.svt"))
        assert code == 3
        assert "i/o error" in err

    def test_bad_magic_is_io_error(self, capsys, tmp_path):
        path = tmp_path / "junk.svt"
        path.write_bytes(b"JUNKJUNKJUNKJUNKJUNK")
        code, _, _ = run_cli(capsys, "run", "--in", str(path))
        assert code == 3

    def test_invariant_violation_maps_to_four(self, capsys, monkeypatch):
        def boom(*args, **kwargs):
            raise InvariantViolation("forced")

        monkeypatch.setattr(cli, "run_pipeline", boom)
        code, _, err = run_cli(capsys, "run", "--decode-steps", "2")
        assert code == 4
        assert "invariant violation" in err

    def test_unwritable_out_is_io_error(self, capsys, tmp_path):
        code, _, _ = run_cli(
            capsys, "run", "--decode-steps", "2",
            "--out", str(tmp_path / "missing_dir" / "report.json"),
        )
        assert code == 3


class TestConfigFile:
    def test_config_file_applies(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"f": 8, "decode_steps": 2}))
        report = run_report(capsys, "--config", str(cfg))
        assert report["config"]["f"] == 8
        assert len(report["per_frame_keep_counts"]) == 8  # n frames unchanged

    def test_flags_override_config_file(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"f": 8, "decode_steps": 2}))
        report = run_report(capsys, "--config", str(cfg), "--f", "4")
        assert report["config"]["f"] == 4

    def test_unknown_key_rejected(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"frames": 8}))
        code, _, err = run_cli(capsys, "run", "--config", str(cfg))
        assert code == 2
        assert "frames" in err

    def test_malformed_json_rejected(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{not json")
        code, _, _ = run_cli(capsys, "run", "--config", str(cfg))
        assert code == 2

    def test_wrong_type_rejected(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"f": "eight"}))
        code, _, _ = run_cli(capsys, "run", "--config", str(cfg))
        assert code == 2

    def test_config_only_keys(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"system_len": 2, "instruction_len": 3, "layers": 4}))
        report = run_report(capsys, "--config", str(cfg), "--decode-steps", "2")
        assert report["config"]["system_len"] == 2
        assert len(report["per_layer_sim"]) == 4


class TestGen:
    def test_writes_readable_tensor(self, capsys, tmp_path):
        path = tmp_path / "v.svt"
        code, out, _ = run_cli(
            capsys, "gen", "--out", str(path), "--n", "3", "--f", "5", "--d", "8",
        )
        assert code == 0
        meta = json.loads(out)
        assert meta["n"] == 3 and meta["f"] == 5 and meta["d"] == 8
        video = read_video(path)
        assert video.data.shape == (15, 8)

    def test_deterministic_bytes(self, capsys, tmp_path):
        a, b = tmp_path / "a.svt", tmp_path / "b.svt"
        run_cli(capsys, "gen", "--out", str(a), "--seed", "9")
        run_cli(capsys, "gen", "--out", str(b), "--seed", "9")
        assert a.read_bytes() == b.read_bytes()


class TestBench:
    def test_smoke(self, capsys):
        code, out, _ = run_cli(
            capsys, "bench", "--n", "2", "--f", "4", "--d", "16",
            "--scales", "1,2,4", "--repeats", "3",
        )
        assert code == 0
        table = json.loads(out)
        assert [row["scale"] for row in table["scoring"]] == [1, 2, 4]
        assert table["cache_bytes_linear"] is True
        lengths = [row["length"] for row in table["cache"]]
        assert lengths == [8, 16, 32]

    def test_short_ladder_rejected(self, capsys):
        code, _, _ = run_cli(capsys, "bench", "--scales", "1,2")
        assert code == 2


class TestSubprocess:
    def test_module_entrypoint(self, tmp_path):
        out = tmp_path / "report.json"
        proc = subprocess.run(
            [sys.executable, "-m", "sharpv.cli", "run",
             "--pattern", "static", "--decode-steps", "2", "--out", str(out)],
            capture_output=True, text=True, timeout=120,
        )
        assert proc.returncode == 0, proc.stderr
        assert json.loads(out.read_text())["vr"] == 1 / 16
