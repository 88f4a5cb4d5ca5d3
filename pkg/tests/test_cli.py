import json
import shutil

import pytest

from sigauth.cli import main
from sigauth.config import RunConfig
from sigauth.pipeline import ENROLL_FILE, MANIFEST_FILE, PROBE_FILE
from sigauth.sigdata import SampleKind, load_samples, make_prototype, save_samples, synth_sample


@pytest.fixture(scope="module")
def cli_config(tmp_path_factory):
    """Small but complete run configuration shared by the CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    cfg = RunConfig(
        users=4,
        enroll_genuine=12,
        enroll_skilled=5,
        enroll_random=3,
        probe_genuine=3,
        probe_skilled=2,
        probe_random=1,
        workers=1,
        locals_per_user=2,
        hidden=8,
        max_epochs=80,
        store_path=str(root / "store"),
    )
    path = root / "config.json"
    cfg.to_file(path)
    return root, path, cfg


@pytest.fixture(scope="module")
def generated(cli_config):
    root, cfg_path, cfg = cli_config
    data = root / "dataset"
    assert main(["--config", str(cfg_path), "gen", "--out", str(data)]) == 0
    return data


@pytest.fixture(scope="module")
def enrolled(cli_config, generated):
    root, cfg_path, cfg = cli_config
    assert main(["--config", str(cfg_path), "enroll", "--data", str(generated)]) == 0
    return root / "store"


class TestGen:
    def test_reruns_are_byte_identical(self, cli_config, generated, tmp_path):
        root, cfg_path, _ = cli_config
        other = tmp_path / "dataset2"
        assert main(["--config", str(cfg_path), "gen", "--out", str(other)]) == 0
        for name in (ENROLL_FILE, PROBE_FILE):
            assert (generated / name).read_bytes() == (other / name).read_bytes()

    def test_manifest_counts(self, cli_config, generated):
        _, _, cfg = cli_config
        manifest = json.loads((generated / MANIFEST_FILE).read_text())
        assert manifest["users"] == cfg.users
        assert manifest["enroll_samples"] == cfg.users * cfg.enroll_per_user()

    def test_default_split_is_25_10_5(self, tmp_path):
        out = tmp_path / "defaults"
        assert main(["--seed", "42", "gen", "--users", "1", "--out", str(out)]) == 0
        samples = load_samples(out / ENROLL_FILE)
        kinds = [s.kind for s in samples]
        assert kinds.count(SampleKind.GENUINE) == 25
        assert kinds.count(SampleKind.SKILLED_FORGERY) == 10
        assert kinds.count(SampleKind.RANDOM_FORGERY) == 5


class TestEnroll:
    def test_store_contents(self, cli_config, enrolled):
        _, _, cfg = cli_config
        recs = sorted(p.name for p in enrolled.glob("*.rec"))
        assert len(recs) == cfg.users
        assert (enrolled / "pca.model").exists()

    def test_rerun_bumps_version_scores_unchanged(self, cli_config, generated, enrolled, capsys):
        root, cfg_path, cfg = cli_config
        probe_file = root / "probe_one.jsonl"
        probes = load_samples(generated / PROBE_FILE)
        save_samples([probes[0]], probe_file)

        def score():
            code = main(
                ["--config", str(cfg_path), "verify", probes[0].user_id, str(probe_file)]
            )
            out = capsys.readouterr().out.strip().splitlines()[0]
            return code, json.loads(out)["score"]

        _, before = score()
        assert main(["--config", str(cfg_path), "enroll", "--data", str(generated)]) == 0
        capsys.readouterr()
        _, after = score()
        assert before == after
        record = json.loads((enrolled / "u0000.rec").read_text())
        assert record["payload"]["version"] == 2

    def test_unwritable_store_fails(self, cli_config, generated, tmp_path):
        root, cfg_path, _ = cli_config
        blocker = tmp_path / "not_a_dir"
        blocker.write_text("file in the way")
        code = main(
            ["--config", str(cfg_path), "--store", str(blocker), "enroll",
             "--data", str(generated)]
        )
        assert code == 2


class TestVerify:
    def test_genuine_probe_accepted_at_low(self, cli_config, enrolled, tmp_path, capsys):
        root, cfg_path, cfg = cli_config
        # u0000 holds priority 1 (regular staff, threshold 0.50)
        probe = synth_sample(make_prototype(cfg.seed, "u0000"), SampleKind.GENUINE,
                             cfg.noise_level, 777_000)
        path = tmp_path / "genuine.jsonl"
        save_samples([probe], path)
        code = main(["--config", str(cfg_path), "verify", "u0000", str(path)])
        decision = json.loads(capsys.readouterr().out.strip().splitlines()[0])
        assert code == 0
        assert decision["accepted"] is True
        assert decision["priority"] == 1

    def test_random_forgery_rejected_at_vhigh(self, cli_config, enrolled, tmp_path, capsys):
        # another roster member's gesture presented as u0000
        root, cfg_path, cfg = cli_config
        claimed = make_prototype(cfg.seed, "u0000")
        forger = make_prototype(cfg.seed, "u0001")
        probe = synth_sample(claimed, SampleKind.RANDOM_FORGERY, cfg.noise_level,
                             778_000, forger=forger)
        path = tmp_path / "forged.jsonl"
        save_samples([probe], path)
        code = main(
            ["--config", str(cfg_path), "verify", "u0000", str(path),
             "--priority-override", "vip-patient"]
        )
        decision = json.loads(capsys.readouterr().out.strip().splitlines()[0])
        assert code == 1
        assert decision["accepted"] is False
        assert decision["threshold"] == 0.90

    def test_unknown_user_exits_2(self, cli_config, enrolled, tmp_path, capsys):
        root, cfg_path, cfg = cli_config
        probe = synth_sample(make_prototype(cfg.seed, "u0000"), SampleKind.GENUINE,
                             cfg.noise_level, 779_000)
        path = tmp_path / "probe.jsonl"
        save_samples([probe], path)
        code = main(["--config", str(cfg_path), "verify", "stranger", str(path)])
        capsys.readouterr()
        assert code == 2


class TestEval:
    def test_report_schema(self, cli_config, generated, enrolled, tmp_path, capsys):
        root, cfg_path, cfg = cli_config
        out = tmp_path / "report.json"
        code = main(
            ["--config", str(cfg_path), "eval", "--data", str(generated), "--out", str(out)]
        )
        capsys.readouterr()
        assert code == 0
        report = json.loads(out.read_text())
        assert isinstance(report["eer"], float)
        assert {"eer", "eer_threshold", "sensitivity", "specificity", "far", "frr", "curve"} <= set(report)
        assert "specificity_eq2" not in report
        assert report["probes"] == cfg.users * (
            cfg.probe_genuine + cfg.probe_skilled + cfg.probe_random
        )

    def test_paper_eq2_flag_adds_column(self, cli_config, generated, enrolled, tmp_path, capsys):
        root, cfg_path, _ = cli_config
        out = tmp_path / "report2.json"
        code = main(
            ["--config", str(cfg_path), "eval", "--data", str(generated),
             "--out", str(out), "--paper-eq2"]
        )
        capsys.readouterr()
        assert code == 0
        assert "specificity_eq2" in json.loads(out.read_text())

    def test_overlapping_split_detected(self, cli_config, generated, enrolled, tmp_path, capsys):
        root, cfg_path, _ = cli_config
        tainted = tmp_path / "tainted"
        shutil.copytree(generated, tainted)
        enroll_lines = (tainted / ENROLL_FILE).read_text().splitlines()
        with (tainted / PROBE_FILE).open("a") as fh:
            fh.write(enroll_lines[0] + "\n")
        code = main(
            ["--config", str(cfg_path), "eval", "--data", str(tainted),
             "--out", str(tmp_path / "r.json")]
        )
        err = capsys.readouterr().err
        assert code == 2
        assert "OVERLAPPING_SPLIT" in err


class TestBench:
    def test_requires_baseline_worker_count(self, cli_config, tmp_path, capsys):
        root, cfg_path, _ = cli_config
        code = main(
            ["--config", str(cfg_path), "bench", "--workers", "2,4",
             "--out", str(tmp_path / "b.json")]
        )
        capsys.readouterr()
        assert code == 2

    def test_small_bench_report(self, cli_config, tmp_path, capsys):
        root, cfg_path, _ = cli_config
        out = tmp_path / "bench.json"
        code = main(
            ["--config", str(cfg_path), "bench", "--users", "3", "--workers", "1,2",
             "--reps", "3", "--out", str(out)]
        )
        capsys.readouterr()
        assert code == 0
        report = json.loads(out.read_text())
        assert [t["workers"] for t in report["timings"]] == [1, 2]
        assert all(len(t["raw_seconds"]) == 3 for t in report["timings"])
        assert report["speedups"]["1"] == 1.0
        assert out.with_suffix(".txt").exists()


class TestConfigPlumbing:
    def test_flags_override_config_file(self, cli_config, tmp_path, capsys):
        root, cfg_path, cfg = cli_config
        out = tmp_path / "flagged"
        code = main(
            ["--config", str(cfg_path), "--seed", "99", "gen", "--users", "2",
             "--out", str(out)]
        )
        capsys.readouterr()
        assert code == 0
        manifest = json.loads((out / MANIFEST_FILE).read_text())
        assert manifest["users"] == 2
        assert manifest["config"]["seed"] == 99

    def test_bad_threshold_policy_rejected(self, tmp_path, capsys):
        code = main(
            ["--threshold-policy", "0.9,0.6,0.75,0.5", "gen", "--users", "1",
             "--out", str(tmp_path / "x")]
        )
        capsys.readouterr()
        assert code == 2
