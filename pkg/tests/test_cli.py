"""Command-line workflow: artifacts, reruns, error reporting — tiny scale."""

import json
from pathlib import Path

import pytest

from landmarklift.cli import main

TINY = """
landmarks = 12
basis_size = 4
train_count = 24
test_count = 5
viewnorm_hidden = 16,8,16
viewnorm_epochs = 4
dissim_epochs = 2
eval_size = 5
eval_reps = 2
mds_max_iter = 12
"""


def _write_cfg(dirpath: Path) -> Path:
    cfg = dirpath / "run.cfg"
    cfg.write_text(TINY)
    return cfg


def _run(*argv) -> int:
    return main(list(argv))


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cliflow")
    cfg = _write_cfg(out)
    base = ("--config", str(cfg), "--out-dir", str(out))
    assert _run("generate", *base) == 0
    assert _run("train", "--which", "viewnorm", *base) == 0
    assert _run("train", "--which", "dissim", *base) == 0
    assert _run("reconstruct", *base) == 0
    assert _run("evaluate", *base) == 0
    assert _run("ablate", *base) == 0
    assert _run("plot", *base, "--limit", "2") == 0
    return out, base


def test_generate_writes_both_splits(workdir):
    out, _ = workdir
    for name in ("train.manifest", "train.lmds", "test.manifest", "test.lmds"):
        assert (out / name).exists(), name


def test_generate_is_byte_deterministic(tmp_path):
    cfg = _write_cfg(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert _run("generate", "--config", str(cfg), "--out-dir", str(out)) == 0
    for name in ("train.manifest", "train.lmds", "test.manifest", "test.lmds"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_train_writes_model_and_log(workdir):
    out, _ = workdir
    for which in ("viewnorm", "dissim"):
        assert (out / f"{which}.llmw").exists()
        log = (out / f"{which}_loss.csv").read_text().splitlines()
        assert log[0] == "epoch,train_loss,val_loss"
        assert len(log) >= 3  # header + untrained row + >=1 epoch


def test_train_prints_parameter_count(workdir, capsys):
    out, base = workdir
    assert _run("train", "--which", "dissim", *base) == 0
    text = capsys.readouterr().out
    assert "parameters: 1841" in text
    assert "final val loss" in text


def test_retrain_is_byte_deterministic(workdir):
    out, base = workdir
    before = (out / "dissim.llmw").read_bytes()
    assert _run("train", "--which", "dissim", *base) == 0
    assert (out / "dissim.llmw").read_bytes() == before


def test_reconstruct_writes_one_record_per_face(workdir):
    out, _ = workdir
    lines = (out / "reconstructions.jsonl").read_text().splitlines()
    assert len(lines) == 5
    rec = json.loads(lines[0])
    assert set(rec) == {"face_id", "points", "matrix_hash", "stress", "converged"}
    assert len(rec["points"]) == 12


def test_reconstruct_single_face(workdir, capsys, tmp_path):
    out, base = workdir
    side = tmp_path / "single"
    side.mkdir()
    for name in (
        "train.manifest", "train.lmds", "test.manifest", "test.lmds",
        "viewnorm.llmw", "dissim.llmw",
    ):
        (side / name).write_bytes((out / name).read_bytes())
    cfg = _write_cfg(side)
    assert _run(
        "reconstruct", "--config", str(cfg), "--out-dir", str(side),
        "--face-id", "24",
    ) == 0
    lines = (side / "reconstructions.jsonl").read_text().splitlines()
    assert len(lines) == 1
    assert json.loads(lines[0])["face_id"] == 24


def test_reconstruct_unknown_face_fails(workdir, capsys):
    out, base = workdir
    assert _run("reconstruct", *base, "--face-id", "9999") == 1
    err = capsys.readouterr().err
    assert err.startswith("ERROR:")
    assert "9999" in err


def test_evaluate_report_contents(workdir, capsys):
    out, base = workdir
    payload = json.loads((out / "eval_report.json").read_text())
    assert set(payload) == {"pipeline", "baseline", "mse_ratio"}
    assert payload["mse_ratio"] > 0.0
    csv_lines = (out / "eval_report.csv").read_text().splitlines()
    assert csv_lines[0].startswith("rep,")
    assert _run("evaluate", *base) == 0
    text = capsys.readouterr().out
    assert "MSE ratio (pipeline / mean-shape):" in text
    assert "mean-shape" in text


def test_evaluate_is_byte_deterministic(workdir, base_copy=None):
    out, base = workdir
    before = (out / "eval_report.json").read_bytes()
    assert _run("evaluate", *base) == 0
    assert (out / "eval_report.json").read_bytes() == before


def test_ablate_outputs(workdir):
    out, _ = workdir
    lines = (out / "ablation.csv").read_text().splitlines()
    assert lines[0] == "epoch,same_face_train,same_face_val,shuffled_train,shuffled_val"
    assert len(lines) >= 3
    assert (out / "ablation.svg").read_text().startswith("<svg")


def test_plot_writes_three_views_per_face(workdir):
    out, _ = workdir
    svgs = sorted(p.name for p in out.glob("face*.svg"))
    assert len(svgs) == 6  # --limit 2 faces x 3 views
    assert "face00024_xy.svg" in svgs
    assert "face00024_xz.svg" in svgs
    assert "face00024_yz.svg" in svgs


def test_plot_single_face(workdir, capsys):
    out, base = workdir
    assert _run("plot", *base, "--face-id", "25") == 0
    assert (out / "face00025_yz.svg").exists()


def test_skip_viewnorm_runs_without_view_model(workdir, tmp_path, capsys):
    out, _ = workdir
    side = tmp_path / "noview"
    side.mkdir()
    for name in (
        "train.manifest", "train.lmds", "test.manifest", "test.lmds",
        "dissim.llmw",
    ):
        (side / name).write_bytes((out / name).read_bytes())
    cfg = _write_cfg(side)
    assert _run(
        "reconstruct", "--config", str(cfg), "--out-dir", str(side),
        "--skip-viewnorm",
    ) == 0
    assert (side / "reconstructions.jsonl").exists()


def test_missing_dataset_reports_error_code(tmp_path, capsys):
    assert _run("train", "--which", "dissim", "--out-dir", str(tmp_path)) == 1
    err = capsys.readouterr().err
    assert err.startswith("ERROR:E_")
    assert "\n" == err[-1]


def test_missing_model_reports_error_code(workdir, tmp_path, capsys):
    out, _ = workdir
    side = tmp_path / "nomodel"
    side.mkdir()
    for name in ("test.manifest", "test.lmds"):
        (side / name).write_bytes((out / name).read_bytes())
    cfg = _write_cfg(side)
    assert _run(
        "reconstruct", "--config", str(cfg), "--out-dir", str(side)
    ) == 1
    assert capsys.readouterr().err.startswith("ERROR:")


def test_bad_config_reports_error_code(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("not_a_key = 1\n")
    assert _run("generate", "--config", str(bad), "--out-dir", str(tmp_path)) == 1
    err = capsys.readouterr().err
    assert err.startswith("ERROR:E_CONFIG:")
    assert "not_a_key" in err


def test_seed_override_changes_data(tmp_path):
    cfg = _write_cfg(tmp_path)
    a, b = tmp_path / "s0", tmp_path / "s1"
    assert _run("generate", "--config", str(cfg), "--out-dir", str(a)) == 0
    assert _run(
        "generate", "--config", str(cfg), "--out-dir", str(b), "--seed", "1"
    ) == 0
    assert (a / "train.lmds").read_bytes() != (b / "train.lmds").read_bytes()


def test_unknown_subcommand_exits_with_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2


def test_missing_subcommand_exits_with_usage_error():
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2
