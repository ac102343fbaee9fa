import json
import subprocess
import sys

import numpy as np
import pytest

from netinterdict.cli import main
from netinterdict.gnn import GnnConfig, init_model, save_checkpoint
from netinterdict.pipeline import read_jsonl


@pytest.fixture
def workdir(tmp_path):
    inst = tmp_path / "inst.jsonl"
    assert main(["generate", "--kind", "spi", "--count", "12", "--nodes", "5", "--density", "0.8",
                 "--budget", "1", "--seed", "3", "--out", str(inst)]) == 0
    labels = tmp_path / "labels.jsonl"
    assert main(["label", "--instances", str(inst), "--out", str(labels)]) == 0
    return tmp_path


def test_generate_writes_count_lines(tmp_path):
    out = tmp_path / "g.jsonl"
    assert main(["generate", "--kind", "mfi", "--count", "10", "--nodes", "4", "--budget", "2",
                 "--out", str(out)]) == 0
    recs = read_jsonl(out)
    assert len(recs) == 10
    assert all(r["kind"] == "mfi" and r["budget"] == 2.0 for r in recs)
    assert len({r["id"] for r in recs}) == 10


def test_generate_is_seeded(tmp_path, monkeypatch):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    monkeypatch.setenv("INTERDICT_SEED", "7")
    for path in (a, b):
        assert main(["generate", "--kind", "spi", "--count", "3", "--nodes", "4", "--budget", "1",
                     "--out", str(path)]) == 0
    assert a.read_text() == b.read_text()


def test_bad_ranges_exit_2(tmp_path, capsys):
    code = main(["generate", "--kind", "spi", "--count", "1", "--nodes", "4", "--cost-lo", "5",
                 "--cost-hi", "1", "--out", str(tmp_path / "x.jsonl")])
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_usage_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["generate", "--kind", "spi"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["compare", "--checkpoint", "m.json", "--instances", "i.jsonl", "--out", "o.csv"])
    assert exc.value.code == 2


def test_label_records(workdir):
    recs = read_jsonl(workdir / "labels.jsonl")
    assert len(recs) == 12
    assert set(recs[0]) == {"instance", "optimal_value", "label_x", "n_optima"}
    assert all(sum(r["label_x"]) <= 1 for r in recs)


def test_label_milp_matches_oracle(workdir):
    out = workdir / "milp.jsonl"
    assert main(["label", "--instances", str(workdir / "inst.jsonl"), "--method", "milp",
                 "--out", str(out)]) == 0
    a = {r["instance"]: r["optimal_value"] for r in read_jsonl(workdir / "labels.jsonl")}
    b = {r["instance"]: r["optimal_value"] for r in read_jsonl(out)}
    assert a.keys() == b.keys()
    assert all(abs(a[k] - b[k]) <= 1e-6 for k in a)


def test_label_empty_file(tmp_path):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    out = tmp_path / "labels.jsonl"
    assert main(["label", "--instances", str(empty), "--out", str(out)]) == 0
    assert out.read_text() == ""


def test_label_missing_input_exit_2(tmp_path):
    assert main(["label", "--instances", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path / "o")]) == 2


def test_train_evaluate_compare(workdir):
    ckpt = workdir / "m.json"
    hist = workdir / "hist.csv"
    assert main(["train", "--instances", str(workdir / "inst.jsonl"), "--labels", str(workdir / "labels.jsonl"),
                 "--out", str(ckpt), "--history", str(hist), "--epochs", "2", "--dim", "8",
                 "--hidden", "8", "--lr", "1e-3"]) == 0
    assert hist.read_text().splitlines()[0] == "epoch,train_loss,val_loss"
    out = workdir / "eval"
    assert main(["evaluate", "--checkpoint", str(ckpt), "--instances", str(workdir / "inst.jsonl"),
                 "--labels", str(workdir / "labels.jsonl"), "--split", "all", "--out-dir", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert set(rep) == {"model", "random", "oracle"}
    assert rep["oracle"]["aggregate"]["ratio_mean"] == 1.0
    assert (out / "report.csv").read_text().startswith("strategy,n,ratio_mean")
    rows = (out / "rows.csv").read_text().splitlines()
    assert len(rows) == 1 + 3 * 12
    cmp = workdir / "cmp.csv"
    assert main(["compare", "--checkpoint", str(ckpt), "--instances", str(workdir / "inst.jsonl"),
                 "--k0", "5", "--k1", "1", "--delta", "1", "--time-limit-ms", "2000", "--out", str(cmp)]) == 0
    lines = cmp.read_text().splitlines()
    assert lines[0] == "instance,method,time_ms,value"
    assert any(",predict_and_search," in line for line in lines)


def test_missing_checkpoint_exit_2(workdir):
    for cmd in ("evaluate", "compare"):
        argv = [cmd, "--checkpoint", str(workdir / "missing.json"), "--instances", str(workdir / "inst.jsonl")]
        if cmd == "evaluate":
            argv += ["--labels", str(workdir / "labels.jsonl"), "--out-dir", str(workdir / "e")]
        else:
            argv += ["--k0", "1", "--k1", "1", "--delta", "0", "--out", str(workdir / "c.csv")]
        assert main(argv) == 2


def test_diagnose_passes(capsys):
    assert main(["diagnose", "--checks", "wl,duality,gradcheck"]) == 0
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 3


def test_diagnose_unknown_check():
    assert main(["diagnose", "--checks", "nonsense"]) == 2


def test_corrupted_checkpoint_fails_gradcheck(tmp_path, capsys):
    model = init_model(GnnConfig(dim=8, hidden=(8,), random_dim=2))
    model.params["l1.g.V.0.W"][0, 0] = np.nan
    path = tmp_path / "bad.json"
    save_checkpoint(model, path)
    assert main(["diagnose", "--checks", "gradcheck", "--checkpoint", str(path)]) == 1
    assert "[FAIL] gradcheck" in capsys.readouterr().out
    path.write_text("{not json")
    assert main(["diagnose", "--checks", "gradcheck", "--checkpoint", str(path)]) == 1


def test_good_checkpoint_passes_gradcheck(tmp_path):
    path = tmp_path / "ok.json"
    save_checkpoint(init_model(GnnConfig(dim=8, hidden=(8,), random_dim=2, seed=4)), path)
    assert main(["diagnose", "--checks", "gradcheck", "--checkpoint", str(path)]) == 0


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "netinterdict.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "generate" in res.stdout and "INTERDICT_SEED" in res.stdout
