import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from risalloc import (ScenarioConfig, feature_dimension, load_checkpoint,
                      load_dataset)
from risalloc.cli import main


def tiny_scenario():
    return ScenarioConfig(n_bs_antennas=2, ris_side=2, num_ues=2)


def write_config(path, training=None, bcd=None, scenario=None, extra=None):
    body = {"scenario": (scenario or tiny_scenario()).to_dict()}
    if training is not None:
        body["training"] = training
    if bcd is not None:
        body["bcd"] = bcd
    if extra is not None:
        body.update(extra)
    path.write_text(json.dumps(body))
    return str(path)


@pytest.fixture
def cfg_path(tmp_path):
    return write_config(tmp_path / "config.json",
                        training={"hidden": [8, 8, 8, 8], "max_epochs": 4,
                                  "batch_size": 3},
                        bcd={"max_outer_iters": 30})


@pytest.fixture
def dataset(tmp_path, cfg_path):
    out = tmp_path / "ds"
    rc = main(["generate", "--config", cfg_path, "--n-train", "6",
               "--n-val", "2", "--seed", "3", "--out", str(out)])
    assert rc == 0
    return out


def test_generate_deterministic(tmp_path, cfg_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["generate", "--config", cfg_path, "--n-train", "3",
                     "--n-val", "1", "--seed", "7", "--out", str(out)]) == 0
    assert (a / "records.bin").read_bytes() == (b / "records.bin").read_bytes()
    assert (a / "manifest.json").read_text() == (b / "manifest.json").read_text()
    assert "sha256:" in capsys.readouterr().out


def test_generate_profile(tmp_path):
    out = tmp_path / "ds"
    assert main(["generate", "--profile", "desk", "--n-train", "1",
                 "--n-val", "1", "--out", str(out)]) == 0
    _, manifest = load_dataset(out)
    assert manifest.config.ris_side == 8


def test_generate_rejects_empty(tmp_path, cfg_path, capsys):
    rc = main(["generate", "--config", cfg_path, "--n-train", "0",
               "--n-val", "0", "--out", str(tmp_path / "ds")])
    assert rc == 2
    assert "at least one sample" in capsys.readouterr().err


@pytest.mark.parametrize("mutate,needle", [
    (lambda d: d.pop("carrier_freq"), "carrier_freq"),
    (lambda d: d.update(wavelength=1.0), "wavelength"),
])
def test_scenario_field_errors(tmp_path, capsys, mutate, needle):
    scen = tiny_scenario().to_dict()
    mutate(scen)
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"scenario": scen}))
    rc = main(["generate", "--config", str(path), "--n-train", "1",
               "--n-val", "0", "--out", str(tmp_path / "ds")])
    assert rc == 2
    assert needle in capsys.readouterr().err


def test_config_bad_json(tmp_path, capsys):
    path = tmp_path / "config.json"
    path.write_text("{not json")
    rc = main(["generate", "--config", str(path), "--n-train", "1",
               "--n-val", "0", "--out", str(tmp_path / "ds")])
    assert rc == 2
    assert "line 1" in capsys.readouterr().err


def test_config_unknown_section(tmp_path, capsys):
    path = write_config(tmp_path / "config.json", extra={"solver": {}})
    rc = main(["generate", "--config", path, "--n-train", "1",
               "--n-val", "0", "--out", str(tmp_path / "ds")])
    assert rc == 2
    assert "solver" in capsys.readouterr().err


def test_config_missing_file(tmp_path, capsys):
    rc = main(["generate", "--config", str(tmp_path / "absent.json"),
               "--n-train", "1", "--n-val", "0", "--out", str(tmp_path / "ds")])
    assert rc == 2


def test_bcd_outputs(tmp_path, dataset, cfg_path):
    out = tmp_path / "run"
    rc = main(["bcd", "--data", str(dataset), "--index", "0",
               "--config", cfg_path, "--out", str(out)])
    assert rc == 0
    lines = (out / "trace.csv").read_text().splitlines()
    assert lines[0] == "iteration,objective,seconds"
    objs = [float(row.split(",")[1]) for row in lines[1:]]
    assert len(objs) >= 2
    assert all(b >= a - 1e-9 for a, b in zip(objs, objs[1:]))
    result = json.loads((out / "result.json").read_text())
    assert set(result) == {"alpha", "sample_index", "seed", "outer_iterations",
                           "utility_relaxed", "utility_binary", "theta", "xi",
                           "xi_binary"}
    assert result["outer_iterations"] == len(objs) - 1
    xi = np.array(result["xi"])
    assert np.all(xi >= 0) and np.all(xi.sum(axis=0) <= 1 + 1e-12)
    assert np.all(np.isin(np.array(result["xi_binary"]), (0.0, 1.0)))
    assert result["utility_relaxed"] >= objs[0] - 1e-9


def test_bcd_index_out_of_range(dataset, tmp_path, capsys):
    rc = main(["bcd", "--data", str(dataset), "--index", "99",
               "--out", str(tmp_path / "run")])
    assert rc == 3
    assert "99" in capsys.readouterr().err


def test_bcd_missing_dataset(tmp_path, capsys):
    rc = main(["bcd", "--data", str(tmp_path / "nope"), "--out", str(tmp_path / "r")])
    assert rc == 3


def test_bcd_tol_ordering(tmp_path, dataset):
    iters = {}
    for tol in ("1e-2", "1e-8"):
        out = tmp_path / f"run{tol}"
        assert main(["bcd", "--data", str(dataset), "--tol", tol,
                     "--out", str(out)]) == 0
        iters[tol] = json.loads((out / "result.json").read_text())["outer_iterations"]
    assert iters["1e-2"] <= iters["1e-8"]


def test_train_writes_checkpoint_and_history(tmp_path, dataset, cfg_path):
    ckpt = tmp_path / "model.ckpt"
    rc = main(["train", "--data", str(dataset), "--config", cfg_path,
               "--out", str(ckpt)])
    assert rc == 0
    model, pca, meta = load_checkpoint(ckpt)
    assert pca is not None
    assert model.arch.input_dim == pca.retained
    assert meta["alpha"] == 1.0 and meta["use_pca"] is True
    assert meta["train_samples"] == 6 and meta["val_samples"] == 2
    with open(str(ckpt) + ".history.csv") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 4   # max_epochs from the config file
    assert [r["epoch"] for r in rows] == ["0", "1", "2", "3"]
    assert float(rows[0]["learning_rate"]) == 0.01


def test_train_no_pca_uses_raw_width(tmp_path, dataset, cfg_path):
    ckpt = tmp_path / "raw.ckpt"
    rc = main(["train", "--data", str(dataset), "--config", cfg_path,
               "--no-pca", "--max-epochs", "2", "--alpha", "2",
               "--out", str(ckpt)])
    assert rc == 0
    model, pca, meta = load_checkpoint(ckpt)
    assert pca is None
    assert model.arch.input_dim == feature_dimension(2, 2, 4)
    assert meta["alpha"] == 2.0


def test_train_flag_overrides_config(tmp_path, dataset, cfg_path):
    ckpt = tmp_path / "short.ckpt"
    assert main(["train", "--data", str(dataset), "--config", cfg_path,
                 "--max-epochs", "1", "--out", str(ckpt)]) == 0
    with open(str(ckpt) + ".history.csv") as f:
        assert len(list(csv.DictReader(f))) == 1


def test_train_bad_option_in_config(tmp_path, dataset):
    path = write_config(tmp_path / "bad.json", training={"momentum": 0.9})
    rc = main(["train", "--data", str(dataset), "--config", path,
               "--out", str(tmp_path / "m.ckpt")])
    assert rc == 2


def test_compare_default_schemes(tmp_path, dataset, cfg_path):
    out = tmp_path / "cmp.csv"
    rc = main(["compare", "--data", str(dataset), "--config", cfg_path,
               "--out", str(out)])
    assert rc == 0
    with open(out) as f:
        rows = list(csv.DictReader(f))
    assert [r["scheme"] for r in rows] == ["uniform", "bcd"]
    assert all(r["samples"] == "2" for r in rows)   # val split
    assert all(r["parameter_count"] == "" for r in rows)
    assert float(rows[1]["mean_utility"]) >= float(rows[0]["mean_utility"]) - 1e-9


def test_compare_deterministic_table(tmp_path, dataset, cfg_path):
    outs = []
    for name in ("c1.csv", "c2.csv"):
        out = tmp_path / name
        assert main(["compare", "--data", str(dataset), "--config", cfg_path,
                     "--scheme", "bcd", "--split", "train",
                     "--out", str(out)]) == 0
        outs.append(out.read_bytes())
        assert (tmp_path / (name + ".timing.csv")).exists()
    assert outs[0] == outs[1]


def test_compare_nn_scheme(tmp_path, dataset, cfg_path):
    ckpt = tmp_path / "model.ckpt"
    assert main(["train", "--data", str(dataset), "--config", cfg_path,
                 "--max-epochs", "2", "--out", str(ckpt)]) == 0
    out = tmp_path / "cmp.csv"
    rc = main(["compare", "--data", str(dataset), "--config", cfg_path,
               "--scheme", "nn+pca", "--model", str(ckpt), "--out", str(out)])
    assert rc == 0
    with open(out) as f:
        rows = list(csv.DictReader(f))
    assert rows[0]["scheme"] == "nn+pca"
    assert int(rows[0]["parameter_count"]) > 0


def test_compare_nn_needs_model(tmp_path, dataset, capsys):
    rc = main(["compare", "--data", str(dataset), "--scheme", "nn",
               "--out", str(tmp_path / "c.csv")])
    assert rc == 2
    assert "--model" in capsys.readouterr().err


def test_compare_scheme_pca_mismatch(tmp_path, dataset, cfg_path, capsys):
    ckpt = tmp_path / "model.ckpt"
    assert main(["train", "--data", str(dataset), "--config", cfg_path,
                 "--max-epochs", "2", "--out", str(ckpt)]) == 0
    rc = main(["compare", "--data", str(dataset), "--scheme", "nn",
               "--model", str(ckpt), "--out", str(tmp_path / "c.csv")])
    assert rc == 2


def test_compare_brute_tiny(tmp_path, dataset, cfg_path):
    out = tmp_path / "cmp.csv"
    rc = main(["compare", "--data", str(dataset), "--config", cfg_path,
               "--scheme", "brute", "--nu", "2", "--budget", "2000",
               "--out", str(out)])
    assert rc == 0


def test_compare_brute_budget_refusal(tmp_path, dataset, capsys):
    rc = main(["compare", "--data", str(dataset), "--scheme", "brute",
               "--nu", "8", "--budget", "100",
               "--out", str(tmp_path / "c.csv")])
    assert rc == 4
    assert "budget" in capsys.readouterr().err


def test_compare_empty_split(tmp_path, cfg_path, capsys):
    ds = tmp_path / "ds"
    assert main(["generate", "--config", cfg_path, "--n-train", "2",
                 "--n-val", "0", "--out", str(ds)]) == 0
    rc = main(["compare", "--data", str(ds), "--split", "val",
               "--out", str(tmp_path / "c.csv")])
    assert rc == 3


def test_unknown_scheme_rejected_by_parser(dataset, tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["compare", "--data", str(dataset), "--scheme", "magic",
              "--out", str(tmp_path / "c.csv")])
    assert exc.value.code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "risalloc", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "generate" in proc.stdout and "compare" in proc.stdout
