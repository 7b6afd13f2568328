import json
import subprocess
import sys

import numpy as np
import pytest

from noisyprach.classifiers import load_model
from noisyprach.cli import apply_overrides, main
from noisyprach.data import read_csv
from noisyprach.evaluation import ExperimentConfig, derive_seed, run_experiment
from noisyprach.prach_gen import GenConfig

SMALL = ["--set", "gen.n_records=400", "--set", "repeats=1", "--set", "tune_folds=2",
         "--set", 'grids={"tree":[{"max_depth":3}],"knn":[{"k":3}],"elm":[{"hidden_units":32}]}',
         "--set", "sampling.J=40"]


def _manifest(path):
    return json.loads(path.read_text())


def test_gen_defaults_and_manifest(tmp_path):
    assert main(["gen", "--out", str(tmp_path), "--set", "gen.n_records=300"]) == 0
    d = read_csv(tmp_path / "dataset.csv")
    assert len(d) == 300 and d.n_peaks == 24
    man = _manifest(tmp_path / "manifest.json")
    gen = man["config"]["gen"]
    assert (gen["snr_db"], gen["ncs"], gen["n_sequences"]) == (10.0, 13, 1000)
    assert str(tmp_path / "dataset.csv") in man["outputs"]
    # the manifest alone rebuilds the artifact
    from noisyprach.data import write_csv
    from noisyprach.prach_gen import generate_dataset
    write_csv(generate_dataset(GenConfig.from_dict(gen)), tmp_path / "re.csv")
    assert (tmp_path / "re.csv").read_bytes() == (tmp_path / "dataset.csv").read_bytes()


def test_inject_outputs_sidecar(tmp_path):
    main(["gen", "--out", str(tmp_path), "--set", "gen.n_records=200"])
    out = tmp_path / "noisy.csv"
    assert main(["inject", "--in", str(tmp_path / "dataset.csv"), "--fraction", "0.1",
                 "--mode", "flip", "--seed", "5", "--out", str(out)]) == 0
    d = read_csv(out)
    assert d.meta["noise"] == {"fraction": 0.1, "mode": "flip", "seed": 5}
    assert _manifest(out.with_name("noisy.csv.manifest.json"))["command"] == "inject"
    # corrupting twice is refused as a data error
    assert main(["inject", "--in", str(out), "--fraction", "0.1"]) == 4


@pytest.mark.parametrize("argv,code", [
    (["inject", "--in", "x.csv", "--fraction", "1.5"], 2),
    (["eval", "--out", "o", "--in", "missing.csv"], 3),
    (["eval", "--out", "o", "--set", "repeats=0"], 2),
    (["eval", "--out", "o", "--set", "bogus=1"], 2),
    (["sweep-j", "--j", "5,x"], 2),
    (["report", "--in", "nowhere"], 3),
])
def test_exit_codes(argv, code, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == code


def test_unknown_subcommand_and_bad_config(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 2
    (tmp_path / "c.json").write_text("{not json")
    assert main(["eval", "--config", "c.json", "--out", "o"]) == 2
    (tmp_path / "c.json").write_text("[1, 2]")
    assert main(["eval", "--config", "c.json", "--out", "o"]) == 2


def test_data_error_exit(tmp_path):
    (tmp_path / "bad.csv").write_text("amplitude,variance,threshold,snr,label\n1,2,3,4,Maybe\n")
    assert main(["transform", "--in", str(tmp_path / "bad.csv"), "--space", "raw",
                 "--out", str(tmp_path / "o.csv")]) == 4


def test_numeric_error_exit(tmp_path, monkeypatch):
    import noisyprach.cli as cli
    from noisyprach.classifiers import FitError

    def boom(*a, **k):
        raise FitError("singular")

    main(["gen", "--out", str(tmp_path), "--set", "gen.n_records=100"])
    main(["transform", "--in", str(tmp_path / "dataset.csv"), "--space", "raw",
          "--out", str(tmp_path / "raw.csv")])
    monkeypatch.setattr(cli, "fit", boom)
    assert main(["train", "--in", str(tmp_path / "raw.csv"), "--space", "raw",
                 "--classifier", "nb", "--out", str(tmp_path / "m")]) == 5


def test_transform_and_train(tmp_path):
    main(["gen", "--out", str(tmp_path), "--set", "gen.n_records=300"])
    src = str(tmp_path / "dataset.csv")
    assert main(["transform", "--in", src, "--space", "psr", "--out", str(tmp_path / "psr.csv")]) == 0
    assert main(["transform", "--in", src, "--space", "pca", "--k", "2",
                 "--out", str(tmp_path / "pca.csv")]) == 0
    assert (tmp_path / "pca.pca.json").exists()
    header = (tmp_path / "psr.csv").read_text().splitlines()[0].split(",")
    assert len(header) == 29 and header[-1] == "label"
    assert main(["train", "--in", str(tmp_path / "pca.csv"), "--space", "pca", "--classifier",
                 "elm", "--self-train", "--J", "25", "--out", str(tmp_path / "m")]) == 0
    model = load_model(tmp_path / "m" / "model.json")
    assert model.n_features == 2
    audit = (tmp_path / "m" / "audit.csv").read_text().splitlines()
    assert len(audit) > 2
    assert main(["train", "--in", str(tmp_path / "psr.csv"), "--space", "psr", "--classifier",
                 "knn", "--tune", "--out", str(tmp_path / "m2")]) == 0
    spec = _manifest(tmp_path / "m2" / "manifest.json")["config"]["spec"]
    assert spec["kind"] == "knn" and spec["params"]["k"] in (1, 3, 5, 11)


def test_eval_twice_identical_and_report(tmp_path):
    for name in ("a", "b"):
        assert main(["eval", "--out", str(tmp_path / name), *SMALL,
                     "--set", "noise_levels=[0, 0.1]"]) == 0
    for f in ("report.csv", "report.md", "report.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    # manifests differ only in the output directory name
    digests = [{k.rsplit("/", 1)[1]: v for k, v in _manifest(tmp_path / n / "manifest.json")
                ["outputs"].items()} for n in ("a", "b")]
    assert digests[0] == digests[1]
    assert main(["report", "--in", str(tmp_path / "a"), "--format", "csv",
                 "--out", str(tmp_path / "r.csv")]) == 0
    assert (tmp_path / "r.csv").read_text() == (tmp_path / "a" / "report.csv").read_text()


def test_gen_inject_eval_composes_with_in_process_run(tmp_path):
    master = 3
    gen_seed = derive_seed(master, "gen", 0)
    noise_seed = derive_seed(master, "noise", 0, "0.1")
    main(["gen", "--out", str(tmp_path), "--set", "gen.n_records=400",
          "--set", f"gen.seed={gen_seed}"])
    noisy = tmp_path / "noisy.csv"
    main(["inject", "--in", str(tmp_path / "dataset.csv"), "--fraction", "0.1",
          "--seed", str(noise_seed), "--out", str(noisy)])
    assert main(["eval", "--in", str(noisy), "--out", str(tmp_path / "e"), *SMALL,
                 "--set", f"master_seed={master}"]) == 0

    doc = apply_overrides({}, [s for s in SMALL if s != "--set"])
    cfg = ExperimentConfig.from_dict({**doc, "master_seed": master, "noise_levels": [0.1]})
    direct = run_experiment(cfg)
    assert (tmp_path / "e" / "report.csv").read_text() == direct.to_csv()


def test_sweep_cli(tmp_path):
    assert main(["sweep-j", "--j", "10,40", "--noise", "0.1", "--out", str(tmp_path), *SMALL]) == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == "J,mean_f1,std_f1" and len(lines) == 3


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "noisyprach.cli", "inject", "--in", "x",
                          "--fraction", "2"], capture_output=True, text=True, cwd=tmp_path)
    assert out.returncode == 2
    assert "config error" in out.stderr
    out = subprocess.run([sys.executable, "-m", "noisyprach.cli", "--version"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "0.1.0" in out.stdout


def test_overrides():
    doc = apply_overrides({"a": {"b": 1}}, ["a.c=[1,2]", "d=text", "a.b=2.5"])
    assert doc == {"a": {"b": 2.5, "c": [1, 2]}, "d": "text"}
