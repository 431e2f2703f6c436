import csv
import filecmp
import json

import pytest

from hxmonitor.bench import ACCURACY_HEADER
from hxmonitor.cli import main
from hxmonitor.config import default_config_text, parse_config

SMALL_CFG = """
[conditions]
horizon = 30
[prior]
horizon = 30
[npe]
n_train = 300
max_epochs = 3
n_layers = 1
n_hidden = 8
n_posterior_samples = 200
[mcmc]
n_chains = 2
n_warmup = 20
n_samples = 20
[scenario foul]
mode = fouling
tau = 10
beta_f = 0.05
lam = 2
n_realizations = 3
[scenario quiet]
mode = none
tau = 10
n_realizations = 2
"""


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "small.cfg"
    p.write_text(SMALL_CFG)
    return p


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    d = tmp_path_factory.mktemp("trained")
    p = d / "small.cfg"
    p.write_text(SMALL_CFG)
    assert main(["train-npe", "--config", str(p), "--out", str(d / "out")]) == 0
    return d / "out" / "npe_checkpoint.npz"


def _manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_gen_data_byte_identical(cfg, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["gen-data", "--config", str(cfg), "--seed", "7", "--out", str(a)]) == 0
    assert main(["--config", str(cfg), "--seed", "7", "--out", str(b), "gen-data"]) == 0
    cmp = filecmp.dircmp(a, b)
    assert not cmp.diff_files and not cmp.left_only and not cmp.right_only
    for sub in ("foul", "quiet"):
        inner = filecmp.dircmp(a / "data" / sub, b / "data" / sub)
        assert inner.same_files and not inner.diff_files
    assert sorted(p.name for p in (a / "data" / "foul").iterdir()) == [
        f"record_000{i}.{ext}" for i in range(3) for ext in ("csv", "json")]


def test_gen_data_seed_changes_records(cfg, tmp_path):
    main(["gen-data", "--config", str(cfg), "--seed", "7", "--out", str(tmp_path / "a")])
    main(["gen-data", "--config", str(cfg), "--seed", "8", "--out", str(tmp_path / "b")])
    assert not filecmp.cmp(tmp_path / "a/data/foul/record_0000.csv", tmp_path / "b/data/foul/record_0000.csv",
                           shallow=False)


def test_manifest_lists_artifacts_and_seed(cfg, tmp_path):
    out = tmp_path / "o"
    main(["gen-data", "--config", str(cfg), "--seed", "3", "--out", str(out), "--scenario", "quiet", "--n", "1"])
    run = _manifest(out)["runs"][0]
    assert run["command"] == "gen-data" and run["seed"] == 3
    assert [a["path"] for a in run["artifacts"]] == ["data/quiet/record_0000.csv"]


def test_infer_mcmc_bench_ppc(cfg, trained, tmp_path):
    out = tmp_path / "o"
    common = ["--config", str(cfg), "--out", str(out)]
    assert main(["infer", *common, "--checkpoint", str(trained), "--scenario", "foul"]) == 0
    assert main(["run-mcmc", *common, "--scenario", "foul", "--realization", "2"]) == 0
    assert main(["bench", *common, "--checkpoint", str(trained), "--n", "2"]) == 0
    assert main(["ppc", *common, "--scenario", "foul"]) == 0
    for name in ("npe_samples.csv", "mcmc_samples.csv", "ppc_bands.csv", "bench/records.csv", "bench/summary.csv",
                 "bench/medians_scatter.csv"):
        assert (out / name).exists(), name
    with open(out / "bench/accuracy.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == ACCURACY_HEADER and [r[0] for r in rows[1:]] == ["foul", "quiet"]
    commands = [r["command"] for r in _manifest(out)["runs"]]
    assert commands == ["infer", "run-mcmc", "bench", "ppc"]
    assert not (out / "figures").exists()


def test_figures_opt_in(cfg, tmp_path):
    pytest.importorskip("matplotlib")
    out = tmp_path / "o"
    assert main(["ppc", "--config", str(cfg), "--out", str(out), "--scenario", "foul", "--figures"]) == 0
    assert (out / "figures" / "ppc.png").stat().st_size > 0


def test_record_file_input(cfg, trained, tmp_path):
    out = tmp_path / "o"
    main(["gen-data", "--config", str(cfg), "--out", str(out), "--scenario", "foul", "--n", "1"])
    rec = out / "data/foul/record_0000.csv"
    assert main(["infer", "--config", str(cfg), "--out", str(out), "--checkpoint", str(trained),
                 "--record", str(rec)]) == 0
    # the record's sidecar names its scenario; a different one is refused
    assert main(["infer", "--config", str(cfg), "--out", str(out), "--checkpoint", str(trained),
                 "--record", str(rec), "--scenario", "quiet"]) == 2


def test_config_command_writes_default(tmp_path):
    assert main(["config", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "hxmonitor.cfg").read_text() == default_config_text()
    parse_config((tmp_path / "hxmonitor.cfg").read_text())


@pytest.mark.parametrize("argv, message", [
    (["infer", "--scenario", "foul"], "checkpoint"),
    (["infer", "--scenario", "foul", "--checkpoint", "missing.npz"], "not found"),
    (["run-mcmc", "--scenario", "nope"], "unknown scenario"),
    (["run-mcmc"], "--record"),
    (["run-mcmc", "--scenario", "foul", "--realization", "9"], "out of range"),
    (["run-mcmc", "--record", "missing.csv"], "not found"),
    (["bench", "--engines", "mcmc,magic"], "unknown engine"),
    (["train-npe", "--training-set", "missing.csv"], "not found"),
])
def test_errors_exit_nonzero_with_message(cfg, tmp_path, capsys, argv, message):
    assert main([*argv, "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert err.startswith(f"hxmonitor {argv[0]}: error:") and message in err


def test_bad_config_file(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[nonsense]\nx = 1\n")
    assert main(["gen-data", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert main(["gen-data", "--config", str(tmp_path / "missing.cfg"), "--out", str(tmp_path / "o")]) == 2
    assert "error" in capsys.readouterr().err


def test_usage_error_exits_nonzero():
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code != 0
