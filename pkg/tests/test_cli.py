"""Command-line front end: exit codes, output formats, and round trips.

All invocations run in-process through main(argv) so exit codes and
stdout/stderr are observable without spawning an interpreter.
"""
import csv
import json

import numpy as np
import pytest

from jointbma import LinearDataset
from jointbma.cli import main
from jointbma.datasets import write_linear_csv
from jointbma.exceptions import ConvergenceError


def small_dataset(seed=4, n=40, p=3):
    rng = np.random.Generator(np.random.Philox(seed))
    X = rng.standard_normal((n, p))
    y = 1.0 + 2.0 * X[:, 0] + rng.standard_normal(n)
    return LinearDataset(y=y, X=X)


def write_config(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def read_csv_output(text):
    """Split CLI CSV output into (provenance dict, header, data rows)."""
    provenance = {}
    lines = []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            provenance[key] = value
        elif line:
            lines.append(line)
    rows = list(csv.reader(lines))
    return provenance, rows[0], rows[1:]


def test_shrinkage_stdout_and_files(tmp_path, capsys):
    cfg = write_config(tmp_path, (
        "[experiment]\ntask = shrinkage\n\n"
        "[shrinkage]\nn = 10\nbeta_hat = 1\nsigma2 = 1\n"
        "k_policy = fixed\nk0 = 1\ninv_c2_grid = 1e-8,1e-2,9\n"))
    assert main(["shrinkage", "--config", cfg]) == 0
    prov, header, rows = read_csv_output(capsys.readouterr().out)
    assert header == ["inv_c2", "coefficient"]
    assert len(rows) == 9
    assert prov["task"] == "shrinkage"
    assert prov["k_policy"] == "fixed"
    assert len(prov["config_sha256"]) == 64

    stem = str(tmp_path / "curve")
    assert main(["shrinkage", "--config", cfg, "--out", stem]) == 0
    capsys.readouterr()
    csv_text = (tmp_path / "curve.csv").read_text()
    payload = json.loads((tmp_path / "curve.json").read_text())
    assert payload["columns"] == ["inv_c2", "coefficient"]
    _, _, csv_rows = read_csv_output(csv_text)
    # 17-significant-digit cells: the parsed CSV is bitwise equal to JSON.
    for csv_row, json_row in zip(csv_rows, payload["rows"]):
        for text_cell, value in zip(csv_row, json_row):
            assert float(text_cell) == value


def test_out_suffix_stripped_and_reruns_identical(tmp_path, capsys):
    cfg = write_config(tmp_path, (
        "[experiment]\ntask = shrinkage\n\n"
        "[shrinkage]\ninv_c2_grid = 1e-6,1e-2,5\n"))
    out_a = str(tmp_path / "a.csv")
    assert main(["shrinkage", "--config", cfg, "--out", out_a]) == 0
    assert (tmp_path / "a.csv").exists() and (tmp_path / "a.json").exists()
    first = (tmp_path / "a.csv").read_bytes(), (tmp_path / "a.json").read_bytes()

    assert main(["shrinkage", "--config", cfg, "--out", out_a]) == 0
    assert ((tmp_path / "a.csv").read_bytes(),
            (tmp_path / "a.json").read_bytes()) == first

    # The output stem is not part of provenance, so a different stem
    # yields byte-identical content too.
    assert main(["shrinkage", "--config", cfg,
                 "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "b.csv").read_bytes() == first[0]
    capsys.readouterr()


def test_sweep_structure(tmp_path, capsys):
    data_path = str(tmp_path / "data.csv")
    write_linear_csv(small_dataset(), data_path)
    cfg = write_config(tmp_path, (
        "[experiment]\ntask = sweep\n\n"
        f"[data]\nsource = csv\npath = {data_path}\n\n"
        "[prior]\ntemplate = gprior\nc2_grid = 1e0,1e4,3\n\n"
        "[policy]\nvariants = uniform, adjusted_c\n\n"
        "[sweep]\ntop_k = 8\nwatch = 1+X1\n"))
    assert main(["sweep", "--config", cfg]) == 0
    prov, header, rows = read_csv_output(capsys.readouterr().out)
    assert header == ["policy", "c2", "record", "label", "value"]
    assert prov["policy"] == "uniform,adjusted_c"
    assert prov["p"] == "3"

    # 2 policies x 3 grid points x (8 model rows + 1 watch + 3 inclusion).
    assert len(rows) == 2 * 3 * (8 + 1 + 3)
    by_kind = {}
    for policy, c2, record, label, value in rows:
        by_kind.setdefault((policy, c2, record), []).append(
            (label, float(value)))
    for (policy, c2, record), entries in by_kind.items():
        values = [v for _, v in entries]
        assert all(-1e-12 <= v <= 1.0 + 1e-12 for v in values)
        if record == "model":
            # top_k=8 covers all 2^3 subsets, so the slice is exhaustive.
            assert abs(sum(values) - 1.0) < 1e-9
        if record == "watch":
            assert [lbl for lbl, _ in entries] == ["1+X1"]
        if record == "inclusion":
            assert [lbl for lbl, _ in entries] == ["x1", "x2", "x3"]

    # The generating covariate dominates inclusion at moderate dispersion.
    x1 = [float(v) for _, c2, rec, lbl, v in rows
          if rec == "inclusion" and lbl == "x1"]
    assert min(x1) > 0.9


def test_simulate_roundtrip_through_cv(tmp_path, capsys):
    sim_cfg = write_config(tmp_path, (
        "[experiment]\ntask = simulate\nseed = 7\n\n"
        "[data]\nsource = generator\ngenerator = dfn\n"), name="sim.ini")
    stem = str(tmp_path / "simdata")
    assert main(["simulate", "--config", sim_cfg, "--out", stem]) == 0
    capsys.readouterr()
    text = (tmp_path / "simdata.csv").read_text()
    assert text.startswith("# task=simulate\n")
    _, header, rows = read_csv_output(text)
    assert header == ["y"] + [f"x{j}" for j in range(1, 16)]
    assert len(rows) == 50

    # Re-ingest the emitted file (provenance comments must be skipped).
    cv_cfg = write_config(tmp_path, (
        "[experiment]\ntask = cv\n\n"
        f"[data]\nsource = csv\npath = {stem}.csv\n\n"
        "[prior]\ntemplate = gprior\nc2 = 50\n\n"
        "[policy]\nvariants = uniform\n\n"
        "[cv]\nmode = exact\ncovariates = 4, 5\n"), name="cv.ini")
    assert main(["cv", "--config", cv_cfg]) == 0
    prov, header, rows = read_csv_output(capsys.readouterr().out)
    assert header == ["policy", "c2", "S"]
    assert prov["p"] == "2"
    assert len(rows) == 1
    assert np.isfinite(float(rows[0][2]))


def test_cv_gelfand_runs_with_seed(tmp_path, capsys):
    data_path = str(tmp_path / "data.csv")
    write_linear_csv(small_dataset(n=25, p=2), data_path)
    base = ("[experiment]\ntask = cv\n{seed}\n"
            f"[data]\nsource = csv\npath = {data_path}\n\n"
            "[prior]\ntemplate = gprior\nc2 = 10\n\n"
            "[cv]\nmode = gelfand\nnum_draws = 400\n")
    cfg = write_config(tmp_path, base.format(seed="seed = 11"))
    assert main(["cv", "--config", cfg]) == 0
    prov, _, rows = read_csv_output(capsys.readouterr().out)
    assert prov["mode"] == "gelfand" and prov["num_draws"] == "400"
    assert np.isfinite(float(rows[0][2]))

    # Monte Carlo mode without a seed is a config error, not a run.
    bare = write_config(tmp_path, base.format(seed=""), name="bare.ini")
    assert main(["cv", "--config", bare]) == 2
    assert "seed is required" in capsys.readouterr().err


def test_rjmcmc_linear_route(tmp_path, capsys):
    data_path = str(tmp_path / "data.csv")
    write_linear_csv(small_dataset(n=40, p=2), data_path)
    cfg = write_config(tmp_path, (
        "[experiment]\ntask = rjmcmc\nseed = 3\n\n"
        f"[data]\nsource = csv\npath = {data_path}\n\n"
        "[prior]\ntemplate = gprior\nc2 = 9\n\n"
        "[rjmcmc]\niterations = 4000\nburn_in = 500\n"))
    assert main(["rjmcmc", "--config", cfg]) == 0
    prov, header, rows = read_csv_output(capsys.readouterr().out)
    assert header == ["model", "dimension", "prob", "se"]
    assert prov["route"] == "linear"
    assert prov["n_kept"] == "3500"
    assert 0.0 < float(prov["jump_rate"]) <= 1.0
    probs = [float(r[2]) for r in rows]
    assert abs(sum(probs) - 1.0) < 1e-9
    assert all(float(r[3]) >= 0.0 for r in rows)
    # The generating model 1+X1 should lead this easy posterior.
    assert rows[0][0] == "1+X1"


def test_prior_probs_small_space(tmp_path, capsys):
    cfg = write_config(tmp_path, (
        "[experiment]\ntask = prior-probs\n\n"
        "[space]\nfactors = R:2, C:2\nforced = 1, R, C\ncandidates = R*C\n\n"
        "[prior]\ntemplate = term_blocks\nscale = 9.0\n\n"
        "[policy]\nvariants = uniform, loglinear_adjusted\n"))
    assert main(["prior-probs", "--config", cfg]) == 0
    prov, header, rows = read_csv_output(capsys.readouterr().out)
    assert header == ["policy", "model", "dimension", "prior_prob"]
    assert prov["factors"] == "R:2,C:2"
    assert prov["scales"] == "default=9"
    for variant in ("uniform", "loglinear_adjusted"):
        block = [r for r in rows if r[0] == variant]
        assert [r[1] for r in block] == ["R+C", "R+C+RC"]
        # Dimension counts every free parameter, forced terms included.
        assert [int(r[2]) for r in block] == [3, 4]
        assert abs(sum(float(r[3]) for r in block) - 1.0) < 1e-12
    uniform = [float(r[3]) for r in rows if r[0] == "uniform"]
    assert uniform == pytest.approx([0.5, 0.5])
    # The adjusted policy pre-compensates the dispersion penalty that the
    # marginal charges the wider model. Here the interaction block has
    # prior variance 9/4 and unit information 1, so the weight ratio is
    # sqrt(9/4) = 1.5 exactly.
    adjusted = [float(r[3]) for r in rows if r[0] == "loglinear_adjusted"]
    assert adjusted == pytest.approx([0.4, 0.6], abs=1e-12)


def test_json_stdout(tmp_path, capsys):
    cfg = write_config(tmp_path, (
        "[experiment]\ntask = shrinkage\nformat = json\n\n"
        "[shrinkage]\ninv_c2_grid = 1e-4,1e-2,3\n"))
    assert main(["shrinkage", "--config", cfg]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert set(payload) == {"provenance", "columns", "rows"}
    assert payload["columns"] == ["inv_c2", "coefficient"]
    assert len(payload["rows"]) == 3
    assert all(isinstance(v, float) for row in payload["rows"] for v in row)


def test_exit_code_2_paths(tmp_path, capsys):
    # Unreadable config.
    assert main(["sweep", "--config", str(tmp_path / "nope.ini")]) == 2
    assert "error:" in capsys.readouterr().err

    # Config/task mismatch.
    cfg = write_config(tmp_path, "[experiment]\ntask = cv\nseed = 1\n")
    assert main(["sweep", "--config", cfg]) == 2
    assert "command line asked" in capsys.readouterr().err

    # Missing grid for sweep.
    data_path = str(tmp_path / "d.csv")
    write_linear_csv(small_dataset(n=20, p=2), data_path)
    cfg = write_config(tmp_path, (
        "[experiment]\ntask = sweep\n\n"
        f"[data]\nsource = csv\npath = {data_path}\n"), name="nogrid.ini")
    assert main(["sweep", "--config", cfg]) == 2
    assert "c2_grid is required" in capsys.readouterr().err

    # Watch model outside the support.
    cfg = write_config(tmp_path, (
        "[experiment]\ntask = sweep\n\n"
        f"[data]\nsource = csv\npath = {data_path}\n\n"
        "[prior]\nc2_grid = 1,10,2\n\n"
        "[sweep]\nwatch = 1+X9\n"), name="watch.ini")
    assert main(["sweep", "--config", cfg]) == 2
    assert "not in the sweep support" in capsys.readouterr().err

    # Capacity cap: cv enumerates 2^p over n folds.
    rng = np.random.Generator(np.random.Philox(0))
    wide = LinearDataset(y=rng.standard_normal(20),
                         X=rng.standard_normal((20, 13)))
    wide_path = str(tmp_path / "wide.csv")
    write_linear_csv(wide, wide_path)
    cfg = write_config(tmp_path, (
        "[experiment]\ntask = cv\n\n"
        f"[data]\nsource = csv\npath = {wide_path}\n"), name="wide.ini")
    assert main(["cv", "--config", cfg]) == 2
    assert "exceeds the cap" in capsys.readouterr().err


def test_exit_code_3_degenerate_response(tmp_path, capsys):
    rng = np.random.Generator(np.random.Philox(1))
    flat = LinearDataset(y=np.full(12, 3.0), X=rng.standard_normal((12, 2)))
    data_path = str(tmp_path / "flat.csv")
    write_linear_csv(flat, data_path)
    cfg = write_config(tmp_path, (
        "[experiment]\ntask = sweep\n\n"
        f"[data]\nsource = csv\npath = {data_path}\n\n"
        "[prior]\ntemplate = gprior\nc2_grid = 1e0,1e2,2\n"))
    assert main(["sweep", "--config", cfg]) == 3
    err = capsys.readouterr().err
    assert "numerical error:" in err
    assert "response is constant" in err


def test_sweep_error_names_grid_point(tmp_path, capsys):
    # lambda is only validated where it is used, so a bad sigma^2 prior
    # surfaces inside the sweep and must be annotated with the c2 value.
    data_path = str(tmp_path / "d.csv")
    write_linear_csv(small_dataset(n=20, p=2), data_path)
    cfg = write_config(tmp_path, (
        "[experiment]\ntask = sweep\n\n"
        f"[data]\nsource = csv\npath = {data_path}\n\n"
        "[prior]\ntemplate = gprior\nlambda = -1\nc2_grid = 1e0,1e2,3\n"))
    assert main(["sweep", "--config", cfg]) == 2
    err = capsys.readouterr().err
    assert "grid point c2=1:" in err
    assert "nonnegative" in err


def test_exit_code_4_convergence(tmp_path, capsys, monkeypatch):
    from jointbma import cli as cli_module

    def explode(cfg):
        raise ConvergenceError("did not settle")

    monkeypatch.setitem(cli_module._DISPATCH, "shrinkage", explode)
    cfg = write_config(tmp_path, (
        "[experiment]\ntask = shrinkage\n\n"
        "[shrinkage]\ninv_c2_grid = 1e-4,1e-2,3\n"))
    assert main(["shrinkage", "--config", cfg]) == 4
    assert "convergence failure" in capsys.readouterr().err


def test_argparse_rejects_unknown_task():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate", "--config", "x.ini"])
    assert exc.value.code == 2
