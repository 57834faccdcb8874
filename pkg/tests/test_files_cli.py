import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biaxcann.cli import main
from biaxcann.dataset import (
    Dataset,
    DatasetFormatError,
    convert_text,
    format_dataset,
    parse_dataset,
)
from biaxcann.discovery import LEFT_ATRIUM, RIGHT_ATRIUM, ActiveTerm, DiscoveredModel, FitReport
from biaxcann.files import FileFormatError, parse_config, parse_model, parse_model_file, serialize_model
from biaxcann.training import TrainConfig

QUICK = "[train]\nmax_epochs = 300\n"


def write(path, text):
    path.write_text(text)
    return str(path)


# --- datasets -----------------------------------------------------------------


def test_parse_stretch_dataset():
    data = parse_dataset("protocol,lambda1,lambda2,p1_kpa,p2_kpa\n1:1,1.1,1.2,3,4\n\n1:1,1,1,0,0\n")
    assert len(data) == 2
    assert data.labels() == ["1:1"]
    assert data.points()[0].p2 == 4.0


def test_parse_strain_dataset_is_pulled_back():
    data = parse_dataset("protocol,e11,e22,s11_kpa,s22_kpa\nx,0.105,0,10,0\n")
    assert data.lambda1[0] == pytest.approx(1.1, rel=1e-15)
    assert data.p1[0] == pytest.approx(11.0, rel=1e-15)


@pytest.mark.parametrize(
    "body, line",
    [
        ("protocol,lambda1,lambda2,p1_kpa\n", 1),
        ("protocol,lambda1,lambda2,p1_kpa,p2_kpa\nx,1,1,0,0\nx,1,abc,0,0\n", 3),
        ("protocol,lambda1,lambda2,p1_kpa,p2_kpa\nx,1,1,0\n", 2),
        ("protocol,lambda1,lambda2,p1_kpa,p2_kpa\n,1,1,0,0\n", 2),
        ("protocol,lambda1,lambda2,p1_kpa,p2_kpa\nx,1,1,0,0\n\nx,1,nan,0,0\n", 4),
        ("protocol,lambda1,lambda2,p1_kpa,p2_kpa\nx,0,1,0,0\n", 2),
        ("", 1),
    ],
)
def test_malformed_dataset_reports_line(body, line):
    with pytest.raises(DatasetFormatError) as exc:
        parse_dataset(body)
    assert exc.value.line == line
    assert str(exc.value).startswith(f"line {line}:")


def test_format_then_parse_is_exact(rng):
    data = Dataset(["a", "b", "a"], *rng.uniform(0.8, 1.3, (2, 3)), *rng.normal(0, 10, (2, 3)))
    back = parse_dataset(format_dataset(data))
    for col in ("lambda1", "lambda2", "p1", "p2"):
        assert np.array_equal(getattr(back, col), getattr(data, col))
    assert list(back.protocol) == list(data.protocol)


@settings(max_examples=50)
@given(
    st.lists(
        st.tuples(st.floats(-0.3, 1.0), st.floats(-0.3, 1.0), st.floats(-100, 100), st.floats(-100, 100)),
        min_size=1, max_size=8,
    )
)
def test_convert_round_trip(rows):
    text = "protocol,e11,e22,s11_kpa,s22_kpa\n" + "".join(
        f"p,{a!r},{b!r},{c!r},{d!r}\n" for a, b, c, d in rows
    )
    out = list(csv.reader(io.StringIO(convert_text(convert_text(text), inverse=True))))
    assert out[0] == ["protocol", "e11", "e22", "s11_kpa", "s22_kpa"]
    assert len(out) == len(rows) + 1
    for (a, b, c, d), row in zip(rows, out[1:]):
        got = [float(x) for x in row[1:]]
        np.testing.assert_allclose(got, [a, b, c, d], rtol=1e-12, atol=1e-12)


# --- config -------------------------------------------------------------------


def test_config_defaults_and_overrides():
    cfg = parse_config("")
    assert cfg.train == TrainConfig()
    assert cfg.alphas == [10.0, 1.0, 0.1, 0.01]
    cfg = parse_config(
        "[train]\nalpha = 0.5\nseed = 3\n[sweep]\nalphas = [1, 0.1]\nmargin = 0.02\n"
        "[prune]\nthreshold = 0.01\n[generate]\npeak_stretch = 1.3\nprotocols = ['1:1']\n"
        "[generate.model]\npreset = 'right_atrium'\n"
    )
    assert (cfg.train.alpha, cfg.train.seed, cfg.alphas, cfg.margin) == (0.5, 3, [1.0, 0.1], 0.02)
    assert cfg.threshold == 0.01
    assert cfg.generate.model is RIGHT_ATRIUM
    assert cfg.generate.protocol_specs()[0].peak_stretch == 1.3


def test_config_explicit_model_terms():
    cfg = parse_config("[generate.model.terms]\n5 = [2.0]\n8 = [0.1, 0.2]\n")
    assert cfg.generate.model.parameters == {"mu": 2.0, "a": 0.1, "b": 0.2}


@pytest.mark.parametrize(
    "text",
    [
        "[train]\nlearnin_rate = 1\n",
        "[oops]\n",
        "[train]\nalpha = -1\n",
        "[sweep]\nalphas = []\n",
        "[generate.model]\npreset = 'liver'\n",
        "[generate.model.terms]\n5 = [1.0, 2.0]\n",
        "[generate]\nprotocols = ['1-1']\n",
        "not toml = = 1",
    ],
)
def test_config_errors(text):
    with pytest.raises(FileFormatError):
        parse_config(text)


# --- model files --------------------------------------------------------------


def test_model_round_trip():
    m = DiscoveredModel(
        [ActiveTerm(5, (1.3700000000000001,)), ActiveTerm(16, (0.1, 0.2))],
        alpha_used=0.01,
        fit=FitReport({("1:1", "p1"): 0.99, ("1:1", "p2"): None}, 0.995),
    )
    text = serialize_model(m, TrainConfig(seed=4))
    back, config = parse_model_file(text)
    assert back == m
    assert config["seed"] == 4
    assert serialize_model(back, TrainConfig(seed=4)) == text


def test_empty_model_round_trip():
    m = DiscoveredModel([], alpha_used=10.0)
    assert parse_model(serialize_model(m)) == m


@settings(max_examples=30)
@given(
    st.lists(st.integers(1, 16), unique=True, max_size=6),
    st.lists(st.floats(1e-6, 1e3), min_size=12, max_size=12),
)
def test_model_round_trip_property(indices, values):
    from biaxcann.energy import term

    terms, k = [], 0
    for i in indices:
        n = 2 if term(i).is_exponential else 1
        terms.append(ActiveTerm(i, tuple(values[k:k + n])))
        k += n
    m = DiscoveredModel(terms)
    back = parse_model(serialize_model(m))
    assert back == m
    np.testing.assert_array_equal(back.weights().to_vector(), m.weights().to_vector())


@pytest.mark.parametrize(
    "edit",
    [
        lambda t: t.replace('kind = "biaxcann-model"', 'kind = "other"'),
        lambda t: t.replace("format_version = 1", "format_version = 2"),
        lambda t: t.replace('channel = "I2"', 'channel = "I1"', 1),
        lambda t: t.replace("n_active_terms = 4", "n_active_terms = 3"),
        lambda t: t.replace("index = 5", "index = 17"),
        lambda t: t + "[[[",
    ],
)
def test_model_schema_errors(edit):
    with pytest.raises(FileFormatError):
        parse_model(edit(serialize_model(LEFT_ATRIUM)))


# --- command line -------------------------------------------------------------


@pytest.fixture
def la_csv(tmp_path):
    cfg = write(tmp_path / "gen.toml", "[generate]\nn_points = 8\npeak_stretch = 1.25\n")
    path = tmp_path / "la.csv"
    assert main(["generate", "--config", cfg, "--out", str(path), "--quiet"]) == 0
    return str(path)


def test_generate_writes_parseable_dataset(la_csv):
    data = parse_dataset(open(la_csv).read())
    assert data.labels() == ["1:0.5", "1:0.75", "1:1", "0.75:1", "0.5:1"]
    assert len(data) == 40


def test_generate_infeasible_exit_code(tmp_path, capsys):
    cfg = write(tmp_path / "gen.toml", "[generate]\npeak_stretch = 1.34\nprotocols = ['1:1']\n")
    assert main(["generate", "--config", cfg, "--out", str(tmp_path / "x.csv")]) == 4
    assert "not bracketed" in capsys.readouterr().err


def test_fit_outputs(tmp_path, la_csv):
    cfg = write(tmp_path / "run.toml", QUICK)
    out = tmp_path / "fit"
    assert main(["fit", "--data", la_csv, "--config", cfg, "--out", str(out), "--quiet"]) == 0
    model = parse_model((out / "model.txt").read_text())
    assert model.alpha_used == 1.0
    assert "Goodness of fit" in (out / "report.txt").read_text()
    curve = (out / "curves" / "1_1_p1.csv").read_text().splitlines()
    assert curve[0] == "stretch,measured,predicted" and len(curve) == 9


def test_fit_bad_inputs(tmp_path, la_csv, capsys):
    bad = write(tmp_path / "bad.csv", "protocol,lambda1,lambda2,p1_kpa,p2_kpa\nx,1,1,0,0\nx,1,q,0,0\n")
    assert main(["fit", "--data", bad, "--out", str(tmp_path / "o")]) == 2
    assert "line 3" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()
    assert main(["fit", "--data", la_csv, "--out", str(tmp_path / "o"), "--alpha", "1,2"]) == 2
    assert main(["fit", "--data", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "o")]) == 2
    assert main(["fit", "--bogus"]) == 2


def test_fit_divergence_exit_code(tmp_path):
    data = write(tmp_path / "d.csv", "protocol,lambda1,lambda2,p1_kpa,p2_kpa\nx,1.5,1.5,1e30,1e30\n")
    cfg = write(tmp_path / "c.toml", "[train]\nlearning_rate = 300.0\nalpha = 0.0\nmax_epochs = 10\n")
    assert main(["fit", "--data", data, "--config", cfg, "--out", str(tmp_path / "o"), "--quiet"]) == 3
    assert not (tmp_path / "o").exists()


def test_sweep_outputs(tmp_path, la_csv):
    cfg = write(tmp_path / "run.toml", QUICK)
    out = tmp_path / "sw"
    rc = main(["sweep", "--data", la_csv, "--config", cfg, "--out", str(out), "--alpha", "0.1,1", "--quiet"])
    assert rc == 0
    rows = list(csv.DictReader(open(out / "sweep_summary.csv")))
    assert [r["alpha"] for r in rows] == ["1", "0.10000000000000001"]
    assert sum(r["selected"] == "*" for r in rows) == 1
    assert (out / "alpha_1" / "model.txt").exists()
    assert (out / "model.txt").exists()


def test_predict_matches_model(tmp_path, capsys):
    model = write(tmp_path / "m.txt", serialize_model(LEFT_ATRIUM))
    assert main(["predict", "--model", model, "--stretch", "1.1,1.05", "--stretch", "1,1"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["lambda1", "lambda2", "p1_kpa", "p2_kpa"]
    assert float(rows[1][2]) == pytest.approx(8.05609474999877, rel=1e-12)
    assert float(rows[2][2]) == 0.0
    assert main(["predict", "--model", model, "--stretch", "1,-1"]) == 2
    assert main(["predict", "--model", write(tmp_path / "bad.txt", "kind = 1\n"), "--stretch", "1,1"]) == 2


def test_convert_cli(tmp_path, capsys):
    src = write(tmp_path / "s.csv", "protocol,e11,e22,s11_kpa,s22_kpa\nx,0.105,0,10,0\n")
    out = tmp_path / "l.csv"
    assert main(["convert", "--data", src, "--out", str(out)]) == 0
    data = parse_dataset(out.read_text())
    assert data.lambda1[0] == pytest.approx(1.1, rel=1e-15)
    assert main(["convert", "--data", str(out), "--inverse"]) == 0
    assert capsys.readouterr().out.startswith("protocol,e11,e22,s11_kpa,s22_kpa")
    bad = write(tmp_path / "b.csv", "protocol,e11,e22,s11_kpa,s22_kpa\nx,-0.6,0,1,1\n")
    assert main(["convert", "--data", bad]) == 2


def test_empty_dataset_exit_code(tmp_path):
    empty = write(tmp_path / "e.csv", "protocol,lambda1,lambda2,p1_kpa,p2_kpa\n")
    assert main(["fit", "--data", empty, "--out", str(tmp_path / "o"), "--quiet"]) == 2


def test_single_alpha_sweep_matches_fit(tmp_path, la_csv):
    cfg = write(tmp_path / "run.toml", QUICK)
    fit_out, sweep_out = tmp_path / "f", tmp_path / "s"
    assert main(["fit", "--data", la_csv, "--config", cfg, "--out", str(fit_out), "--quiet"]) == 0
    assert main(["sweep", "--data", la_csv, "--config", cfg, "--out", str(sweep_out),
                 "--alpha", "1", "--quiet"]) == 0
    for rel in ("model.txt", "report.txt", "curves/1_0.5_p2.csv"):
        assert (fit_out / rel).read_bytes() == (sweep_out / "alpha_1" / rel).read_bytes()
    assert (fit_out / "model.txt").read_bytes() == (sweep_out / "model.txt").read_bytes()


def test_sweep_all_diverged(tmp_path):
    data = write(tmp_path / "d.csv", "protocol,lambda1,lambda2,p1_kpa,p2_kpa\nx,1.5,1.5,1e30,1e30\n")
    cfg = write(tmp_path / "c.toml", "[train]\nlearning_rate = 300.0\nmax_epochs = 10\n")
    rc = main(["sweep", "--data", data, "--config", cfg, "--out", str(tmp_path / "o"),
               "--alpha", "0,0.001", "--quiet"])
    assert rc == 3
    assert not (tmp_path / "o").exists()


def test_generate_is_reproducible(tmp_path):
    cfg = write(tmp_path / "g.toml", "[generate]\nn_points = 6\nnoise_std = 0.05\nseed = 11\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["generate", "--config", cfg, "--out", str(a)]) == 0
    assert main(["generate", "--config", cfg, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_generate_isotropic_equibiaxial_rows(tmp_path, capsys):
    cfg = write(tmp_path / "g.toml", "[generate]\nn_points = 6\nprotocols = ['1:1']\n"
                "[generate.model.terms]\n5 = [1.0]\n")
    assert main(["generate", "--config", cfg]) == 0
    data = parse_dataset(capsys.readouterr().out)
    np.testing.assert_allclose(data.lambda1, data.lambda2, rtol=1e-12)


def test_predict_right_atrium_asymmetry(tmp_path, capsys):
    # a2-channel carries the larger modulus, so axis 2 is stiffer under equal stretch
    model = write(tmp_path / "m.txt", serialize_model(RIGHT_ATRIUM))
    args = ["predict", "--model", model]
    for lam in (1.05, 1.1, 1.15, 1.2):
        args += ["--stretch", f"{lam},{lam}"]
    assert main(args) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    for r in rows:
        assert float(r["p2_kpa"]) > float(r["p1_kpa"]) > 0


def test_predict_from_dataset_matches_ground_truth(tmp_path, la_csv):
    model = write(tmp_path / "m.txt", serialize_model(LEFT_ATRIUM))
    out = tmp_path / "pred.csv"
    assert main(["predict", "--model", model, "--data", la_csv, "--out", str(out)]) == 0
    truth = parse_dataset(open(la_csv).read())
    pred = list(csv.DictReader(open(out)))
    np.testing.assert_array_equal([float(r["p1_kpa"]) for r in pred], truth.p1)
    np.testing.assert_array_equal([float(r["p2_kpa"]) for r in pred], truth.p2)
