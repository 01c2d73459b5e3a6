import csv
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sampled_hnn.cli import ExperimentConfig, main
from sampled_hnn.core import make_dataset, sample_domain
from sampled_hnn.errors import ConfigError, SchemaError
from sampled_hnn.hamiltonians import get_system
from sampled_hnn.io import (
    ExperimentRecord,
    append_records,
    load_model,
    model_from_dict,
    model_to_dict,
    read_records,
    record_to_row,
    row_to_record,
    save_model,
)
from sampled_hnn.linsolve import FitConfig, train
from sampled_hnn.network import forward, predict_gradH

SMALL = ["--train-size", "200", "--test-size", "200"]


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def fitted():
    sys_ = get_system("henon_heiles")
    ds = make_dataset(sys_, sys_.default_domain, 300, 0)
    return train(ds, FitConfig(sampler="a-swim", widths=(25, 10)))[0]


def test_model_roundtrip_bit_exact(fitted, tmp_path):
    path = tmp_path / "m.json"
    save_model(fitted, path)
    back = load_model(path)
    X = sample_domain(get_system("henon_heiles").default_domain, 100, 1)
    np.testing.assert_array_equal(forward(back, X), forward(fitted, X))
    np.testing.assert_array_equal(predict_gradH(back, X), predict_gradH(fitted, X))
    obj = json.loads(path.read_text())
    assert set(obj) == {"schema_version", "activation", "d", "layers", "readout", "meta"}
    assert {"sampler", "seed", "residual"} <= set(obj["meta"])


@pytest.mark.parametrize("drop", ["schema_version", "layers", "readout", "d", "activation"])
def test_schema_error_names_missing_key(fitted, drop):
    obj = model_to_dict(fitted)
    del obj[drop]
    with pytest.raises(SchemaError) as exc:
        model_from_dict(obj)
    assert exc.value.key == drop and drop in str(exc.value)


def test_schema_error_nested(fitted):
    obj = model_to_dict(fitted)
    del obj["readout"]["W"]
    with pytest.raises(SchemaError, match="readout.W"):
        model_from_dict(obj)


floats = st.floats(0, 1e6, allow_nan=False, exclude_min=False)


@given(
    st.sampled_from(["elm", "swim"]), st.integers(1, 5000), st.integers(0, 2**31), floats,
    st.floats(1e-9, 1e4), floats, st.one_of(st.none(), st.floats(0.1, 10)),
    st.one_of(st.none(), st.floats(1e-3, 1)), st.one_of(st.none(), st.booleans()),
)
def test_record_roundtrip(sampler, width, seed, err, t, res, f, h, corrected):
    rec = ExperimentRecord("single_pendulum", sampler, width, seed, err, t, res, "2024-01-01T00:00:00+00:00", f, h, corrected)
    assert row_to_record({k: str(v) for k, v in record_to_row(rec).items()}) == rec


def test_record_invariants():
    with pytest.raises(ValueError):
        ExperimentRecord("s", "elm", 1, 0, -1.0, 1.0, 0.0, "t")
    with pytest.raises(ValueError):
        ExperimentRecord("s", "elm", 1, 0, 1.0, 0.0, 0.0, "t")


def test_records_file_versioned(tmp_path):
    rec = ExperimentRecord("s", "elm", 3, 0, 1.23456789012345678e-11, 0.5, 1e-9, "t")
    path = tmp_path / "r.csv"
    append_records(path, [rec])
    append_records(path, [rec])
    assert read_records(path) == [rec, rec]
    rows = read_csv(path)
    assert rows[0]["schema_version"] == "1" and rows[0]["rel_l2"] == "1.2345678901234568e-11"
    bad = tmp_path / "bad.csv"
    bad.write_text(path.read_text().replace("\n1,", "\n9,", 1))
    with pytest.raises(SchemaError):
        read_records(bad)


def test_train_command(tmp_path):
    args = ["train", "--system", "single_pendulum", "--sampler", "a-swim", "--width", "60", *SMALL, "--seed", "42",
            "--reg", "1e-13", "--model", str(tmp_path / "m.json"), "--records", str(tmp_path / "r.csv")]
    assert main(args) == 0
    assert main(args) == 0
    recs = read_records(tmp_path / "r.csv")
    assert len(recs) == 2 and recs[0].rel_l2 == recs[1].rel_l2
    assert recs[0].seed == 42 and recs[0].width == 60 and recs[0].train_time_s > 0
    assert load_model(tmp_path / "m.json").meta["seed"] == 42


def test_train_multiple_seeds(tmp_path):
    assert main(["train", "--width", "20", *SMALL, "--seed", "1", "2", "--model", str(tmp_path / "m.json"),
                 "--records", str(tmp_path / "r.csv")]) == 0
    assert (tmp_path / "m_seed1.json").exists() and (tmp_path / "m_seed2.json").exists()


def test_invalid_sampler_exit_code(capsys):
    assert main(["train", "--sampler", "sgd"]) == 2
    assert "--sampler" in capsys.readouterr().err


def test_empty_width_is_config_error(capsys, tmp_path):
    assert main(["sweep", "--width", *SMALL, "--out", str(tmp_path / "s.csv")]) == 2
    assert "--width" in capsys.readouterr().err


def test_config_errors(tmp_path, capsys):
    assert main(["stats", "--system", "nope"]) == 2
    assert main(["stats", "--domain", "0", "1", "2"]) == 2
    assert main(["stats", "--domain", "0", "1", "0", "1", "0", "1"]) == 2
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["stats", "--config", str(cfg)]) == 2
    assert "bogus" in capsys.readouterr().err


def test_numeric_failure_exit_code(tmp_path):
    assert main(["train", "--width", "50", "--train-size", "5", "--test-size", "5",
                 "--model", str(tmp_path / "m.json"), "--records", str(tmp_path / "r.csv")]) == 3


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"sampler": "elm", "widths": [30], "train_size": 150, "test_size": 150, "seeds": [0, 1]}))
    assert main(["stats", "--config", str(cfg), "--out", str(tmp_path / "a.csv")]) == 0
    assert main(["stats", "--config", str(cfg), "--sampler", "u-swim", "--out", str(tmp_path / "b.csv")]) == 0
    a, b = read_csv(tmp_path / "a.csv")[0], read_csv(tmp_path / "b.csv")[0]
    assert (a["sampler"], b["sampler"]) == ("elm", "u-swim")
    assert a["n_seeds"] == b["n_seeds"] == "2" and a["width"] == "30"


def test_sweep_cardinality(tmp_path, monkeypatch):
    monkeypatch.setenv("SAMPLED_HNN_THREADS", "2")
    out = tmp_path / "s.csv"
    args = ["sweep", "--width", "10", "20", "--samplers", "elm", "u-swim", "a-swim", "swim", "--seeds",
            *map(str, range(10)), "--train-size", "100", "--test-size", "100", "--workers", "4", "--out", str(out)]
    assert main(args) == 0
    rows = read_csv(out)
    assert len(rows) == 8
    assert {(r["sampler"], r["width"]) for r in rows} == {(s, w) for s in ("elm", "u-swim", "a-swim", "swim") for w in ("10", "20")}
    for r in rows:
        assert r["n_seeds"] == "10"
        assert float(r["min"]) <= float(r["mean"]) <= float(r["max"])
    first = [r["mean"] for r in rows]
    assert main(args) == 0
    assert [r["mean"] for r in read_csv(out)] == first


def test_frequency_sweep(tmp_path):
    out = tmp_path / "f.csv"
    assert main(["sweep", "--system", "single_pendulum_freq", "--f", "1", "2", "--samplers", "elm", "--width", "30",
                 "--seeds", "0", *SMALL, "--out", str(out)]) == 0
    assert [float(r["f"]) for r in read_csv(out)] == [1.0, 2.0]


@pytest.mark.parametrize("correct, n", [(True, 10), (False, 5)])
def test_fd_train_records(tmp_path, correct, n):
    path = tmp_path / "fd.csv"
    args = ["fd-train", "--domain", "-3.14159", "3.14159", "-1", "1", "--width", "30", *SMALL,
            "--h", "0.4", "0.2", "0.1", "0.05", "0.025", "--records", str(path)] + (["--correct"] if correct else [])
    assert main(args) == 0
    recs = read_records(path)
    assert len(recs) == n
    assert sorted({r.h for r in recs}) == [0.025, 0.05, 0.1, 0.2, 0.4]
    assert {r.corrected for r in recs} == ({False, True} if correct else {False})


def test_fd_train_needs_h():
    assert main(["fd-train", *SMALL]) == 2


def test_integrate_command(tmp_path, fitted):
    model = tmp_path / "m.json"
    assert main(["train", "--width", "40", *SMALL, "--model", str(model), "--records", str(tmp_path / "r.csv")]) == 0
    out = tmp_path / "t.csv"
    assert main(["integrate", "--model", str(model), "--x0", str(np.pi / 2), "0", "--h", "5e-4", "--steps", "0",
                 "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 1 and list(rows[0]) == ["t", "q1", "p1", "H"]
    assert main(["integrate", "--model", str(model), "--x0", "1", "0", "--h", "0.01", "--steps", "25", "--out", str(out)]) == 0
    assert len(read_csv(out)) == 26
    save_model(fitted, tmp_path / "hh.json")
    assert main(["integrate", "--model", str(tmp_path / "hh.json"), "--x0", "0.1", "0", "0", "0.1", "--h", "0.01",
                 "--steps", "3", "--out", str(out)]) == 0
    assert list(read_csv(out)[0]) == ["t", "q1", "q2", "p1", "p2", "H"]


def test_integrate_malformed_model(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema_version": 1, "activation": "tanh", "d": 1, "layers": []}))
    assert main(["integrate", "--model", str(bad), "--x0", "0", "0", "--h", "0.1", "--steps", "1"]) == 2
    assert "readout" in capsys.readouterr().err


def test_experiment_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(train_size=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(widths=[])
    with pytest.raises(ConfigError):
        ExperimentConfig(samplers=("elm", "gd"))
    with pytest.raises(ConfigError):
        ExperimentConfig(domain=((1.0, 0.0),))
    assert ExperimentConfig(widths=5).widths == (5,)
