import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ri3bp.config import RunConfig
from ri3bp.errors import DomainError
from ri3bp.io import artifact_header, csv_text, read_csv, write_csv, write_json

finite = st.floats(allow_nan=False, allow_infinity=False)


@given(st.lists(st.tuples(finite, finite), min_size=1, max_size=20))
def test_csv_round_trip_is_exact(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("csv") / "x.csv"
    a = np.array([r[0] for r in rows])
    b = np.array([r[1] for r in rows])
    write_csv(path, {"a": a, "b": b}, header={"k": 1})
    head, cols = read_csv(path)
    assert head == {"k": 1}
    assert np.array_equal(cols["a"], a) and np.array_equal(cols["b"], b)


def test_csv_layout():
    text = csv_text({"x": [1.0, 0.1], "n": [1, 2]}, header={"tool": "t"})
    assert text.splitlines() == ['# {"tool": "t"}', "x,n", "1,1", "0.10000000000000001,2"]
    with pytest.raises(ValueError):
        csv_text({"x": [1.0], "y": [1.0, 2.0]})


def test_write_json_leaves_no_temporaries(tmp_path):
    write_json(tmp_path / "a" / "m.json", {"b": np.float64(1.5), "a": np.arange(2)})
    assert json.loads((tmp_path / "a" / "m.json").read_text()) == {"a": [0, 1], "b": 1.5}
    assert [p.name for p in (tmp_path / "a").iterdir()] == ["m.json"]


def test_config_round_trip(tmp_path):
    cfg = RunConfig(G=1.7, twobody=True, seed=3)
    (tmp_path / "c.json").write_text(cfg.to_json())
    assert RunConfig.from_file(tmp_path / "c.json") == cfg


def test_digest_ignores_output_dir_only():
    a = RunConfig()
    assert a.digest() == RunConfig(output_dir="elsewhere").digest()
    assert a.digest() != RunConfig(G=2.5).digest()
    assert a.digest() == RunConfig().digest()


def test_replace_ignores_none():
    cfg = RunConfig().replace(G=None, tol_int=1e-10)
    assert cfg.G == 2.0 and cfg.tol_int == 1e-10


@pytest.mark.parametrize("kw", [dict(tol_int=0.0), dict(G0=0.0), dict(window_lo=5, window_hi=4)])
def test_config_validation(kw):
    with pytest.raises(DomainError):
        RunConfig(**kw)


def test_unknown_keys_rejected():
    with pytest.raises(DomainError):
        RunConfig.from_dict({"G": 1.0, "bogus": 1})


def test_artifact_header():
    head = artifact_header(RunConfig(), kind="x")
    assert head["config_hash"] == RunConfig().digest()
    assert head["tolerances"]["integration"] == 1e-12
    assert head["kind"] == "x"
