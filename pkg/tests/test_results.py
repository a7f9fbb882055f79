"""
CSV/JSON result store.
"""
import json

import numpy as np
import pandas as pd
import pytest

from models.results import BaseResultStore, CsvResultStore


def test_base_store_is_abstract():
    with pytest.raises(TypeError):
        BaseResultStore()


def test_creates_output_directory(tmp_path):
    out_dir = tmp_path / "nested" / "runs"
    CsvResultStore(str(out_dir))
    assert out_dir.is_dir()


def test_trajectory_keeps_full_precision(tmp_path):
    store = CsvResultStore(str(tmp_path))
    value = 0.1 + 0.2
    path = store.write_trajectory("sp-midpoint", pd.DataFrame({"t": [value], "stage": ["I"]}))
    assert path.endswith("sp-midpoint_trajectory.csv")
    back = pd.read_csv(path, float_precision="round_trip")
    assert back["t"][0] == value
    assert back["stage"][0] == "I"


def test_summary_is_sorted_plain_json(tmp_path):
    store = CsvResultStore(str(tmp_path))
    path = store.write_summary("run", {
        "zeta": np.float64(1.5),
        "alpha": np.arange(3),
        "nested": {"count": np.int64(7), "missing": float("nan"), "limit": float("inf")},
        "pair": (1, 2),
    })
    with open(path) as f:
        text = f.read()
    doc = json.loads(text)
    assert doc == {
        "alpha": [0, 1, 2],
        "nested": {"count": 7, "limit": "inf", "missing": "nan"},
        "pair": [1, 2],
        "zeta": 1.5,
    }
    assert text.index('"alpha"') < text.index('"zeta"')


def test_table_is_written_without_index(tmp_path):
    store = CsvResultStore(str(tmp_path))
    path = store.write_table("cct_probes", pd.DataFrame({"t_break": [0.75], "verdict": ["stable"]}))
    assert path.endswith("cct_probes.csv")
    with open(path) as f:
        assert f.readline().strip() == "t_break,verdict"


def test_family_members_are_headerless_matrices(tmp_path):
    store = CsvResultStore(str(tmp_path))
    members = {"S0": np.array([[1.0, 2.0], [3.0, 4.0]]), "C1": np.eye(2) / 3.0}
    paths = store.write_family("reduction_I_N", members)
    assert set(paths) == {"S0", "C1"}
    for member, matrix in members.items():
        back = pd.read_csv(paths[member], header=None, float_precision="round_trip").to_numpy()
        np.testing.assert_array_equal(back, matrix)
    assert paths["C1"].endswith("reduction_I_N_C1.csv")


def test_models_package_exports_stores():
    import models

    assert models.CsvResultStore is CsvResultStore
    assert issubclass(models.CsvResultStore, models.BaseResultStore)
