import numpy as np
import pytest

from credal_cal.datagen import ScenarioSpec, generate
from credal_cal.io import DataError, ParseError, read_predictions, write_predictions
from credal_cal.simplex import CredalDataset


def _write(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.mark.parametrize("family,case", [("binary", "H02"), ("multiclass", "H13")])
def test_round_trip_preserves_values(tmp_path, family, case):
    data, _ = generate(ScenarioSpec(family=family, case=case, n=60, seed=3))
    path = tmp_path / "preds.csv"
    write_predictions(data, path)
    again = read_predictions(path)
    np.testing.assert_array_equal(again.features, data.features)
    # renormalization on read may move a value by one ulp
    np.testing.assert_allclose(again.predictions, data.predictions, rtol=1e-12, atol=1e-300)
    np.testing.assert_array_equal(again.labels, data.labels)


def test_header_layout_and_one_based_labels(tmp_path):
    path = _write(tmp_path / "a.csv", [
        "feat_0,pred_0_0,pred_0_1,pred_1_0,pred_1_1,label",
        "0.5,0.2,0.8,0.6,0.4,2",
        "1.5,1,0,0.5,0.5,1",
    ])
    data = read_predictions(path)
    assert (data.n_instances, data.n_members, data.n_classes) == (2, 2, 2)
    np.testing.assert_array_equal(data.labels, [1, 0])
    np.testing.assert_array_equal(data.predictions[0], [[0.2, 0.8], [0.6, 0.4]])


def test_unlabelled_and_featureless_files(tmp_path):
    path = _write(tmp_path / "u.csv", ["pred_0_0,pred_0_1,label", "0.3,0.7,", "0.9,0.1,"])
    data = read_predictions(path)
    assert data.labels is None
    assert data.features.shape == (2, 1)


def test_small_drift_is_renormalized(tmp_path):
    path = _write(tmp_path / "d.csv", ["pred_0_0,pred_0_1,label", "0.3,0.7000005,1"])
    p = read_predictions(path).predictions[0, 0]
    assert abs(p.sum() - 1.0) <= 1e-12


@pytest.mark.parametrize("lines,line_no", [
    (["pred_0_0,pred_0_1"], 1),
    (["feat_1,pred_0_0,pred_0_1,label", "0,0.5,0.5,1"], 1),
    (["pred_0_1,pred_0_0,label", "0.5,0.5,1"], 1),
    (["pred_0_0,pred_0_1,label", "0.5,0.5,1", "0.5,0.5"], 3),
    (["pred_0_0,pred_0_1,label", "0.5,abc,1"], 2),
    (["pred_0_0,pred_0_1,label", "0.5,0.5,1.5"], 2),
])
def test_parse_errors_carry_line_numbers(tmp_path, lines, line_no):
    path = _write(tmp_path / "bad.csv", lines)
    with pytest.raises(ParseError) as info:
        read_predictions(path)
    assert info.value.line == line_no
    assert f"line {line_no}" in str(info.value)


@pytest.mark.parametrize("rows,row_no", [
    (["0.5,0.5,1", "0.6,0.6,1"], 1),
    (["0.5,0.5,1", "0.5,0.5,1", "-0.2,1.2,2"], 2),
    (["0.5,0.5,3"], 0),
    (["0.5,0.5,1", "0.5,0.5,"], 1),
])
def test_data_errors_carry_row_index(tmp_path, rows, row_no):
    path = _write(tmp_path / "bad.csv", ["pred_0_0,pred_0_1,label", *rows])
    with pytest.raises(DataError) as info:
        read_predictions(path)
    assert info.value.row == row_no


def test_empty_file(tmp_path):
    with pytest.raises(ParseError):
        read_predictions(_write(tmp_path / "e.csv", ["pred_0_0,pred_0_1,label"]))
    (tmp_path / "z.csv").write_text("", encoding="utf-8")
    with pytest.raises(ParseError):
        read_predictions(tmp_path / "z.csv")


def test_write_unlabelled(tmp_path):
    data = CredalDataset(np.zeros((2, 1)), np.full((2, 1, 3), 1 / 3))
    write_predictions(data, tmp_path / "u.csv")
    assert read_predictions(tmp_path / "u.csv").labels is None
