import json
from fractions import Fraction

import numpy as np
import pytest

from oracles import exact_ce, exact_rce
from pccorrupt.corruptions import CorruptionKind
from pccorrupt.errors import (
    BaselineNoDrop,
    EmptyInput,
    IncompleteTable,
    LengthMismatch,
    MissingVariant,
    PerfectBaseline,
    ValueOutOfRange,
    WrongArity,
)
from pccorrupt.metrics import (
    DGCNN_BASELINE,
    REPORT_ORDER,
    CorruptionOA,
    OATable,
    build_report,
    corruption_error,
    fmt3,
    load_prediction_dir,
    mean_ce,
    oa_table_from_predictions,
    overall_accuracy,
    read_predictions,
    relative_ce,
    variant_names,
    write_predictions,
)

POINTNET = OATable(
    clean=0.907,
    corruptions={"scale": 0.881, "jitter": 0.797, "drop_global": 0.876, "drop_local": 0.778,
                 "add_global": 0.121, "add_local": 0.562, "rotate": 0.591},
    name="PointNet",
)


def test_overall_accuracy():
    assert overall_accuracy([1, 2, 3, 4], [1, 2, 0, 4]) == 0.75
    with pytest.raises(LengthMismatch):
        overall_accuracy([1, 2], [1])
    with pytest.raises(EmptyInput):
        overall_accuracy([], [])


class TestCE:
    def test_levels_and_mean_agree(self):
        levels = (0.9, 0.8, 0.7, 0.6, 0.5)
        base = (0.95, 0.9, 0.85, 0.8, 0.75)
        assert corruption_error(levels, base) == pytest.approx(
            corruption_error(0.7, 0.85), rel=1e-12)

    def test_matches_exact(self):
        m, b = (0.9, 0.8, 0.7, 0.6, 0.5), (0.95, 0.9, 0.85, 0.8, 0.75)
        assert corruption_error(m, b) == pytest.approx(float(exact_ce(m, b)), rel=1e-12)
        assert relative_ce(0.92, m, 0.97, b) == pytest.approx(
            float(exact_rce(0.92, m, 0.97, b)), rel=1e-12)

    def test_perfect_baseline(self):
        with pytest.raises(PerfectBaseline):
            corruption_error(0.5, 1.0)

    def test_baseline_without_drop(self):
        with pytest.raises(BaselineNoDrop):
            relative_ce(0.9, 0.8, 0.9, 0.9)
        with pytest.raises(BaselineNoDrop):
            relative_ce(0.9, 0.8, 0.9, 0.95)

    def test_negative_rce_allowed(self):
        # method gains accuracy under corruption
        assert relative_ce(0.8, 0.85, 0.9, 0.8) == pytest.approx(-0.5)

    def test_range_and_arity(self):
        with pytest.raises(ValueOutOfRange):
            corruption_error(1.2, 0.5)
        with pytest.raises(WrongArity):
            corruption_error((0.5, 0.5), 0.5)
        with pytest.raises(WrongArity):
            mean_ce([1.0] * 6)


class TestOATable:
    def test_json_round_trip(self, tmp_path):
        path = tmp_path / "t.json"
        path.write_text(json.dumps(POINTNET.to_json()))
        back = OATable.from_json(path)
        assert back == POINTNET

    def test_levels_form(self):
        t = OATable.from_json({"clean": 0.9, "corruptions": {
            k.slug: {"levels": [0.9, 0.8, 0.7, 0.6, 0.5]} for k in CorruptionKind}})
        assert t.corruptions[CorruptionKind.ROTATE].form == "levels"
        assert t.mean_oa() == pytest.approx(0.7)

    def test_display_names_accepted(self):
        t = OATable(0.9, {"Drop-G": 0.5})
        assert CorruptionKind.DROP_GLOBAL in t.corruptions

    def test_incomplete(self):
        with pytest.raises(IncompleteTable):
            build_report(OATable(0.9, {"scale": 0.8}), DGCNN_BASELINE)

    def test_unknown_keys(self):
        with pytest.raises(ValueError):
            OATable.from_json({"clean": 0.9, "corruptions": {}, "extra": 1})


class TestReport:
    def test_pointnet_row(self):
        r = build_report(POINTNET, DGCNN_BASELINE)
        got = [fmt3(r.ce[k]) for k in REPORT_ORDER]
        assert got == ["1.266", "0.642", "0.500", "1.072", "2.980", "1.593", "1.902"]
        assert fmt3(r.mce) == "1.422"
        assert fmt3(r.rce[CorruptionKind.SCALE]) == "1.300"
        assert fmt3(r.rce[CorruptionKind.JITTER]) == "0.455"
        assert fmt3(r.rmce) == "1.488"
        assert fmt3(DGCNN_BASELINE.mean_oa()) == "0.764"

    def test_baseline_identity(self):
        r = build_report(DGCNN_BASELINE, DGCNN_BASELINE)
        assert all(r.ce[k] == 1.0 and r.rce[k] == 1.0 for k in REPORT_ORDER)
        assert r.mce == 1.0 and r.rmce == 1.0

    def test_summary_and_markdown(self):
        r = build_report(POINTNET, DGCNN_BASELINE)
        assert r.summary() == "mCE 1.422 RmCE 1.488 OA 0.907"
        md = r.to_markdown()
        assert "| PointNet | 0.907 | 1.422 | 1.266 | 0.642 | 0.500 |" in md
        assert md.splitlines()[0].startswith("| Method | OA | mCE | Scale | Jitter | Drop-G")

    def test_json(self):
        data = build_report(POINTNET, DGCNN_BASELINE).to_json()
        assert list(data["CE"]) == [k.slug for k in REPORT_ORDER]
        assert data["radar"]["mode"] == "inv_ce"
        assert data["radar"]["series"][0]["value"] == pytest.approx(1 / data["CE"]["scale"])

    def test_radar_zero_ce(self):
        perfect = OATable(1.0, {k.slug: 1.0 for k in CorruptionKind})
        r = build_report(perfect, DGCNN_BASELINE)
        assert all(v is None for _, v in r.radar())
        assert build_report(perfect, DGCNN_BASELINE, radar_mode="oa").radar()[0][1] == 1.0


@pytest.mark.parametrize("value,text", [(0.4545, "0.454"), (0.4555, "0.456"), (1.2655, "1.266"),
                                        (1.0, "1.000"), (None, "-")])
def test_fmt3_ties_to_even(value, text):
    assert fmt3(value) == text


class TestPredictions:
    def test_csv_round_trip(self, tmp_path):
        path = tmp_path / "p.csv"
        write_predictions(path, [3, 1, 4])
        assert path.read_text() == "index,pred\n0,3\n1,1\n2,4\n"
        assert read_predictions(path).tolist() == [3, 1, 4]

    def test_unordered_rows(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("index,pred\n1,7\n0,5\n")
        assert read_predictions(path).tolist() == [5, 7]
        path.write_text("index,pred\n0,7\n0,5\n")
        with pytest.raises(ValueError):
            read_predictions(path)

    def test_missing_files_listed(self, tmp_path):
        for name in variant_names():
            if name != "add_local_5":
                write_predictions(tmp_path / f"{name}.csv", [0])
        with pytest.raises(MissingVariant, match="add_local_5.csv"):
            load_prediction_dir(tmp_path)

    def test_oracle_predictions_score_zero(self):
        labels = {n: np.array([0, 1, 2, 1]) for n in variant_names()}
        table = oa_table_from_predictions(labels, labels)
        r = build_report(table, DGCNN_BASELINE)
        assert fmt3(r.mce) == "0.000" and fmt3(r.rmce) == "0.000"

    def test_fraction_table(self):
        # levels-form totals equal the exact oracle
        labels = {n: np.array([0] * 8) for n in variant_names()}
        preds = {n: np.array([0] * (8 - i % 4) + [1] * (i % 4))
                 for i, n in enumerate(variant_names())}
        table = oa_table_from_predictions(preds, labels)
        scale = [float(Fraction(8 - i % 4, 8)) for i in range(1, 6)]
        assert table.corruptions[CorruptionKind.SCALE].levels == tuple(scale)
