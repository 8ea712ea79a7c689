import xml.etree.ElementTree as ET

import numpy as np
import pytest

from shapcloud.errors import DataError
from shapcloud.pooling import PooledImportance
from shapcloud.report import (
    BarDatum,
    ViolinSlice,
    ViolinSummary,
    bars_from_pooled,
    build_violin,
    export_shap_summary,
    render_bar_svg,
    render_violin_svg,
    write_bar_csv,
    write_violin_csv,
)


def _parse_svg(path):
    return ET.parse(path).getroot()


def test_violin_two_even_slices():
    # Values 0,1,2,3 with 2 slices: width 1.5 splits them evenly.
    v = build_violin([0.0, 1.0, 2.0, 3.0], [0.5, 0.6, 0.7, 0.8], n_slices=2)
    assert len(v.slices) == 2
    a, b = v.slices
    assert (a.lo, a.hi) == (0.0, 1.5)
    assert (b.lo, b.hi) == (1.5, 3.0)
    assert a.proportion == b.proportion == 0.5
    assert a.model_count == b.model_count == 2
    assert a.mean_loss == pytest.approx(0.55, abs=1e-15)
    assert b.mean_loss == pytest.approx(0.75, abs=1e-15)


def test_violin_center_empty_slice_merges_rightward():
    # Values 0 and 3 with 3 slices: the middle slice is empty and sits exactly
    # on the midpoint, so it merges rightward (index 1 < 3/2).
    v = build_violin([0.0, 3.0], [0.4, 0.6], n_slices=3)
    assert len(v.slices) == 2
    a, b = v.slices
    assert (a.lo, a.hi) == (0.0, 1.0)
    assert (b.lo, b.hi) == (1.0, 3.0)
    assert a.proportion == b.proportion == 0.5
    assert b.mean_loss == pytest.approx(0.6, abs=1e-15)


def test_violin_edge_empty_slices_merge_inward():
    # A cluster at both extremes of a wide range leaves interior gaps; the
    # first/last slices are never merged outward so bounds stay [min, max].
    values = [0.0, 0.05, 9.95, 10.0]
    v = build_violin(values, [0.5] * 4, n_slices=10)
    assert v.slices[0].lo == 0.0
    assert v.slices[-1].hi == 10.0
    assert sum(s.proportion for s in v.slices) == pytest.approx(1.0, abs=1e-15)
    assert all(s.model_count >= 1 for s in v.slices)


def test_violin_single_model_degenerate_range():
    v = build_violin([0.7], [0.51], n_slices=20, variable="x")
    assert len(v.slices) == 1
    s = v.slices[0]
    assert (s.lo, s.hi) == (0.7, 0.7)
    assert s.proportion == 1.0
    assert s.mean_loss == 0.51
    assert v.variable == "x"


def test_violin_proportions_always_sum_to_one(rng):
    for trial in range(5):
        values = rng.normal(size=40)
        losses = rng.uniform(0.4, 0.6, 40)
        v = build_violin(values, losses, n_slices=12)
        assert sum(s.proportion for s in v.slices) == pytest.approx(1.0, abs=1e-12)
        assert sum(s.model_count for s in v.slices) == 40


def test_violin_validation():
    with pytest.raises(DataError, match="zero models"):
        build_violin([], [], n_slices=5)
    with pytest.raises(DataError, match="equal length"):
        build_violin([1.0, 2.0], [0.5], n_slices=5)
    with pytest.raises(DataError, match="at least 1"):
        build_violin([1.0, 2.0], [0.5, 0.6], n_slices=0)
    with pytest.raises(DataError, match="sum to 1"):
        ViolinSummary("v", (ViolinSlice(0, 1, 0.4, 0.5, 2),))


def _pooled(variable, mean, lo, hi):
    return PooledImportance(
        variable=variable,
        pooled_mean=mean,
        pooled_var=0.01,
        tau2=0.0,
        q_stat=1.0,
        pi_low=lo,
        pi_high=hi,
        significant=lo > 0,
        m_models=5,
    )


@pytest.fixture()
def bars():
    return bars_from_pooled(
        [
            _pooled("strong", 0.4, 0.2, 0.6),
            _pooled("weak", 0.05, -0.1, 0.2),
            _pooled("mid", 0.2, 0.1, 0.3),
        ]
    )


def test_bar_svg_well_formed_and_colored(tmp_path, bars):
    path = tmp_path / "bar.svg"
    render_bar_svg(bars, path)
    root = _parse_svg(path)
    assert root.tag.endswith("svg")
    text = path.read_text(encoding="utf-8")
    assert "#999999" in text  # non-significant bar is grey
    assert "#2166ac" in text  # significant bars are blue
    assert "strong" in text and "weak" in text and "mid" in text


def test_bar_svg_deterministic_bytes(tmp_path, bars):
    p1, p2 = tmp_path / "a.svg", tmp_path / "b.svg"
    render_bar_svg(bars, p1)
    render_bar_svg(bars, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_bar_csv_sorted_by_mean(tmp_path, bars):
    path = tmp_path / "bar.csv"
    write_bar_csv(bars, path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "variable,pooled_mean,pi_low,pi_high,significant"
    names = [line.split(",")[0] for line in lines[1:]]
    assert names == ["strong", "mid", "weak"]
    flags = [line.split(",")[4] for line in lines[1:]]
    assert flags == ["true", "true", "false"]


def test_violin_svg_well_formed_and_deterministic(tmp_path, rng):
    summaries = [
        build_violin(rng.normal(size=30), rng.uniform(0.5, 0.55, 30), 10, f"v{k}")
        for k in range(3)
    ]
    p1, p2 = tmp_path / "v1.svg", tmp_path / "v2.svg"
    render_violin_svg(summaries, (0.5, 0.55), p1)
    render_violin_svg(summaries, (0.5, 0.55), p2)
    root = _parse_svg(p1)
    assert root.tag.endswith("svg")
    assert p1.read_bytes() == p2.read_bytes()


def test_violin_csv_schema(tmp_path):
    v = build_violin([0.0, 1.0, 2.0, 3.0], [0.5, 0.6, 0.7, 0.8], 2, "x")
    path = tmp_path / "violin.csv"
    write_violin_csv([v], path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "variable,slice_lo,slice_hi,proportion,mean_loss,model_count"
    assert len(lines) == 3
    assert lines[1].startswith("x,0.0,1.5,0.5,")


def test_shap_export_orders_rows_by_mean_abs(tmp_path, rng):
    matrix = np.column_stack(
        [rng.normal(0, 0.01, 50), rng.normal(0, 0.3, 50), rng.normal(0, 0.1, 50)]
    )
    feats = rng.normal(size=(50, 3))
    csv_path = tmp_path / "shap.csv"
    svg_path = tmp_path / "shap.svg"
    export_shap_summary(matrix, feats, ("tiny", "big", "mid"), csv_path, svg_path)
    lines = csv_path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "instance_id,variable,shap_value,feature_value"
    order = []
    for line in lines[1:]:
        name = line.split(",")[1]
        if not order or order[-1] != name:
            order.append(name)
    assert order == ["big", "mid", "tiny"]
    root = _parse_svg(svg_path)
    assert root.tag.endswith("svg")
    # 50 dots per variable, rendered as circles.
    circles = [el for el in root.iter() if el.tag.endswith("circle")]
    assert len(circles) == 150


def test_shap_export_shape_validation(tmp_path, rng):
    with pytest.raises(DataError, match="does not match"):
        export_shap_summary(
            rng.normal(size=(10, 2)),
            rng.normal(size=(10, 3)),
            ("a", "b"),
            tmp_path / "x.csv",
            tmp_path / "x.svg",
        )


def test_special_characters_escaped_in_svg(tmp_path):
    bars = [BarDatum("a<b&c", 0.3, 0.1, 0.5, True), BarDatum("plain", 0.2, 0.0, 0.4, False)]
    path = tmp_path / "esc.svg"
    render_bar_svg(bars, path)
    root = _parse_svg(path)  # parse fails if the name is not escaped
    labels = [el.text for el in root.iter() if el.tag.endswith("text")]
    assert "a<b&c" in labels
