import random
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xindex.engine import CohortSeries, RollingSeries, TrajectorySeries, XIndexResult
from xindex.report import (
    emit_chart,
    emit_csv,
    parse_series_csv,
    read_series_csv,
    render_chart,
    series_from_csv,
    series_to_csv,
)


def cohort(points, means=None):
    return CohortSeries(venue="CHI", mode="cumulative", points=points, paper_means=means or {})


# -- CSV ---------------------------------------------------------------------

def test_single_point_csv():
    text = series_to_csv(cohort({2010: XIndexResult(4, 1)}))
    assert text == "pub_year,n_total,n_infield,value,paper_mean_aux\n2010,4,1,0.75,\n"
    assert "\r" not in text


def test_absent_value_keeps_counts():
    text = series_to_csv(cohort({2011: XIndexResult(0, 0)}))
    assert text.splitlines()[1] == "2011,0,0,,"


def test_empty_series_is_header_only(tmp_path):
    path = emit_csv(cohort({}), tmp_path / "e.csv")
    assert path.read_text() == "pub_year,n_total,n_infield,value,paper_mean_aux\n"
    assert read_series_csv(path) == (("pub_year",), [])


def test_rows_sorted_and_mean_column():
    s = cohort({2012: XIndexResult(2, 2), 2010: XIndexResult(3, 0)}, {2010: 1.0, 2012: 0.0})
    lines = series_to_csv(s).splitlines()
    assert [l.split(",")[0] for l in lines[1:]] == ["2010", "2012"]
    assert lines[1].endswith(",1.0,1.0")


def test_trajectory_table_has_two_keys():
    a = TrajectorySeries(venue="CSCW", pub_year=2014, points={2015: XIndexResult(5, 3)})
    b = TrajectorySeries(venue="CSCW", pub_year=2013, points={2014: XIndexResult(1, 0), 2013: XIndexResult(0, 0)})
    lines = series_to_csv([a, b]).splitlines()
    assert lines[0].startswith("pub_year,citation_year,")
    assert [l[:9] for l in lines[1:]] == ["2013,2013", "2013,2014", "2014,2015"]
    back = series_from_csv(series_to_csv([a, b]), "CSCW")
    assert [s.pub_year for s in back] == [2013, 2014]
    assert back[0].points == b.points and back[1].points == a.points


def test_mixed_kinds_rejected():
    with pytest.raises(ValueError):
        series_to_csv([cohort({}), RollingSeries(venue="CHI", points={})])


def test_bad_tables_rejected():
    with pytest.raises(ValueError):
        parse_series_csv("year,a,b\n")
    with pytest.raises(ValueError):
        parse_series_csv("pub_year,n_total,n_infield,value,paper_mean_aux\n2010,3,1,,\n")


results = st.integers(0, 40).flatmap(lambda n: st.integers(0, n).map(lambda k: XIndexResult(n, k)))


@settings(max_examples=200)
@given(st.dictionaries(st.integers(1950, 2050), results, max_size=12))
def test_csv_round_trip(points):
    s = RollingSeries(venue="UIST", points=points)
    (back,) = series_from_csv(series_to_csv(s), "UIST")
    assert back.points == points
    for y, r in points.items():
        assert back.points[y].value == r.value


# -- SVG ---------------------------------------------------------------------

def polylines(svg):
    out = []
    for m in re.finditer(r'<polyline class="segment"[^>]* points="([^"]+)"', svg):
        out.append([tuple(map(float, p.split(","))) for p in m.group(1).split()])
    return out


def markers(svg):
    return re.findall(r'<circle class="marker" cx="([\d.]+)" cy="([\d.]+)"', svg)


def test_decreasing_series_rises_in_screen_space():
    values = [0.8, 0.7, 0.6, 0.5, 0.4, 0.3]
    pts = {2010 + i: XIndexResult(10, round(10 * (1 - v))) for i, v in enumerate(values)}
    svg = render_chart(cohort(pts), "CHI")
    (line,) = polylines(svg)
    xs, ys = zip(*line)
    assert list(xs) == sorted(xs) and len(set(xs)) == len(xs)
    assert all(a < b for a, b in zip(ys, ys[1:]))


def test_single_point_has_marker_only():
    svg = render_chart(cohort({2015: XIndexResult(2, 1)}), "one")
    assert polylines(svg) == []
    assert len(markers(svg)) == 1


def test_gap_splits_line():
    pts = {2010: XIndexResult(2, 1), 2011: XIndexResult(4, 1), 2012: XIndexResult(0, 0),
           2013: XIndexResult(3, 3), 2014: XIndexResult(1, 0)}
    svg = render_chart(cohort(pts), "gap")
    assert len(polylines(svg)) == 2
    assert len(markers(svg)) == 4


def test_all_absent_still_renders_axes():
    svg = render_chart(cohort({2010: XIndexResult(0, 0)}), "none")
    assert polylines(svg) == [] and markers(svg) == []


def test_empty_refused():
    with pytest.raises(ValueError):
        render_chart(cohort({}), "empty")
    with pytest.raises(ValueError):
        render_chart([], "empty")


def test_values_stay_inside_plot_area():
    pts = {2000: XIndexResult(5, 0), 2001: XIndexResult(5, 5)}
    svg = render_chart(cohort(pts), "range")
    ys = [float(y) for _, y in markers(svg)]
    assert min(ys) >= 0 and max(ys) <= 420


def test_title_is_escaped_and_output_deterministic(tmp_path):
    s = cohort({2010: XIndexResult(4, 1), 2011: XIndexResult(4, 2)})
    a = emit_chart(s, "A & <B>", tmp_path / "a.svg").read_bytes()
    b = emit_chart(s, "A & <B>", tmp_path / "b.svg").read_bytes()
    assert a == b
    assert b"A &amp; &lt;B&gt;" in a


def test_multi_line_trajectory_chart():
    rng = random.Random(1)
    series = [
        TrajectorySeries(venue="UIST", pub_year=y,
                         points={c: XIndexResult(4, rng.randint(0, 4)) for c in range(y, 2023)})
        for y in range(2010, 2014)
    ]
    svg = render_chart(series, "traj", "citation year")
    assert svg.count('<g class="series"') == 4
    assert len(polylines(svg)) == 4
