import csv
import xml.etree.ElementTree as ET

from streamsim.metrics import METRICS, DistanceReport
from streamsim.pipeline import TechniqueRun
from streamsim.report import emit_outputs, fmt_mean_std, plots_from_reports, svg_plot

SVG = "{http://www.w3.org/2000/svg}"


def fake_runs():
    runs = []
    for t, base in (("single_batch", 0.3), ("last_batch", 0.2), ("online", 0.1)):
        run = TechniqueRun(t)
        for i in (1, 2, 3):
            if t == "last_batch" and i == 2:
                run.skipped[i] = "no complete traces"
                continue
            run.reports[i] = [DistanceReport(**{m: base + 0.01 * i + 0.02 * k for m in METRICS}, window=i, technique=t, replication=k) for k in range(3)]
        runs.append(run)
    return runs


def test_mean_std_format():
    assert fmt_mean_std([0.12, 0.17, 0.22]) == "0.17 (0.05)"
    assert fmt_mean_std([2.0]) == "2.00 (0.00)"
    assert fmt_mean_std([]) == ""


def test_outputs(tmp_path):
    paths = emit_outputs(fake_runs(), tmp_path)
    assert len(paths["plots"]) == 8
    for p in paths["plots"]:
        root = ET.parse(p).getroot()
        legend = [t.text for t in root.iter(SVG + "text") if t.text in ("single_batch", "last_batch", "online")]
        assert legend == ["single_batch", "last_batch", "online"]
    rows = list(csv.reader(open(paths["summary"])))
    assert rows[0] == ["technique"] + list(METRICS)
    assert [r[0] for r in rows[1:]] == ["single_batch", "last_batch", "online"]
    windows = list(csv.DictReader(open(paths["windows"])))
    assert any(r["skipped"] for r in windows if r["technique"] == "last_batch" and r["window"] == "2")


def test_gap_instead_of_zero():
    svg = svg_plot("x", {"a": {1: 1.0, 2: 2.0, 4: 1.0, 5: 1.5}, "b": {i: 0.5 for i in range(1, 6)}})
    root = ET.fromstring(svg)
    lines = list(root.iter(SVG + "polyline"))
    assert [len(l.get("points").split()) for l in lines] == [2, 2, 5]


def test_replot_from_reports(tmp_path):
    paths = emit_outputs(fake_runs(), tmp_path / "run")
    out = plots_from_reports(paths["reports"], tmp_path / "again")
    assert [p.read_text() for p in out] == [p.read_text() for p in paths["plots"]]
