from portolog.dialects import load_profiles
from portolog.lint import LintFinding
from portolog.plotting import feature_heatmap, findings_chart
from portolog.terms import SourcePos

PNG = b"\x89PNG\r\n\x1a\n"


def test_heatmap(tmp_path):
    out = feature_heatmap(load_profiles(), tmp_path / "m.png")
    assert out.read_bytes()[:8] == PNG


def test_heatmap_subset(tmp_path):
    out = feature_heatmap(load_profiles(), tmp_path / "m.png", ["swi"])
    assert out.read_bytes()[:8] == PNG


def test_findings_chart(tmp_path):
    fs = [LintFinding(r, s, SourcePos("a.pl", 1, 1), "", "", frozenset({"swi"}))
          for r, s in [("MISSING_PRED", "warning"), ("MISSING_PRED", "error"),
                       ("UNKNOWN_OPTION", "info")]]
    assert findings_chart(fs, tmp_path / "c.png").read_bytes()[:8] == PNG


def test_findings_chart_empty(tmp_path):
    assert findings_chart([], tmp_path / "c.png").read_bytes()[:8] == PNG
