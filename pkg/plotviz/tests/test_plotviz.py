"""Behavioural tests for the figure renderer.

Everything here runs on synthetic CSV files written in the study
schema, so the suite does not depend on the solver package at all.
"""
import pytest

plotviz = pytest.importorskip("plotviz")

from plotviz.cli import main as cli_main  # noqa: E402
from plotviz.data import EXPECTED_HEADER, read_rows  # noqa: E402
from plotviz.scene import build_scene  # noqa: E402
from plotviz.svg import scene_to_svg  # noqa: E402

HEADER = ",".join(EXPECTED_HEADER)


def make_row(method="alpha", h=0.1, error=1e-3, status="ok",
             problem="demo", cpu=0.5):
    err = "" if error is None else repr(error)
    return (f"{method},{problem},fixed,{h!r},,{err},{cpu!r},"
            f"100,0,0,{status},42")


def write_csv(path, lines):
    path.write_text(HEADER + "\n" + "\n".join(lines) + "\n")


@pytest.fixture
def basic_csv(tmp_path):
    lines = []
    for k in range(5):
        h = 0.1 / 2 ** k
        lines.append(make_row(method="alpha", h=h, error=2.0 * h ** 3))
        lines.append(make_row(method="beta", h=h, error=9.0 * h ** 3))
    path = tmp_path / "study.csv"
    write_csv(path, lines)
    return path


class TestReading:
    def test_round_trip_fields(self, tmp_path):
        path = tmp_path / "one.csv"
        write_csv(path, [make_row(h=0.25, error=3e-4, cpu=1.5)])
        rows = read_rows([str(path)])
        assert len(rows) == 1
        assert rows[0].method == "alpha"
        assert rows[0].h == 0.25
        assert rows[0].error == 3e-4
        assert rows[0].cpu_seconds == 1.5
        assert rows[0].status == "ok"

    def test_missing_error_field_is_none(self, tmp_path):
        path = tmp_path / "one.csv"
        write_csv(path, [make_row(error=None, status="failed")])
        rows = read_rows([str(path)])
        assert rows[0].error is None

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("method,h,error\nalpha,0.1,1e-3\n")
        with pytest.raises(ValueError, match="header"):
            read_rows([str(path)])

    def test_bad_float_names_row_and_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        write_csv(path, [make_row(), make_row(h="oops")])
        with pytest.raises(ValueError, match=r"row 3.*'h'"):
            read_rows([str(path)])

    def test_bad_status_names_row(self, tmp_path):
        path = tmp_path / "bad.csv"
        write_csv(path, [make_row(status="maybe")])
        with pytest.raises(ValueError, match="row 2.*status"):
            read_rows([str(path)])

    def test_short_row_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(HEADER + "\nalpha,demo,fixed\n")
        with pytest.raises(ValueError, match="3 fields"):
            read_rows([str(path)])

    def test_multiple_files_concatenate(self, tmp_path):
        p1 = tmp_path / "a.csv"
        p2 = tmp_path / "b.csv"
        write_csv(p1, [make_row(method="alpha")])
        write_csv(p2, [make_row(method="beta")])
        rows = read_rows([str(p1), str(p2)])
        assert [r.method for r in rows] == ["alpha", "beta"]


class TestSceneContent:
    def test_svg_is_deterministic(self, basic_csv, tmp_path):
        out1 = tmp_path / "f1.svg"
        out2 = tmp_path / "f2.svg"
        plotviz.render_file([str(basic_csv)], "convergence", str(out1))
        plotviz.render_file([str(basic_csv)], "convergence", str(out2))
        b1 = out1.read_bytes()
        assert b1 == out2.read_bytes()
        assert b1.startswith(b"<svg")

    def test_methods_and_slope_label_present(self, basic_csv, tmp_path):
        out = tmp_path / "f.svg"
        plotviz.render_file([str(basic_csv)], "convergence", str(out))
        text = out.read_text()
        assert "alpha" in text
        assert "beta" in text
        assert "slope 3" in text
        assert "step size h" in text

    def test_custom_order_changes_triangle_label(self, basic_csv, tmp_path):
        out = tmp_path / "f.svg"
        plotviz.render_file([str(basic_csv)], "convergence", str(out),
                            order=2)
        text = out.read_text()
        assert "slope 2" in text
        assert "slope 3" not in text

    def test_failed_rows_split_polyline_and_note_legend(self, tmp_path):
        lines = []
        for k in range(6):
            h = 0.1 / 2 ** k
            status = "failed" if k == 2 else "ok"
            error = None if status == "failed" else 2.0 * h ** 3
            lines.append(make_row(h=h, error=error, status=status))
        path = tmp_path / "gap.csv"
        write_csv(path, lines)
        rows = read_rows([str(path)])

        scene = build_scene(rows, "convergence")
        color = plotviz.PALETTE[0]
        series_lines = [
            item for item in scene.items
            if item[0] == "polyline" and item[2] == color and len(item[1]) > 1
        ]
        # two data segments around the gap plus one legend sample
        assert len(series_lines) == 3
        texts = [item[3] for item in scene.items if item[0] == "text"]
        assert "1 failed omitted" in texts

    def test_unbroken_series_has_single_segment(self, basic_csv):
        rows = read_rows([str(basic_csv)])
        scene = build_scene(rows, "convergence")
        color = plotviz.PALETTE[0]
        series_lines = [
            item for item in scene.items
            if item[0] == "polyline" and item[2] == color and len(item[1]) > 1
        ]
        # one data polyline plus the legend sample
        assert len(series_lines) == 2

    def test_method_filter_drops_other_series(self, basic_csv, tmp_path):
        out = tmp_path / "f.svg"
        plotviz.render_file([str(basic_csv)], "convergence", str(out),
                            methods=["alpha"])
        text = out.read_text()
        assert "alpha" in text
        assert "beta" not in text

    def test_method_filter_unknown_name_errors(self, basic_csv, tmp_path):
        with pytest.raises(ValueError, match="gamma"):
            plotviz.render_file([str(basic_csv)], "convergence",
                                str(tmp_path / "f.svg"), methods=["gamma"])

    def test_all_rows_failed_errors(self, tmp_path):
        path = tmp_path / "dead.csv"
        write_csv(path, [make_row(error=None, status="failed")])
        with pytest.raises(ValueError, match="no successful rows"):
            plotviz.render_file([str(path)], "convergence",
                                str(tmp_path / "f.svg"))

    def test_unknown_kind_rejected(self, basic_csv):
        rows = read_rows([str(basic_csv)])
        with pytest.raises(ValueError, match="kind"):
            build_scene(rows, "scatter")

    def test_work_precision_uses_cpu_axis_without_triangle(
            self, basic_csv, tmp_path):
        out = tmp_path / "wp.svg"
        plotviz.render_file([str(basic_csv)], "work-precision", str(out))
        text = out.read_text()
        assert "cpu seconds" in text
        assert "slope" not in text

    def test_svg_escapes_markup_in_names(self, tmp_path):
        path = tmp_path / "esc.csv"
        write_csv(path, [make_row(method="a<b", h=0.1, error=1e-3),
                         make_row(method="a<b", h=0.05, error=1e-4)])
        scene = build_scene(read_rows([str(path)]), "convergence")
        text = scene_to_svg(scene)
        assert "a&lt;b" in text
        assert "a<b" not in text


class TestPngBackend:
    def test_png_magic_and_determinism(self, basic_csv, tmp_path):
        out1 = tmp_path / "f1.png"
        out2 = tmp_path / "f2.png"
        plotviz.render_file([str(basic_csv)], "convergence", str(out1))
        plotviz.render_file([str(basic_csv)], "convergence", str(out2))
        b1 = out1.read_bytes()
        assert b1[:8] == b"\x89PNG\r\n\x1a\n"
        assert b1 == out2.read_bytes()

    def test_png_differs_between_kinds(self, basic_csv, tmp_path):
        conv = tmp_path / "c.png"
        wp = tmp_path / "w.png"
        plotviz.render_file([str(basic_csv)], "convergence", str(conv))
        plotviz.render_file([str(basic_csv)], "work-precision", str(wp))
        assert conv.read_bytes() != wp.read_bytes()


class TestCli:
    def test_success_exit_zero(self, basic_csv, tmp_path, capsys):
        out = tmp_path / "f.svg"
        code = cli_main([str(basic_csv), "--out", str(out)])
        assert code == 0
        assert out.exists()
        assert str(out) in capsys.readouterr().out

    def test_kind_flag_selects_axis(self, basic_csv, tmp_path):
        out = tmp_path / "f.svg"
        code = cli_main([str(basic_csv), "--kind", "work-precision",
                         "--out", str(out)])
        assert code == 0
        assert "cpu seconds" in out.read_text()

    def test_methods_flag_filters(self, basic_csv, tmp_path):
        out = tmp_path / "f.svg"
        code = cli_main([str(basic_csv), "--methods", "beta",
                         "--out", str(out)])
        assert code == 0
        assert "alpha" not in out.read_text()

    def test_order_flag(self, basic_csv, tmp_path):
        out = tmp_path / "f.svg"
        code = cli_main([str(basic_csv), "--order", "4", "--out", str(out)])
        assert code == 0
        assert "slope 4" in out.read_text()

    def test_data_error_exit_one(self, basic_csv, tmp_path, capsys):
        code = cli_main([str(basic_csv), "--methods", "gamma",
                         "--out", str(tmp_path / "f.svg")])
        assert code == 1
        assert "gamma" in capsys.readouterr().err

    def test_missing_file_exit_one(self, tmp_path, capsys):
        code = cli_main([str(tmp_path / "absent.csv"),
                         "--out", str(tmp_path / "f.svg")])
        assert code == 1
        assert "absent.csv" in capsys.readouterr().err

    def test_bad_kind_usage_exit_two(self, basic_csv, tmp_path):
        with pytest.raises(SystemExit) as exc:
            cli_main([str(basic_csv), "--kind", "pie",
                      "--out", str(tmp_path / "f.svg")])
        assert exc.value.code == 2

    def test_no_inputs_usage_exit_two(self):
        with pytest.raises(SystemExit) as exc:
            cli_main([])
        assert exc.value.code == 2
