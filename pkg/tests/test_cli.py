import json

import pytest

from cli import run


@pytest.fixture(name="fixture_path")
def fixture_path_fixture(fixtures_dir):
    def path(name: str) -> str:
        return str(fixtures_dir / name)

    return path


class TestExitCodes:
    """0 for success, 2 for failed checks, 1 for usage and input errors."""

    def test_validate_matches_golden(self, fixture_path, load_fixture, capsys):
        """
        GIVEN the central fixture
        WHEN running validate
        THEN the exit code is 0 and stdout holds the golden report
        """
        code = run(["validate", "--input", fixture_path("central.json")])

        assert code == 0
        assert json.loads(capsys.readouterr().out) == load_fixture("central_validate.golden.json")

    def test_failed_validation(self, fixture_path, capsys):
        """
        GIVEN data that fails validation
        WHEN running curvature
        THEN the exit code is 2 and the report is still written
        """
        code = run(["curvature", "--input", fixture_path("perturbed.json")])

        report = json.loads(capsys.readouterr().out)
        assert code == 2
        assert report["status"] == "failed"
        assert report["sections"]["curvature"]["status"] == "skipped"

    def test_failed_check(self, fixture_path, capsys):
        """
        GIVEN the helix swept by its principal normal with the precondition switched off
        WHEN running sweep
        THEN the exit code is 2 and the sweep section reports why
        """
        code = run(["sweep", "--input", fixture_path("helix_frenet.json")])

        report = json.loads(capsys.readouterr().out)
        assert code == 2
        assert report["status"] == "failed"
        assert report["sections"]["sweep"]["status"] == "failed"
        assert report["sections"]["sweep"]["reason"] == "tangent spaces turn along the generators"

    def test_missing_file(self, tmp_path, capsys):
        """
        GIVEN an input path that does not exist
        WHEN running validate
        THEN the exit code is 1 with a message on stderr
        """
        code = run(["validate", "--input", str(tmp_path / "absent.json")])

        captured = capsys.readouterr()
        assert code == 1
        assert captured.out == ""
        assert "Error" in captured.err

    def test_malformed_json(self, tmp_path, capsys):
        """
        GIVEN a file that is not JSON
        WHEN running validate
        THEN the exit code is 1 and the position is reported
        """
        path = tmp_path / "broken.json"
        path.write_text("{\n  oops\n}\n")

        code = run(["validate", "--input", str(path)])

        assert code == 1
        assert "line 2" in capsys.readouterr().err

    def test_missing_input_option(self, capsys):
        """
        GIVEN no --input option
        WHEN running focal
        THEN the exit code is 1
        """
        assert run(["focal"]) == 1

    def test_unknown_subcommand(self, capsys):
        """
        GIVEN a subcommand that does not exist
        WHEN running it
        THEN the exit code is 1
        """
        assert run(["explode", "--input", "x.json"]) == 1

    def test_immersion_subcommand_on_tensors(self, fixture_path, capsys):
        """
        GIVEN tensor input
        WHEN running frames
        THEN the exit code is 1
        """
        code = run(["frames", "--input", fixture_path("diag23.json")])

        assert code == 1
        assert "immersion" in capsys.readouterr().err

    def test_bad_tolerance(self, fixture_path, capsys):
        """
        GIVEN a negative tolerance
        WHEN running validate
        THEN the exit code is 1
        """
        assert run(["validate", "--input", fixture_path("central.json"), "--tolerance=-1"]) == 1

    def test_bad_tolerance_in_environment(self, fixture_path, monkeypatch, capsys):
        """
        GIVEN FOCALFRAMES_TOLERANCE that is not a number
        WHEN running validate
        THEN the exit code is 1
        """
        monkeypatch.setenv("FOCALFRAMES_TOLERANCE", "small")

        assert run(["validate", "--input", fixture_path("central.json")]) == 1


class TestOutput:
    """Output destinations and formats."""

    def test_output_file(self, fixture_path, tmp_path, capsys):
        """
        GIVEN --output
        WHEN running focal
        THEN the report goes to the file and stdout stays empty
        """
        target = tmp_path / "focal.json"

        code = run(["focal", "--input", fixture_path("diag23.json"), "--output", str(target)])

        assert code == 0
        assert capsys.readouterr().out == ""
        report = json.loads(target.read_text())
        assert report["sections"]["focal"]["result"]["factorization"]["product"] == "(y0+2y1)(y0+3y1)"

    def test_markdown(self, fixture_path, capsys):
        """
        GIVEN --format md
        WHEN running curvature on the sphere data
        THEN Markdown with float renderings of rationals is printed
        """
        code = run(["curvature", "--input", fixture_path("sphere2.json"), "--format", "md"])

        text = capsys.readouterr().out
        assert code == 0
        assert text.startswith("# focalframes report: curvature")
        assert "1/4 (0.25)" in text

    def test_timings(self, fixture_path, capsys):
        """
        GIVEN --timings
        WHEN running validate
        THEN wall_time is part of the report
        """
        run(["validate", "--input", fixture_path("central.json"), "--timings"])

        assert "wall_time" in json.loads(capsys.readouterr().out)

    def test_report_all_on_immersion(self, fixture_path, capsys):
        """
        GIVEN the sphere immersion and few integration steps
        WHEN running report-all
        THEN every section passes
        """
        code = run(["report-all", "--input", fixture_path("sphere_immersion.json"), "--steps", "40"])

        report = json.loads(capsys.readouterr().out)
        assert code == 0
        assert report["operation"] == "report-all"
        assert "holonomy" in report["sections"]

    @pytest.mark.parametrize("name", ["central.json", "sphere_immersion.json"])
    def test_report_all_is_byte_identical(self, fixture_path, capsys, name):
        """
        GIVEN one input run twice without --timings
        WHEN running report-all
        THEN both outputs are byte-identical
        """
        arguments = ["report-all", "--input", fixture_path(name), "--steps", "40"]

        run(arguments)
        first = capsys.readouterr().out
        run(arguments)
        second = capsys.readouterr().out

        assert first == second
        assert "wall_time" not in first
