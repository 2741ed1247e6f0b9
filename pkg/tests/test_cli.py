"""
Command-line interface.
"""

import json
from pathlib import Path

import pytest

from knowbal import __version__
from knowbal.cli import EXIT_ERROR, EXIT_FAILED, EXIT_OK, correlation_frame, main

SCRIPTS = Path(__file__).resolve().parent.parent / "scripts"


class TestCli:
    """Subcommands invoked through main()."""

    @pytest.fixture(autouse=True)
    def _cache(self, cache_dir):
        self.cache = ["--cache-dir", str(cache_dir)]

    def run(self, capsys, *argv):
        status = main(list(argv) + self.cache)
        captured = capsys.readouterr()
        return status, captured.out, captured.err

    def test_enumerate_pairs(self, capsys):
        status, out, _ = self.run(capsys, "enumerate", "--systems", "2", "--no-header")
        assert status == EXIT_OK
        lines = out.splitlines()
        assert lines[0] == "systems: 2"
        assert "pure: 60 (36 product + 24 correlated)" in lines
        assert "size 8: 30" in lines
        assert lines[-1] == "total: 91"

    def test_header_line(self, capsys):
        status, out, _ = self.run(capsys, "enumerate")
        assert status == EXIT_OK
        assert out.splitlines()[0].startswith(f"# knowbal {__version__} ")

    def test_json_output(self, capsys):
        status, out, _ = self.run(capsys, "enumerate", "--format", "json")
        assert status == EXIT_OK
        payload = json.loads(out)
        assert payload["counts"] == {"2": 6, "4": 1}
        assert payload["total"] == 7

    def test_check_exit_codes(self, capsys):
        status, out, _ = self.run(capsys, "check", "(1,1)|(2,2)|(3,3)|(4,4)", "--no-header")
        assert status == EXIT_OK
        assert out.startswith("valid:")
        status, out, _ = self.run(capsys, "check", "(1,1)|(1,2)|(2,3)|(2,4)", "--no-header")
        assert status == EXIT_FAILED
        assert out.startswith("invalid (V3)")

    def test_check_syntax_error(self, capsys):
        status, out, err = self.run(capsys, "check", "(1,1", "--no-header")
        assert status == EXIT_ERROR
        assert "error:" in err
        assert out == ""

    def test_single_system_group(self, capsys):
        status, out, _ = self.run(capsys, "group", "--systems", "1", "--no-header")
        assert status == EXIT_OK
        assert "allowed order: 24" in out.splitlines()

    def test_group_rejects_three_systems(self, capsys):
        status, _, _ = self.run(capsys, "group", "--systems", "3")
        assert status == EXIT_ERROR

    def test_measurements_and_mups(self, capsys, tmp_path):
        target = tmp_path / "maximal.jsonl"
        status, out, _ = self.run(capsys, "measurements", "--output", str(target), "--no-header")
        assert status == EXIT_OK
        assert out.splitlines()[0] == "maximal measurements: 3"
        assert target.exists()
        status, out, _ = self.run(capsys, "mups", "--no-header")
        assert out.splitlines()[0] == "size 3: 1 set(s) (first match only)"
        assert out.splitlines()[1].endswith("F²=1/4")

    def test_protocol(self, capsys):
        status, out, _ = self.run(capsys, "protocol", "inverter", "--no-header")
        assert status == EXIT_OK
        assert out.splitlines()[-1] == "1/1 protocols passed"

    def test_run_script(self, capsys):
        status, out, _ = self.run(capsys, "run", str(SCRIPTS / "entangling.toy"), "--no-header")
        assert status == EXIT_OK
        assert out.splitlines()[0] == "mode: epistemic, systems: 2"
        assert out.splitlines()[-1] == "PASS"

    def test_run_missing_script(self, capsys, tmp_path):
        status, _, err = self.run(capsys, "run", str(tmp_path / "absent.toy"))
        assert status == EXIT_ERROR
        assert "error:" in err

    def test_table_diff_csv(self, capsys):
        status, out, _ = self.run(capsys, "table", "diff", "--format", "csv", "--no-header")
        assert status == EXIT_OK
        lines = out.splitlines()
        assert lines[0] == (
            "quantum_state,quantum_z,quantum_x,quantum_y,quantum_parity,"
            "toy_relation,toy_z,toy_x,toy_y,toy_parity"
        )
        assert len(lines) == 5

    def test_offline_cache_miss(self, capsys, tmp_path):
        status = main(["enumerate", "--cache-dir", str(tmp_path), "--offline"])
        assert status == EXIT_ERROR
        assert "error:" in capsys.readouterr().err


class TestCorrelationFrames:
    """Correlation tables as data frames."""

    def test_parity_labels(self):
        assert set(correlation_frame("toy")["parity"]) == {"even"}
        assert set(correlation_frame("quantum")["parity"]) == {"odd"}
