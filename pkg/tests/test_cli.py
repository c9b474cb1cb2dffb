import subprocess
import sys

import numpy as np
import pytest
from click.testing import CliRunner
from hypothesis import given, settings
from hypothesis import strategies as st

from fixtures import MERGE_026, NOISELESS_MEMORY
from zxqec.cli import decode_shots, encode_shots, main, run


@pytest.fixture
def circuit_file(tmp_path):
    def write(text, name="c.stim"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)

    return write


def invoke(*args, input=None):
    result = CliRunner().invoke(main, list(args), input=input, catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result


def test_b8_packs_little_endian():
    assert encode_shots(np.array([[1, 0, 1]]), "b8") == bytes([0b00000101])


def test_b8_width_nine():
    assert encode_shots(np.ones((1, 9), dtype=np.uint8), "b8") == bytes([0xFF, 0x01])


def test_01_lines():
    assert encode_shots(np.array([[1, 0], [0, 0]]), "01") == b"10\n00\n"


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 20), st.sampled_from(["01", "b8"]))
def test_round_trip(seed, width, fmt):
    bits = np.random.default_rng(seed).integers(0, 2, (1000, width)).astype(np.uint8)
    back = decode_shots(encode_shots(bits, fmt), width, fmt)
    if fmt == "b8" and width == 0:
        assert back.shape == (0, 0)
    else:
        assert np.array_equal(back, bits)


def test_detector_sample_noiseless(circuit_file):
    out = invoke("detector-sample", "--in", circuit_file(NOISELESS_MEMORY), "--shots", "4", "--seed", "1", "--format", "01")
    assert out.stdout.splitlines() == ["0000000"] * 4


def test_detector_sample_from_stdin():
    out = invoke("detector-sample", "--shots", "2", input=NOISELESS_MEMORY)
    assert len(out.stdout.splitlines()) == 2


def test_separate_observables(circuit_file, tmp_path):
    obs = tmp_path / "obs.01"
    out = invoke("detector-sample", "--in", circuit_file(NOISELESS_MEMORY), "--shots", "3", "--separate-observables", str(obs))
    assert out.stdout.splitlines() == ["000000"] * 3
    assert obs.read_text().splitlines() == ["0"] * 3


def test_sample_to_file(circuit_file, tmp_path):
    dest = tmp_path / "m.b8"
    invoke("sample", "--in", circuit_file("X 0\nM 0 1 2 3 4 5 6 7 8"), "--shots", "5", "--format", "b8", "--out", str(dest))
    assert dest.read_bytes() == bytes([0x01, 0x00]) * 5


def test_prob_plus_state(circuit_file):
    out = invoke("prob", "--in", circuit_file("H 0\nM 0"), "--outcome", "0")
    assert float(out.stdout) == pytest.approx(0.5)


def test_export_dem(circuit_file):
    out = invoke("export-dem", "--in", circuit_file(MERGE_026))
    assert "error(0.26) D0" in out.stdout.splitlines()


def test_compile_and_stats(circuit_file):
    path = circuit_file("H 0\nT 0\nH 0\nM 0")
    lines = invoke("compile", "--in", path).stdout.splitlines()
    assert "mode=measurements" in lines
    assert any(line.startswith("num_magic=") for line in lines)
    stats = dict(line.split("=") for line in invoke("stats", "--in", path).stdout.splitlines())
    assert stats["num_magic"] == "1"


def test_run_reports_errors_on_one_line(circuit_file, capsys):
    assert run(["sample", "--in", circuit_file("FOO 0")]) == 1
    err = capsys.readouterr().err
    assert err.count("\n") == 1 and "unknown instruction" in err


def test_run_usage_error(capsys):
    assert run(["sample", "--shots", "-3"]) == 2
    assert capsys.readouterr().err.startswith("zxqec: error:")


def test_module_entry_point(circuit_file):
    res = subprocess.run(
        [sys.executable, "-m", "zxqec", "detector-sample", "--in", circuit_file(NOISELESS_MEMORY), "--shots", "2"],
        capture_output=True,
        text=True,
        check=True,
    )
    assert res.stdout.splitlines() == ["0000000"] * 2
