"""Command-line interface: sample, detector-sample, prob, compile, export-dem, stats."""

from __future__ import annotations

import sys

import click
import numpy as np

from .circuit_ir import circuit_stats, parse_circuit
from .compile import compile_sampler, export_dem
from .lowering import DETECTORS, MEASUREMENTS
from .sampler import DEFAULT_BATCH, DEFAULT_SPARSE_THRESHOLD, iter_batches, probability_of

FORMATS = ("01", "b8")


def encode_shots(bits: np.ndarray, fmt: str) -> bytes:
    """Encode a (shots, width) 0/1 array as ``01`` text lines or packed ``b8`` bytes."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim != 2:
        raise ValueError("expected a 2-d bit array")
    if fmt == "01":
        text = np.empty((bits.shape[0], bits.shape[1] + 1), dtype=np.uint8)
        text[:, :-1] = bits + ord("0")
        text[:, -1] = ord("\n")
        return text.tobytes()
    if fmt == "b8":
        if bits.shape[1] == 0:
            return b""
        return np.packbits(bits, axis=1, bitorder="little").tobytes()
    raise ValueError(f"unknown format {fmt!r}")


def decode_shots(data: bytes, width: int, fmt: str) -> np.ndarray:
    """Inverse of :func:`encode_shots`; ``b8`` data of width 0 decodes to no shots."""
    if fmt == "01":
        rows = data.decode("ascii").splitlines()
        if any(len(r) != width for r in rows):
            raise ValueError("line length does not match the shot width")
        if not rows or width == 0:
            return np.zeros((len(rows), width), dtype=np.uint8)
        return (np.frombuffer("".join(rows).encode(), dtype=np.uint8) - ord("0")).reshape(-1, width)
    if fmt == "b8":
        nbytes = (width + 7) // 8
        if nbytes == 0:
            return np.zeros((0, 0), dtype=np.uint8)
        if len(data) % nbytes:
            raise ValueError("data length is not a multiple of the shot width")
        raw = np.frombuffer(data, dtype=np.uint8).reshape(-1, nbytes)
        return np.unpackbits(raw, axis=1, bitorder="little")[:, :width]
    raise ValueError(f"unknown format {fmt!r}")


def _read_circuit(path: str | None):
    if path is None or path == "-":
        text = sys.stdin.read()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return parse_circuit(text)


def _auto_mode(c, mode: str) -> str:
    if mode != "auto":
        return mode
    return DETECTORS if (c.detectors or c.observables) else MEASUREMENTS


class _Out:
    """Binary output to a file path, or to stdout for ``None`` / ``-``."""

    def __init__(self, path: str | None):
        self.path = path

    def __enter__(self):
        if self.path is None or self.path == "-":
            self.fh = sys.stdout.buffer
            self.close = False
        else:
            self.fh = open(self.path, "wb")
            self.close = True
        return self.fh

    def __exit__(self, *exc):
        self.fh.flush()
        if self.close:
            self.fh.close()


_in_opt = click.option("--in", "in_path", type=str, default=None, help="Circuit file (default: stdin).")
_out_opt = click.option("--out", "out_path", type=str, default=None, help="Output file (default: stdout).")


def _sampling_opts(f):
    f = click.option("--shots", type=click.IntRange(min=0), default=1, show_default=True)(f)
    f = click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)(f)
    f = click.option("--batch-size", type=click.IntRange(min=1), default=DEFAULT_BATCH, show_default=True)(f)
    f = click.option("--threads", type=click.IntRange(min=1), default=None, help="Worker threads (default: all cores).")(f)
    f = click.option("--format", "fmt", type=click.Choice(FORMATS), default="01", show_default=True)(f)
    f = click.option(
        "--sparse-threshold",
        type=float,
        default=DEFAULT_SPARSE_THRESHOLD,
        show_default=True,
        help="Use geometric gap sampling below this many expected flips per shot.",
    )(f)
    return f


@click.group()
def main() -> None:
    """Compile noisy circuits once and sample them many times."""


def _write_samples(cs, shots, seed, batch_size, threads, fmt, sparse_threshold, out_path, obs_path=None):
    split = obs_path is not None
    nd = cs.num_detectors
    with _Out(out_path) as fh:
        obs_fh = open(obs_path, "wb") if split else None
        try:
            for bits in iter_batches(cs, shots, seed, batch_size, threads, sparse_threshold):
                if split:
                    fh.write(encode_shots(bits[:, :nd], fmt))
                    obs_fh.write(encode_shots(bits[:, nd:], fmt))
                else:
                    fh.write(encode_shots(bits, fmt))
        finally:
            if obs_fh is not None:
                obs_fh.close()


@main.command()
@_in_opt
@_out_opt
@_sampling_opts
def sample(in_path, out_path, shots, seed, batch_size, threads, fmt, sparse_threshold):
    """Sample measurement records."""
    cs = compile_sampler(_read_circuit(in_path), MEASUREMENTS)
    _write_samples(cs, shots, seed, batch_size, threads, fmt, sparse_threshold, out_path)


@main.command("detector-sample")
@_in_opt
@_out_opt
@_sampling_opts
@click.option(
    "--separate-observables",
    "obs_path",
    type=str,
    default=None,
    help="Write observable bits to this file instead of appending them to each shot.",
)
def detector_sample(in_path, out_path, shots, seed, batch_size, threads, fmt, sparse_threshold, obs_path):
    """Sample detector bits followed by observable bits."""
    cs = compile_sampler(_read_circuit(in_path), DETECTORS)
    _write_samples(cs, shots, seed, batch_size, threads, fmt, sparse_threshold, out_path, obs_path)


@main.command()
@_in_opt
@click.option("--outcome", required=True, help="Outcome bitstring, e.g. 0110.")
@click.option("--mode", type=click.Choice(["auto", DETECTORS, MEASUREMENTS]), default="auto", show_default=True)
def prob(in_path, outcome, mode):
    """Print the exact probability of an outcome (noise summed out)."""
    c = _read_circuit(in_path)
    cs = compile_sampler(c, _auto_mode(c, mode))
    if any(ch not in "01" for ch in outcome):
        raise click.BadParameter("outcome must consist of 0 and 1", param_hint="--outcome")
    click.echo(repr(probability_of(cs, outcome)))


@main.command("compile")
@_in_opt
@click.option("--mode", type=click.Choice(["auto", DETECTORS, MEASUREMENTS]), default="auto", show_default=True)
def compile_cmd(in_path, mode):
    """Print compilation statistics as key=value lines."""
    c = _read_circuit(in_path)
    cs = compile_sampler(c, _auto_mode(c, mode))
    click.echo(f"mode={cs.mode}")
    for line in cs.stats.as_lines():
        click.echo(line)
    for i, comp in enumerate(cs.components):
        groups = ",".join(g.kind for g in comp.plan.groups) or "none"
        click.echo(f"component{i}_outputs={','.join(map(str, comp.outputs))}")
        click.echo(f"component{i}_groups={groups}")
        click.echo(f"component{i}_plan_chi={comp.plan.total_terms}")


@main.command("export-dem")
@_in_opt
@_out_opt
def export_dem_cmd(in_path, out_path):
    """Write the detector error model."""
    cs = compile_sampler(_read_circuit(in_path), DETECTORS)
    with _Out(out_path) as fh:
        fh.write(export_dem(cs).encode())


@main.command()
@_in_opt
def stats(in_path):
    """Print circuit statistics as key=value lines."""
    for line in circuit_stats(_read_circuit(in_path)).as_lines():
        click.echo(line)


def run(argv: list[str] | None = None) -> int:
    """Entry point returning an exit code; errors become one line on stderr."""
    try:
        main.main(args=argv, prog_name="zxqec", standalone_mode=False)
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.ClickException as e:
        sys.stderr.write(f"zxqec: error: usage: {e.format_message()}\n")
        return 2
    except click.exceptions.Abort:
        sys.stderr.write("zxqec: error: aborted\n")
        return 1
    except (OSError, ValueError, RuntimeError) as e:
        msg = str(e).replace("\n", " ")
        sys.stderr.write(f"zxqec: error: {type(e).__name__}: {msg}\n")
        return 1
    return 0


def entry() -> None:
    sys.exit(run())


if __name__ == "__main__":
    entry()
