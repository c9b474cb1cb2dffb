"""Batched sampling from a compiled sampler and exact probability queries.

Per batch, every error mechanism toggles bit-packed "columns" (the directly
determined outputs plus the f variables that sampled components depend on).
Components are then sampled output by output: the marginal of the next bit
is the ratio of two phase-term sums evaluated at the already drawn bits.

Random numbers come from Philox streams keyed by (seed, stream, batch), so
results do not depend on how batches are spread over threads.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .compile import CompiledSampler, PhaseTermTensors
from .lowering import DETECTORS, MEASUREMENTS

NOISE_STREAM = 0
AUTOREGRESSIVE_STREAM = 1
RATIO_EPS = 1e-6
DEFAULT_BATCH = 65536
DEFAULT_SPARSE_THRESHOLD = 8.0
MAX_ENUM_BITS = 20


class SamplingError(RuntimeError):
    pass


def make_rng(seed: int, stream: int, batch: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream, batch])))


# ---------------------------------------------------------------------------
# bit helpers


def _pack_bits(bits: np.ndarray, words: int) -> np.ndarray:
    """(B, n) 0/1 array -> (B, words) little-endian uint64 words."""
    B, n = bits.shape
    buf = np.zeros((B, words * 64), dtype=np.uint8)
    buf[:, :n] = bits
    return np.packbits(buf, axis=1, bitorder="little").view(np.uint64).reshape(B, words)


def _unpack_bits(words: np.ndarray, n: int) -> np.ndarray:
    B = words.shape[0]
    return np.unpackbits(np.ascontiguousarray(words).view(np.uint8).reshape(B, -1), axis=1, bitorder="little")[:, :n]


# ---------------------------------------------------------------------------
# phase-term evaluation


def eval_batch(t: PhaseTermTensors, params: np.ndarray, check: bool = True) -> np.ndarray:
    """Evaluate the phase-term sum for each row of packed parameters (B, words)."""
    params = np.asarray(params, dtype=np.uint64)
    if params.ndim == 1:
        params = params[:, None]
    B = params.shape[0]
    T, K = t.alpha.shape
    W = t.u.shape[-1]
    if params.shape[1] != W:
        raise ValueError(f"parameter width {params.shape[1]} does not match tensors ({W} words)")
    if T == 0:
        return np.zeros(B)
    if K == 0:
        out = np.full(B, t.c.sum())
    else:
        out = np.empty(B, dtype=complex)
        ti = np.arange(T)[:, None]
        ki = np.arange(K)[None, :]
        step = max(1, (1 << 21) // (T * K))
        for s in range(0, B, step):
            p = params[s : s + step, None, None, :]
            a = np.bitwise_count(p & t.u[None]).sum(axis=-1, dtype=np.uint8) & 1
            b = np.bitwise_count(p & t.v[None]).sum(axis=-1, dtype=np.uint8) & 1
            vals = t.table[ti, ki, a + 2 * b]
            out[s : s + step] = vals.prod(axis=2) @ t.c
    if check:
        bad = np.abs(out.imag) > 1e-9 * np.abs(out.real) + 1e-12
        if np.any(bad):
            raise SamplingError(f"non-real marginal (max imaginary part {np.abs(out.imag).max():.3g})")
    return out.real.copy()


# ---------------------------------------------------------------------------
# noise


def sample_error_batch(cs: CompiledSampler, rng: np.random.Generator, B: int) -> np.ndarray:
    """Column state (B, words) after drawing every mechanism independently."""
    words = max(1, (cs.columns + 63) // 64)
    state = np.zeros((B, words), dtype=np.uint64)
    for m, flips in zip(cs.mechanisms, cs.mechanism_flips):
        if m.dim == 1:
            fired = np.flatnonzero(rng.random(B) < m.table[1])
            state[fired] ^= flips[1]
        else:
            cdf = np.cumsum(m.table)
            k = np.searchsorted(cdf, rng.random(B) * cdf[-1], side="right")
            np.minimum(k, len(m.table) - 1, out=k)
            state ^= flips[k]
    return state


def geometric_stream(probabilities, rng: np.random.Generator, shots: int) -> list[np.ndarray]:
    """Firing shots of independent Bernoulli mechanisms via geometric gaps.

    Returns, for each mechanism, the sorted shot indices at which it fires.
    """
    events = []
    for p in probabilities:
        if p <= 0:
            events.append(np.zeros(0, dtype=np.int64))
            continue
        if p >= 1:
            events.append(np.arange(shots, dtype=np.int64))
            continue
        chunks = []
        pos = -1
        while True:
            n = max(16, int(1.2 * p * (shots - pos)) + 16)
            gaps = rng.geometric(p, size=n)
            idx = pos + np.cumsum(gaps)
            cut = np.searchsorted(idx, shots)
            chunks.append(idx[:cut])
            if cut < n:
                break
            pos = int(idx[-1])
        events.append(np.concatenate(chunks))
    return events


def _sparse_ok(cs: CompiledSampler, threshold: float) -> bool:
    if cs.components or any(m.dim > 1 for m in cs.mechanisms):
        return False
    flips = sum(m.table[1] * cs.stats.mean_flip_weight for m in cs.mechanisms)
    return flips < threshold


def _sparse_error_batch(cs: CompiledSampler, rng: np.random.Generator, B: int) -> np.ndarray:
    words = max(1, (cs.columns + 63) // 64)
    state = np.zeros((B, words), dtype=np.uint64)
    events = geometric_stream([m.table[1] for m in cs.mechanisms], rng, B)
    for ev, flips in zip(events, cs.mechanism_flips):
        if len(ev):
            state[ev] ^= flips[1]
    return state


# ---------------------------------------------------------------------------
# components


def _component_params(cs: CompiledSampler, comp, cols: np.ndarray, out_bits: np.ndarray | None) -> np.ndarray:
    """(B, nparams) 0/1 parameters of one component: its f variables then its outputs."""
    B = cols.shape[0]
    p = np.zeros((B, comp.num_params), dtype=np.uint8)
    for i, f in enumerate(comp.f_indices):
        p[:, i] = cols[:, cs.comp_f_columns[f]]
    if out_bits is not None:
        nf = len(comp.f_indices)
        for j, o in enumerate(comp.outputs):
            p[:, nf + j] = out_bits[:, o]
    return p


def _sample_component(cs: CompiledSampler, comp, cols: np.ndarray, out: np.ndarray, rng: np.random.Generator) -> None:
    B = cols.shape[0]
    words = comp.chain[0].u.shape[-1]
    pbits = _component_params(cs, comp, cols, None)
    packed = _pack_bits(pbits, words)
    nf = len(comp.f_indices)
    pprev = eval_batch(comp.chain[0], packed)
    for j, o in enumerate(comp.outputs):
        p1 = eval_batch(comp.chain[j + 1], packed)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(pprev != 0, p1 / pprev, 0.0)
        if np.any(r < -RATIO_EPS) or np.any(r > 1 + RATIO_EPS):
            raise SamplingError(f"marginal ratio outside [0, 1] (min {r.min():.3g}, max {r.max():.3g})")
        bit = rng.random(B) < r
        out[:, o] = bit
        col = nf + j
        packed[:, col // 64] |= bit.astype(np.uint64) << np.uint64(col % 64)
        pprev = np.where(bit, p1, pprev - p1)


def _sample_batch(cs: CompiledSampler, seed: int, batch: int, B: int, sparse: bool) -> np.ndarray:
    noise_rng = make_rng(seed, NOISE_STREAM, batch)
    state = _sparse_error_batch(cs, noise_rng, B) if sparse else sample_error_batch(cs, noise_rng, B)
    cols = _unpack_bits(state, cs.columns)
    nd = len(cs.direct)
    idx = np.array([d.output for d in cs.direct], dtype=np.int64)
    const = np.array([d.const for d in cs.direct], dtype=np.uint8)
    if nd == cs.num_outputs and np.array_equal(idx, np.arange(nd)):
        out = np.ascontiguousarray(cols[:, :nd]) ^ const
    else:
        out = np.zeros((B, cs.num_outputs), dtype=np.uint8)
        out[:, idx] = cols[:, :nd] ^ const
    if cs.components:
        ar_rng = make_rng(seed, AUTOREGRESSIVE_STREAM, batch)
        for comp in cs.components:
            _sample_component(cs, comp, cols, out, ar_rng)
    return out


@dataclass
class SampleRecord:
    bits: np.ndarray  # (shots, outputs) uint8, outputs in compiled order
    num_detectors: int
    mode: str

    @property
    def detectors(self) -> np.ndarray:
        return self.bits[:, : self.num_detectors] if self.mode == DETECTORS else self.bits[:, :0]

    @property
    def observables(self) -> np.ndarray:
        return self.bits[:, self.num_detectors :] if self.mode == DETECTORS else self.bits[:, :0]

    @property
    def measurements(self) -> np.ndarray:
        return self.bits if self.mode == MEASUREMENTS else self.bits[:, :0]


def iter_batches(
    cs: CompiledSampler,
    shots: int,
    seed: int = 0,
    batch_size: int = DEFAULT_BATCH,
    threads: int | None = None,
    sparse_threshold: float = DEFAULT_SPARSE_THRESHOLD,
    force_dense: bool = False,
):
    """Yield (B, outputs) bit arrays in shot order.

    Batch ``i`` always covers shots ``[i*batch_size, (i+1)*batch_size)`` and
    draws from its own RNG streams, so the result is independent of
    ``threads``.  At most ``2 * threads`` batches are in flight.
    """
    if shots < 0 or batch_size < 1:
        raise ValueError("shots must be >= 0 and batch size >= 1")
    sparse = not force_dense and _sparse_ok(cs, sparse_threshold)
    sizes = [min(batch_size, shots - s) for s in range(0, shots, batch_size)]
    threads = threads or os.cpu_count() or 1
    if threads == 1 or len(sizes) <= 1:
        for i, b in enumerate(sizes):
            yield _sample_batch(cs, seed, i, b, sparse)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        window = 2 * threads
        for start in range(0, len(sizes), window):
            futs = [
                pool.submit(_sample_batch, cs, seed, i, sizes[i], sparse)
                for i in range(start, min(start + window, len(sizes)))
            ]
            for f in futs:
                yield f.result()


def _sample(
    cs: CompiledSampler,
    shots: int,
    seed: int,
    batch_size: int,
    threads: int | None,
    sparse_threshold: float,
    force_dense: bool = False,
) -> SampleRecord:
    parts = list(iter_batches(cs, shots, seed, batch_size, threads, sparse_threshold, force_dense))
    bits = np.concatenate(parts) if parts else np.zeros((0, cs.num_outputs), dtype=np.uint8)
    return SampleRecord(bits, cs.num_detectors, cs.mode)


def sample_detectors(
    cs: CompiledSampler,
    shots: int,
    seed: int = 0,
    batch_size: int = DEFAULT_BATCH,
    threads: int | None = None,
    sparse_threshold: float = DEFAULT_SPARSE_THRESHOLD,
    force_dense: bool = False,
) -> SampleRecord:
    if cs.mode != DETECTORS:
        raise ValueError("sampler was compiled in measurement mode")
    return _sample(cs, shots, seed, batch_size, threads, sparse_threshold, force_dense)


def sample_measurements(
    cs: CompiledSampler,
    shots: int,
    seed: int = 0,
    batch_size: int = DEFAULT_BATCH,
    threads: int | None = None,
) -> SampleRecord:
    if cs.mode != MEASUREMENTS:
        raise ValueError("sampler was compiled in detector mode")
    return _sample(cs, shots, seed, batch_size, threads, DEFAULT_SPARSE_THRESHOLD)


# ---------------------------------------------------------------------------
# exact probabilities


def _noise_patterns(cs: CompiledSampler) -> tuple[np.ndarray, np.ndarray]:
    """All column states with their probabilities (pruned of zero weight)."""
    words = max(1, (cs.columns + 63) // 64)
    bits = sum(int(np.count_nonzero(m.table)).bit_length() - 1 for m in cs.mechanisms)
    if bits > MAX_ENUM_BITS:
        raise SamplingError(f"noise enumeration needs {bits} bits (limit {MAX_ENUM_BITS})")
    weights = np.ones(1)
    states = np.zeros((1, words), dtype=np.uint64)
    for m, flips in zip(cs.mechanisms, cs.mechanism_flips):
        nz = np.flatnonzero(m.table)
        weights = (weights[:, None] * m.table[nz][None, :]).reshape(-1)
        states = (states[:, None, :] ^ flips[nz][None, :, :]).reshape(-1, words)
    return weights, states


def _state_from_noise(cs: CompiledSampler, e_assignment: int) -> np.ndarray:
    f = cs.basis.f_from_e(e_assignment)
    words = max(1, (cs.columns + 63) // 64)
    cols = [i for i, d in enumerate(cs.direct) if (d.parity & f).bit_count() & 1]
    cols += [c for fi, c in cs.comp_f_columns.items() if (f >> fi) & 1]
    st = np.zeros((1, words), dtype=np.uint64)
    for c in cols:
        st[0, c // 64] |= np.uint64(1) << np.uint64(c % 64)
    return st


def _conditional_probability(cs: CompiledSampler, cols: np.ndarray, outcome: np.ndarray) -> np.ndarray:
    """P(outcome | column state) for each row of ``cols`` (0/1 array)."""
    P = cols.shape[0]
    prob = np.ones(P)
    for i, d in enumerate(cs.direct):
        prob *= (cols[:, i] ^ d.const) == outcome[d.output]
    out_rows = np.broadcast_to(outcome, (P, len(outcome)))
    for comp in cs.components:
        keep = np.flatnonzero(prob)
        if len(keep) == 0:
            break
        words = comp.chain[0].u.shape[-1]
        packed = _pack_bits(_component_params(cs, comp, cols[keep], out_rows[keep]), words)
        pprev = eval_batch(comp.chain[0], packed)
        norm = pprev.copy()
        for j, o in enumerate(comp.outputs):
            p1 = eval_batch(comp.chain[j + 1], packed)
            pprev = p1 if outcome[o] else pprev - p1
        prob[keep] *= pprev / norm
    return prob


def probability_of(cs: CompiledSampler, outcome, noise: int | None = None, marginalize: bool = True) -> float:
    """Exact probability of a full outcome bitstring.

    With ``marginalize`` the noise is summed out exactly by enumerating all
    mechanism patterns; otherwise ``noise`` is an e-parameter assignment.
    """
    return float(probabilities(cs, [outcome], noise, marginalize)[0])


def probabilities(cs: CompiledSampler, outcomes, noise: int | None = None, marginalize: bool = True) -> np.ndarray:
    outs = [np.array([int(ch) for ch in o] if isinstance(o, str) else o, dtype=np.uint8) for o in outcomes]
    for o in outs:
        if len(o) != cs.num_outputs:
            raise ValueError(f"outcome has {len(o)} bits, expected {cs.num_outputs}")
    if marginalize and noise is None:
        weights, states = _noise_patterns(cs)
    elif noise is not None:
        weights, states = np.ones(1), _state_from_noise(cs, noise)
    else:
        raise ValueError("a noise assignment is required when not marginalizing")
    cols = _unpack_bits(states, cs.columns)
    res = np.empty(len(outs))
    for i, o in enumerate(outs):
        res[i] = math.fsum(weights * _conditional_probability(cs, cols, o))
    return res


def output_distribution(cs: CompiledSampler) -> dict[str, float]:
    """Probabilities of every outcome string (small output counts only)."""
    n = cs.num_outputs
    if n > 16:
        raise SamplingError("too many outputs to enumerate")
    keys = ["".join(bits) for bits in itertools.product("01", repeat=n)]
    vals = probabilities(cs, keys)
    return dict(zip(keys, vals))
