"""Shared generators for randomized tests."""

from __future__ import annotations

import itertools
import math

import numpy as np

from zxqec.zx_core import BOUNDARY, HADAMARD, SIMPLE, X, Z, Graph, Phase, to_tensor, undouble

CLIFFORD_1Q = ["H", "S", "S_DAG", "X", "Y", "Z", "SQRT_X", "SQRT_X_DAG"]
NOISE_1Q = ["X_ERROR", "Y_ERROR", "Z_ERROR", "DEPOLARIZE1", "PAULI_CHANNEL_1"]


def random_circuit(
    rng: np.random.Generator,
    n_qubits: int = 3,
    n_instructions: int = 20,
    max_measurements: int = 5,
    max_noise: int = 3,
    mode: str = "detectors",
    magic: bool = True,
) -> str:
    """Random circuit text mixing Clifford gates, rotations, noise and measurements."""
    lines = []
    n_meas = 0
    n_noise = 0
    for _ in range(n_instructions):
        r = rng.random()
        q = int(rng.integers(n_qubits))
        other = int((q + 1 + rng.integers(n_qubits - 1)) % n_qubits) if n_qubits > 1 else q
        if r < 0.30:
            lines.append(f"{rng.choice(CLIFFORD_1Q)} {q}")
        elif r < 0.45 and n_qubits > 1:
            lines.append(f"{rng.choice(['CX', 'CZ', 'SWAP'])} {q} {other}")
        elif r < 0.58 and magic:
            kind = rng.choice(["T", "T_DAG", "R_Z", "R_X", "R_Y", "U3"])
            if kind in ("T", "T_DAG"):
                lines.append(f"{kind} {q}")
            elif kind == "U3":
                a = np.round(rng.uniform(-1, 1, 3), 3)
                lines.append(f"U3({a[0]}, {a[1]}, {a[2]}) {q}")
            else:
                lines.append(f"{kind}({round(float(rng.uniform(-1, 1)), 3)}) {q}")
        elif r < 0.72 and n_noise < max_noise:
            n_noise += 1
            p = round(float(rng.uniform(0, 0.3)), 3)
            kind = rng.choice(NOISE_1Q + ["DEPOLARIZE2", "PAULI_CHANNEL_2", "E"])
            if kind == "PAULI_CHANNEL_1":
                ps = np.round(rng.uniform(0, 0.1, 3), 3)
                lines.append(f"PAULI_CHANNEL_1({ps[0]}, {ps[1]}, {ps[2]}) {q}")
            elif kind == "PAULI_CHANNEL_2" and n_qubits > 1:
                ps = np.round(rng.uniform(0, 0.02, 15), 4)
                lines.append(f"PAULI_CHANNEL_2({', '.join(map(str, ps))}) {q} {other}")
            elif kind == "DEPOLARIZE2" and n_qubits > 1:
                lines.append(f"DEPOLARIZE2({p}) {q} {other}")
            elif kind == "E" and n_qubits > 1:
                a, b = rng.choice(list("XYZ"), 2)
                lines.append(f"E({p}) {a}{q} {b}{other}")
            elif kind in NOISE_1Q and kind != "PAULI_CHANNEL_1":
                lines.append(f"{kind}({p}) {q}")
            else:
                lines.append(f"X_ERROR({p}) {q}")
        elif r < 0.90 and n_meas < max_measurements:
            n_meas += 1
            kind = rng.choice(["M", "MX", "MR", "MPP", "R", "RX"])
            if kind in ("R", "RX"):
                n_meas -= 1
                lines.append(f"{kind} {q}")
            elif kind == "MPP" and n_qubits > 1:
                a, b = rng.choice(list("XYZ"), 2)
                lines.append(f"MPP {a}{q}*{b}{other}")
            else:
                flip = rng.random() < 0.2 and n_noise < max_noise
                if flip:
                    n_noise += 1
                    lines.append(f"{kind if kind != 'MPP' else 'M'}({round(float(rng.uniform(0, 0.2)), 3)}) {q}")
                else:
                    lines.append(f"{kind if kind != 'MPP' else 'M'} {q}")
            if n_meas >= 1 and rng.random() < 0.15:
                k = int(rng.integers(1, n_meas + 1))
                lines.append(f"{rng.choice(['CX', 'CZ'])} rec[-{k}] {q}")
        else:
            lines.append(f"H {q}")
    if n_meas == 0:
        lines.append("M 0")
        n_meas = 1
    if mode == "detectors":
        for _ in range(int(rng.integers(1, 4))):
            k = int(rng.integers(1, min(3, n_meas) + 1))
            recs = sorted(set(int(x) for x in rng.integers(1, n_meas + 1, size=k)))
            lines.append("DETECTOR " + " ".join(f"rec[-{x}]" for x in recs))
        if rng.random() < 0.7:
            lines.append(f"OBSERVABLE_INCLUDE(0) rec[-{int(rng.integers(1, n_meas + 1))}]")
    return "\n".join(lines) + "\n"


def random_phase(rng: np.random.Generator, n_params: int, generic: bool = True) -> Phase:
    parity = 0
    if n_params and rng.random() < 0.4:
        parity = int(rng.integers(1, 1 << n_params))
    r = rng.random()
    if generic and r < 0.2:
        return Phase(0, float(rng.uniform(-math.pi, math.pi)), parity)
    return Phase(int(rng.integers(8)) if r < 0.6 else 2 * int(rng.integers(4)), None, parity)


def random_diagram(
    rng: np.random.Generator,
    n_spiders: int = 6,
    n_boundary: int = 2,
    n_params: int = 3,
    edge_prob: float = 0.35,
    generic: bool = True,
) -> Graph:
    """Random single-layer diagram with parameterized phases and some boundaries."""
    g = Graph()
    g.num_params = n_params
    spiders = [
        g.add_vertex(Z if rng.random() < 0.6 else X, random_phase(rng, n_params, generic))
        for _ in range(n_spiders)
    ]
    for a, b in itertools.combinations(spiders, 2):
        if rng.random() < edge_prob:
            g.add_edge(a, b, SIMPLE if rng.random() < 0.5 else HADAMARD)
    for _ in range(n_boundary):
        b = g.add_vertex(BOUNDARY)
        s = spiders[int(rng.integers(len(spiders)))]
        g.add_edge(b, s, SIMPLE if rng.random() < 0.5 else HADAMARD)
        g.outputs.append(b)
    g.scalar.mul(complex(rng.uniform(0.5, 1.5), rng.uniform(-0.5, 0.5)))
    return g


def averaged_output_tensor(lowered) -> np.ndarray:
    """Sum of projected diagram tensors weighted by the channel tables."""
    g = undouble(lowered.diagram)
    res = 0
    tabs = lowered.channels
    for combo in itertools.product(*[range(len(t.table)) for t in tabs]):
        w = 1.0
        m = 0
        for t, k in zip(tabs, combo):
            w *= t.table[k]
            for i, pi in enumerate(t.param_indices):
                if (k >> i) & 1:
                    m |= 1 << pi
        if w == 0:
            continue
        res = res + w * to_tensor(g, m, max_legs=30)
    return np.asarray(res)


def dist_to_array(dist: dict, n_out: int) -> np.ndarray:
    arr = np.zeros((2,) * n_out)
    for k, v in dist.items():
        arr[tuple(int(ch) for ch in k)] += v
    return arr


def repetition_memory(d: int, rounds: int, p: float) -> str:
    """Bit-flip repetition-code memory: data 0..d-1, ancillas d..2d-2."""
    data = list(range(d))
    anc = list(range(d, 2 * d - 1))
    lines = ["R " + " ".join(map(str, data + anc))]
    n_anc = len(anc)
    for r in range(rounds):
        lines.append(f"X_ERROR({p}) " + " ".join(map(str, data)))
        lines.append("CX " + " ".join(f"{i} {anc[i]}" for i in range(n_anc)))
        lines.append("CX " + " ".join(f"{i + 1} {anc[i]}" for i in range(n_anc)))
        lines.append("MR " + " ".join(map(str, anc)))
        for i in range(n_anc):
            k = n_anc - i
            if r == 0:
                lines.append(f"DETECTOR({i}, {r}) rec[-{k}]")
            else:
                lines.append(f"DETECTOR({i}, {r}) rec[-{k}] rec[-{k + n_anc}]")
    lines.append(f"X_ERROR({p}) " + " ".join(map(str, data)))
    lines.append("M " + " ".join(map(str, data)))
    for i in range(n_anc):
        a, b, prev = d - i, d - i - 1, d + n_anc - i
        lines.append(f"DETECTOR({i}, {rounds}) rec[-{a}] rec[-{b}] rec[-{prev}]")
    lines.append(f"OBSERVABLE_INCLUDE(0) rec[-{d}]")
    return "\n".join(lines) + "\n"
