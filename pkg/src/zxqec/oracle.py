"""Brute-force reference simulators used to validate the compiled pipeline.

Nothing here shares code with the ZX pipeline except the parsed circuit:
gate matrices and channel Kraus decompositions are written out directly.
"""

from __future__ import annotations

import math
from collections import defaultdict

import numpy as np

from .circuit_ir import Circuit, Instruction, PauliTarget, Rec, GATE_KINDS
from .zx_core import Graph, to_tensor_reverse

OutcomeDistribution = dict

MAX_QUBITS = 12
MAX_MEASUREMENTS = 16
MAX_NOISE_BITS = 20
MAX_AMPLITUDES = 1 << 24


class OracleGuardError(ValueError):
    """Raised when a circuit is too large for brute-force simulation."""


_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_S = np.diag([1, 1j])
_PAULI = {"I": _I2, "X": _X, "Y": _Y, "Z": _Z}


def _rx(t: float) -> np.ndarray:
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def _ry(t: float) -> np.ndarray:
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rz(t: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])


def _u3(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [[c, -np.exp(1j * lam) * s], [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]]
    )


def single_qubit_matrix(ins: Instruction) -> np.ndarray:
    name, a = ins.name, [x * math.pi for x in ins.args]
    table = {
        "I": _I2,
        "H": _H,
        "S": _S,
        "S_DAG": _S.conj(),
        "X": _X,
        "Y": _Y,
        "Z": _Z,
        "SQRT_X": 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]]),
        "SQRT_X_DAG": 0.5 * np.array([[1 - 1j, 1 + 1j], [1 + 1j, 1 - 1j]]),
        "T": np.diag([1, np.exp(0.25j * math.pi)]),
        "T_DAG": np.diag([1, np.exp(-0.25j * math.pi)]),
    }
    if name in table:
        return table[name]
    if name == "R_X":
        return _rx(a[0])
    if name == "R_Y":
        return _ry(a[0])
    if name == "R_Z":
        return _rz(a[0])
    if name == "U3":
        return _u3(*a)
    raise ValueError(name)


def kraus_paulis(ins: Instruction) -> list[tuple[float, str]]:
    """(probability, Pauli string) pairs for one application of a channel."""
    name, args = ins.name, ins.args
    if name in ("X_ERROR", "Y_ERROR", "Z_ERROR"):
        return [(1 - args[0], "I"), (args[0], name[0])]
    if name == "DEPOLARIZE1":
        p = args[0]
        return [(1 - p, "I"), (p / 3, "X"), (p / 3, "Y"), (p / 3, "Z")]
    if name == "PAULI_CHANNEL_1":
        px, py, pz = args
        return [(1 - px - py - pz, "I"), (px, "X"), (py, "Y"), (pz, "Z")]
    if name in ("DEPOLARIZE2", "PAULI_CHANNEL_2"):
        probs = [args[0] / 15] * 15 if name == "DEPOLARIZE2" else list(args)
        labels = [a + b for a in "IXYZ" for b in "IXYZ"][1:]
        return [(1 - sum(probs), "II")] + list(zip(probs, labels))
    raise ValueError(name)


# ---------------------------------------------------------------------------
# branching statevector


class _Branches:
    def __init__(self, n: int, n_meas: int) -> None:
        self.n = n
        self.psi = np.zeros((1,) + (2,) * n, dtype=complex)
        self.psi[(0,) * (n + 1)] = 1.0
        self.w = np.ones(1)
        # the last column is scratch space for resets
        self.rec = np.zeros((1, n_meas + 1), dtype=np.uint8)
        self.m = 0

    def _check(self) -> None:
        if self.psi.size > MAX_AMPLITUDES:
            raise OracleGuardError("branch count exceeds the oracle budget")

    def apply1(self, u: np.ndarray, q: int, mask: np.ndarray | None = None) -> None:
        new = np.moveaxis(np.tensordot(self.psi, u, axes=([q + 1], [1])), -1, q + 1)
        if mask is None:
            self.psi = new
        else:
            self.psi = np.where(mask.reshape((-1,) + (1,) * self.n), new, self.psi)

    def cx(self, c: int, t: int) -> None:
        idx = [slice(None)] * (self.n + 1)
        idx[c + 1] = 1
        sub = self.psi[tuple(idx)]
        ax = t if t < c else t - 1
        self.psi[tuple(idx)] = np.flip(sub, axis=ax + 1)

    def cz(self, a: int, b: int) -> None:
        idx = [slice(None)] * (self.n + 1)
        idx[a + 1] = 1
        idx[b + 1] = 1
        self.psi[tuple(idx)] *= -1

    def swap(self, a: int, b: int) -> None:
        self.psi = np.swapaxes(self.psi, a + 1, b + 1).copy()

    def _split(self, psi0: np.ndarray, psi1: np.ndarray, flip_p: float, col: int | None = None) -> None:
        advance = col is None
        col = self.m if advance else col
        ax = tuple(range(1, self.n + 1))
        p0 = np.sum(np.abs(psi0) ** 2, axis=ax)
        p1 = np.sum(np.abs(psi1) ** 2, axis=ax)
        states, weights, recs = [], [], []
        for bit, part, p in ((0, psi0, p0), (1, psi1, p1)):
            keep = p > 0
            if not np.any(keep):
                continue
            norm = np.sqrt(p[keep]).reshape((-1,) + (1,) * self.n)
            for shown, pf in ((bit, 1 - flip_p), (bit ^ 1, flip_p)):
                if pf <= 0:
                    continue
                states.append(part[keep] / norm)
                weights.append(self.w[keep] * p[keep] * pf)
                r = self.rec[keep].copy()
                r[:, col] = shown
                recs.append(r)
        self.psi = np.concatenate(states)
        self.w = np.concatenate(weights)
        self.rec = np.concatenate(recs)
        if advance:
            self.m += 1
        self._check()

    def measure_z(self, q: int, flip_p: float = 0.0, col: int | None = None) -> None:
        idx0 = [slice(None)] * (self.n + 1)
        idx0[q + 1] = 0
        idx1 = list(idx0)
        idx1[q + 1] = 1
        psi0 = self.psi.copy()
        psi0[tuple(idx1)] = 0
        psi1 = self.psi.copy()
        psi1[tuple(idx0)] = 0
        self._split(psi0, psi1, flip_p, col)

    def measure_pauli(self, prod: tuple[PauliTarget, ...], flip_p: float = 0.0) -> None:
        saved = self.psi
        for p in prod:
            self.apply1(_PAULI[p.pauli], p.qubit)
        ppsi = self.psi
        self.psi = saved
        self._split((saved + ppsi) / 2, (saved - ppsi) / 2, flip_p)

    def reset(self, q: int) -> None:
        """Trace out qubit q and re-prepare |0>."""
        scratch = self.rec.shape[1] - 1
        self.measure_z(q, col=scratch)
        self.apply1(_X, q, self.rec[:, scratch] == 1)
        self.rec[:, scratch] = 0

    def noise(self, options: list[tuple[float, list[tuple[int, str]]]]) -> None:
        states, weights, recs = [], [], []
        for p, paulis in options:
            if p <= 0:
                continue
            saved = self.psi
            for q, pa in paulis:
                if pa != "I":
                    self.apply1(_PAULI[pa], q)
            states.append(self.psi)
            self.psi = saved
            weights.append(self.w * p)
            recs.append(self.rec)
        self.psi = np.concatenate(states)
        self.w = np.concatenate(weights)
        self.rec = np.concatenate(recs)
        self._check()


def _noise_options(ins: Instruction) -> list[list[tuple[float, list[tuple[int, str]]]]]:
    """Independent channel applications contained in one noise instruction."""
    if ins.name == "E":
        p = ins.args[0]
        return [[(1 - p, []), (p, [(t.qubit, t.pauli) for t in ins.targets])]]
    if GATE_KINDS[ins.name][0] == "noise1":
        return [[(p, [(q, s)]) for p, s in kraus_paulis(ins)] for q in ins.targets]
    out = []
    for a, b in zip(ins.targets[::2], ins.targets[1::2]):
        out.append([(p, [(a, s[0]), (b, s[1])]) for p, s in kraus_paulis(ins)])
    return out


def _noise_entropy(c: Circuit) -> float:
    bits = 0.0
    for ins in c.instructions:
        kind = GATE_KINDS[ins.name][0]
        if kind in ("noise1", "noise2", "noise_corr"):
            for opts in _noise_options(ins):
                nz = sum(1 for p, _ in opts if p > 0)
                bits += math.log2(max(nz, 1))
        elif kind == "measurement" and ins.args and 0 < ins.args[0] < 1:
            bits += len(ins.targets)
    return bits


def _check_guards(c: Circuit) -> None:
    if c.num_qubits > MAX_QUBITS:
        raise OracleGuardError(f"{c.num_qubits} qubits exceeds {MAX_QUBITS}")
    if c.num_measurements > MAX_MEASUREMENTS:
        raise OracleGuardError(f"{c.num_measurements} measurements exceeds {MAX_MEASUREMENTS}")
    if _noise_entropy(c) > MAX_NOISE_BITS:
        raise OracleGuardError(f"noise entropy exceeds {MAX_NOISE_BITS} bits")


def _outputs_from_records(c: Circuit, rec: np.ndarray, mode: str) -> np.ndarray:
    if mode == "measurements":
        return rec
    cols = []
    for d in c.detectors:
        cols.append(np.bitwise_xor.reduce(rec[:, list(d.records)], axis=1) if d.records else np.zeros(len(rec), np.uint8))
    for o in c.observables:
        cols.append(np.bitwise_xor.reduce(rec[:, list(o.records)], axis=1) if o.records else np.zeros(len(rec), np.uint8))
    if not cols:
        return np.zeros((len(rec), 0), np.uint8)
    return np.stack(cols, axis=1).astype(np.uint8)


def _accumulate(bits: np.ndarray, weights: np.ndarray) -> OutcomeDistribution:
    groups: dict[str, list[float]] = defaultdict(list)
    for row, w in zip(bits, weights):
        groups["".join(map(str, row))].append(float(w))
    return {k: math.fsum(v) for k, v in sorted(groups.items())}


def oracle_distribution(c: Circuit, mode: str = "detectors") -> OutcomeDistribution:
    """Exact output distribution by branching statevector simulation.

    Keys are '0'/'1' strings in output order (detectors then observables, or
    measurements in record order).
    """
    _check_guards(c)
    n = max(c.num_qubits, 1)
    br = _Branches(n, c.num_measurements)
    for ins in c.instructions:
        kind = GATE_KINDS[ins.name][0]
        name, ts = ins.name, ins.targets
        if kind in ("gate1", "rotation"):
            u = single_qubit_matrix(ins)
            for q in ts:
                br.apply1(u, q)
        elif kind == "gate2":
            for a, b in zip(ts[::2], ts[1::2]):
                if isinstance(a, Rec) or isinstance(b, Rec):
                    r, q = (a, b) if isinstance(a, Rec) else (b, a)
                    mask = br.rec[:, br.m - r.lookback] == 1
                    br.apply1(_X if name == "CX" else _Z, q, mask)
                elif name == "CX":
                    br.cx(a, b)
                elif name == "CZ":
                    br.cz(a, b)
                else:
                    br.swap(a, b)
        elif name in ("M", "MX", "MR"):
            flip = ins.args[0] if ins.args else 0.0
            for q in ts:
                if name == "MX":
                    br.apply1(_H, q)
                br.measure_z(q, flip)
                if name == "MX":
                    br.apply1(_H, q)
                if name == "MR":
                    br.reset(q)
        elif name == "MPP":
            flip = ins.args[0] if ins.args else 0.0
            for prod in ts:
                br.measure_pauli(prod, flip)
        elif name in ("R", "RX"):
            for q in ts:
                br.reset(q)
                if name == "RX":
                    br.apply1(_H, q)
        elif kind in ("noise1", "noise2", "noise_corr"):
            for opts in _noise_options(ins):
                br.noise(opts)
    bits = _outputs_from_records(c, br.rec[:, :-1], mode)
    return _accumulate(bits, br.w)


# ---------------------------------------------------------------------------
# density-matrix cross-check


def _embed(u: np.ndarray, qs: list[int], n: int) -> np.ndarray:
    """Full 2^n operator for a k-qubit matrix acting on qubits ``qs`` (qubit 0 most significant)."""
    k = len(qs)
    full = np.zeros((2**n, 2**n), dtype=complex)
    ut = u.reshape((2,) * (2 * k))
    for idx in range(2**n):
        bits = [(idx >> (n - 1 - q)) & 1 for q in range(n)]
        sub_in = tuple(bits[q] for q in qs)
        for out_sub in np.ndindex(*(2,) * k):
            amp = ut[tuple(out_sub) + sub_in]
            if amp == 0:
                continue
            nb = list(bits)
            for q, b in zip(qs, out_sub):
                nb[q] = b
            j = 0
            for b in nb:
                j = 2 * j + b
            full[j, idx] += amp
    return full


def oracle_distribution_density(c: Circuit, mode: str = "detectors") -> OutcomeDistribution:
    """Same distribution via density matrices keyed by measurement record (<= 6 qubits)."""
    n = max(c.num_qubits, 1)
    if n > 6:
        raise OracleGuardError("density-matrix cross-check is limited to 6 qubits")
    dim = 2**n
    rho0 = np.zeros((dim, dim), dtype=complex)
    rho0[0, 0] = 1
    state: dict[tuple, np.ndarray] = {(): rho0}

    def proj(q: int, b: int) -> np.ndarray:
        return _embed(np.diag([1.0 - b, float(b)]).astype(complex), [q], n)

    def evolve(op: np.ndarray) -> None:
        for k in state:
            state[k] = op @ state[k] @ op.conj().T

    def measure(projs: list[np.ndarray], flip: float) -> None:
        new: dict[tuple, np.ndarray] = {}
        for k, rho in state.items():
            for b, P in enumerate(projs):
                r = P @ rho @ P
                for shown, pf in ((b, 1 - flip), (b ^ 1, flip)):
                    if pf <= 0:
                        continue
                    key = k + (shown,)
                    new[key] = new.get(key, 0) + pf * r
        state.clear()
        state.update(new)

    def reset(q: int) -> None:
        x = _embed(_X, [q], n)
        p0, p1 = proj(q, 0), proj(q, 1)
        for k in state:
            rho = state[k]
            state[k] = p0 @ rho @ p0 + x @ p1 @ rho @ p1 @ x

    for ins in c.instructions:
        kind = GATE_KINDS[ins.name][0]
        name, ts = ins.name, ins.targets
        if kind in ("gate1", "rotation"):
            u = single_qubit_matrix(ins)
            for q in ts:
                evolve(_embed(u, [q], n))
        elif kind == "gate2":
            for a, b in zip(ts[::2], ts[1::2]):
                if isinstance(a, Rec) or isinstance(b, Rec):
                    r, q = (a, b) if isinstance(a, Rec) else (b, a)
                    op = _embed(_X if name == "CX" else _Z, [q], n)
                    for k in state:
                        if k[len(k) - r.lookback]:
                            state[k] = op @ state[k] @ op.conj().T
                    continue
                if name == "CX":
                    u = np.eye(4, dtype=complex)[[0, 1, 3, 2]]
                elif name == "CZ":
                    u = np.diag([1, 1, 1, -1]).astype(complex)
                else:
                    u = np.eye(4, dtype=complex)[[0, 2, 1, 3]]
                evolve(_embed(u, [a, b], n))
        elif name in ("M", "MX", "MR"):
            flip = ins.args[0] if ins.args else 0.0
            for q in ts:
                if name == "MX":
                    evolve(_embed(_H, [q], n))
                measure([proj(q, 0), proj(q, 1)], flip)
                if name == "MX":
                    evolve(_embed(_H, [q], n))
                if name == "MR":
                    reset(q)
        elif name == "MPP":
            flip = ins.args[0] if ins.args else 0.0
            for prod in ts:
                P = np.eye(dim, dtype=complex)
                for p in prod:
                    P = _embed(_PAULI[p.pauli], [p.qubit], n) @ P
                I = np.eye(dim, dtype=complex)
                measure([(I + P) / 2, (I - P) / 2], flip)
        elif name in ("R", "RX"):
            for q in ts:
                reset(q)
                if name == "RX":
                    evolve(_embed(_H, [q], n))
        elif kind in ("noise1", "noise2", "noise_corr"):
            for opts in _noise_options(ins):
                ops = []
                for p, paulis in opts:
                    op = np.eye(dim, dtype=complex)
                    for q, pa in paulis:
                        op = _embed(_PAULI[pa], [q], n) @ op
                    ops.append((p, op))
                for k in state:
                    rho = state[k]
                    state[k] = sum(p * (op @ rho @ op.conj().T) for p, op in ops if p > 0)
    keys = list(state)
    rec = np.array(keys, dtype=np.uint8).reshape(len(keys), c.num_measurements)
    weights = np.array([np.trace(state[k]).real for k in keys])
    bits = _outputs_from_records(c, rec, mode)
    return _accumulate(bits, weights)


def oracle_zx_value(d: Graph, assignment=None, max_legs: int = 24):
    """Dense contraction in reverse vertex order (independent of :func:`to_tensor`'s order)."""
    t = to_tensor_reverse(d, assignment, max_legs)
    return complex(t) if t.ndim == 0 else t
