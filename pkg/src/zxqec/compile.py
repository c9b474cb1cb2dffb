"""Compile a circuit into a reusable sampler.

Pipeline: lower to a doubled diagram, simplify with Clifford rewrites, split
the result into connected components, and then

* read off every output that ended up as a lone Pauli spider (its bit is a
  parity of noise parameters),
* pick an independent GF(2) basis ``f = T e`` for all parities that occur,
* turn the channel tables into error mechanisms over ``f``,
* for every remaining component build the chain of marginal diagrams used
  for autoregressive sampling, decompose magic spiders into Clifford terms
  and flatten each diagram into phase-term tensors.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .circuit_ir import Circuit, parse_circuit
from .lowering import DETECTORS, MEASUREMENTS, ChannelGroup, LoweredProgram, lower
from .simplify import clifford_simplify
from .zx_core import (
    BOUNDARY,
    HADAMARD,
    SIMPLE,
    Z,
    Graph,
    Phase,
    ScalarLedger,
    eval_scalar_term,
    toggle,
)

_SQRT2 = math.sqrt(2.0)
MAX_JOINT_BITS = 8


class CompileError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# GF(2) helpers over int bitmasks


def _canonical_basis(vectors) -> tuple[int, ...]:
    """Reduced row echelon basis of the span, ordered by decreasing pivot."""
    rows: dict[int, int] = {}
    for v in vectors:
        while v:
            p = v.bit_length() - 1
            if p in rows:
                v ^= rows[p]
            else:
                rows[p] = v
                break
    pivots = sorted(rows, reverse=True)
    # back-substitute so every pivot bit occurs in exactly one row
    for p in pivots:
        for q in pivots:
            if q != p and (rows[q] >> p) & 1:
                rows[q] ^= rows[p]
    return tuple(rows[p] for p in pivots)


def _coords(v: int, basis: tuple[int, ...]) -> int | None:
    """Coordinates of ``v`` in a canonical basis, or None if outside the span."""
    c = 0
    for i, b in enumerate(basis):
        p = b.bit_length() - 1
        if (v >> p) & 1:
            v ^= b
            c |= 1 << i
    return c if v == 0 else None


@dataclass
class BasisTransform:
    """Independent parities ``f_i = rows[i] . e`` and a solver for the span."""

    rows: list[int] = field(default_factory=list)
    _echelon: dict[int, tuple[int, int]] = field(default_factory=dict, repr=False)

    @property
    def rank(self) -> int:
        return len(self.rows)

    def _reduce(self, v: int) -> tuple[int, int]:
        combo = 0
        while v:
            p = v.bit_length() - 1
            hit = self._echelon.get(p)
            if hit is None:
                break
            v ^= hit[0]
            combo ^= hit[1]
        return v, combo

    def add(self, parity: int) -> bool:
        rest, combo = self._reduce(parity)
        if rest == 0:
            return False
        i = len(self.rows)
        self.rows.append(parity)
        self._echelon[rest.bit_length() - 1] = (rest, combo | (1 << i))
        return True

    def express(self, parity: int) -> int:
        """f-mask whose XOR equals ``parity`` over e."""
        rest, combo = self._reduce(parity)
        if rest:
            raise CompileError("parity not expressible in the noise basis")
        return combo

    def signature(self, e_index: int) -> int:
        """f-mask of the f variables that e_index feeds into."""
        s = 0
        for i, r in enumerate(self.rows):
            if (r >> e_index) & 1:
                s |= 1 << i
        return s

    def f_from_e(self, e_assignment: int) -> int:
        f = 0
        for i, r in enumerate(self.rows):
            if (r & e_assignment).bit_count() & 1:
                f |= 1 << i
        return f


def basis_reduce(parities) -> BasisTransform:
    t = BasisTransform()
    for p in parities:
        t.add(p)
    return t


# ---------------------------------------------------------------------------
# error mechanisms


@dataclass
class ErrorMechanism:
    """Random XOR of ``basis`` vectors (f-masks) with pattern table ``table``.

    A single-bit mechanism has one basis vector and ``table = [1-p, p]``.
    """

    basis: tuple[int, ...]
    table: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def probability(self) -> float:
        if self.dim != 1:
            raise ValueError("joint mechanism has no single probability")
        return float(self.table[1])

    def pattern_masks(self) -> list[int]:
        out = []
        for k in range(1 << self.dim):
            m = 0
            for i, b in enumerate(self.basis):
                if (k >> i) & 1:
                    m ^= b
            out.append(m)
        return out


def xor_convolve(t1: np.ndarray, t2: np.ndarray) -> np.ndarray:
    """Distribution of ``a xor b`` for independent ``a ~ t1``, ``b ~ t2``."""
    n = len(t1)
    idx = np.arange(n)
    out = np.zeros(n)
    for a in range(n):
        if t1[a]:
            out += t1[a] * t2[idx ^ a]
    return out


def _regroup(basis_from: tuple[int, ...], table: np.ndarray, basis_to: tuple[int, ...]) -> np.ndarray:
    """Re-express a pattern table over the coordinates of a larger canonical basis."""
    coord = [_coords(b, basis_to) for b in basis_from]
    out = np.zeros(1 << len(basis_to))
    for k, p in enumerate(table):
        if p == 0:
            continue
        c = 0
        for i, ci in enumerate(coord):
            if (k >> i) & 1:
                c ^= ci
        out[c] += p
    return out


def _canonical_mechanism(sigs, table: np.ndarray) -> ErrorMechanism | None:
    basis = _canonical_basis(sigs)
    if not basis:
        return None
    return ErrorMechanism(basis, _regroup(tuple(sigs), np.asarray(table, float), basis))


def _factorize(m: ErrorMechanism, tol: float = 1e-15) -> list[ErrorMechanism] | None:
    if m.dim == 1:
        return [m]
    k = np.arange(len(m.table))
    ps = [float(m.table[(k >> i) & 1 == 1].sum()) for i in range(m.dim)]
    prod = np.ones(len(m.table))
    for i, p in enumerate(ps):
        prod *= np.where((k >> i) & 1, p, 1 - p)
    if np.max(np.abs(prod - m.table)) > tol:
        return None
    return [ErrorMechanism((b,), np.array([1 - p, p])) for b, p in zip(m.basis, ps)]


def _merge_identical(mechs: list[ErrorMechanism]) -> list[ErrorMechanism]:
    merged: dict[tuple[int, ...], np.ndarray] = {}
    for m in mechs:
        if m.basis in merged:
            merged[m.basis] = xor_convolve(merged[m.basis], m.table)
        else:
            merged[m.basis] = m.table.copy()
    return [ErrorMechanism(b, t) for b, t in merged.items()]


def reduce_channels(channels: list[ChannelGroup], signature) -> list[ErrorMechanism]:
    """Reduce channel groups to error mechanisms over their flip signatures.

    ``signature(e)`` (callable or sequence) gives the f-mask flipped by noise
    bit ``e``.  Steps: drop bits with empty signature, canonicalize every
    group by the span of its signatures, merge groups with equal span, absorb
    groups whose span is a strict subset of a larger group's span (largest
    first), factorize product tables into single bits and merge again.
    """
    sig = signature if callable(signature) else signature.__getitem__
    mechs: list[ErrorMechanism] = []
    for ch in channels:
        sigs = [sig(e) for e in ch.param_indices]
        m = _canonical_mechanism(sigs, ch.table)
        if m is not None:
            mechs.append(m)
    mechs = _merge_identical(mechs)

    # subset absorption, processed in decreasing span dimension
    mechs.sort(key=lambda m: (-m.dim, m.basis))
    absorbed = [False] * len(mechs)
    for i, big in enumerate(mechs):
        if absorbed[i] or big.dim < 2 or big.dim > MAX_JOINT_BITS:
            continue
        for j in range(i + 1, len(mechs)):
            small = mechs[j]
            if absorbed[j] or small.dim >= big.dim:
                continue
            if all(_coords(b, big.basis) is not None for b in small.basis):
                big.table = xor_convolve(big.table, _regroup(small.basis, small.table, big.basis))
                absorbed[j] = True
    mechs = [m for m, a in zip(mechs, absorbed) if not a]

    out: list[ErrorMechanism] = []
    for m in mechs:
        parts = _factorize(m)
        out.extend(parts if parts is not None else [m])
    out = _merge_identical(out)
    out = [m for m in out if m.table[0] < 1.0]
    out.sort(key=lambda m: (m.dim, m.basis))
    return out


# ---------------------------------------------------------------------------
# magic decomposition


CAT5, PAIR, SINGLE = "cat5", "pair", "single"
_GROUP_TERMS = {CAT5: 3, PAIR: 2, SINGLE: 2}


@dataclass(frozen=True)
class MagicGroup:
    kind: str
    vertices: tuple[int, ...]


@dataclass
class DecompositionPlan:
    groups: list[MagicGroup]
    num_magic: int
    total_terms: int

    @property
    def rate(self) -> float:
        return math.log2(self.total_terms) / self.num_magic if self.num_magic else 0.0


def magic_vertices(g: Graph) -> list[int]:
    return [v for v in sorted(g.ty) if g.ty[v] == Z and not g.phases[v].is_clifford]


def static_term_count(n: int, t_like: bool) -> int:
    """Term count of decomposing ``n`` magic spiders of one class.

    A Cat5 group turns five spiders into three terms that each keep one
    spider of the same kind, so every group removes four spiders.
    """
    chi = 1
    while n >= 5:
        chi *= 3
        n -= 4
    if t_like:
        chi *= 2 ** (n // 2 + n % 2)
    else:
        chi *= 2**n
    return chi


def plan_decomposition(g: Graph) -> DecompositionPlan:
    """Greedy grouping in vertex-id order: Cat5 groups, then T-pairs, then singles."""
    classes: dict[tuple, list[int]] = {}
    for v in magic_vertices(g):
        key, _, _ = g.phases[v].magic_split()
        classes.setdefault(key, []).append(v)
    groups: list[MagicGroup] = []
    chi = 1
    for key, vs in classes.items():
        t_like = key[1] is None
        chi *= static_term_count(len(vs), t_like)
        i = 0
        while len(vs) - i >= 5:
            groups.append(MagicGroup(CAT5, tuple(vs[i : i + 5])))
            i += 5
        while t_like and len(vs) - i >= 2:
            groups.append(MagicGroup(PAIR, tuple(vs[i : i + 2])))
            i += 2
        for v in vs[i:]:
            groups.append(MagicGroup(SINGLE, (v,)))
    return DecompositionPlan(groups, sum(len(c) for c in classes.values()), chi)


def decompose_magic(g: Graph, group: MagicGroup) -> list[tuple[complex, Graph]]:
    """Weighted Clifford-reduced diagrams summing to ``g`` (one group replaced)."""
    theta = None
    base = g.copy()
    for v in group.vertices:
        _, th, rest = g.phases[v].magic_split()
        if theta is not None and abs(th - theta) > 1e-12:
            raise CompileError("magic group mixes rotation angles")
        theta = th
        base.phases[v] = rest
    assert theta is not None
    vs = group.vertices
    out: list[tuple[complex, Graph]] = []
    if group.kind == SINGLE:
        for b in (0, 1):
            h = base.copy()
            s = h.add_vertex(Z, Phase(4 * b))
            h.add_edge(s, vs[0], HADAMARD)
            out.append((cmath.exp(1j * theta * b) / _SQRT2, h))
    elif group.kind == PAIR:
        h = base.copy()
        s = h.add_vertex(Z, Phase.from_radians(2 * theta))
        for v in vs:
            h.add_edge(s, v, SIMPLE)
        out.append((1.0 + 0j, h))
        h = base.copy()
        s = h.add_vertex(Z, Phase(4))
        for v in vs:
            h.add_edge(s, v, HADAMARD)
        out.append((cmath.exp(1j * theta), h))
    elif group.kind == CAT5:
        e2, e4 = cmath.exp(2j * theta), cmath.exp(4j * theta)
        for weight, leaf, shift in (
            (2 * (e4 + e2), -theta, 0),
            (2 * (e4 - e2), math.pi / 2 - theta, 2),
        ):
            h = base.copy()
            hub = h.add_vertex(Z)
            for v in vs:
                h.add_edge(hub, v, HADAMARD)
                if shift:
                    h.phases[v] = h.phases[v] + Phase(shift)
            lf = h.add_vertex(Z, Phase.from_radians(leaf))
            h.add_edge(hub, lf, HADAMARD)
            out.append((weight, h))
        h = base.copy()
        s = h.add_vertex(Z, Phase.from_radians(theta + math.pi))
        for v in vs:
            h.add_edge(s, v, SIMPLE)
        out.append((1 - e4, h))
    else:
        raise CompileError(f"unknown group kind {group.kind}")
    return out


def clifford_terms(g: Graph) -> list[tuple[complex, ScalarLedger]]:
    """Reduce a closed diagram to a weighted list of scalar ledgers."""
    g, _ = clifford_simplify(g)
    if g.scalar.is_zero:
        return []
    plan = plan_decomposition(g)
    if not plan.groups:
        if g.num_vertices():
            raise CompileError("closed Clifford diagram did not reduce to a scalar")
        return [(1.0 + 0j, g.scalar)]
    out = []
    for w, h in decompose_magic(g, plan.groups[0]):
        for w2, led in clifford_terms(h):
            out.append((w * w2, led))
    return out


# ---------------------------------------------------------------------------
# phase-term tensors


def _h_table(alpha: float, beta: float) -> np.ndarray:
    """h(alpha, beta; a, b) for index a + 2b."""
    vals = []
    for b in (0, 1):
        for a in (0, 1):
            x = cmath.exp(1j * (alpha + math.pi * a))
            y = cmath.exp(1j * (beta + math.pi * b))
            vals.append(1 + x + y - x * y)
    return np.array(vals)


@dataclass(frozen=True)
class PhaseTermTensors:
    """Sum over terms t of ``c[t] * prod_k h(alpha[t,k], beta[t,k]; u[t,k].x, v[t,k].x)``.

    ``u`` and ``v`` are parameter masks packed into uint64 words; entries
    with ``k >= k_count[t]`` are padding and evaluate to 1.
    """

    c: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    u: np.ndarray
    v: np.ndarray
    k_count: np.ndarray
    num_params: int
    table: np.ndarray  # (T, K, 4) values of h, padding = 1

    @property
    def num_terms(self) -> int:
        return len(self.c)

    def evaluate(self, assignment: int) -> complex:
        """Reference evaluation at one parameter assignment (Python ints)."""
        words = _pack_int(assignment, self.u.shape[-1])
        total = 0j
        for t in range(self.num_terms):
            val = self.c[t]
            for k in range(self.k_count[t]):
                a = int(sum(int(x).bit_count() for x in (self.u[t, k] & words))) & 1
                b = int(sum(int(x).bit_count() for x in (self.v[t, k] & words))) & 1
                val *= self.table[t, k, a + 2 * b]
            total += val
        return total


def _pack_int(x: int, words: int) -> np.ndarray:
    return np.array([(x >> (64 * w)) & 0xFFFFFFFFFFFFFFFF for w in range(words)], dtype=np.uint64)


def assemble_tensors(terms: list[tuple[complex, ScalarLedger]], num_params: int, scale: float = 1.0) -> PhaseTermTensors:
    words = max(1, (num_params + 63) // 64)
    cs, rows = [], []
    for w, led in terms:
        c = w * led.constant * _SQRT2**led.sqrt2_power * scale
        row = []
        for t in led.terms:
            if t.params() == 0:
                c *= eval_scalar_term(t, 0)
                continue
            cc, al, be, a, b = t.as_phase_pair()
            c *= cc
            row.append((al, be, a, b))
        if c == 0:
            continue
        cs.append(c)
        rows.append(row)
    T = len(cs)
    K = max([len(r) for r in rows], default=0)
    alpha = np.zeros((T, K))
    beta = np.zeros((T, K))
    u = np.zeros((T, K, words), dtype=np.uint64)
    v = np.zeros((T, K, words), dtype=np.uint64)
    table = np.ones((T, K, 4), dtype=complex)
    for t, row in enumerate(rows):
        for k, (al, be, a, b) in enumerate(row):
            alpha[t, k], beta[t, k] = al, be
            u[t, k] = _pack_int(a, words)
            v[t, k] = _pack_int(b, words)
            table[t, k] = _h_table(al, be)
    return PhaseTermTensors(
        np.array(cs, dtype=complex),
        alpha,
        beta,
        u,
        v,
        np.array([len(r) for r in rows], dtype=np.int64),
        num_params,
        table,
    )


# ---------------------------------------------------------------------------
# separation into components


@dataclass(frozen=True)
class DirectOutput:
    output: int
    parity: int  # over e during separation, over f afterwards
    const: int


@dataclass
class Component:
    outputs: list[int]  # output indices, in sampling order
    vertices: list[int]


def _direct_output(g: Graph, comp: list[int]) -> tuple[int, int] | None:
    if len(comp) != 2:
        return None
    b, s = comp if g.ty[comp[0]] == BOUNDARY else comp[::-1]
    if g.ty[b] != BOUNDARY or g.ty[s] != Z:
        return None
    p = g.phases[s]
    if not p.is_pauli or g.adj[b].get(s) != HADAMARD:
        return None
    return p.parity, p.exact // 4


def separate_components(g: Graph, lowered: LoweredProgram) -> tuple[list[DirectOutput], list[Component]]:
    """Split a simplified diagram into directly determined outputs and sampled components."""
    out_index = {b: i for i, b in enumerate(g.outputs)}
    direct: list[DirectOutput] = []
    comps: list[Component] = []
    nd = lowered.num_detectors if lowered.mode == DETECTORS else 0
    for comp in g.connected_components():
        outs = sorted(out_index[v] for v in comp if v in out_index)
        if not outs:
            continue
        d = _direct_output(g, comp) if len(outs) == 1 else None
        if d is not None:
            direct.append(DirectOutput(outs[0], d[0], d[1]))
        else:
            # observables first, then detectors that failed to separate
            outs.sort(key=lambda i: (i < nd, i))
            comps.append(Component(outs, comp))
    direct.sort(key=lambda d: d.output)
    comps.sort(key=lambda c: min(c.outputs))
    return direct, comps


# ---------------------------------------------------------------------------
# marginal chains


def chain_diagram(comp: Graph, outputs: list[int], j: int | None, first_bit_param: int) -> Graph:
    """Closed diagram for one step of the marginal chain.

    ``j is None`` traces every output.  Otherwise outputs before ``j`` are
    projected onto parameters ``first_bit_param + i``, output ``j`` onto 1 and
    later outputs are traced.
    """
    g = comp.copy()
    for i, b in enumerate(outputs):
        ((s, et),) = g.adj[b].items()
        g.remove_vertex(b)
        if j is None or i > j:
            t = g.add_vertex(Z)
            g.add_edge(t, s, et)
        else:
            phase = Phase(4) if i == j else Phase(0, None, 1 << (first_bit_param + i))
            t = g.add_vertex(Z, phase)
            g.add_edge(t, s, toggle(et))
            g.scalar.add_power(-1)
    g.outputs = []
    g.num_params = max(g.num_params, first_bit_param + len(outputs))
    return g


@dataclass
class CompiledComponent:
    outputs: list[int]  # global output indices in sampling order
    f_indices: list[int]  # global f variables; local parameter i <-> f_indices[i]
    chain: list[PhaseTermTensors]  # normalization first, then one per output
    plan: DecompositionPlan
    term_counts: list[int]

    @property
    def num_params(self) -> int:
        return len(self.f_indices) + len(self.outputs)


def build_marginal_chain(comp: Graph, boundary: list[int], first_bit_param: int) -> tuple[list[PhaseTermTensors], list[int]]:
    nparams = first_bit_param + len(boundary)
    diagrams = [chain_diagram(comp, boundary, None, first_bit_param)]
    diagrams += [chain_diagram(comp, boundary, j, first_bit_param) for j in range(len(boundary))]
    terms = [clifford_terms(d) for d in diagrams]
    norm = sum(
        complex(w * led.value(0)) for w, led in terms[0]
    )
    scale = 1.0 / abs(norm) if abs(norm) > 0 else 1.0
    chain = [assemble_tensors(t, nparams, scale) for t in terms]
    return chain, [len(t) for t in terms]


# ---------------------------------------------------------------------------
# compiled sampler


@dataclass(frozen=True)
class CompiledStats:
    num_outputs: int
    num_direct: int
    num_autoregressive: int
    failed_detectors: int
    num_magic: int
    chi: int
    plan_chi: int
    rate: float
    num_mechanisms: int
    num_joint: int
    rank: int
    mean_flip_weight: float
    term_counts: tuple[tuple[int, ...], ...]

    def as_lines(self) -> list[str]:
        lines = [
            f"outputs={self.num_outputs}",
            f"direct_outputs={self.num_direct}",
            f"autoregressive_outputs={self.num_autoregressive}",
            f"failed_detectors={self.failed_detectors}",
            f"num_magic={self.num_magic}",
            f"chi={self.chi}",
            f"plan_chi={self.plan_chi}",
            f"rate={self.rate:.6g}",
            f"num_mechanisms={self.num_mechanisms}",
            f"joint_mechanisms={self.num_joint}",
            f"rank={self.rank}",
            f"mean_flip_weight={self.mean_flip_weight:.6g}",
        ]
        for i, tc in enumerate(self.term_counts):
            lines.append(f"component{i}_terms={','.join(map(str, tc))}")
        return lines


@dataclass(frozen=True)
class CompiledSampler:
    mode: str
    num_outputs: int
    num_detectors: int
    num_observables: int
    output_labels: tuple[str, ...]
    basis: BasisTransform
    mechanisms: tuple[ErrorMechanism, ...]
    direct: tuple[DirectOutput, ...]  # parity over f
    components: tuple[CompiledComponent, ...]
    columns: int  # direct outputs first, then component f variables
    comp_f_columns: dict[int, int]  # f index -> column
    mechanism_flips: tuple[np.ndarray, ...]  # per mechanism: (2^dim, words) packed column flips
    stats: CompiledStats
    detector_coords: tuple[tuple[float, ...], ...] = ()

    @property
    def pure_clifford_deterministic(self) -> bool:
        return not self.components

    @property
    def separation_complete(self) -> bool:
        return self.stats.failed_detectors == 0

    def flip_matrix(self) -> np.ndarray:
        """Bool matrix (outputs x mechanism patterns of single-bit mechanisms) over direct outputs."""
        m = np.zeros((self.num_outputs, len(self.mechanisms)), dtype=bool)
        for j, mech in enumerate(self.mechanisms):
            for d in self.direct:
                if mech.dim == 1 and (d.parity & mech.basis[0]).bit_count() & 1:
                    m[d.output, j] = True
        return m


def _pack_columns(bits: list[int], words: int) -> np.ndarray:
    arr = np.zeros(words, dtype=np.uint64)
    for c in bits:
        arr[c // 64] |= np.uint64(1) << np.uint64(c % 64)
    return arr


def compile_sampler(circuit: Circuit | str, mode: str = DETECTORS) -> CompiledSampler:
    if isinstance(circuit, str):
        circuit = parse_circuit(circuit)
    if mode not in (DETECTORS, MEASUREMENTS):
        raise CompileError(f"unknown mode {mode!r}")
    lowered = lower(circuit, mode)
    g, _ = clifford_simplify(lowered.diagram)
    direct_e, comps = separate_components(g, lowered)

    # noise basis: direct outputs first so each tends to own one f variable
    parities = [d.parity for d in direct_e if d.parity]
    comp_parities = []
    for comp in comps:
        ps = sorted({g.phases[v].parity for v in comp.vertices if g.ty[v] == Z and g.phases[v].parity})
        comp_parities.append(ps)
        parities.extend(ps)
    basis = basis_reduce(parities)
    direct = tuple(DirectOutput(d.output, basis.express(d.parity), d.const) for d in direct_e)

    compiled: list[CompiledComponent] = []
    num_magic = 0
    plan_chi = 1
    for comp, ps in zip(comps, comp_parities):
        fmask = 0
        for p in ps:
            fmask |= basis.express(p)
        f_idx = [i for i in range(basis.rank) if (fmask >> i) & 1]
        local = {f: i for i, f in enumerate(f_idx)}
        sub = g.induced(comp.vertices)
        for v in comp.vertices:
            p = sub.phases[v]
            if p.parity:
                fm = basis.express(p.parity)
                lm = 0
                for i in range(basis.rank):
                    if (fm >> i) & 1:
                        lm |= 1 << local[i]
                sub.phases[v] = p.with_parity(lm)
        sub.num_params = len(f_idx)
        boundary = [g.outputs[i] for i in comp.outputs]
        plan = plan_decomposition(sub)
        num_magic += plan.num_magic
        plan_chi *= plan.total_terms
        chain, counts = build_marginal_chain(sub, boundary, len(f_idx))
        compiled.append(CompiledComponent(list(comp.outputs), f_idx, chain, plan, counts))

    # error mechanisms over f, with flips laid out on sampling columns
    mechanisms = reduce_channels(lowered.channels, basis.signature)
    comp_f = sorted({f for c in compiled for f in c.f_indices})
    comp_f_columns = {f: len(direct) + i for i, f in enumerate(comp_f)}
    columns = len(direct) + len(comp_f)
    words = max(1, (columns + 63) // 64)
    flips = []
    weight_sum = 0.0
    for m in mechanisms:
        rows = []
        for k, fm in enumerate(m.pattern_masks()):
            cols = [i for i, d in enumerate(direct) if (d.parity & fm).bit_count() & 1]
            if k == 1 and m.dim == 1:
                weight_sum += len(cols)
            cols += [comp_f_columns[f] for f in comp_f if (fm >> f) & 1]
            rows.append(_pack_columns(cols, words))
        flips.append(np.array(rows))

    nd = lowered.num_detectors if mode == DETECTORS else 0
    failed = sum(1 for c in compiled for o in c.outputs if o < nd)
    chi = sum(sum(c.term_counts) for c in compiled)
    stats = CompiledStats(
        num_outputs=len(g.outputs),
        num_direct=len(direct),
        num_autoregressive=sum(len(c.outputs) for c in compiled),
        failed_detectors=failed,
        num_magic=num_magic,
        chi=chi,
        plan_chi=plan_chi,
        rate=math.log2(plan_chi) / num_magic if num_magic else 0.0,
        num_mechanisms=len(mechanisms),
        num_joint=sum(1 for m in mechanisms if m.dim > 1),
        rank=basis.rank,
        mean_flip_weight=weight_sum / max(1, sum(1 for m in mechanisms if m.dim == 1)),
        term_counts=tuple(tuple(c.term_counts) for c in compiled),
    )
    return CompiledSampler(
        mode=mode,
        num_outputs=len(g.outputs),
        num_detectors=lowered.num_detectors,
        num_observables=lowered.num_observables,
        output_labels=tuple(lowered.output_labels),
        basis=basis,
        mechanisms=tuple(mechanisms),
        direct=direct,
        components=tuple(compiled),
        columns=columns,
        comp_f_columns=comp_f_columns,
        mechanism_flips=tuple(flips),
        stats=stats,
        detector_coords=tuple(d.coords for d in circuit.detectors) if mode == DETECTORS else (),
    )


# ---------------------------------------------------------------------------
# detector error model text


def _fmt_p(p: float) -> str:
    return format(p, ".12g")


def export_dem(cs: CompiledSampler) -> str:
    """Detector error model over the directly determined detectors and observables.

    Joint mechanisms that cannot be factorized are written as one ``error``
    line per non-trivial pattern after a ``# joint`` comment.
    """
    if cs.mode != DETECTORS:
        raise CompileError("export-dem needs a detector-mode compilation")
    nd = cs.num_detectors

    def targets(fm: int) -> tuple[int, ...]:
        return tuple(d.output for d in cs.direct if (d.parity & fm).bit_count() & 1)

    def label(o: int) -> str:
        return f"D{o}" if o < nd else f"L{o - nd}"

    singles: dict[tuple[int, ...], np.ndarray] = {}
    joint_lines: list[tuple[tuple[int, ...], str]] = []
    for m in cs.mechanisms:
        if m.dim == 1:
            t = targets(m.basis[0])
            if t:
                tab = m.table
                singles[t] = xor_convolve(singles[t], tab) if t in singles else tab.copy()
            continue
        block = []
        for k, fm in enumerate(m.pattern_masks()):
            t = targets(fm)
            if k and t and m.table[k] > 0:
                block.append(f"error({_fmt_p(m.table[k])}) " + " ".join(map(label, t)))
        if block:
            joint_lines.append((targets(m.basis[0]), "# joint\n" + "\n".join(block)))
    entries = [(t, f"error({_fmt_p(tab[1])}) " + " ".join(map(label, t))) for t, tab in singles.items() if tab[1] > 0]
    entries += joint_lines
    entries.sort(key=lambda e: e[0])
    lines = [e[1] for e in entries]
    for i, coords in enumerate(cs.detector_coords):
        if coords:
            lines.append(f"detector({', '.join(_fmt_p(c) for c in coords)}) D{i}")
    return "\n".join(lines) + ("\n" if lines else "")
