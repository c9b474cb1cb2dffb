"""Parameterized ZX diagrams with exact phases and a scalar ledger.

Conventions (all checked by the dense contraction in :func:`to_tensor`):

* Z spider with phase a and n legs: ``|0..0> + e^{ia}|1..1>``.
* X spider with phase a and n legs: ``|+..+> + e^{ia}|-..->``.
* A Hadamard edge carries the normalized Hadamard matrix.

Parities are stored as Python ints used as bit masks over parameter indices,
so ``p ^ q`` is the XOR of two parities and ``mask_parity(p, x)`` resolves a
parity against an assignment mask ``x``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

BOUNDARY, Z, X = 0, 1, 2
SIMPLE, HADAMARD = 1, 2
QUANTUM, CLASSICAL = 0, 1

_QUARTER = math.pi / 4
_SQRT2 = math.sqrt(2.0)
_TYPE_NAMES = {BOUNDARY: "B", Z: "Z", X: "X"}
_TYPE_CODES = {v: k for k, v in _TYPE_NAMES.items()}


def toggle(et: int) -> int:
    return HADAMARD if et == SIMPLE else SIMPLE


def compose_edges(e1: int, e2: int) -> int:
    """Edge type equivalent to two edges joined through an identity spider."""
    return SIMPLE if e1 == e2 else HADAMARD


# ---------------------------------------------------------------------------
# parities


def parity_mask(indices: Iterable[int]) -> int:
    """Build a parity mask; repeated indices cancel."""
    m = 0
    for i in indices:
        m ^= 1 << i
    return m


def parity_bits(mask: int) -> frozenset[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return frozenset(out)


def mask_parity(mask: int, assignment: int) -> int:
    return (mask & assignment).bit_count() & 1


def assignment_mask(assignment: int | Sequence[int] | np.ndarray | None) -> int:
    """Convert a bit vector (index 0 first) into an int mask."""
    if assignment is None:
        return 0
    if isinstance(assignment, (int, np.integer)):
        return int(assignment)
    m = 0
    for i, b in enumerate(assignment):
        if int(b) & 1:
            m |= 1 << i
    return m


# ---------------------------------------------------------------------------
# phases


class Phase:
    """Exact spider phase: ``exact*pi/4 + generic + pi*parity``.

    ``generic`` is ``None`` for multiples of pi/4 and otherwise lies in
    (0, pi/4), with the remainder carried by ``exact``.
    """

    __slots__ = ("exact", "generic", "parity")

    def __init__(self, exact: int = 0, generic: float | None = None, parity: int = 0):
        exact = int(exact)
        if generic is not None:
            k = math.floor(generic / _QUARTER)
            rem = generic - k * _QUARTER
            if rem < 1e-12 or _QUARTER - rem < 1e-12:
                exact += int(round(generic / _QUARTER))
                generic = None
            else:
                exact += k
                generic = rem
        self.exact = exact % 8
        self.generic = generic
        self.parity = parity

    @classmethod
    def from_radians(cls, angle: float, parity: int = 0) -> "Phase":
        return cls(0, angle, parity)

    @classmethod
    def from_turns(cls, turns_of_pi: float, parity: int = 0) -> "Phase":
        """Phase ``turns_of_pi * pi``, exact when it is a multiple of pi/4."""
        q = 4.0 * turns_of_pi
        if abs(q - round(q)) < 1e-12:
            return cls(int(round(q)), None, parity)
        return cls(0, turns_of_pi * math.pi, parity)

    def _key(self):
        return (self.exact, self.generic, self.parity)

    def __eq__(self, other) -> bool:
        return isinstance(other, Phase) and self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __repr__(self) -> str:
        parts = [f"{self.exact}π/4"]
        if self.generic is not None:
            parts.append(f"{self.generic:.6g}")
        if self.parity:
            parts.append("π·" + "⊕".join(f"p{i}" for i in sorted(parity_bits(self.parity))))
        return "Phase(" + " + ".join(parts) + ")"

    def __add__(self, other: "Phase") -> "Phase":
        if self.generic is None and other.generic is None:
            return Phase(self.exact + other.exact, None, self.parity ^ other.parity)
        g = (self.generic or 0.0) + (other.generic or 0.0)
        return Phase(self.exact + other.exact, g, self.parity ^ other.parity)

    def __neg__(self) -> "Phase":
        # a pi flip is its own conjugate, so the parity is kept
        if self.generic is None:
            return Phase(-self.exact, None, self.parity)
        return Phase(-self.exact, -self.generic, self.parity)

    def __sub__(self, other: "Phase") -> "Phase":
        return self + (-other)

    def add_exact(self, k: int, parity: int = 0) -> "Phase":
        p = Phase.__new__(Phase)
        p.exact = (self.exact + k) % 8
        p.generic = self.generic
        p.parity = self.parity ^ parity
        return p

    def with_parity(self, parity: int) -> "Phase":
        return Phase(self.exact, self.generic, parity) if self.generic is None else self._copy(parity)

    def _copy(self, parity: int) -> "Phase":
        p = Phase.__new__(Phase)
        p.exact, p.generic, p.parity = self.exact, self.generic, parity
        return p

    @property
    def is_clifford(self) -> bool:
        return self.generic is None and self.exact % 2 == 0

    @property
    def is_pauli(self) -> bool:
        return self.generic is None and self.exact % 4 == 0

    @property
    def is_proper_clifford(self) -> bool:
        """Odd multiple of pi/2 (any parity)."""
        return self.generic is None and self.exact % 4 == 2

    @property
    def is_zero(self) -> bool:
        return self.exact == 0 and self.generic is None and self.parity == 0

    def constant(self) -> float:
        """Angle in radians ignoring the parity part."""
        return self.exact * _QUARTER + (self.generic or 0.0)

    def value(self, assignment: int = 0) -> float:
        return self.constant() + math.pi * mask_parity(self.parity, assignment)

    def magic_split(self) -> tuple[tuple[int, float | None], float, "Phase"]:
        """Split into (class key, theta, Clifford remainder).

        ``theta`` is the non-Clifford angle modulo pi/2 and the remainder is a
        Clifford phase (carrying the parity) with ``theta + remainder == self``.
        """
        odd = self.exact % 2
        theta = odd * _QUARTER + (self.generic or 0.0)
        rest = Phase(self.exact - odd, None, self.parity)
        return (odd, self.generic), theta, rest


# ---------------------------------------------------------------------------
# scalar terms


NODE, HALF_PI, PI_PAIR, PHASE_PAIR = "node", "half_pi", "pi_pair", "phase_pair"


@dataclass(frozen=True)
class ScalarTerm:
    """One parameterized scalar factor.

    node:        1 + e^{i(alpha + a pi)}
    half_pi:     e^{i sign a pi/2}
    pi_pair:     (-1)^{a b}
    phase_pair:  1 + e^{i(alpha + a pi)} + e^{i(beta + b pi)} - e^{i(alpha + beta + (a+b) pi)}
    """

    variant: str
    a: int = 0
    b: int = 0
    alpha: float = 0.0
    beta: float = 0.0
    sign: int = 1

    @staticmethod
    def node(alpha: float, a: int) -> "ScalarTerm":
        return ScalarTerm(NODE, a=a, alpha=alpha)

    @staticmethod
    def half_pi(sign: int, a: int) -> "ScalarTerm":
        return ScalarTerm(HALF_PI, a=a, sign=1 if sign > 0 else -1)

    @staticmethod
    def pi_pair(a: int, b: int) -> "ScalarTerm":
        return ScalarTerm(PI_PAIR, a=a, b=b)

    @staticmethod
    def phase_pair(alpha: float, beta: float, a: int, b: int) -> "ScalarTerm":
        return ScalarTerm(PHASE_PAIR, a=a, b=b, alpha=alpha, beta=beta)

    def params(self) -> int:
        return self.a | self.b

    def as_phase_pair(self) -> tuple[complex, float, float, int, int]:
        """Embedding ``term == c * h(alpha, beta; a, b)``; returns (c, alpha, beta, a, b)."""
        if self.variant == PHASE_PAIR:
            return 1.0, self.alpha, self.beta, self.a, self.b
        if self.variant == PI_PAIR:
            return 0.5, 0.0, 0.0, self.a, self.b
        if self.variant == HALF_PI:
            return 0.5, 0.0, self.sign * math.pi / 2, self.a, 0
        # 1 + x = h(alpha + pi/2, pi/2; a, 0) / (1 + i)
        return 1.0 / (1.0 + 1.0j), self.alpha + math.pi / 2, math.pi / 2, self.a, 0


def phase_pair_value(alpha: float, beta: float, a: int, b: int) -> complex:
    x = cmath.exp(1j * (alpha + math.pi * a))
    y = cmath.exp(1j * (beta + math.pi * b))
    return 1 + x + y - x * y


def eval_scalar_term(t: ScalarTerm, assignment) -> complex:
    """Value of a single term with parities resolved against ``assignment``."""
    m = assignment_mask(assignment)
    a = mask_parity(t.a, m)
    if t.variant == NODE:
        return 1 + cmath.exp(1j * (t.alpha + math.pi * a))
    if t.variant == HALF_PI:
        return (1j if t.sign > 0 else -1j) if a else 1.0 + 0j
    b = mask_parity(t.b, m)
    if t.variant == PI_PAIR:
        return -1.0 + 0j if (a and b) else 1.0 + 0j
    return phase_pair_value(t.alpha, t.beta, a, b)


@dataclass
class ScalarLedger:
    """Scalar ``constant * sqrt(2)**sqrt2_power * prod(terms)``."""

    constant: complex = 1.0 + 0j
    terms: list[ScalarTerm] = field(default_factory=list)
    sqrt2_power: int = 0

    def copy(self) -> "ScalarLedger":
        return ScalarLedger(self.constant, list(self.terms), self.sqrt2_power)

    @property
    def is_zero(self) -> bool:
        return self.constant == 0

    def mul(self, c: complex) -> None:
        self.constant *= c
        if abs(self.constant) < 1e-300:
            self.constant = 0j

    def add_power(self, k: int) -> None:
        self.sqrt2_power += k

    def absorb(self, other: "ScalarLedger") -> None:
        self.mul(other.constant)
        self.sqrt2_power += other.sqrt2_power
        self.terms.extend(other.terms)

    def add_node(self, alpha: float, a: int) -> None:
        if a == 0:
            self.mul(1 + cmath.exp(1j * alpha))
        else:
            self.terms.append(ScalarTerm.node(alpha, a))

    def add_phase_bit(self, theta: float, a: int, const: int = 0) -> None:
        """Multiply by ``e^{i theta (a xor const)}``."""
        if const:
            self.mul(cmath.exp(1j * theta))
            theta = -theta
        if a == 0:
            return
        q = theta / (math.pi / 2)
        r = round(q)
        if abs(q - r) < 1e-12:
            r %= 4
            if r == 0:
                return
            if r in (1, 3):
                self.terms.append(ScalarTerm.half_pi(1 if r == 1 else -1, a))
                return
        self.mul(0.5)
        self.terms.append(ScalarTerm.phase_pair(0.0, theta, a, 0))

    def add_sign_product(self, a: int, ca: int, b: int, cb: int) -> None:
        """Multiply by ``(-1)^{(a xor ca)(b xor cb)}``."""
        if a == 0 and b == 0:
            if ca and cb:
                self.mul(-1)
            return
        if a == 0:
            if ca:
                self.add_phase_bit(math.pi, b, cb)
            return
        if b == 0:
            if cb:
                self.add_phase_bit(math.pi, a, ca)
            return
        if ca == 0 and cb == 0:
            self.terms.append(ScalarTerm.pi_pair(a, b))
        else:
            self.mul(0.5)
            self.terms.append(ScalarTerm.phase_pair(ca * math.pi, cb * math.pi, a, b))

    def add_phase_pair(self, alpha: float, beta: float, a: int, b: int) -> None:
        if a == 0 and b == 0:
            self.mul(phase_pair_value(alpha, beta, 0, 0))
        else:
            self.terms.append(ScalarTerm.phase_pair(alpha, beta, a, b))

    def value(self, assignment=0) -> complex:
        m = assignment_mask(assignment)
        v = self.constant * (_SQRT2 ** self.sqrt2_power)
        for t in self.terms:
            v *= eval_scalar_term(t, m)
        return v

    def params(self) -> int:
        m = 0
        for t in self.terms:
            m |= t.params()
        return m


# ---------------------------------------------------------------------------
# diagrams


class Graph:
    """Open ZX diagram with parameterized phases (a ``ParamZXDiagram``).

    When ``doubled`` is set, quantum-layer vertices and the edges between
    them stand for two conjugate copies (see :func:`undouble`).
    """

    def __init__(self) -> None:
        self.ty: dict[int, int] = {}
        self.phases: dict[int, Phase] = {}
        self.layer: dict[int, int] = {}
        self.adj: dict[int, dict[int, int]] = {}
        self.inputs: list[int] = []
        self.outputs: list[int] = []
        self.scalar = ScalarLedger()
        self.num_params = 0
        self.doubled = False
        self.hopf_count = 0
        self._next = 0

    # -- construction ------------------------------------------------------
    def add_vertex(self, ty: int, phase: Phase | None = None, layer: int = QUANTUM) -> int:
        v = self._next
        self._next += 1
        self.ty[v] = ty
        self.phases[v] = phase if phase is not None else Phase()
        self.layer[v] = layer
        self.adj[v] = {}
        return v

    def add_vertex_with_id(self, v: int, ty: int, phase: Phase, layer: int) -> None:
        self.ty[v] = ty
        self.phases[v] = phase
        self.layer[v] = layer
        self.adj[v] = {}
        self._next = max(self._next, v + 1)

    def remove_vertex(self, v: int) -> None:
        for n in self.adj[v]:
            del self.adj[n][v]
        del self.adj[v], self.ty[v], self.phases[v], self.layer[v]

    def remove_edge(self, u: int, v: int) -> None:
        del self.adj[u][v]
        del self.adj[v][u]

    def set_edge_type(self, u: int, v: int, et: int) -> None:
        self.adj[u][v] = et
        self.adj[v][u] = et

    def add_edge(self, u: int, v: int, et: int = SIMPLE) -> None:
        """Add an edge, resolving self-loops and parallel edges eagerly."""
        if u == v:
            if self.ty[u] == BOUNDARY:
                raise ValueError("self-loop on a boundary vertex")
            if et == HADAMARD:
                self._resolve_scalar_phase(u)
            return
        cur = self.adj[u].get(v)
        if cur is None:
            self.adj[u][v] = et
            self.adj[v][u] = et
            return
        if self.doubled:
            raise ValueError("parallel edge in a doubled diagram")
        tu, tv = self.ty[u], self.ty[v]
        if tu == BOUNDARY or tv == BOUNDARY:
            raise ValueError("parallel edge at a boundary vertex")
        same = tu == tv
        a = cur if same else toggle(cur)
        b = et if same else toggle(et)
        if a == SIMPLE and b == SIMPLE:
            return
        if a == HADAMARD and b == HADAMARD:
            self.remove_edge(u, v)
            self.scalar.add_power(-2)
            self.hopf_count += 1
            return
        keep = cur if a == SIMPLE else et
        self.set_edge_type(u, v, keep)
        self._resolve_scalar_phase(u)

    def _resolve_scalar_phase(self, u: int) -> None:
        self.phases[u] = self.phases[u].add_exact(4)
        self.scalar.add_power(-1)

    def add_phase(self, v: int, p: Phase) -> None:
        self.phases[v] = self.phases[v] + p

    # -- queries -----------------------------------------------------------
    def vertices(self) -> list[int]:
        return list(self.ty)

    def num_vertices(self) -> int:
        return len(self.ty)

    def num_edges(self) -> int:
        return sum(len(n) for n in self.adj.values()) // 2

    def edges(self) -> list[tuple[int, int, int]]:
        out = []
        for u, nb in self.adj.items():
            for v, et in nb.items():
                if u < v:
                    out.append((u, v, et))
        return out

    def neighbors(self, v: int) -> list[int]:
        return list(self.adj[v])

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def edge_type(self, u: int, v: int) -> int | None:
        return self.adj[u].get(v)

    def params_used(self) -> int:
        m = self.scalar.params()
        for p in self.phases.values():
            m |= p.parity
        return m

    def copy(self) -> "Graph":
        g = Graph()
        g.ty = dict(self.ty)
        g.phases = dict(self.phases)
        g.layer = dict(self.layer)
        g.adj = {v: dict(n) for v, n in self.adj.items()}
        g.inputs = list(self.inputs)
        g.outputs = list(self.outputs)
        g.scalar = self.scalar.copy()
        g.num_params = self.num_params
        g.doubled = self.doubled
        g.hopf_count = self.hopf_count
        g._next = self._next
        return g

    def induced(self, vs: Iterable[int]) -> "Graph":
        """Subdiagram on ``vs`` with a fresh unit scalar; ids are preserved."""
        vs = set(vs)
        g = Graph()
        for v in sorted(vs):
            g.add_vertex_with_id(v, self.ty[v], self.phases[v], self.layer[v])
        for v in vs:
            for n, et in self.adj[v].items():
                if n in vs:
                    g.adj[v][n] = et
        g.inputs = [v for v in self.inputs if v in vs]
        g.outputs = [v for v in self.outputs if v in vs]
        g.num_params = self.num_params
        g.doubled = self.doubled
        g._next = max(g._next, self._next)
        return g

    def connected_components(self) -> list[list[int]]:
        seen: set[int] = set()
        comps = []
        for s in sorted(self.ty):
            if s in seen:
                continue
            stack = [s]
            seen.add(s)
            comp = []
            while stack:
                v = stack.pop()
                comp.append(v)
                for n in self.adj[v]:
                    if n not in seen:
                        seen.add(n)
                        stack.append(n)
            comps.append(sorted(comp))
        return comps


def compose(g1: Graph, g2: Graph) -> Graph:
    """Sequential composition: outputs of ``g1`` plugged into inputs of ``g2``."""
    if len(g1.outputs) != len(g2.inputs):
        raise ValueError("boundary mismatch")
    if g1.doubled or g2.doubled:
        raise ValueError("compose works on single-layer diagrams")
    g = g1.copy()
    offset = g._next
    for v in g2.ty:
        g.add_vertex_with_id(v + offset, g2.ty[v], g2.phases[v], g2.layer[v])
    for u, v, et in g2.edges():
        g.adj[u + offset][v + offset] = et
        g.adj[v + offset][u + offset] = et
    for o, i in zip(g1.outputs, g2.inputs):
        i = i + offset
        # both boundaries become legs of one identity spider
        w = g.add_vertex(Z)
        for b in (o, i):
            (n, et), = g.adj[b].items()
            g.remove_vertex(b)
            g.add_edge(w, n, et)
    g.outputs = [v + offset for v in g2.outputs]
    g.scalar.absorb(g2.scalar)
    g.num_params = max(g1.num_params, g2.num_params)
    return g


def tensor_product(g1: Graph, g2: Graph) -> Graph:
    g = g1.copy()
    offset = g._next
    for v in g2.ty:
        g.add_vertex_with_id(v + offset, g2.ty[v], g2.phases[v], g2.layer[v])
    for u, v, et in g2.edges():
        g.adj[u + offset][v + offset] = et
        g.adj[v + offset][u + offset] = et
    g.inputs += [v + offset for v in g2.inputs]
    g.outputs += [v + offset for v in g2.outputs]
    g.scalar.absorb(g2.scalar)
    g.num_params = max(g1.num_params, g2.num_params)
    g.doubled = g1.doubled or g2.doubled
    return g


def undouble(d: Graph) -> Graph:
    """Expand doubled notation into two conjugate copies.

    Quantum vertices become a copy with the original phase and a copy with
    the conjugated phase (parity kept); classical vertices stay single and
    connect to both copies of any quantum neighbour.
    """
    if not d.doubled:
        return d.copy()
    g = Graph()
    g.num_params = d.num_params
    copies: dict[int, tuple[int, ...]] = {}
    for v in sorted(d.ty):
        if d.layer[v] == QUANTUM:
            a = g.add_vertex(d.ty[v], d.phases[v], QUANTUM)
            b = g.add_vertex(d.ty[v], -d.phases[v], QUANTUM)
            copies[v] = (a, b)
        else:
            copies[v] = (g.add_vertex(d.ty[v], d.phases[v], CLASSICAL),)
    for u, v, et in d.edges():
        cu, cv = copies[u], copies[v]
        if len(cu) == 2 and len(cv) == 2:
            g.add_edge(cu[0], cv[0], et)
            g.add_edge(cu[1], cv[1], et)
        else:
            for x in cu:
                for y in cv:
                    g.add_edge(x, y, et)
    g.inputs = [c for v in d.inputs for c in copies[v]]
    g.outputs = [c for v in d.outputs for c in copies[v]]
    g.scalar = d.scalar.copy()
    return g


# ---------------------------------------------------------------------------
# dense semantics

_H = np.array([[1, 1], [1, -1]], dtype=complex) / _SQRT2


class SizeGuardError(ValueError):
    """Raised when a dense contraction would exceed the configured size."""


def spider_tensor(ty: int, n: int, angle: float) -> np.ndarray:
    ph = cmath.exp(1j * angle)
    if n == 0:
        return np.array(1 + ph, dtype=complex)
    if ty == Z:
        t = np.zeros((2,) * n, dtype=complex)
        t[(0,) * n] = 1.0
        t[(1,) * n] += ph
        return t
    idx = np.indices((2,) * n).sum(axis=0) % 2
    return (1 + ph * np.where(idx == 1, -1.0, 1.0)) * (2.0 ** (-n / 2))


def _contract(g: Graph, amask: int, order: list[int], max_legs: int) -> np.ndarray:
    boundary = g.inputs + g.outputs
    bset = set(boundary)
    stray = [v for v in g.ty if g.ty[v] == BOUNDARY and v not in bset]
    if stray:
        raise ValueError(f"boundary vertices {stray} not listed as inputs/outputs")
    for b in boundary:
        if g.degree(b) != 1:
            raise ValueError(f"boundary vertex {b} must have degree 1")
    edge_id: dict[tuple[int, int], int] = {}
    for k, (u, v, _) in enumerate(sorted(g.edges())):
        edge_id[(u, v)] = k
        edge_id[(v, u)] = k

    def label(v: int, n: int):
        if g.ty[n] == BOUNDARY:
            return ("open", n)
        return edge_id[(v, n)]

    cur = np.array(1.0 + 0j)
    labels: list = []
    pieces: list[tuple[np.ndarray, list]] = []
    for v in order:
        if g.ty[v] == BOUNDARY:
            (n, et), = g.adj[v].items()
            if g.ty[n] == BOUNDARY and v < n:
                m = np.eye(2, dtype=complex) if et == SIMPLE else _H
                pieces.append((m, [("open", v), ("open", n)]))
            continue
        nbrs = sorted(g.adj[v])
        t = spider_tensor(g.ty[v], len(nbrs), g.phases[v].value(amask))
        tl = []
        for ax, n in enumerate(nbrs):
            et = g.adj[v][n]
            # the Hadamard of an edge is applied at exactly one endpoint
            if et == HADAMARD and (g.ty[n] == BOUNDARY or v < n):
                t = np.moveaxis(np.tensordot(t, _H, axes=([ax], [0])), -1, ax)
            tl.append(label(v, n))
        pieces.append((t, tl))
    for t, tl in pieces:
        shared = [l for l in tl if l in labels]
        ia = [labels.index(l) for l in shared]
        ib = [tl.index(l) for l in shared]
        cur = np.tensordot(cur, t, axes=(ia, ib))
        labels = [l for l in labels if l not in shared] + [l for l in tl if l not in shared]
        if len(labels) > max_legs:
            raise SizeGuardError(f"intermediate tensor with {len(labels)} legs exceeds {max_legs}")
    want = [("open", b) for b in boundary]
    if sorted(map(str, want)) != sorted(map(str, labels)):
        raise ValueError("dangling edges after contraction")
    perm = [labels.index(l) for l in want]
    return np.transpose(cur, perm) if perm else cur


def to_tensor(d: Graph, assignment=None, max_legs: int = 24) -> np.ndarray:
    """Dense tensor of the diagram (inputs first, then outputs), scalar included."""
    g = undouble(d) if d.doubled else d
    amask = assignment_mask(assignment)
    t = _contract(g, amask, sorted(g.ty), max_legs)
    return t * g.scalar.value(amask)


def to_tensor_reverse(d: Graph, assignment=None, max_legs: int = 24) -> np.ndarray:
    g = undouble(d) if d.doubled else d
    amask = assignment_mask(assignment)
    t = _contract(g, amask, sorted(g.ty, reverse=True), max_legs)
    return t * g.scalar.value(amask)


# ---------------------------------------------------------------------------
# text serialization


def _phase_text(p: Phase) -> str:
    s = str(p.exact)
    if p.generic is not None:
        s += f";g={p.generic!r}"
    if p.parity:
        s += ";p=" + ",".join(str(i) for i in sorted(parity_bits(p.parity)))
    return s


def _phase_from_text(s: str) -> Phase:
    parts = s.split(";")
    exact = int(parts[0])
    generic = None
    parity = 0
    for part in parts[1:]:
        k, v = part.split("=", 1)
        if k == "g":
            generic = float(v)
        elif k == "p":
            parity = parity_mask(int(i) for i in v.split(","))
    p = Phase.__new__(Phase)
    p.exact, p.generic, p.parity = exact % 8, generic, parity
    return p


def to_text(g: Graph) -> str:
    """Plain-text adjacency dump, stable across runs."""
    lines = [f"params {g.num_params}", f"doubled {int(g.doubled)}"]
    for v in sorted(g.ty):
        layer = "q" if g.layer[v] == QUANTUM else "c"
        lines.append(f"v {v} {_TYPE_NAMES[g.ty[v]]} {layer} {_phase_text(g.phases[v])}")
    for u, v, et in sorted(g.edges()):
        lines.append(f"e {u} {v} {'h' if et == HADAMARD else 's'}")
    lines.append("in " + " ".join(map(str, g.inputs)))
    lines.append("out " + " ".join(map(str, g.outputs)))
    sc = g.scalar
    lines.append(f"scalar {sc.constant.real!r} {sc.constant.imag!r} {sc.sqrt2_power}")
    for t in sc.terms:
        lines.append(f"term {t.variant} {t.a} {t.b} {t.alpha!r} {t.beta!r} {t.sign}")
    return "\n".join(lines) + "\n"


def from_text(text: str) -> Graph:
    g = Graph()
    for line in text.splitlines():
        f = line.split()
        if not f:
            continue
        if f[0] == "params":
            g.num_params = int(f[1])
        elif f[0] == "doubled":
            g.doubled = bool(int(f[1]))
        elif f[0] == "v":
            layer = QUANTUM if f[3] == "q" else CLASSICAL
            g.add_vertex_with_id(int(f[1]), _TYPE_CODES[f[2]], _phase_from_text(f[4]), layer)
        elif f[0] == "e":
            et = HADAMARD if f[3] == "h" else SIMPLE
            g.set_edge_type(int(f[1]), int(f[2]), et)
        elif f[0] == "in":
            g.inputs = [int(x) for x in f[1:]]
        elif f[0] == "out":
            g.outputs = [int(x) for x in f[1:]]
        elif f[0] == "scalar":
            g.scalar.constant = complex(float(f[1]), float(f[2]))
            g.scalar.sqrt2_power = int(f[3])
        elif f[0] == "term":
            g.scalar.terms.append(
                ScalarTerm(f[1], int(f[2]), int(f[3]), float(f[4]), float(f[5]), int(f[6]))
            )
    return g
