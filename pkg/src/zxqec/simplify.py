"""Clifford rewriting of parameterized ZX diagrams.

All rules work on graph-like diagrams (Z spiders joined by Hadamard edges)
and only inspect phase constants when deciding whether a rule applies.  A
parity part ``a*pi`` never blocks a rule; instead it flows into neighbour
phases and into parameterized scalar terms of the ledger.

Rules, in the order the driver tries them:

* fusion and identity removal,
* isolated spiders and isolated pairs (node / phase-pair scalars),
* copying a Pauli leaf through its neighbour,
* local complementation of interior +-pi/2 spiders,
* pivoting of adjacent interior Pauli spiders,
* then, when nothing above applies: pivoting next to a boundary, pivoting
  a Pauli spider with a non-Clifford neighbour (which moves the non-Clifford
  phase into a phase gadget), and merging gadgets with equal support.

A pi phase is never commuted through a non-Clifford spider.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .zx_core import (
    BOUNDARY,
    HADAMARD,
    SIMPLE,
    X,
    Z,
    Graph,
    Phase,
    ScalarTerm,
    compose_edges,
    to_tensor,
    toggle,
    undouble,
)

_PI_PHASE = Phase(4)


@dataclass
class RewriteTrace:
    fusion: int = 0
    identity: int = 0
    local_complementation: int = 0
    pivot: int = 0
    hopf: int = 0
    copy: int = 0
    boundary_pivot: int = 0
    gadget_pivot: int = 0
    gadget_fusion: int = 0
    scalar_removal: int = 0
    final_vertices: int = 0
    final_edges: int = 0

    def as_dict(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


# ---------------------------------------------------------------------------
# graph-like form


def _fuse(g: Graph, u: int, v: int) -> None:
    """Merge spider ``v`` into ``u`` (they share a plain edge)."""
    g.phases[u] = g.phases[u] + g.phases[v]
    g.remove_edge(u, v)
    for n, et in list(g.adj[v].items()):
        g.add_edge(u, n, et)
    g.remove_vertex(v)


def _fuse_all(g: Graph, tr: RewriteTrace) -> int:
    count = 0
    for u in sorted(g.ty):
        if u not in g.ty or g.ty[u] != Z:
            continue
        while True:
            nxt = None
            for n, et in g.adj[u].items():
                if et == SIMPLE and g.ty[n] == Z:
                    nxt = n
                    break
            if nxt is None:
                break
            _fuse(g, u, nxt)
            count += 1
    tr.fusion += count
    return count


def _remove_ids(g: Graph, tr: RewriteTrace) -> int:
    count = 0
    for v in sorted(g.ty):
        if v not in g.ty or g.ty[v] != Z or len(g.adj[v]) != 2 or not g.phases[v].is_zero:
            continue
        (n1, e1), (n2, e2) = g.adj[v].items()
        if g.ty[n1] == BOUNDARY and g.ty[n2] == BOUNDARY:
            continue
        g.remove_vertex(v)
        g.add_edge(n1, n2, compose_edges(e1, e2))
        count += 1
    tr.identity += count
    return count


def to_graph_like(d: Graph, trace: RewriteTrace | None = None) -> Graph:
    """Undouble if needed, recolour X spiders to Z, fuse and drop identities."""
    tr = trace if trace is not None else RewriteTrace()
    hopf0 = d.hopf_count
    g = undouble(d) if d.doubled else d.copy()
    for u, v, et in g.edges():
        if (g.ty[u] == X) != (g.ty[v] == X):
            g.set_edge_type(u, v, toggle(et))
    for v in g.ty:
        if g.ty[v] == X:
            g.ty[v] = Z
    for u, v, et in g.edges():
        if g.ty[u] == BOUNDARY and g.ty[v] == BOUNDARY:
            g.remove_edge(u, v)
            w = g.add_vertex(Z)
            g.add_edge(u, w, SIMPLE)
            g.add_edge(w, v, et)
    while _fuse_all(g, tr) + _remove_ids(g, tr):
        pass
    tr.hopf += g.hopf_count - hopf0
    return g


# ---------------------------------------------------------------------------
# helpers


def _interior(g: Graph, v: int) -> bool:
    ty = g.ty
    return all(ty[n] != BOUNDARY for n in g.adj[v])


def _is_leaf(g: Graph, v: int) -> bool:
    return len(g.adj[v]) == 1


def _is_hub(g: Graph, v: int) -> bool:
    for n in g.adj[v]:
        if g.ty[n] == Z and len(g.adj[n]) == 1 and not g.phases[n].is_clifford:
            return True
    return False


def _pauli_bits(p: Phase) -> tuple[int, int]:
    """(parity mask, constant bit) of a Pauli phase."""
    return p.parity, p.exact // 4


def _toggle_edge(g: Graph, x: int, y: int) -> None:
    # a second Hadamard edge cancels an existing one (Hopf); add_edge resolves it
    g.add_edge(x, y, HADAMARD)


# ---------------------------------------------------------------------------
# rules


def _scalar_pass(g: Graph, tr: RewriteTrace) -> int:
    count = 0
    for v in sorted(g.ty):
        if v not in g.ty or g.ty[v] != Z:
            continue
        deg = len(g.adj[v])
        if deg == 0:
            p = g.phases[v]
            g.scalar.add_node(p.constant(), p.parity)
            g.remove_vertex(v)
            count += 1
        elif deg == 1:
            ((w, et),) = g.adj[v].items()
            if g.ty[w] != Z or len(g.adj[w]) != 1 or et != HADAMARD:
                continue
            pv, pw = g.phases[v], g.phases[w]
            if pv.is_pauli or pw.is_pauli:
                continue  # handled by the copy rule
            g.scalar.add_power(-1)
            g.scalar.add_phase_pair(pv.constant(), pw.constant(), pv.parity, pw.parity)
            g.remove_vertex(v)
            g.remove_vertex(w)
            count += 1
    tr.scalar_removal += count
    return count


def _copy_leaf(g: Graph, leaf: int, v: int) -> None:
    a, c = _pauli_bits(g.phases[leaf])
    pv = g.phases[v]
    sc = g.scalar
    sc.add_power(1)
    sc.add_phase_bit(pv.constant(), a, c)
    sc.add_sign_product(pv.parity, 0, a, c)
    state = Phase(4 * c, None, a)
    for w, et in list(g.adj[v].items()):
        if w == leaf:
            continue
        sc.add_power(-1)
        if g.ty[w] == Z and et == HADAMARD:
            g.phases[w] = g.phases[w] + state
        else:
            s = g.add_vertex(Z, state)
            g.add_edge(s, w, toggle(et) if g.ty[w] == BOUNDARY else HADAMARD)
    g.remove_vertex(leaf)
    g.remove_vertex(v)


def _copy_pass(g: Graph, tr: RewriteTrace) -> int:
    count = 0
    for v in sorted(g.ty):
        if v not in g.ty or g.ty[v] != Z or len(g.adj[v]) != 1 or not g.phases[v].is_pauli:
            continue
        ((w, et),) = g.adj[v].items()
        if g.ty[w] != Z or et != HADAMARD:
            continue
        _copy_leaf(g, v, w)
        count += 1
    tr.copy += count
    return count


def _lcomp(g: Graph, v: int) -> None:
    p = g.phases[v]
    s = 1 if p.exact == 2 else -1
    a = p.parity
    nbrs = list(g.adj[v])
    n = len(nbrs)
    g.scalar.mul(complex(math.cos(s * math.pi / 4), math.sin(s * math.pi / 4)))
    if a:
        g.scalar.terms.append(ScalarTerm.half_pi(-s, a))
    g.scalar.add_power((n - 1) * (n - 2) // 2)
    neg = Phase(-p.exact, None, a)
    for w in nbrs:
        g.phases[w] = g.phases[w] + neg
    g.remove_vertex(v)
    for i in range(n):
        for j in range(i + 1, n):
            _toggle_edge(g, nbrs[i], nbrs[j])


def _lcomp_pass(g: Graph, tr: RewriteTrace) -> int:
    count = 0
    for v in sorted(g.ty):
        if v not in g.ty or g.ty[v] != Z or not g.phases[v].is_proper_clifford:
            continue
        if not g.adj[v] or not _interior(g, v):
            continue
        _lcomp(g, v)
        count += 1
    tr.local_complementation += count
    return count


def _pivot(g: Graph, u: int, v: int) -> None:
    """Pivot on the Hadamard edge u-v; both spiders interior with Pauli phases."""
    pu, pv = g.phases[u], g.phases[v]
    nu = set(g.adj[u])
    nv = set(g.adj[v])
    nu.discard(v)
    nv.discard(u)
    shared = nu & nv
    only_u = sorted(nu - shared)
    only_v = sorted(nv - shared)
    shared = sorted(shared)
    k0, k1, k2 = len(only_u), len(only_v), len(shared)
    sc = g.scalar
    sc.add_power(k0 * k2 + k1 * k2 + k0 * k1 - (k0 + k1 + 2 * k2 - 1))
    au, cu = _pauli_bits(pu)
    av, cv = _pauli_bits(pv)
    sc.add_sign_product(au, cu, av, cv)
    for x in only_u:
        for y in only_v:
            _toggle_edge(g, x, y)
        for y in shared:
            _toggle_edge(g, x, y)
    for x in only_v:
        for y in shared:
            _toggle_edge(g, x, y)
    for x in only_u:
        g.phases[x] = g.phases[x] + pv
    for x in only_v:
        g.phases[x] = g.phases[x] + pu
    both = pu + pv + _PI_PHASE
    for x in shared:
        g.phases[x] = g.phases[x] + both
    g.remove_vertex(u)
    g.remove_vertex(v)


def _pivot_candidate(g: Graph, v: int) -> bool:
    return (
        g.ty[v] == Z
        and g.phases[v].is_pauli
        and len(g.adj[v]) > 1
        and _interior(g, v)
        and not _is_hub(g, v)
    )


def _pivot_pass(g: Graph, tr: RewriteTrace) -> int:
    count = 0
    for u in sorted(g.ty):
        if u not in g.ty or not _pivot_candidate(g, u):
            continue
        for v in sorted(g.adj[u]):
            if v > u and g.adj[u][v] == HADAMARD and _pivot_candidate(g, v):
                _pivot(g, u, v)
                count += 1
                break
    tr.pivot += count
    return count


def _unfuse_boundary(g: Graph, v: int) -> None:
    for b, et in list(g.adj[v].items()):
        if g.ty[b] == BOUNDARY:
            g.remove_edge(v, b)
            w = g.add_vertex(Z)
            g.add_edge(b, w, toggle(et))
            g.add_edge(w, v, HADAMARD)


def _boundary_pivot_pass(g: Graph, tr: RewriteTrace) -> int:
    count = 0
    for u in sorted(g.ty):
        if u not in g.ty or not _pivot_candidate(g, u):
            continue
        for v in sorted(g.adj[u]):
            if g.adj[u][v] != HADAMARD or g.ty[v] != Z or not g.phases[v].is_pauli:
                continue
            nb = [n for n in g.adj[v] if g.ty[n] == BOUNDARY]
            if len(nb) != 1 or _is_hub(g, v):
                continue
            _unfuse_boundary(g, v)
            _pivot(g, u, v)
            count += 1
            break
    tr.boundary_pivot += count
    return count


def _gadget_pivot_pass(g: Graph, tr: RewriteTrace) -> int:
    count = 0
    for u in sorted(g.ty):
        if u not in g.ty or not _pivot_candidate(g, u):
            continue
        for v in sorted(g.adj[u]):
            if g.adj[u][v] != HADAMARD or g.ty[v] != Z:
                continue
            pv = g.phases[v]
            if pv.is_clifford or len(g.adj[v]) < 2 or not _interior(g, v) or _is_hub(g, v):
                continue
            # move the non-Pauli part of v's phase onto a new gadget
            pauli = Phase(4 * (pv.exact // 4), None, pv.parity)
            leaf_phase = Phase(pv.exact % 4, pv.generic, 0)
            hub = g.add_vertex(Z)
            leaf = g.add_vertex(Z, leaf_phase)
            g.phases[v] = pauli
            g.add_edge(v, hub, HADAMARD)
            g.add_edge(hub, leaf, HADAMARD)
            _pivot(g, u, v)
            count += 1
            break
    tr.gadget_pivot += count
    return count


def _gadget_fusion_pass(g: Graph, tr: RewriteTrace) -> int:
    seen: dict[tuple, tuple[int, int]] = {}
    count = 0
    for leaf in sorted(g.ty):
        if leaf not in g.ty or g.ty[leaf] != Z or len(g.adj[leaf]) != 1:
            continue
        if g.phases[leaf].is_clifford:
            continue
        ((hub, et),) = g.adj[leaf].items()
        if et != HADAMARD or g.ty[hub] != Z or not g.phases[hub].is_pauli:
            continue
        support = [n for n in g.adj[hub] if n != leaf]
        if not support or any(
            g.ty[n] != Z or g.adj[hub][n] != HADAMARD or len(g.adj[n]) == 1 for n in support
        ):
            continue
        key = (frozenset(support), g.phases[hub])
        if key not in seen:
            seen[key] = (hub, leaf)
            continue
        _, keep_leaf = seen[key]
        g.phases[keep_leaf] = g.phases[keep_leaf] + g.phases[leaf]
        g.scalar.add_power(1 - len(support))
        g.remove_vertex(leaf)
        g.remove_vertex(hub)
        count += 1
    tr.gadget_fusion += count
    return count


def _needs_graph_like(g: Graph) -> bool:
    if g.doubled:
        return True
    for v, ty in g.ty.items():
        if ty == X:
            return True
        if ty == Z:
            for n, et in g.adj[v].items():
                if et == SIMPLE and g.ty[n] == Z:
                    return True
    return False


def clifford_simplify(d: Graph, trace: RewriteTrace | None = None) -> tuple[Graph, RewriteTrace]:
    """Rewrite to the Clifford fixed point; returns the new diagram and rule counts."""
    tr = trace if trace is not None else RewriteTrace()
    g = to_graph_like(d, tr) if _needs_graph_like(d) else d.copy()
    hopf0 = g.hopf_count
    while True:
        if _fuse_all(g, tr) + _remove_ids(g, tr):
            continue
        n = _scalar_pass(g, tr)
        n += _copy_pass(g, tr)
        n += _lcomp_pass(g, tr)
        n += _pivot_pass(g, tr)
        if n:
            continue
        n += _boundary_pivot_pass(g, tr)
        if n:
            continue
        n += _gadget_pivot_pass(g, tr)
        n += _gadget_fusion_pass(g, tr)
        if not n:
            break
        if g.scalar.is_zero:
            break
    tr.hopf += g.hopf_count - hopf0
    tr.final_vertices = g.num_vertices()
    tr.final_edges = g.num_edges()
    return g, tr


def simplify(d: Graph) -> Graph:
    return clifford_simplify(d)[0]


def verify_semantics(before: Graph, after: Graph, tol: float = 1e-9, seed: int = 0) -> bool:
    """Check that two diagrams have equal tensors for every parameter assignment.

    All assignments are enumerated when there are at most 10 parameters,
    otherwise 64 random assignments are used.
    """
    n = max(before.num_params, after.num_params)
    if n <= 10:
        assignments = range(1 << n)
    else:
        rng = np.random.default_rng(seed)
        assignments = [int.from_bytes(rng.bytes((n + 7) // 8), "little") % (1 << n) for _ in range(64)]
    for a in assignments:
        t1 = to_tensor(before, a)
        t2 = to_tensor(after, a)
        if t1.shape != t2.shape or not np.allclose(t1, t2, atol=tol, rtol=0):
            return False
    return True
