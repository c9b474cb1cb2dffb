import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fixtures import MERGE_026, NOISELESS_MEMORY, TWO_BLOCK
from helpers import random_circuit
from zxqec.circuit_ir import parse_circuit
from zxqec.compile import (
    CAT5,
    PAIR,
    SINGLE,
    CompileError,
    ErrorMechanism,
    MagicGroup,
    assemble_tensors,
    basis_reduce,
    clifford_terms,
    compile_sampler,
    decompose_magic,
    export_dem,
    plan_decomposition,
    reduce_channels,
    static_term_count,
    xor_convolve,
)
from zxqec.lowering import ChannelGroup
from zxqec.zx_core import BOUNDARY, HADAMARD, Z, Graph, Phase, ScalarLedger, ScalarTerm, to_tensor


def magic_star(thetas, clifford=None, link=True):
    """Z spiders with the given magic angles, each on its own output, joined in a chain."""
    g = Graph()
    vs = []
    for i, th in enumerate(thetas):
        extra = clifford[i] if clifford is not None else 0
        v = g.add_vertex(Z, Phase(extra) + Phase.from_radians(th))
        b = g.add_vertex(BOUNDARY)
        g.add_edge(b, v)
        g.outputs.append(b)
        vs.append(v)
    if link:
        for a, b in zip(vs, vs[1:]):
            g.add_edge(a, b, HADAMARD)
    return g, vs


def decomposed_tensor(g, group):
    return sum(w * to_tensor(h) for w, h in decompose_magic(g, group))


# -- basis reduction ---------------------------------------------------------


def test_basis_reduce_dependent_parities():
    bt = basis_reduce([0b011, 0b110, 0b101])
    assert bt.rank == 2
    assert bt.express(0b101) == bt.express(0b011) ^ bt.express(0b110)


@pytest.mark.parametrize("parities,rank", [([0b1], 1), ([], 0), ([0b1, 0b1], 1), ([0b1, 0b10, 0b100], 3)])
def test_basis_reduce_rank(parities, rank):
    assert basis_reduce(parities).rank == rank


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 255), max_size=10))
def test_basis_transform_is_consistent(parities):
    bt = basis_reduce(parities)
    for e in range(8):
        f = bt.f_from_e(1 << e)
        for p in parities:
            assert (bin(p & (1 << e)).count("1") & 1) == (bin(bt.express(p) & f).count("1") & 1)


# -- channel reduction -------------------------------------------------------


def test_xor_merge_of_two_flips():
    (m,) = reduce_channels([ChannelGroup((0,), [0.9, 0.1]), ChannelGroup((1,), [0.8, 0.2])], [1, 1])
    assert m.basis == (1,)
    assert m.probability == pytest.approx(0.1 * 0.8 + 0.2 * 0.9, abs=1e-15)


def test_null_channel_removed():
    mechs = reduce_channels([ChannelGroup((0,), [0.9, 0.1]), ChannelGroup((1,), [0.5, 0.5])], [1, 0])
    assert [m.basis for m in mechs] == [(1,)]


def test_zero_probability_mechanism_dropped():
    assert reduce_channels([ChannelGroup((0,), [1.0, 0.0])], [1]) == []


def test_subset_absorption_matches_enumeration():
    chans = [
        ChannelGroup((0,), [0.9, 0.1]),
        ChannelGroup((1, 2), [0.7, 0.1, 0.15, 0.05]),
    ]
    sig = [0b01, 0b01, 0b10]
    (m,) = reduce_channels(chans, sig)
    # brute force over the three bits
    want = np.zeros(4)
    for e0, k in itertools.product(range(2), range(4)):
        p = chans[0].table[e0] * chans[1].table[k]
        f = (sig[0] if e0 else 0) ^ (sig[1] if k & 1 else 0) ^ (sig[2] if k & 2 else 0)
        want[f] += p
    got = np.zeros(4)
    for k, mask in enumerate(m.pattern_masks()):
        got[mask] += m.table[k]
    assert np.allclose(got, want, atol=1e-15)


def test_xor_convolve_is_commutative_and_normalized():
    rng = np.random.default_rng(0)
    a, b = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4))
    assert np.allclose(xor_convolve(a, b), xor_convolve(b, a))
    assert xor_convolve(a, b).sum() == pytest.approx(1.0)


# -- magic planning and decomposition ----------------------------------------


@pytest.mark.parametrize("n,kinds,chi", [(1, [SINGLE], 2), (2, [PAIR], 2), (0, [], 1), (3, [PAIR, SINGLE], 4)])
def test_plan_for_t_gates(n, kinds, chi):
    g, _ = magic_star([math.pi / 4] * n)
    plan = plan_decomposition(g)
    assert [grp.kind for grp in plan.groups] == kinds
    assert plan.total_terms == chi


def test_plan_cat5_for_generic_angles():
    g, _ = magic_star([0.3] * 5)
    plan = plan_decomposition(g)
    assert [grp.kind for grp in plan.groups] == [CAT5]
    assert plan.total_terms == 3 * 2


def test_cat5_rate_approaches_limit():
    rates = [math.log2(static_term_count(4 * k + 1, False)) / (4 * k + 1) for k in (10, 100, 1000)]
    assert rates[-1] == pytest.approx(math.log2(3) / 4, abs=1e-3)
    assert math.log2(3) / 4 == pytest.approx(0.396, abs=1e-3)


def test_single_t_identity():
    g, (v,) = magic_star([math.pi / 4])
    assert np.allclose(decomposed_tensor(g, MagicGroup(SINGLE, (v,))), to_tensor(g), atol=1e-12)


def test_pair_t_identity():
    g, vs = magic_star([math.pi / 4] * 2, clifford=[2, 4])
    assert np.allclose(decomposed_tensor(g, MagicGroup(PAIR, tuple(vs))), to_tensor(g), atol=1e-12)


def test_cat5_identity_at_eighth_turn():
    g, vs = magic_star([math.pi / 8] * 5)
    terms = decompose_magic(g, MagicGroup(CAT5, tuple(vs)))
    assert len(terms) == 3
    assert np.allclose(sum(w * to_tensor(h) for w, h in terms), to_tensor(g), atol=1e-12)


def test_group_rejects_mixed_angles():
    g, vs = magic_star([0.3, 0.4])
    with pytest.raises(CompileError):
        decompose_magic(g, MagicGroup(PAIR, tuple(vs)))


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, math.pi / 4 - 0.01), st.lists(st.integers(0, 7), min_size=5, max_size=5))
def test_cat5_identity_random(theta, clifford):
    g, vs = magic_star([theta] * 5, clifford=[2 * (c // 2) for c in clifford])
    key = {g.phases[v].magic_split()[0] for v in vs}
    assert len(key) == 1
    assert np.allclose(decomposed_tensor(g, MagicGroup(CAT5, tuple(vs))), to_tensor(g), atol=1e-10)


def test_clifford_terms_of_closed_diagram():
    g, vs = magic_star([math.pi / 4, math.pi / 4, 0.3], link=True)
    for b in list(g.outputs):
        g.remove_vertex(b)
    g.outputs = []
    total = sum(w * led.value(0) for w, led in clifford_terms(g))
    assert total == pytest.approx(complex(to_tensor(g)), abs=1e-10)


# -- tensor assembly ---------------------------------------------------------


def test_assemble_single_phase_pair():
    led = ScalarLedger(terms=[ScalarTerm.phase_pair(0, 0, 0b1, 0)])
    t = assemble_tensors([(1.0, led)], 1)
    assert (t.num_terms, t.table.shape[1]) == (1, 1)
    assert t.evaluate(0) == pytest.approx(2)
    assert t.evaluate(1) == pytest.approx(2)


@pytest.mark.parametrize("a,expected", [(0, 1), (1, 1j)])
def test_assemble_half_pi(a, expected):
    t = assemble_tensors([(1.0, ScalarLedger(terms=[ScalarTerm.half_pi(1, 0b1)]))], 1)
    assert t.evaluate(a) == pytest.approx(expected)


def test_assemble_empty_ledger():
    t = assemble_tensors([(0.5 + 0j, ScalarLedger())], 0)
    assert (t.num_terms, t.table.shape[1]) == (1, 0)
    assert t.evaluate(0) == pytest.approx(0.5)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_assemble_matches_ledger(seed):
    rng = np.random.default_rng(seed)
    terms = []
    for _ in range(3):
        led = ScalarLedger(constant=complex(rng.normal(), rng.normal()), sqrt2_power=int(rng.integers(-3, 3)))
        for _ in range(int(rng.integers(0, 4))):
            a, b = (int(x) for x in rng.integers(0, 16, 2))
            led.terms.append(
                [
                    ScalarTerm.node(float(rng.normal()), a),
                    ScalarTerm.half_pi(int(rng.choice([-1, 1])), a),
                    ScalarTerm.pi_pair(a, b),
                    ScalarTerm.phase_pair(float(rng.normal()), float(rng.normal()), a, b),
                ][int(rng.integers(4))]
            )
        terms.append((complex(rng.normal()), led))
    t = assemble_tensors(terms, 4)
    for x in range(16):
        assert t.evaluate(x) == pytest.approx(sum(w * led.value(x) for w, led in terms), abs=1e-10)


# -- full compilation --------------------------------------------------------


def test_two_block_structure():
    cs = compile_sampler(TWO_BLOCK)
    assert len(cs.direct) == 6
    assert len(cs.components) == 1
    (comp,) = cs.components
    assert comp.outputs == [6, 7]
    assert len(comp.chain) == 3
    assert cs.stats.num_magic == 4


def test_noiseless_memory_is_direct_and_constant():
    cs = compile_sampler(NOISELESS_MEMORY)
    assert not cs.components
    assert all(d.parity == 0 and d.const == 0 for d in cs.direct)
    assert cs.pure_clifford_deterministic


def test_magic_detector_is_autoregressive():
    cs = compile_sampler("RX 0\nT 0\nMX 0\nDETECTOR rec[-1]")
    assert not cs.direct
    assert cs.components[0].outputs == [0]
    assert not cs.separation_complete


def test_bell_pair_chain():
    cs = compile_sampler("H 0\nCX 0 1\nM 0 1", "measurements")
    (comp,) = cs.components
    assert comp.outputs == [0, 1]
    assert len(comp.chain) == 3


def test_dem_merge_line():
    assert export_dem(compile_sampler(MERGE_026)).splitlines() == ["error(0.26) D0"]


def test_dem_detector_and_observable_targets():
    text = export_dem(compile_sampler("X_ERROR(0.125) 0\nM 0 1\nDETECTOR rec[-1]\nDETECTOR rec[-2]\nOBSERVABLE_INCLUDE(0) rec[-2]"))
    assert text.splitlines() == ["error(0.125) D1 L0"]


def test_dem_empty_model():
    assert export_dem(compile_sampler("M 0\nDETECTOR rec[-1]")) == ""


def test_dem_rejects_measurement_mode():
    with pytest.raises(CompileError):
        export_dem(compile_sampler("M 0", "measurements"))


@pytest.mark.parametrize("seed", range(10))
def test_flip_matrix_matches_mechanisms(seed):
    rng = np.random.default_rng(seed)
    cs = compile_sampler(random_circuit(rng, n_qubits=3, magic=False))
    m = cs.flip_matrix()
    assert m.shape == (cs.num_outputs, len(cs.mechanisms))
