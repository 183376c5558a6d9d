from __future__ import annotations

import pytest
from helpers import valid_both_ways
from hypothesis import given, settings
from hypothesis import strategies as st

from wasmdiff.corpus import Corpus
from wasmdiff.generator import ENTRY_EXPORT, EmptyCorpus, GenConfig, generate_binary
from wasmdiff.mutator import MutationPlan
from wasmdiff.wasm import ValType as T, decode_module
from wasmdiff.wasm.oracle import independent_validate

PRIMARY = [T.I32, T.I64, T.F32, T.F64, T.V128]


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1))
def test_generated_binaries_validate(corpus, pool, seed):
    gb = generate_binary(corpus, GenConfig(seed=seed), pool)
    assert independent_validate(gb.bytes)[0]
    assert decode_module(gb.bytes) == gb.moduleIR


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1))
def test_generated_mutated_binaries_validate(corpus, pool, seed):
    plan = MutationPlan(astBudget=4, wasiImports=True)
    gb = generate_binary(corpus, GenConfig(seed=seed, mutation=plan), pool)
    assert valid_both_ways(gb.moduleIR)


def test_generation_is_deterministic_per_seed(corpus, pool):
    a = generate_binary(corpus, GenConfig(seed=11), pool)
    b = generate_binary(corpus, GenConfig(seed=11), pool)
    c = generate_binary(corpus, GenConfig(seed=12), pool)
    assert a.bytes == b.bytes and a.lineage == b.lineage
    assert a.bytes != c.bytes


@pytest.mark.parametrize("results", [[t] for t in PRIMARY] + [[T.I32, T.V128, T.F64]])
def test_entry_signature_follows_config(corpus, pool, results):
    gb = generate_binary(corpus, GenConfig(seed=3, entryResultTypes=results), pool)
    m = gb.moduleIR
    (entry,) = [e for e in m.exports if e.name == ENTRY_EXPORT]
    sig = m.func_type(entry.index)
    assert sig.params == () and list(sig.results) == results


def _direct_call_depth(module, func=0, seen=()):
    base = module.num_imported_funcs
    code = module.codes[func - base]
    callees = {i.immediates[0] for i in code.body if i.opcode == "call"}
    assert func not in seen, "recursive call chain"
    return max((1 + _direct_call_depth(module, c, seen + (func,)) for c in callees if c >= base), default=0)


@pytest.mark.parametrize("depth", [1, 2, 3])
def test_call_depth_is_bounded(corpus, pool, depth):
    for seed in range(40):
        gb = generate_binary(corpus, GenConfig(seed=seed, maxCallDepth=depth), pool)
        assert _direct_call_depth(gb.moduleIR) <= depth


def test_memory_respects_page_cap(corpus, pool):
    for seed in range(60):
        m = generate_binary(corpus, GenConfig(seed=seed, memoryPageCap=2), pool).moduleIR
        for lim in m.memories:
            assert lim.min <= lim.max <= 2


def test_lineage_points_into_corpus(corpus, pool):
    gb = generate_binary(corpus, GenConfig(seed=5, subtreesPerFunction=6), pool)
    assert gb.lineage["seed"] == 5
    assert gb.lineage["fingerprints"]
    assert all(fp in corpus for fp in gb.lineage["fingerprints"])


def test_fuel_guard_can_be_disabled(corpus, pool):
    with_fuel = generate_binary(corpus, GenConfig(seed=8), pool).moduleIR
    without = generate_binary(corpus, GenConfig(seed=8, loopFuel=None), pool).moduleIR
    assert len(with_fuel.globals) == len(without.globals) + 1


def test_empty_corpus_and_bad_config_are_rejected():
    with pytest.raises(EmptyCorpus):
        generate_binary(Corpus(), GenConfig())
    with pytest.raises(ValueError):
        GenConfig(maxCallDepth=0)
    with pytest.raises(ValueError):
        GenConfig(memoryPageCap=0)
