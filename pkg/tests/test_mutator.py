from __future__ import annotations

import random

import pytest
from helpers import mutate_functions, seed_paths, valid_both_ways
from hypothesis import given, settings
from hypothesis import strategies as st

from wasmdiff.generator import GenConfig, generate_binary
from wasmdiff.mutator import (
    AST_STRATEGIES,
    MODULE_STRATEGIES,
    RESERVED_EXPORTS,
    SWAP_CLASSES,
    MutationPlan,
    boundary_v128,
    fresh_export_name,
    mutate_module,
    simd_analogue,
)
from wasmdiff.wasm import decode_module, instruction_meta, validate_module

SEEDS = [decode_module(p.read_bytes()) for p in seed_paths()]


@pytest.mark.parametrize("strategy", AST_STRATEGIES)
@settings(max_examples=40)
@given(st.integers(0, len(SEEDS) - 1), st.integers(0, 2**32 - 1))
def test_ast_strategy_preserves_validity(strategy, which, seed):
    from wasmdiff.wasm.edit import copy_module

    module = copy_module(SEEDS[which])
    plan = MutationPlan(astBudget=6, moduleOps=frozenset(), astOps=(strategy,))
    log = []
    mutate_functions(module, plan, random.Random(seed), log)
    assert all(e["strategy"] == strategy for e in log)
    assert valid_both_ways(module)


@pytest.mark.parametrize("strategy", sorted(MODULE_STRATEGIES))
@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1))
def test_module_strategy_preserves_validity(corpus, pool, strategy, seed):
    gb = generate_binary(corpus, GenConfig(seed=seed), pool)
    log = []
    plan = MutationPlan(moduleOps=frozenset({strategy}), wasiImports=True)
    mutated = mutate_module(gb.moduleIR, plan, random.Random(seed), log)
    assert all(e["strategy"] == strategy for e in log)
    assert valid_both_ways(mutated)
    assert validate_module(gb.moduleIR).ok  # the input is left untouched


def test_module_mutation_keeps_reserved_exports(corpus, pool):
    for seed in range(30):
        gb = generate_binary(corpus, GenConfig(seed=seed), pool)
        before = [(e.name, e.kind, e.index) for e in gb.moduleIR.exports]
        m = mutate_module(gb.moduleIR, MutationPlan(), random.Random(seed))
        kept = [(e.name, e.kind, e.index) for e in m.exports if e.name in RESERVED_EXPORTS]
        assert kept == before
        names = [e.name for e in m.exports]
        assert len(names) == len(set(names))


def test_swap_classes_share_exact_stack_types():
    assert "i32.sub" in SWAP_CLASSES["i32.add"]
    for op, others in SWAP_CLASSES.items():
        for other in others:
            assert instruction_meta(op).stack == instruction_meta(other).stack


def test_simd_analogues():
    assert simd_analogue("i32.add") == "i32x4.add"
    assert simd_analogue("f64.mul") == "f64x2.mul"
    assert simd_analogue("call") is None


@given(st.integers(0, 2**32 - 1))
def test_boundary_vectors_and_fresh_names(seed):
    rng = random.Random(seed)
    assert len(boundary_v128(rng)) == 16
    taken = {"a", "b"}
    name = fresh_export_name(rng, taken)
    assert name not in taken and name not in RESERVED_EXPORTS


@pytest.mark.parametrize("kwargs", [
    {"validityBreaking": True},
    {"moduleOps": frozenset({"Nonsense"})},
    {"astOps": ("shuffle",)},
    {"astBudget": -1},
])
def test_plan_rejects_bad_settings(kwargs):
    with pytest.raises(ValueError):
        MutationPlan(**kwargs)
