from __future__ import annotations

import pytest
from helpers import FIXTURES, seed_paths
from hypothesis import given
from hypothesis import strategies as st

from wasmdiff.corpus import (
    Corpus,
    build_corpus,
    fingerprint,
    load_corpus,
    parse_asts,
    roots_of_module,
    save_corpus,
    serialize_roots,
)
from wasmdiff.wasm import FuncType, Instruction as I, ValType as T, WasmModule, decode_module, validate_module
from wasmdiff.wasm.types import Code, Export


@pytest.mark.parametrize("path", seed_paths(), ids=lambda p: p.name)
def test_every_seed_function_serializes_back_exactly(path):
    module = decode_module(path.read_bytes())
    parsed = roots_of_module(module)
    assert len(parsed) == len(module.codes)
    for i, roots in parsed:
        assert serialize_roots(roots) == list(module.codes[i].body)


def test_every_node_has_as_many_operands_as_its_stack_type_consumes(corpus):
    for root in corpus.entries:
        for node in root.walk():
            st_ = node.context.stackType
            if st_.concrete:
                assert node.n_operands == len(st_.params), node.instruction


def test_factorial_yields_three_entries():
    corpus = build_corpus([(FIXTURES / "factorial.wasm").read_bytes()])
    assert len(corpus) == 3
    assert sorted(r.opcode for r in corpus.entries) == ["block", "local.get", "local.set"]


def test_fingerprint_ignores_immediates():
    module = decode_module((FIXTURES / "factorial.wasm").read_bytes())
    (_, roots), = roots_of_module(module)
    sets = [r for r in roots if r.opcode == "local.set"]
    assert len(sets) == 2 and sets[0].instruction != sets[1].instruction
    assert fingerprint(sets[0]) == fingerprint(sets[1])


def test_duplicated_seed_set_does_not_grow_corpus(seed_bytes, corpus):
    doubled = build_corpus(seed_bytes + seed_bytes)
    assert doubled.fingerprints == corpus.fingerprints
    assert doubled.binaries_seen == 2 * corpus.binaries_seen


def test_corpus_has_no_duplicate_fingerprints(corpus):
    assert len(set(corpus.fingerprints)) == len(corpus) > 0
    assert all(fingerprint(e) == fp for e, fp in zip(corpus.entries, corpus.fingerprints))


def test_undecodable_and_invalid_binaries_are_skipped():
    bad = WasmModule(types=[FuncType((), (T.I32,))], functions=[0],
                     codes=[Code((), (I("i64.const", (1,)),))])
    from wasmdiff.wasm import encode_module

    corpus = build_corpus([b"not wasm", encode_module(bad)])
    assert len(corpus) == 0
    assert corpus.binaries_skipped == 2 and len(corpus.diagnostics) == 2


def test_save_load_roundtrip(tmp_path, corpus):
    save_corpus(corpus, tmp_path)
    loaded = load_corpus(tmp_path)
    assert loaded.fingerprints == corpus.fingerprints
    assert loaded.provenance == corpus.provenance
    for a, b in zip(loaded.entries, corpus.entries):
        assert a.serialize() == b.serialize()
        assert a.context == b.context
    save_corpus(loaded, tmp_path)
    assert load_corpus(tmp_path).fingerprints == corpus.fingerprints


def test_load_rejects_foreign_format(tmp_path):
    (tmp_path / "index.json").write_text('{"format": "other", "version": 1, "entries": []}')
    with pytest.raises(ValueError):
        load_corpus(tmp_path)


# i32 expression trees rendered as instruction sequences.
_LEAF = st.one_of(
    st.integers(-(1 << 31), (1 << 31) - 1).map(lambda v: [I("i32.const", (v,))]),
    st.just([I("local.get", (0,))]),
)


def _extend(children):
    unary = children.map(lambda c: c + [I("i32.eqz")])
    binary = st.tuples(children, children, st.sampled_from(["i32.add", "i32.mul", "i32.xor", "i32.lt_s"])).map(
        lambda t: t[0] + t[1] + [I(t[2])])
    tee = children.map(lambda c: c + [I("local.tee", (0,))])
    select = st.tuples(children, children, children).map(lambda t: t[0] + t[1] + t[2] + [I("select")])
    block = children.map(lambda c: [I("block", (T.I32,))] + c + [I("end")])
    return st.one_of(unary, binary, tee, select, block)


_EXPR = st.recursive(_LEAF, _extend, max_leaves=12)


@given(st.lists(_EXPR, min_size=1, max_size=4))
def test_parsed_roots_match_top_level_expressions(exprs):
    body = [ins for e in exprs[:-1] for ins in e + [I("drop")]] + exprs[-1]
    module = WasmModule(types=[FuncType((), (T.I32,))], functions=[0],
                        exports=[Export("main", "func", 0)], codes=[Code(((1, T.I32),), tuple(body))])
    assert validate_module(module).ok
    roots = parse_asts(module.codes[0].body, module, 0)
    assert serialize_roots(roots) == body
    assert len(roots) == len(exprs)


def test_admit_reports_novelty():
    module = decode_module((FIXTURES / "factorial.wasm").read_bytes())
    (_, roots), = roots_of_module(module)
    c = Corpus()
    assert [c.admit(r, "x") for r in roots] == [True, False, True, True]
    assert not any(c.admit(r, "y") for r in roots)
