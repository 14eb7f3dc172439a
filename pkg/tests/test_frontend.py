import itertools

import pytest

from conftest import spec
from kyaml import CORPUS
from kyaml.frontend import (
    DuplicateName,
    MissingName,
    ResolvedBlock,
    SpecValidationError,
    TermParse,
    UnknownKey,
    YamlSyntax,
    load_document,
    load_spec,
    resolve_inheritance,
    validate,
)
from kyaml.kterm import eval_concrete, parse_term

SIMPLE00 = """
- name: a
  if:
    match:
      callData: '#abiCallData2("execute()", ())'
  then:
    match:
      statusCode: EVMC_SUCCESS
      output: "#buf(32, 5)"
"""


def codes(diags):
    return sorted(d.code for d in diags)


# --- loading ----------------------------------------------------------------


def test_load_one_block():
    blocks = load_document(SIMPLE00)
    assert len(blocks) == 1
    b = blocks[0]
    assert b.name == "a" and b.inherits is None
    assert set(b.post.match) == {"statusCode", "output"}
    assert b.post.match["output"] == parse_term("#buf(32, 5)")


def test_load_empty_document():
    assert load_document("[]") == []
    assert load_document("") == []


def test_load_errors():
    with pytest.raises(DuplicateName):
        load_document("- name: a\n- name: a\n")
    with pytest.raises(MissingName):
        load_document("- if: {}\n")
    with pytest.raises(UnknownKey):
        load_document("- name: a\n  ensures: {}\n")
    with pytest.raises(UnknownKey):
        load_document("- name: a\n  if:\n    matches: {}\n")
    with pytest.raises(YamlSyntax):
        load_document("- name: [unclosed\n")
    with pytest.raises(YamlSyntax):
        load_document("name: a\n")
    with pytest.raises(UnknownKey):
        load_document("- name: a\n  inherits: [b, c]\n")


def test_term_parse_error_names_block_and_cell():
    with pytest.raises(TermParse) as exc:
        load_document("- name: blk\n  then:\n    match:\n      output: 'chop(1, 2)'\n")
    assert "blk" in str(exc.value) and "then.match.output" in str(exc.value)


def test_not_conjunct_form():
    blocks = load_document("- name: a\n  if:\n    where:\n      - not: 'A0 >Int 0'\n")
    assert blocks[0].pre.where == (parse_term("notBool (A0 >Int 0)"),)


# --- validation -------------------------------------------------------------


def test_self_inheritance_is_a_cycle():
    assert codes(validate(load_document("- name: a\n  inherits: a\n"))) == ["cycle"]


def test_longer_cycle_reported_once():
    doc = "- name: a\n  inherits: b\n- name: b\n  inherits: c\n- name: c\n  inherits: a\n"
    assert codes(validate(load_document(doc))) == ["cycle"]


def test_unknown_cell():
    diags = validate(load_document("- name: a\n  if:\n    match:\n      bogusCell: 1\n"))
    assert codes(diags) == ["unknown-cell"]


def test_dangling_inherits():
    assert codes(validate(load_document("- name: a\n  inherits: nope\n"))) == ["dangling-inherits"]


def test_unbound_then_variable_is_a_warning():
    diags = validate(load_document("- name: a\n  then:\n    match:\n      output: '#buf(32, X)'\n"))
    assert [(d.severity, d.code) for d in diags] == [("warning", "unbound-variable")]


def test_sort_conflict():
    doc = "- name: a\n  if:\n    match:\n      storage: S\n    where:\n      - 'S >Int 0'\n"
    assert "sort" in codes(validate(load_document(doc)))


def test_corpus_specs_validate_cleanly():
    for path in sorted(CORPUS.glob("*.yaml")):
        assert validate(load_spec(path)) == [], path.name


# --- resolution -------------------------------------------------------------

PARENT_CHILD = """
- name: parent
  if:
    where: ["A0 <Int pow256", "A0 <Int 6"]
- name: child
  inherits: parent
  if:
    where: ["A0 >Int 0"]
"""


def test_where_lists_concatenate_parent_first():
    resolved = {b.name: b for b in resolve_inheritance(load_document(PARENT_CHILD))}
    child = resolved["child"]
    assert child.pre.where == tuple(parse_term(t) for t in ("A0 <Int pow256", "A0 <Int 6", "A0 >Int 0"))
    assert resolved["parent"].abstract and not child.abstract


def test_resolution_agrees_with_brute_force_on_3_bits():
    child = {b.name: b for b in resolve_inheritance(load_document(PARENT_CHILD))}["child"]
    doc = load_document(PARENT_CHILD)
    parent_where, child_where = doc[0].pre.where, doc[1].pre.where
    for a0 in range(8):
        env = {"A0": a0}
        resolved_admits = all(eval_concrete(t, env) for t in child.pre.where)
        by_hand = all(eval_concrete(t, env) for t in parent_where) and all(eval_concrete(t, env) for t in child_where)
        assert resolved_admits == by_hand == (0 < a0 < 6)


def test_block_without_parent_is_unchanged():
    b = load_document(SIMPLE00)[0]
    (r,) = resolve_inheritance([b])
    assert (r.name, r.pre, r.post, r.abstract) == (b.name, b.pre, b.post, False)


def test_verbose_and_inherits_forms_resolve_alike():
    verbose = {b.name: b for b in resolve_inheritance(load_spec(CORPUS / "requires00-verbose.yaml"))}
    inherits = {b.name: b for b in resolve_inheritance(load_spec(CORPUS / "requires00.yaml"))}
    assert inherits["base"].abstract
    for name in ("a0gt0", "a0le0"):
        assert verbose[name] == inherits[name]


def test_resolution_is_idempotent():
    once = resolve_inheritance(load_spec(CORPUS / "call00.yaml"))
    assert all(isinstance(b, ResolvedBlock) for b in once)
    assert resolve_inheritance(once) == once


def test_child_overrides_cell_wholesale_and_untouched_cells_stay_absent():
    doc = """
- name: p
  if:
    match:
      storage: "store(S, 0, 1)"
  then:
    match:
      output: "#buf(32, 1)"
- name: c
  inherits: p
  then:
    match:
      output: "#buf(32, 2)"
"""
    c = {b.name: b for b in resolve_inheritance(load_document(doc))}["c"]
    assert c.post.match == {"output": parse_term("#buf(32, 2)")}
    assert c.pre.match == {"storage": parse_term("store(S, 0, 1)")}
    for cell in ("callLog", "refund", "writeLog"):
        assert cell not in c.pre.match and cell not in c.post.match


def test_multi_level_inheritance():
    doc = "- name: a\n  if: {where: ['X >Int 0']}\n- name: b\n  inherits: a\n  if: {where: ['X <Int 9']}\n" \
          "- name: c\n  inherits: b\n  if: {where: ['X =/=Int 4']}\n"
    c = {b.name: b for b in resolve_inheritance(load_document(doc))}["c"]
    assert len(c.pre.where) == 3


def test_resolution_refuses_invalid_blocks():
    with pytest.raises(SpecValidationError):
        resolve_inheritance(load_document("- name: a\n  inherits: a\n"))


def test_claim_count_of_corpus_specs():
    assert len(spec("ecrecoverloop00")) == 3
    assert len(spec("call00")) == 7
    assert list(itertools.chain(spec("requires00").names())) == ["a0gt0", "a0le0"]
