import itertools
from pathlib import Path

import pytest

from portolog.dialects import load_profiles
from portolog.errors import PolicyError, ReadError, UnbalancedConditional, UnknownDialectInExpects
from portolog.preprocessor import (KEPT, SHIPPED_LIBRARY, expand_program, expand_source,
                                   handle_directive, new_context, resolve_library)
from portolog.reader import parse_term, read_clauses
from portolog.ops import default_table
from portolog.terms import Atom
from portolog.writer import write_term

DATA = Path(__file__).parent / "data"
STORE = load_profiles()
PROOF_COUNT = (DATA / "proof_count.pl").read_text()

NB_CLAUSE = parse_term("""proof_count(Goal, Count) :-
        State = count(0),
        (   call(Goal), arg(1, State, C0), C1 is C0 + 1, nb_setarg(1, State, C1), fail
        ;   arg(1, State, Count)
        )""")
FINDALL_CLAUSE = parse_term("proof_count(Goal, Count) :- findall(x, Goal, Xs), length(Xs, Count)")
META = parse_term(":- meta_predicate proof_count(0, -)")


def expand(src, target="swi", **kw):
    return expand_source(src, target, STORE, **kw)


def texts(prog):
    return [write_term(t) for t in prog.terms]


# -- branch selection --------------------------------------------------------

@pytest.mark.parametrize("target, clause", [
    ("swi", NB_CLAUSE), ("yap", NB_CLAUSE), ("sicstus", FINDALL_CLAUSE), ("ciao", FINDALL_CLAUSE),
])
def test_proof_count_branch(target, clause):
    prog = expand_program(DATA / "proof_count.pl", target, STORE)
    assert prog.terms == [META, clause]
    assert prog.diagnostics == []
    assert all(it.provenance == KEPT for it in prog.items)


def test_identity_pass():
    src = "a. b(X) :- c(X), d.\n:- dynamic foo/1.\nx --> [y].\n"
    prog = expand(src)
    assert prog.terms == list(read_clauses(src, default_table()))


def test_lone_endif():
    with pytest.raises(UnbalancedConditional) as e:
        expand(":- endif.\n")
    assert e.value.pos.line == 1


@pytest.mark.parametrize("src, line", [
    ("a.\n:- else.\n", 2),
    ("a.\n:- if(true).\nb.\n", 2),
    (":- if(true).\n:- else.\n:- else.\n:- endif.\n", 3),
    (":- if(true).\n:- else.\n:- elif(true).\n:- endif.\n", 3),
    (":- if(true).\n:- if(fail).\n:- endif.\n", 1),
])
def test_unbalanced_positions(src, line):
    with pytest.raises(UnbalancedConditional) as e:
        expand(src)
    assert e.value.pos is not None and e.value.pos.line == line


def test_if_fail_op_is_inert():
    prog = expand(":- if(fail).\n:- op(9, xfx, zz).\n:- endif.\nx.\n")
    assert prog.terms == [Atom("x")]
    with pytest.raises(ReadError):
        expand(":- if(fail).\n:- op(9, xfx, zz).\n:- endif.\nx :- a zz b.\n")


def test_active_op_directive_is_applied_and_emitted():
    prog = expand(":- op(700, xfx, zz).\nx :- a zz b.\n")
    assert prog.render() == ":-op(700,xfx,zz).\nx:-a zz b.\n"


def _nested_source(a, b):
    return (f":- if({a}).\nouter1.\n:- if({b}).\ninner_then.\n:- else.\ninner_else.\n"
            f":- endif.\nouter2.\n:- else.\nouter_else.\n:- endif.\n")


def _nested_oracle(a, b):
    if not a:
        return ["outer_else"]
    return ["outer1", "inner_then" if b else "inner_else", "outer2"]


@pytest.mark.parametrize("a, b", list(itertools.product([True, False], repeat=2)))
def test_nesting_oracle(a, b):
    src = _nested_source("true" if a else "fail", "true" if b else "fail")
    assert texts(expand(src)) == _nested_oracle(a, b)


@pytest.mark.parametrize("target, expected", [
    ("swi", "swi_branch"), ("yap", "yap_branch"), ("sicstus", "other"), ("ciao", "other"),
])
def test_elif(target, expected):
    src = (":- if(current_prolog_flag(dialect, swi)).\nswi_branch.\n"
           ":- elif(current_prolog_flag(dialect, yap)).\nyap_branch.\n"
           ":- else.\nother.\n:- endif.\n")
    assert texts(expand(src, target)) == [expected]


def test_first_true_elif_wins():
    src = ":- if(fail).\na.\n:- elif(true).\nb.\n:- elif(true).\nc.\n:- else.\nd.\n:- endif.\n"
    assert texts(expand(src)) == ["b"]


def test_conditions_inside_skipped_region_are_not_evaluated():
    src = ":- if(fail).\n:- if(mystery_goal).\na.\n:- endif.\n:- endif.\nb.\n"
    prog = expand(src, unknown_policy="error")
    assert texts(prog) == ["b"]


# -- unknown conditions --------------------------------------------------------

def test_unknown_condition_warns_and_takes_else():
    prog = expand(":- if(mystery_goal).\na.\n:- else.\nb.\n:- endif.\n")
    assert texts(prog) == ["b"]
    assert [d.code for d in prog.diagnostics] == ["UNKNOWN_CONDITION"]
    assert prog.diagnostics[0].pos.line == 1


def test_unknown_condition_error_policy():
    with pytest.raises(PolicyError):
        expand(":- if(mystery_goal).\na.\n:- endif.\n", unknown_policy="error")


# -- skipped regions -----------------------------------------------------------

def test_skipped_region_syntax_is_a_warning():
    src = ":- if(fail).\nfoo(a b c).\n:- else.\nok.\n:- endif.\n"
    prog = expand(src)
    assert texts(prog) == ["ok"]
    (d,) = prog.diagnostics
    assert d.severity == "warning" and d.code == "SKIPPED_SYNTAX" and d.pos.line == 2
    assert prog.stats["unparsed_skipped"] == 1


def test_active_region_syntax_is_an_error():
    with pytest.raises(ReadError):
        expand(":- if(true).\nfoo(a b c).\n:- endif.\n")


# -- properties: exclusivity and transparency ----------------------------------

@pytest.mark.parametrize("cond", ["true", "fail", "current_predicate(nb_setarg/3)",
                                  "\\+ current_prolog_flag(bounded, true)"])
@pytest.mark.parametrize("target", ["ciao", "sicstus", "swi", "yap"])
def test_exclusivity_and_transparency(cond, target):
    src = (f"pre.\n:- if({cond}).\nthen1.\nthen2.\n:- else.\nelse1.\n:- endif.\n"
           ":- dynamic d/1.\npost.\n")
    prog = expand(src, target)
    out = set(texts(prog))
    assert not ({"then1", "then2"} & out and "else1" in out)
    s = prog.stats
    assert s["emitted"] + s["skipped"] + s["conditional"] == s["parsed"]
    assert s["conditional"] == 3


# -- expects_dialect -----------------------------------------------------------

def test_expects_dialect_updates_context():
    ctx = new_context("swi", STORE)
    ctx, decision = handle_directive(parse_term(":- expects_dialect(sicstus)"), ctx)
    assert decision == "emit"
    assert ctx.library_path[0] == SHIPPED_LIBRARY / "dialect" / "sicstus"
    assert ctx.library_path[1:] == [SHIPPED_LIBRARY]
    assert ctx.declared_dialect == "sicstus"
    assert ctx.eval_ctx.load_context["dialect"] == Atom("sicstus")
    assert {r.id for r in ctx.rules} >= {"op_qualify", "lists_nth_qualify"}


def test_expects_dialect_is_emitted_and_drives_conditions():
    src = (":- expects_dialect(sicstus).\n"
           ":- if(prolog_load_context(dialect, sicstus)).\nemulated.\n:- endif.\n")
    prog = expand(src, "swi")
    assert texts(prog) == [":-expects_dialect(sicstus)", "emulated"]
    (dep,) = prog.dependencies
    assert dep.kind == "expects_dialect" and dep.path == SHIPPED_LIBRARY / "dialect" / "sicstus.pl"


def test_expects_dialect_activates_rewrites():
    src = ":- expects_dialect(sicstus).\n:- op(700, xfx, ===).\n"
    prog = expand(src, "swi")
    assert texts(prog)[1] == ":-op(700,xfx,user: ===)"
    assert str(prog.items[1].provenance) == "rewritten(op_qualify)"
    assert "% rewritten(op_qualify)\n" in prog.render(provenance=True)
    assert "% " not in prog.render()


def test_unknown_expects_dialect():
    with pytest.raises(UnknownDialectInExpects):
        expand(":- expects_dialect(gnu).\n")


def test_expects_dialect_in_skipped_region_ignored():
    prog = expand(":- if(fail).\n:- expects_dialect(gnu).\n:- endif.\n")
    assert prog.terms == [] and prog.dependencies == []


# -- library resolution --------------------------------------------------------

def test_library_shadowing():
    ctx = new_context("swi", STORE)
    assert resolve_library(parse_term("library(lists)"), ctx) == SHIPPED_LIBRARY / "lists.pl"
    handle_directive(parse_term(":- expects_dialect(sicstus)"), ctx)
    assert resolve_library(parse_term("library(lists)"), ctx) == \
        SHIPPED_LIBRARY / "dialect" / "sicstus" / "lists.pl"


def test_library_not_found():
    ctx = new_context("swi", STORE)
    assert resolve_library(parse_term("library(nosuch)"), ctx) is None


def test_plain_file_relative_to_source(tmp_path):
    (tmp_path / "helper.pl").write_text("h.\n")
    main = tmp_path / "main.pl"
    main.write_text(":- ensure_loaded(helper).\n:- use_module(library(nosuch)).\n")
    prog = expand_program(main, "swi", STORE)
    assert [(d.kind, d.path) for d in prog.dependencies] == [
        ("ensure_loaded", tmp_path / "helper.pl"), ("use_module", None)]


def test_custom_library_root(tmp_path):
    (tmp_path / "dialect" / "yap").mkdir(parents=True)
    (tmp_path / "util.pl").write_text("")
    (tmp_path / "dialect" / "yap" / "util.pl").write_text("")
    prog = expand(":- expects_dialect(yap).\n:- use_module(library(util)).\n", "swi",
                  library_root=tmp_path)
    assert prog.dependencies[1].path == tmp_path / "dialect" / "yap" / "util.pl"


# -- block directives ------------------------------------------------------------

def test_block_translated_for_targets_without_block():
    src = ":- op(1150, fx, block).\n:- block p(-).\np(a).\np(X) :- q(X).\nq(1).\n"
    swi = expand(src, "swi")
    assert texts(swi)[1:] == ["p(A):-when(nonvar(A),p__blocked__(A))", "p__blocked__(a)",
                          "p__blocked__(X):-q(X)", "q(1)"]
    assert [str(it.provenance) for it in swi.items[1:]] == [
        "synthesized(block_when)", "rewritten(block_when)", "rewritten(block_when)", "kept"]
    sics = expand(src, "sicstus")
    assert [write_term(t, sics.items[1].table) for t in sics.terms[1:3]] == [":-block p(-)", "p(a)"]


def test_bad_block_is_a_diagnostic():
    prog = expand(":- op(1150, fx, block).\n:- block p(?).\np(a).\n", "swi")
    assert [d.code for d in prog.diagnostics] == ["BAD_BLOCK"]
