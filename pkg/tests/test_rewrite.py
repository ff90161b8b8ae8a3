import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from portolog.dialects import load_profiles
from portolog.errors import ArityMismatch, NoMinus, RuleError, RuleFileError, RuleLoop
from portolog.ops import DEFAULT_TABLE
from portolog.reader import parse_term
from portolog.rewrite import (BlockSpec, RewriteRule, RuleContext, all_shipped_rules,
                              apply_rules, apply_rules_traced, block_specs, block_wrapper,
                              check_guard, compile_block_directive, match, parse_rules,
                              shipped_rules, validate_rules)
from portolog.terms import Atom, Compound, Var, indicator_of, mk
from portolog.writer import write_term

from .termgen import random_term

SICSTUS = shipped_rules("sicstus")
BLOCK_TABLE = DEFAULT_TABLE.add(1150, "fx", "block")


def P(text):
    return parse_term(text, BLOCK_TABLE)


def rewrite_one(text, dialect, rules=SICSTUS):
    out = apply_rules(P(text), RuleContext(dialect), rules)
    assert len(out) == 1
    return write_term(out[0])


# -- shipped rules ---------------------------------------------------------

@pytest.mark.parametrize("name, expected_sicstus", [
    ("===", ":-op(700,xfx,user: ===)"),          # unqualified: qualified
    ("m:(===)", ":-op(700,xfx,m: ===)"),         # already qualified: unchanged
    ("N", ":-op(700,xfx,N)"),                     # variable: unchanged
])
@pytest.mark.parametrize("dialect", ["sicstus", "swi"])
def test_op_qualification_six_cases(name, expected_sicstus, dialect):
    src = f":- op(700, xfx, {name})"
    got = rewrite_one(src, dialect)
    if dialect == "sicstus":
        assert got == expected_sicstus
    else:
        assert got == write_term(P(src))


def test_op_qualification_with_list_name():
    assert rewrite_one(":- op(700, xfx, [a, b])", "sicstus") == ":-op(700,xfx,user:[a,b])"


def test_qualified_call_remapping():
    assert rewrite_one("p(L) :- lists:nth(2, L, E), write(E)", "sicstus") == \
        "p(L):-sicstus_lists:nth(2,L,E),write(E)"


def test_remapping_reaches_nested_control():
    src = "p :- ( a -> \\+ lists:nth(1, [], x) ; call(lists:nth(1, [a], _)) ), findall(E, lists:nth(1, [a], E), _)"
    got = rewrite_one(src, "sicstus")
    assert "lists:nth" not in got.replace("sicstus_lists:nth", "")
    assert got.count("sicstus_lists:nth") == 3


def test_head_is_not_rewritten():
    assert rewrite_one("assert(X) :- true", "sicstus") == "assert(X):-true"


def test_clp_assert_disabled_by_default():
    assert rewrite_one("p :- assert(f(x))", "sicstus") == "p:-assert(f(x))"


def test_clp_assert_enabled():
    rules = [RewriteRule(r.id, r.kind, r.pattern, r.template, r.guards, r.dialect_guard, True)
             for r in SICSTUS]
    assert rewrite_one("p(X) :- assert(X)", "sicstus", rules) == "p(X):-clp_assert(X)"
    assert rewrite_one("p(X) :- assert(X)", "swi", rules) == "p(X):-assert(X)"


def test_shipped_rules_validate():
    assert validate_rules(all_shipped_rules()) == []
    assert [r.id for r in SICSTUS][:2] == ["op_qualify", "lists_nth_qualify"]
    assert all(r.dialect_guard == "sicstus" for r in SICSTUS)


def _indicators(t):
    out = set()
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, Compound):
            if x.functor != ":":
                out.add(indicator_of(x))
            stack.extend(x.args)
    return out


def test_catalog_closure_of_shipped_rules():
    store = load_profiles()
    for rule in all_shipped_rules():
        for t in (rule.pattern,) + rule.template:
            _, goal = (t.args if isinstance(t, Compound) and t.functor == ":" else (None, t))
            pi = indicator_of(goal)
            assert any(store.has_predicate(d, pi) for d in store.names), (rule.id, pi)
    # the wrapper generated for block directives calls when/2 and nonvar/1
    for pi in [("when", 2), ("nonvar", 1)]:
        assert any(store.has_predicate(d, pi) for d in store.names)


# -- engine ----------------------------------------------------------------

def test_match_is_one_way():
    assert match(P("f(X, X)"), P("f(a, a)")) == {"X": Atom("a")}
    assert match(P("f(X, X)"), P("f(a, b)")) is None
    assert match(P("f(a)"), P("f(X)")) is None
    assert match(P("f(_, _)"), P("f(a, b)")) == {}


@pytest.mark.parametrize("guard, expected", [
    ("qualified(X)", False), ("nonvar(X)", True), ("var(V)", True), ("atom(X)", True),
    ("callable(X)", True), ("compound(X)", False), ("\\+ qualified(X)", True),
    ("(atom(X), var(V))", True), ("(compound(X) ; var(V))", True), ("X == a", True),
    ("X \\== V", True),
])
def test_guards(guard, expected):
    assert check_guard(P(guard), {"X": Atom("a"), "V": Var("Q")}) is expected


def test_unsupported_guard():
    with pytest.raises(RuleError):
        check_guard(P("foo(X)"), {})


def test_term_rule_fires_once_and_may_emit_several():
    rules = parse_rules("rule split term\nmatch: pair(A, B)\nemit: left(A); right(B)\n")
    out, fired = apply_rules_traced(P("pair(1, 2)"), RuleContext(), rules)
    assert [write_term(t) for t in out] == ["left(1)", "right(2)"] and fired == ["split"]
    assert apply_rules(P("other"), RuleContext(), rules) == [Atom("other")]


def test_term_rule_first_match_wins():
    rules = parse_rules("rule a term\nmatch: f(X)\nemit: a(X)\n\n"
                        "rule b term\nmatch: f(1)\nemit: b\n")
    assert apply_rules(P("f(1)"), RuleContext(), rules) == [P("a(1)")]


def test_goal_rules_chain_to_fixpoint():
    rules = parse_rules("rule ab goal\nmatch: a(X)\nemit: b(X)\n\n"
                        "rule bc goal\nmatch: b(X)\nemit: c(X)\n")
    out, fired = apply_rules_traced(P("p :- a(1)"), RuleContext(), rules)
    assert out == [P("p :- c(1)")] and fired == ["ab", "bc"]


def test_rule_loop_detected():
    rules = parse_rules("rule grow goal\nmatch: f(X)\nemit: f(g(X))\n")
    with pytest.raises(RuleLoop):
        apply_rules(P(":- f(1)"), RuleContext(), rules)


def test_two_rule_cycle_detected():
    rules = parse_rules("rule ab goal\nmatch: a\nemit: b\n\nrule ba goal\nmatch: b\nemit: a\n")
    assert validate_rules(rules) == []  # neither rule loops on its own
    with pytest.raises(RuleLoop):
        apply_rules(P("p :- a"), RuleContext(), rules)


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_empty_rule_set_is_identity(seed):
    t = random_term(random.Random(seed))
    assert apply_rules(t, RuleContext("sicstus"), []) == [t]


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1),
       declared=st.sampled_from([None, "ciao", "swi", "yap", "sicstus"]))
def test_guard_soundness(seed, declared):
    rng = random.Random(seed)
    name = rng.choice(["===", "m:foo", "X", "[a,b]"])
    body = rng.choice([f"op(700, xfx, {name})", "lists:nth(1, L, E)",
                       "(a, lists:substitute(a, L, b, M))"])
    t = P(f":- {body}")
    out, fired = apply_rules_traced(t, RuleContext(declared), SICSTUS)
    if declared != "sicstus":
        assert fired == [] and out == [t]


# -- validation ------------------------------------------------------------

def test_validate_findings():
    rules = parse_rules("rule a goal\nmatch: f(X)\nemit: f(X)\n\n"
                        "rule a goal\nmatch: g(X)\nemit: h(Y)\n")
    msgs = [f.message for f in validate_rules(rules)]
    assert any("self-loop" in m for m in msgs)
    assert "duplicate id" in msgs
    assert "unbound template variable Y" in msgs


def test_guarded_rule_is_not_a_self_loop():
    rules = parse_rules("rule q goal\nmatch: op(P, A, N)\nwhere: \\+ qualified(N)\n"
                        "emit: op(P, A, user:N)\n")
    assert validate_rules(rules) == []


# -- rule files --------------------------------------------------------------

def test_parse_rule_file_fields():
    text = """% comment
rule r1 term dialect=yap disabled
match: foo(X,
        Y)
where: atom(X), \\+ var(Y)
emit: bar(X); (baz(Y) ; qux)
"""
    (r,) = parse_rules(text, "x.rules")
    assert (r.id, r.kind, r.dialect_guard, r.enabled) == ("r1", "term", "yap", False)
    assert r.pattern == P("foo(X, Y)")
    assert r.guards == (P("atom(X)"), P("\\+ var(Y)"))
    assert r.template == (P("bar(X)"), P("(baz(Y) ; qux)"))
    assert r.origin == "x.rules:2"


@pytest.mark.parametrize("text", [
    "rule\nmatch: a\nemit: b\n",
    "rule r\nemit: b\n",
    "rule r\nmatch: a\n",
    "rule r sideways\nmatch: a\nemit: b\n",
    "rule r\nmatch: a\nemit: b\nbogus: c\n",
    "rule r\nmatch: a\nmatch: a\nemit: b\n",
    "rule r\nmatch: f(\nemit: b\n",
    "rule r\nmatch: a\nemit: b; \n",
])
def test_bad_rule_files(text):
    with pytest.raises(RuleFileError):
        parse_rules(text)


def test_rule_kind_validated():
    with pytest.raises(RuleError):
        RewriteRule("x", "clause", Atom("a"), (Atom("b"),))


# -- block directives --------------------------------------------------------

def test_block_single_row():
    out = compile_block_directive(P(":- block p(-,?)"), [P("p(a,b)")])
    assert [write_term(t) for t in out] == [
        "p(A,B):-when(nonvar(A),p__blocked__(A,B))", "p__blocked__(a,b)"]


def test_block_two_rows_condition():
    (w,) = compile_block_directive(P(":- block merge(-,?,-), merge(?,-,-)"), [])
    cond = w.args[1].args[0]
    assert cond == P("((nonvar(A) ; nonvar(C)), (nonvar(B) ; nonvar(C)))")


def test_block_renames_rule_bodies_untouched():
    out = compile_block_directive(P(":- block q(-)"), [P("q(X) :- r(X)")])
    assert write_term(out[1]) == "q__blocked__(X):-r(X)"


@pytest.mark.parametrize("src", [":- block p(?,?)", ":- block p", ":- block p(-), q(?)"])
def test_block_no_minus(src):
    with pytest.raises(NoMinus):
        block_specs(P(src))


def test_block_arity_mismatch():
    with pytest.raises(ArityMismatch):
        compile_block_directive(P(":- block p(-,?)"), [P("p(a)")])
    with pytest.raises(ArityMismatch):
        BlockSpec(("p", 2), (("minus",),))


def test_block_bad_argument():
    with pytest.raises(RuleError):
        block_specs(P(":- block p(+)"))


def test_block_several_predicates():
    specs = block_specs(P(":- block p(-), q(-,?), p(-)"))
    assert [(s.predicate, len(s.rows)) for s in specs] == [(("p", 1), 2), (("q", 2), 1)]


def _eval_cond(cond, pattern):
    """Evaluate a nonvar/','/';' condition; pattern maps var name -> bound?"""
    if cond.functor == "nonvar":
        return pattern[cond.args[0].name]
    a, b = (_eval_cond(x, pattern) for x in cond.args)
    return (a and b) if cond.functor == "," else (a or b)


def all_block_specs(max_arity=3, max_rows=3):
    for arity in range(1, max_arity + 1):
        masks = [m for m in itertools.product(["minus", "question"], repeat=arity)
                 if "minus" in m]
        for nrows in range(1, max_rows + 1):
            for rows in itertools.product(masks, repeat=nrows):
                yield BlockSpec(("p", arity), rows)


def block_oracle_mismatches():
    """Count (spec, pattern) pairs where the wrapper disagrees with row semantics."""
    bad = checked = 0
    for spec in all_block_specs():
        wrapper = block_wrapper(spec)
        names = [v.name for v in wrapper.args[0].args]
        cond = wrapper.args[1].args[0]
        for bound in itertools.product([False, True], repeat=len(names)):
            pattern = dict(zip(names, bound))
            blocked = any(all(not bound[i] for i, m in enumerate(row) if m == "minus")
                          for row in spec.rows)
            checked += 1
            if _eval_cond(cond, pattern) == blocked:
                bad += 1
    return bad, checked


def test_block_oracle_exhaustive():
    bad, checked = block_oracle_mismatches()
    assert checked > 2000
    assert bad == 0
