"""Random term generation shared by property and acceptance tests."""
import random

from hypothesis import strategies as st

from portolog.ops import DEFAULT_TABLE, ISO_TABLE
from portolog.terms import Atom, Compound, Float, Int, Str, Var

ATOMS = [
    "a", "foo", "bar_1", "[]", "{}", "!", ";", ",", "|", "", "hello world",
    "don't", "été", "Abc", "_x", "-", "+", ":-", "=", "is", "mod", "\\+",
    "->", "===", "block", "and", "##", "++", "pre", ".", "/*", "a.b", "\n",
    "tab\there", "back\\slash", "1a", "@", ":", "^", "**", "=..", "?-",
]
FUNCTORS = ATOMS + ["f", "g", "h", "-", "+", "\\", ":", ",", ";", "{}", "."]
VARS = ["A", "B", "Xs", "_", "_G1", "_Foo"]

CUSTOM_TABLE = (DEFAULT_TABLE.add(700, "xfx", "===")
                .add(1150, "fx", "block")
                .add(300, "yfx", "and")
                .add(200, "xfy", "##")
                .add(100, "yf", "++")
                .add(100, "fx", "pre")
                .add(0, "xfy", ":"))

TABLES = {"default": DEFAULT_TABLE, "iso": ISO_TABLE, "custom": CUSTOM_TABLE}


def random_term(rng: random.Random, depth: int = 6, strings: bool = False):
    leaf_kinds = ["atom", "var", "int", "float"] + (["str"] if strings else [])
    if depth <= 0 or rng.random() < 0.3:
        kind = rng.choice(leaf_kinds)
        if kind == "atom":
            return Atom(rng.choice(ATOMS))
        if kind == "var":
            return Var(rng.choice(VARS))
        if kind == "int":
            return Int(rng.choice([0, 1, -1, 42, -7, 2**70, -(2**65), rng.randint(-10**6, 10**6)]))
        if kind == "str":
            return Str(rng.choice(["", "abc", "it's", 'say "hi"', "a\nb"]))
        return Float(rng.choice([0.0, 1.5, -2.25, 1e20, 1e-7, -3.5e300, float("inf")]))
    functor = rng.choice(FUNCTORS)
    arity = rng.choice([1, 1, 2, 2, 2, 3, 4, 5])
    return Compound(functor, tuple(random_term(rng, depth - 1, strings) for _ in range(arity)))


def _leaf():
    return st.one_of(
        st.sampled_from(ATOMS).map(Atom),
        st.sampled_from(VARS).map(Var),
        st.integers().map(Int),
        st.floats(allow_nan=False).map(Float),
    )


terms = st.recursive(
    _leaf(),
    lambda children: st.builds(
        lambda f, args: Compound(f, tuple(args)),
        st.sampled_from(FUNCTORS),
        st.lists(children, min_size=1, max_size=5),
    ),
    max_leaves=40,
)
