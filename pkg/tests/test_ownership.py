"""Context preorder, substitution, and the runtime ownership tree."""
import random

import pytest

from ovlang import ast
from ovlang.ast import (Contract, CtxAny, CtxBot, CtxLoc, CtxParam, CtxThis,
                        CtxTop)
from ovlang.diagnostics import OvError
from ovlang.ownership import (ContextEnv, OwnershipTree, owner_bound,
                              substitute, subtrees_intersect)

THIS, TOP, BOT = CtxThis(), CtxTop(), CtxBot()


def env_with(params, constraints=(), has_this=True):
    cons = [ast.Constraint(a, False, b) for a, b in constraints]
    return ContextEnv("C", params, cons, has_this=has_this)


class TestInside:
    def test_bot_least_top_greatest(self):
        env = env_with(["o"])
        for k in (THIS, TOP, BOT, CtxParam("o")):
            assert env.inside(BOT, k)
            assert env.inside(k, TOP)

    def test_reflexive_on_wf(self):
        env = env_with(["o", "p"])
        for k in (THIS, TOP, BOT, CtxParam("o"), CtxParam("p")):
            assert env.inside(k, k)

    def test_not_reflexive_on_foreign_params(self):
        env = env_with(["o"])
        assert not env.inside(CtxParam("q"), CtxParam("q"))

    def test_this_below_owner(self):
        env = env_with(["o", "p"])
        assert env.inside(THIS, CtxParam("o"))
        assert not env.inside(THIS, CtxParam("p"))
        assert not env.inside(CtxParam("o"), THIS)

    def test_constraint_edges_close_transitively(self):
        env = env_with(["o", "p", "q"],
                       [(CtxParam("o"), CtxParam("p")),
                        (CtxParam("p"), CtxParam("q"))])
        assert env.inside(CtxParam("o"), CtxParam("q"))
        assert env.inside(THIS, CtxParam("q"))  # this <= o <= p <= q
        assert not env.inside(CtxParam("q"), CtxParam("o"))

    def test_top_not_inside_param(self):
        env = env_with(["o"])
        assert not env.inside(TOP, CtxParam("o"))
        assert not env.inside(TOP, THIS)

    def test_main_has_no_this(self):
        env = ContextEnv.for_main()
        assert not env.inside(THIS, THIS)
        assert env.inside(BOT, TOP)

    def test_strictly_inside(self):
        env = env_with(["o"])
        assert env.strictly_inside(THIS, CtxParam("o"))
        assert not env.strictly_inside(THIS, THIS)

    def test_transitivity_randomized(self):
        rng = random.Random(7)
        names = ["a", "b", "c", "d"]
        for _ in range(200):
            cons = [(CtxParam(rng.choice(names)), CtxParam(rng.choice(names)))
                    for _ in range(rng.randrange(5))]
            env = env_with(names, cons)
            pool = [THIS, TOP, BOT] + [CtxParam(n) for n in names]
            k1, k2, k3 = (rng.choice(pool) for _ in range(3))
            if env.inside(k1, k2) and env.inside(k2, k3):
                assert env.inside(k1, k3)


class TestSubstitute:
    def test_params_and_this(self):
        d = Contract(THIS, CtxParam("p"))
        out = substitute(d, ["o", "p"], [CtxLoc(3), CtxLoc(9)], CtxLoc(1))
        assert out == Contract(CtxLoc(1), CtxLoc(9))

    def test_class_type_arguments(self):
        t = ast.ClassType("Box", [CtxParam("o"), THIS])
        out = substitute(t, ["o"], [TOP], CtxLoc(4))
        assert out == ast.ClassType("Box", [TOP, CtxLoc(4)])

    def test_ground_contexts_unchanged(self):
        assert substitute(TOP, ["o"], [BOT], THIS) == TOP
        assert substitute(CtxAny(), ["o"], [BOT], THIS) == CtxAny()

    def test_arity_mismatch(self):
        with pytest.raises(OvError) as exc:
            substitute(THIS, ["o", "p"], [TOP], TOP)
        assert exc.value.code == "E-CTX-ARITY"


class TestOwnerBound:
    def test_first_argument(self):
        assert owner_bound(ast.ClassType("Box", [TOP, THIS])) == TOP

    def test_non_class(self):
        with pytest.raises(OvError) as exc:
            owner_bound(ast.IntType())
        assert exc.value.code == "E-NOT-CLASS"

    def test_missing_arguments(self):
        with pytest.raises(OvError) as exc:
            owner_bound(ast.ClassType("Box", []))
        assert exc.value.code == "E-CTX-ARITY"


def build_tree(owners: dict) -> OwnershipTree:
    tree = OwnershipTree()
    for loc in sorted(owners):
        tree.add(loc, owners[loc])
    return tree


# an independent enumeration of subtree membership, by descending the
# children map rather than walking ancestor chains
def enumerate_subtree(owners: dict, k) -> set:
    if isinstance(k, CtxBot):
        return set()
    if isinstance(k, CtxTop):
        return set(owners)
    kids: dict = {}
    for loc, owner in owners.items():
        kids.setdefault(owner, []).append(loc)
    out = set()
    stack = [k.index]
    while stack:
        cur = stack.pop()
        out.add(cur)
        stack.extend(kids.get(cur, []))
    return out


class TestTree:
    OWNERS = {0: None, 1: 0, 2: 0, 3: 1, 4: None}

    def test_ancestors(self):
        tree = build_tree(self.OWNERS)
        assert tree.ancestors(3) == [3, 1, 0]
        assert tree.ancestors(4) == [4]

    def test_runtime_inside(self):
        tree = build_tree(self.OWNERS)
        assert tree.runtime_inside(3, CtxLoc(0))
        assert tree.runtime_inside(3, CtxLoc(3))
        assert not tree.runtime_inside(0, CtxLoc(1))
        assert not tree.runtime_inside(4, CtxLoc(0))
        assert tree.runtime_inside(4, CtxTop())
        assert not tree.runtime_inside(4, CtxBot())

    def test_runtime_subtree_matches_enumeration(self):
        tree = build_tree(self.OWNERS)
        for k in [CtxTop(), CtxBot()] + [CtxLoc(i) for i in self.OWNERS]:
            assert tree.runtime_subtree(k) == enumerate_subtree(self.OWNERS, k)

    def test_dangling_owner_rejected(self):
        tree = OwnershipTree()
        with pytest.raises(OvError) as exc:
            tree.add(0, 99)
        assert exc.value.code == "E-DANGLING"

    def test_remove(self):
        tree = build_tree({0: None, 1: 0})
        tree.remove(1)
        assert tree.runtime_subtree(CtxLoc(0)) == {0}


class TestSubtreesIntersect:
    def test_siblings_disjoint(self):
        tree = build_tree({0: None, 1: None})
        assert not subtrees_intersect(tree, CtxLoc(0), CtxLoc(1))

    def test_nested_overlap(self):
        tree = build_tree({0: None, 1: 0})
        assert subtrees_intersect(tree, CtxLoc(0), CtxLoc(1))
        assert subtrees_intersect(tree, CtxLoc(1), CtxLoc(0))

    def test_bot_and_top(self):
        tree = build_tree({0: None})
        assert not subtrees_intersect(tree, CtxBot(), CtxTop())
        assert subtrees_intersect(tree, CtxTop(), CtxLoc(0))
        assert subtrees_intersect(tree, CtxTop(), CtxTop())

    def test_matches_enumeration_randomized(self):
        rng = random.Random(11)
        for _ in range(300):
            n = rng.randrange(1, 12)
            owners = {0: None}
            for i in range(1, n):
                owners[i] = rng.choice([None] + list(range(i)))
            tree = build_tree(owners)
            pool = [CtxTop(), CtxBot()] + [CtxLoc(i) for i in range(n)]
            k1, k2 = rng.choice(pool), rng.choice(pool)
            expect = bool(enumerate_subtree(owners, k1)
                          & enumerate_subtree(owners, k2))
            assert subtrees_intersect(tree, k1, k2) == expect
