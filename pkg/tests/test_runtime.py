"""Transactional interpreter: counters, rollback, failure flow, reports."""
import pytest

from ovlang import ast
from ovlang.diagnostics import OvError
from ovlang.runtime import FailureValue, Loc, Machine

from conftest import RUNNABLE_FILES, check_clean, run_source

ACCOUNT = """\
class Account[o] {
    int amount = 0;
    inv amount >= 0;

    Account(int amt) {
        amount = amt;
    }

    int balance() <this,bot> {
        return amount;
    }

    void deposit(int x) <this,this> {
        amount += x;
    }

    void withdraw(int x) <this,this> {
        amount -= x;
    }
}
"""

CELL = """\
class Cell[o] {
    int v = 0;
    inv v >= 0;

    void set(int x) <this,this> {
        v = x;
    }

    int get() <this,bot> {
        return v;
    }
}
"""


def machine_for(src: str, **kw) -> Machine:
    return Machine(check_clean(src), **kw)


class TestCounters:
    SRC = CELL + """\
main {
    Cell<top> c = new Cell<top>();
    atomic c.set(5);
    atomic c.get();
}
"""

    def test_contract_directed_exact(self):
        rep = run_source(self.SRC)
        # constructor commit revalidates the creation; the set-commit
        # revalidates the cell; the get-commit revalidates nothing; the
        # root commit covers the one live object
        assert rep.pre_checks == 0
        assert rep.post_checks == 3
        assert rep.invariant_evals == 3
        assert rep.lemma3

    def test_naive_exact(self):
        rep = run_source(self.SRC, naive=True)
        # begin charges |subtree(V)|, every invoke/return charges the
        # receiver subtree, every commit charges |subtree(V)| + creations
        assert rep.pre_checks == 4
        assert rep.post_checks == 6
        assert rep.lemma3

    def test_contract_mode_never_costlier(self):
        a = run_source(self.SRC)
        b = run_source(self.SRC, naive=True)
        assert a.pre_checks + a.post_checks <= b.pre_checks + b.post_checks

    def test_read_path_commit_free(self):
        # a read-only transaction (I = bot) revalidates nothing at commit:
        # total post checks = ctor creation + root commit only
        src = ACCOUNT + """\
main {
    Account<top> a = new Account<top>(50);
    atomic a.balance();
}
"""
        rep = run_source(src)
        assert rep.post_checks == 2
        naive = run_source(src, naive=True)
        assert naive.post_checks == 4


class TestRollback:
    OVERDRAW = ACCOUNT + """\
main {
    Account<top> a = new Account<top>(10);
    atomic a.withdraw(25);
    a.deposit(100);
}
"""

    def test_abort_restores_state(self):
        m = machine_for(ACCOUNT)
        loc = m.run_expression(ast.New(ast.ClassType("Account",
                                                     [ast.CtxTop()]),
                                       [ast.Const(10)]))
        assert isinstance(loc, Loc)
        before = m.state_hash()
        out = m.run_expression(
            ast.Atomic(None, ast.Call(ast.Var("a"), "withdraw",
                                      [ast.Const(25)]), deduced=True),
            {"a": loc, "#ctx": {}})
        assert out == FailureValue("R-POST-FAIL", "Validity fails post-check")
        assert m.state_hash() == before
        assert m.heap[loc.index].fields["amount"] == 10

    def test_failure_poisons_the_rest_of_main(self):
        rep = run_source(self.OVERDRAW)
        assert [f["code"] for f in rep.failures] == ["R-POST-FAIL"]
        assert rep.lemma3  # the aborted write never landed
        # deposit(100) was skipped: the state equals the post-constructor one
        plain = run_source(ACCOUNT + "main { Account<top> a = new Account<top>(10); }")
        assert rep.state_hash == plain.state_hash

    def test_raw_write_flags_lemma3(self):
        src = ACCOUNT + """\
main {
    Account<top> a = new Account<top>(10);
    a.withdraw(25);
}
"""
        rep = run_source(src)
        assert not rep.lemma3
        assert rep.objects == 1 and rep.valid == 0
        (fail,) = rep.failures
        assert fail["code"] == "R-POST-FAIL"
        assert fail["msg"] == "invalid at end of run: l0"

    def test_ctor_failure_deallocates(self):
        rep = run_source(ACCOUNT + "main { Account<top> a = new Account<top>(0 - 5); }")
        assert rep.objects == 0
        assert rep.lemma3
        assert [f["code"] for f in rep.failures] == ["R-POST-FAIL"]

    def test_inner_abort_contained_by_outer_commit(self):
        src = ACCOUNT + """\
class Wallet[o] {
    Account<this> a = new Account<this>(10);
    inv a != null;

    void risky() <this,this> {
        a.deposit(5);
        atomic a.withdraw(100);
    }
}
main {
    Wallet<top> w = new Wallet<top>();
    atomic w.risky();
}
"""
        rep = run_source(src)
        # the inner overdraw rolled back alone; the outer transaction kept
        # its deposit and committed carrying the failure as a value
        assert [f["code"] for f in rep.failures] == ["R-POST-FAIL"]
        assert rep.lemma3
        assert rep.objects == 2

        m = machine_for(src)
        m.run(100000)
        accounts = [o for o in m.heap if o and o.class_name == "Account"]
        assert accounts[0].fields["amount"] == 15


class TestFailures:
    def test_require_terminates_thread(self):
        rep = run_source("main { require(1 > 2); }")
        assert [f["code"] for f in rep.failures] == ["R-REQUIRE"]
        assert rep.lemma3

    def test_valid_expression(self):
        src = ACCOUNT + """\
main {
    Account<top> a = new Account<top>(5);
    require(valid a);
}
"""
        rep = run_source(src)
        assert not rep.failures

    def test_valid_detects_breakage(self):
        src = ACCOUNT + """\
main {
    Account<top> a = new Account<top>(5);
    a.withdraw(9);
    require(valid a);
}
"""
        rep = run_source(src)
        assert "R-REQUIRE" in [f["code"] for f in rep.failures]
        assert not rep.lemma3

    def test_fuel_exhaustion(self):
        with pytest.raises(OvError) as exc:
            run_source(CELL + "main { Cell<top> c = new Cell<top>(); }",
                       fuel=1)
        assert exc.value.code == "E-FUEL"

    def test_dangling_write_fails_softly(self):
        m = machine_for(CELL)
        loc = m.run_expression(ast.New(ast.ClassType("Cell", [ast.CtxTop()]),
                                       []))
        m.heap[loc.index] = None
        m.tree.remove(loc.index)
        out = m.run_expression(
            ast.Call(ast.Var("c"), "set", [ast.Const(1)]),
            {"c": loc, "#ctx": {}})
        assert isinstance(out, FailureValue)
        assert out.code == "E-DANGLING"


class TestEvents:
    def test_commit_merges_events_in_order(self):
        src = """\
class Log[o] {
    int n = 0;
    void go() <this,this> {
        emit Started(n);
        n = n + 1;
        emit Finished(n);
    }
}
main {
    Log<top> g = new Log<top>();
    atomic g.go();
    emit Outside(9);
}
"""
        rep = run_source(src)
        assert rep.events == [
            {"name": "Started", "args": [0]},
            {"name": "Finished", "args": [1]},
            {"name": "Outside", "args": [9]},
        ]

    def test_abort_discards_events(self):
        src = ACCOUNT + """\
class Teller[o] {
    Account<this> a = new Account<this>(10);
    inv a != null;

    void drain() <this,this> {
        emit Draining(0);
        a.withdraw(99);
    }
}
main {
    Teller<top> t = new Teller<top>();
    atomic t.drain();
}
"""
        rep = run_source(src)
        assert rep.events == []
        assert [f["code"] for f in rep.failures] == ["R-POST-FAIL"]

    def test_event_args_serialize_locations(self):
        src = CELL + """\
main {
    Cell<top> c = new Cell<top>();
    emit Made(c);
}
"""
        rep = run_source(src)
        assert rep.events == [{"name": "Made", "args": ["l0"]}]


class TestThreads:
    SPAWN = CELL + """\
main {
    Cell<top> c = new Cell<top>();
    fork atomic c.set(1);
    fork atomic c.set(1);
    atomic c.set(1);
}
"""

    def test_forked_threads_all_run(self):
        m = machine_for(self.SPAWN)
        rep = m.run()
        assert rep.lemma3
        assert len(m.threads) == 3
        assert all(t.done for t in m.threads)

    def test_deterministic_for_a_seed(self):
        a = run_source(self.SPAWN, seed=0)
        b = run_source(self.SPAWN, seed=0)
        assert a.to_json() == b.to_json()

    def test_commutative_effects_agree_across_seeds(self):
        hashes = {run_source(self.SPAWN, seed=s).state_hash
                  for s in range(4)}
        assert len(hashes) == 1


class TestReport:
    def test_json_schema(self):
        rep = run_source(CELL + "main { Cell<top> c = new Cell<top>(); }")
        assert set(rep.to_json()) == {
            "lemma3", "objects", "valid", "pre_checks", "post_checks",
            "invariant_evals", "events", "state_hash"}

    def test_state_hash_tracks_fields_and_validity(self):
        m1 = machine_for(CELL)
        m2 = machine_for(CELL)
        new = ast.New(ast.ClassType("Cell", [ast.CtxTop()]), [])
        m1.run_expression(new)
        m2.run_expression(new)
        assert m1.state_hash() == m2.state_hash()
        m2.heap[0].fields["v"] = 3
        assert m1.state_hash() != m2.state_hash()
        m2.heap[0].fields["v"] = 0
        assert m1.state_hash() == m2.state_hash()
        m2.sigma.discard(0)
        assert m1.state_hash() != m2.state_hash()


@pytest.mark.parametrize("path", RUNNABLE_FILES, ids=lambda p: p.name)
def test_corpus_counter_dominance(path):
    src = path.read_text(encoding="utf-8")
    direct = run_source(src)
    naive = run_source(src, naive=True)
    assert (direct.pre_checks + direct.post_checks
            <= naive.pre_checks + naive.post_checks)
    assert direct.state_hash == naive.state_hash
