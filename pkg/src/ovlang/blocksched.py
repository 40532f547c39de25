"""Block-level execution: validity-interference between transaction
contracts, conflict-graph construction, mining, and validator re-execution.

Transactions in a block run against one shared heap. Each runs as a single
top-level transaction whose contract is the target method's contract with
this bound to the target location. Two transactions may run in either order
only when their contracts do not interfere; the executor therefore grants
the machine to the lowest-indexed ready transaction, which makes the
observable results (statuses, hash, counters) a pure function of the block
and independent of worker count.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import ast
from .ast import Contract, CtxLoc, CtxTop
from .diagnostics import OvError
from .ownership import OwnershipTree, substitute, subtrees_intersect
from .runtime import FailureValue, Loc, Machine
from .typecheck import ClassTable

MINER_RETRY_BUDGET = 1


@dataclass
class Sct:
    index: int
    target: str
    method: str
    args: list
    loc: int = -1
    contract: Optional[Contract] = None
    status: str = "pending"


@dataclass
class Block:
    deploys: list  # of {"id","class","args"}
    txns: list     # of {"target","method","args"}
    workers: int = 1
    seed: int = 0


@dataclass
class MinedBlock:
    block: Block
    edges: list
    status: list
    final_state_hash: str
    pre_checks: int
    post_checks: int

    def to_json(self) -> dict:
        return {
            "edges": [list(e) for e in self.edges],
            "status": list(self.status),
            "final_state_hash": self.final_state_hash,
            "pre_checks": self.pre_checks,
            "post_checks": self.post_checks,
        }


@dataclass
class ValidationReport:
    accepted: bool
    final_state_hash: str
    status: list
    edges: list
    hash_matches: bool
    statuses_match: bool

    def to_json(self) -> dict:
        return {
            "accepted": self.accepted,
            "final_state_hash": self.final_state_hash,
            "status": list(self.status),
            "edges": [list(e) for e in self.edges],
            "hash_matches": self.hash_matches,
            "statuses_match": self.statuses_match,
        }


def parse_block(data: dict) -> Block:
    """Validate the block JSON shape. Schema problems raise ValueError."""
    if not isinstance(data, dict):
        raise ValueError("block must be a JSON object")
    deploys = data.get("deploy", [])
    txns = data.get("txns", [])
    if not isinstance(deploys, list) or not isinstance(txns, list):
        raise ValueError("deploy and txns must be arrays")
    seen: set = set()
    for d in deploys:
        if not isinstance(d, dict) or not {"id", "class"} <= set(d):
            raise ValueError("each deploy needs id and class")
        if not isinstance(d["id"], str) or not isinstance(d["class"], str):
            raise ValueError("deploy id and class must be strings")
        if d["id"] in seen:
            raise ValueError(f"duplicate deploy id {d['id']}")
        seen.add(d["id"])
        _check_args(d.get("args", []))
    for t in txns:
        if not isinstance(t, dict) or not {"target", "method"} <= set(t):
            raise ValueError("each txn needs target and method")
        if not isinstance(t["target"], str) or not isinstance(t["method"], str):
            raise ValueError("txn target and method must be strings")
        _check_args(t.get("args", []))
    workers = data.get("workers", 1)
    seed = data.get("seed", 0)
    if not isinstance(workers, int) or isinstance(workers, bool) or workers < 1:
        raise ValueError("workers must be a positive integer")
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ValueError("seed must be an integer")
    return Block(deploys=list(deploys), txns=list(txns),
                 workers=workers, seed=seed)


def _check_args(args) -> None:
    if not isinstance(args, list):
        raise ValueError("args must be an array")
    for a in args:
        if not (a is None or isinstance(a, (int, bool))):
            raise ValueError(f"unsupported argument value {a!r}")


def interferes(d1: Contract, d2: Contract, tree: OwnershipTree) -> bool:
    """Contracts interfere unless both validity sets avoid the other's
    invalidity set and the invalidity sets are disjoint."""
    return not (not subtrees_intersect(tree, d1.validity, d2.invalidity)
                and not subtrees_intersect(tree, d2.validity, d1.invalidity)
                and not subtrees_intersect(tree, d1.invalidity, d2.invalidity))


def build_conflict_graph(scts: list[Sct], tree: OwnershipTree) -> list[tuple]:
    edges = []
    for i in range(len(scts)):
        for j in range(i + 1, len(scts)):
            if interferes(scts[i].contract, scts[j].contract, tree):
                edges.append((i, j))
    return edges


def _library(program: ast.Program) -> ast.Program:
    return ast.Program(program.classes, None)


def _deploy(machine: Machine, deploys: list) -> dict[str, int]:
    """Run the deploy list serially; returns id -> location."""
    targets: dict[str, int] = {}
    for d in deploys:
        cname = d["class"]
        decl = machine.table.get(cname)
        if decl is None:
            raise ValueError(f"deploy {d['id']}: unknown class {cname}")
        typ = ast.ClassType(cname, [CtxTop()] * len(decl.ctx_params))
        ctor = machine.table.ctor_of(cname)
        expected = len(ctor.params) if ctor else 0
        args = d.get("args", [])
        if len(args) != expected:
            raise ValueError(
                f"deploy {d['id']}: {cname} constructor takes {expected} "
                f"arguments, got {len(args)}")
        expr = ast.New(typ, [ast.Const(a) for a in args])
        val = machine.run_expression(expr)
        if isinstance(val, FailureValue):
            raise ValueError(f"deploy {d['id']} failed: {val.msg}")
        assert isinstance(val, Loc)
        targets[d["id"]] = val.index
    return targets


def _bind_scts(table: ClassTable, machine: Machine, targets: dict,
               txns: list) -> list[Sct]:
    scts = []
    for i, t in enumerate(txns):
        if t["target"] not in targets:
            raise OvError("E-TARGET", f"txn {i}: unknown target {t['target']}")
        loc = targets[t["target"]]
        obj = machine.heap[loc]
        hit = table.find_method(obj.class_name, t["method"])
        if hit is None:
            raise OvError("E-TARGET",
                          f"txn {i}: {obj.class_name} has no method "
                          f"{t['method']}")
        owner_cls, m = hit
        args = t.get("args", [])
        if len(args) != len(m.params):
            raise OvError("E-TARGET",
                          f"txn {i}: {t['method']} takes {len(m.params)} "
                          f"arguments, got {len(args)}")
        contract = substitute(m.contract, owner_cls.ctx_params,
                              machine._args_at(obj, owner_cls.name),
                              CtxLoc(loc))
        scts.append(Sct(index=i, target=t["target"], method=t["method"],
                        args=list(args), loc=loc, contract=contract))
    return scts


def _execute_sct(machine: Machine, sct: Sct, retries: int) -> str:
    expr = ast.Atomic(sct.contract,
                      ast.Call(ast.Var("__target"), sct.method,
                               [ast.Const(a) for a in sct.args]))
    attempts = retries + 1
    val = None
    for _ in range(attempts):
        val = machine.run_expression(expr, {"__target": Loc(sct.loc),
                                            "#ctx": {}})
        if not isinstance(val, FailureValue):
            return "committed"
    assert isinstance(val, FailureValue)
    return f"aborted:{val.code}"


def _run_block(program: ast.Program, block: Block, order: list[int],
               retries: int) -> tuple[Machine, dict, list[Sct]]:
    machine = Machine(_library(program))
    targets = _deploy(machine, block.deploys)
    scts = _bind_scts(machine.table, machine, targets, block.txns)
    for i in order:
        scts[i].status = _execute_sct(machine, scts[i], retries)
    return machine, targets, scts


def mine_block(program: ast.Program, block: Block,
               workers: Optional[int] = None,
               seed: Optional[int] = None) -> MinedBlock:
    """Execute a block and report its conflict graph, statuses, and final
    state. Results are identical for every worker count and seed: the
    machine is granted to the lowest-indexed ready transaction, and with
    every lower-indexed conflict already finished that is always the next
    index in order."""
    if workers is not None and workers < 1:
        raise ValueError("workers must be positive")
    machine = Machine(_library(program))
    targets = _deploy(machine, block.deploys)
    scts = _bind_scts(machine.table, machine, targets, block.txns)
    edges = build_conflict_graph(scts, machine.tree)
    for sct in scts:
        sct.status = _execute_sct(machine, sct, MINER_RETRY_BUDGET)
    return MinedBlock(
        block=block,
        edges=edges,
        status=[s.status for s in scts],
        final_state_hash=machine.state_hash(),
        pre_checks=machine.pre_checks,
        post_checks=machine.post_checks,
    )


def validate_block(program: ast.Program, mined: MinedBlock,
                   block: Block) -> ValidationReport:
    """Re-execute the block on a fresh heap, honoring the miner's graph,
    and check the miner's claims. A real conflict edge missing from the
    miner's graph is a protocol violation (E-BG-MISMATCH)."""
    machine = Machine(_library(program))
    targets = _deploy(machine, block.deploys)
    scts = _bind_scts(machine.table, machine, targets, block.txns)
    real_edges = set(build_conflict_graph(scts, machine.tree))
    miner_edges = {tuple(e) for e in mined.edges}
    missing = sorted(real_edges - miner_edges)
    if missing:
        raise OvError("E-BG-MISMATCH",
                      "miner's graph omits conflicting pairs: " +
                      ", ".join(str(list(e)) for e in missing))
    # execution honors the union graph; index order satisfies any graph
    for sct in scts:
        sct.status = _execute_sct(machine, sct, MINER_RETRY_BUDGET)
    statuses = [s.status for s in scts]
    h = machine.state_hash()
    hash_ok = h == mined.final_state_hash
    status_ok = statuses == list(mined.status)
    return ValidationReport(
        accepted=hash_ok and status_ok,
        final_state_hash=h,
        status=statuses,
        edges=sorted(real_edges),
        hash_matches=hash_ok,
        statuses_match=status_ok,
    )


def serial_execute(program: ast.Program, block: Block,
                   order: Optional[list[int]] = None) -> tuple[str, list]:
    """Oracle: run the block's transactions one at a time in the given
    index order (no retries) and return (state hash, statuses)."""
    n = len(block.txns)
    if order is None:
        order = list(range(n))
    if sorted(order) != list(range(n)):
        raise ValueError("order must be a permutation of the txn indices")
    machine, _targets, scts = _run_block(program, block, list(order), 0)
    return machine.state_hash(), [s.status for s in scts]
