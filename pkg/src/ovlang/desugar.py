"""Lowering of surface programs to core form.

Core form guarantees:
  * bare identifiers are resolved (field references become this.f);
  * blocks/returns/throws/compound assignments are gone (Seq/Let chains,
    require(false), expanded operator assignments reading the receiver once);
  * already-core expressions come back unchanged.
"""
from __future__ import annotations

from . import ast


class _Scope:
    """Names visible to identifier resolution while lowering one body."""

    def __init__(self, fields: set[str], bound: set[str]):
        self.fields = fields
        self.bound = set(bound)

    def child(self) -> "_Scope":
        return _Scope(self.fields, self.bound)


class _Lowerer:
    def __init__(self, fields: set[str], used_names: set[str]):
        self.fields = fields
        self.used = used_names
        self.counter = 0

    def fresh(self) -> str:
        while True:
            name = f"__t{self.counter}"
            self.counter += 1
            if name not in self.used:
                self.used.add(name)
                return name

    # -- statement chains ---------------------------------------------------
    def block(self, stmts: list[ast.Expr], scope: _Scope) -> ast.Expr:
        if not stmts:
            return ast.Const(None)
        head, rest = stmts[0], stmts[1:]
        if isinstance(head, ast.Let):
            init = self.expr(head.init, scope)
            scope = scope.child()
            scope.bound.add(head.name)
            lowered = ast.Let(head.name, head.type, init,
                              line=head.line, col=head.col)
        elif isinstance(head, ast.Return):
            # the parser only lets return appear in tail position
            return self.expr(head.value, scope)
        else:
            lowered = self.expr(head, scope)
        if not rest:
            return lowered
        tail = self.block(rest, scope)
        return ast.Seq(lowered, tail, line=lowered.line, col=lowered.col)

    # -- expressions ----------------------------------------------------------
    def hoist(self, e: ast.Expr, build) -> ast.Expr:
        """Ensure e is a value; wraps build(value) in a Let when it is not."""
        if ast.is_value(e):
            return build(e)
        tmp = self.fresh()
        var = ast.Var(tmp, line=e.line, col=e.col)
        return ast.Seq(ast.Let(tmp, None, e, line=e.line, col=e.col),
                       build(var), line=e.line, col=e.col)

    def expr(self, e: ast.Expr, scope: _Scope) -> ast.Expr:
        if isinstance(e, ast.Const):
            return e
        if isinstance(e, ast.This):
            return e
        if isinstance(e, ast.Var):
            if e.name not in scope.bound and e.name in self.fields:
                return ast.FieldGet(ast.This(line=e.line, col=e.col), e.name,
                                    line=e.line, col=e.col)
            return e
        if isinstance(e, ast.Block):
            return self.block(e.stmts, scope.child())
        if isinstance(e, ast.Return):
            return self.expr(e.value, scope)
        if isinstance(e, ast.Throw):
            return ast.Require(ast.Const(False), line=e.line, col=e.col)
        if isinstance(e, ast.OpAssign):
            return self.op_assign(e, scope)
        if isinstance(e, ast.Assign):
            value = self.expr(e.value, scope)
            if e.name not in scope.bound and e.name in self.fields:
                return ast.FieldSet(ast.This(line=e.line, col=e.col), e.name,
                                    value, line=e.line, col=e.col)
            return ast.Assign(e.name, value, line=e.line, col=e.col)
        if isinstance(e, ast.FieldGet):
            return ast.FieldGet(self.expr(e.receiver, scope), e.field_name,
                                line=e.line, col=e.col)
        if isinstance(e, ast.FieldSet):
            return ast.FieldSet(self.expr(e.receiver, scope), e.field_name,
                                self.expr(e.value, scope),
                                line=e.line, col=e.col)
        if isinstance(e, ast.Call):
            return ast.Call(self.expr(e.receiver, scope), e.method,
                            [self.expr(a, scope) for a in e.args],
                            line=e.line, col=e.col)
        if isinstance(e, ast.New):
            return ast.New(e.type, [self.expr(a, scope) for a in e.args],
                           line=e.line, col=e.col)
        if isinstance(e, ast.PrimOp):
            return ast.PrimOp(e.op, [self.expr(a, scope) for a in e.args],
                              line=e.line, col=e.col)
        if isinstance(e, ast.Seq):
            first = (ast.Let(e.first.name, e.first.type,
                             self.expr(e.first.init, scope),
                             line=e.first.line, col=e.first.col)
                     if isinstance(e.first, ast.Let) else self.expr(e.first, scope))
            scope2 = scope
            if isinstance(e.first, ast.Let):
                scope2 = scope.child()
                scope2.bound.add(e.first.name)
            return ast.Seq(first, self.expr(e.second, scope2),
                           line=e.line, col=e.col)
        if isinstance(e, ast.Let):
            # a Let outside a Seq/Block (e.g. trailing statement)
            return ast.Let(e.name, e.type, self.expr(e.init, scope),
                           line=e.line, col=e.col)
        if isinstance(e, ast.Atomic):
            return ast.Atomic(e.contract, self.expr(e.body, scope.child()),
                              line=e.line, col=e.col)
        if isinstance(e, ast.Fork):
            return ast.Fork(self.expr(e.body, scope.child()),
                            line=e.line, col=e.col)
        if isinstance(e, ast.Valid):
            return ast.Valid(self.expr(e.value, scope), line=e.line, col=e.col)
        if isinstance(e, ast.Require):
            return ast.Require(self.expr(e.cond, scope), line=e.line, col=e.col)
        if isinstance(e, ast.EmitEvent):
            return ast.EmitEvent(e.name, [self.expr(a, scope) for a in e.args],
                                 line=e.line, col=e.col)
        raise AssertionError(f"unhandled expression {type(e).__name__}")

    def op_assign(self, e: ast.OpAssign, scope: _Scope) -> ast.Expr:
        value = self.expr(e.value, scope)
        target = e.target
        if isinstance(target, ast.Var):
            if target.name not in scope.bound and target.name in self.fields:
                this = ast.This(line=target.line, col=target.col)
                read = ast.FieldGet(this, target.name, line=e.line, col=e.col)
                combined = ast.PrimOp(e.op, [read, value], line=e.line, col=e.col)
                return ast.FieldSet(this, target.name, combined,
                                    line=e.line, col=e.col)
            read = ast.Var(target.name, line=target.line, col=target.col)
            combined = ast.PrimOp(e.op, [read, value], line=e.line, col=e.col)
            return ast.Assign(target.name, combined, line=e.line, col=e.col)
        assert isinstance(target, ast.FieldGet)
        recv = self.expr(target.receiver, scope)

        def build(v: ast.Expr) -> ast.Expr:
            read = ast.FieldGet(v, target.field_name, line=e.line, col=e.col)
            combined = ast.PrimOp(e.op, [read, value], line=e.line, col=e.col)
            return ast.FieldSet(v, target.field_name, combined,
                                line=e.line, col=e.col)

        return self.hoist(recv, build)


def _collect_names(e: ast.Expr, acc: set[str]) -> None:
    if isinstance(e, ast.Var):
        acc.add(e.name)
    elif isinstance(e, ast.Let):
        acc.add(e.name)
        _collect_names(e.init, acc)
    else:
        for attr in vars(e).values():
            if isinstance(attr, ast.Expr):
                _collect_names(attr, acc)
            elif isinstance(attr, list):
                for item in attr:
                    if isinstance(item, ast.Expr):
                        _collect_names(item, acc)


def _class_fields(p: ast.Program, cls: ast.ClassDecl) -> set[str]:
    names: set[str] = set()
    seen: set[str] = set()
    cur: ast.ClassDecl | None = cls
    while cur is not None and cur.name not in seen:
        seen.add(cur.name)
        names.update(f.name for f in cur.fields)
        cur = p.class_named(cur.superclass.name) if cur.superclass else None
    return names


def _lower_body(body: ast.Expr, fields: set[str], params: list[str]) -> ast.Expr:
    used: set[str] = set(params)
    _collect_names(body, used)
    lw = _Lowerer(fields, used)
    scope = _Scope(fields, set(params))
    if isinstance(body, ast.Block):
        return lw.block(body.stmts, scope)
    return lw.expr(body, scope)


def desugar(p: ast.Program) -> ast.Program:
    """Lower a parsed program to core form. Idempotent on core programs."""
    classes: list[ast.ClassDecl] = []
    for cls in p.classes:
        fields = _class_fields(p, cls)
        new_fields = [
            ast.FieldDecl(f.type, f.name,
                          _lower_body(f.init, fields, []) if f.init is not None else None,
                          f.final, line=f.line, col=f.col)
            for f in cls.fields
        ]
        new_invs = [_lower_body(inv, fields, []) for inv in cls.invariants]
        new_ctors = [
            ast.CtorDecl(c.params,
                         _lower_body(c.body, fields, [pm.name for pm in c.params]),
                         line=c.line, col=c.col)
            for c in cls.ctors
        ]
        new_methods = [
            ast.MethodDecl(m.name, m.return_type, m.params, m.contract,
                           _lower_body(m.body, fields, [pm.name for pm in m.params]),
                           line=m.line, col=m.col)
            for m in cls.methods
        ]
        classes.append(ast.ClassDecl(cls.name, cls.ctx_params, cls.superclass,
                                     cls.constraints, new_invs, new_fields,
                                     new_ctors, new_methods,
                                     line=cls.line, col=cls.col))
    main = _lower_body(p.main, set(), []) if p.main is not None else None
    return ast.Program(classes, main, line=p.line, col=p.col)
