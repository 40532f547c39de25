"""Lowering to core form: name resolution, statement chains, expansions."""
from ovlang import ast
from ovlang.desugar import desugar
from ovlang.parser import parse_program


def lower(src: str) -> ast.Program:
    p, diags = parse_program(src)
    assert not diags.has_errors()
    return desugar(p)


def method_body(p: ast.Program, cls: str, name: str) -> ast.Expr:
    for m in p.class_named(cls).methods:
        if m.name == name:
            return m.body
    raise AssertionError(name)


def test_field_reads_resolve_to_this():
    p = lower("class C[o] { int v; int m() <this,bot> { return v; } }")
    body = method_body(p, "C", "m")
    assert body == ast.FieldGet(ast.This(), "v")


def test_locals_shadow_fields():
    p = lower("""\
class C[o] {
    int v;
    int m() <this,bot> {
        int v = 3;
        return v;
    }
}
""")
    body = method_body(p, "C", "m")
    assert body == ast.Seq(ast.Let("v", ast.IntType(), ast.Const(3)),
                           ast.Var("v"))


def test_params_shadow_fields():
    p = lower("class C[o] { int v; int m(int v) <this,bot> { return v; } }")
    assert method_body(p, "C", "m") == ast.Var("v")


def test_field_assignment_becomes_fieldset():
    p = lower("class C[o] { int v; void m() <this,this> { v = 4; } }")
    assert method_body(p, "C", "m") == ast.FieldSet(ast.This(), "v",
                                                    ast.Const(4))


def test_compound_assignment_expands():
    p = lower("class C[o] { int v; void m(int x) <this,this> { v += x; } }")
    expected = ast.FieldSet(
        ast.This(), "v",
        ast.PrimOp("+", [ast.FieldGet(ast.This(), "v"), ast.Var("x")]))
    assert method_body(p, "C", "m") == expected


def test_compound_assignment_reads_receiver_once():
    p = lower("""\
class Inner[o] { int v; }
class C[o] {
    Inner<this> box = new Inner<this>();
    void m() <this,this> {
        box.v += 1;
    }
}
""")
    body = method_body(p, "C", "m")
    # receiver is hoisted into a temporary so it is evaluated a single time
    assert isinstance(body, ast.Seq)
    assert isinstance(body.first, ast.Let)
    tmp = body.first.name
    fs = body.second
    assert fs == ast.FieldSet(
        ast.Var(tmp), "v",
        ast.PrimOp("+", [ast.FieldGet(ast.Var(tmp), "v"), ast.Const(1)]))


def test_throw_becomes_require_false():
    p = lower("class C[o] { void m() <this,bot> { throw; } }")
    assert method_body(p, "C", "m") == ast.Require(ast.Const(False))


def test_implicit_call_receiver_is_this():
    p = lower("""\
class C[o] {
    void a() <this,this> { }
    void m() <this,this> { a(); }
}
""")
    assert method_body(p, "C", "m") == ast.Call(ast.This(), "a", [])


def test_deduced_atomic_body_stays_a_plain_call():
    p = lower("""\
class C[o] { void a() <this,this> { } }
main {
    C<top> c = new C<top>();
    atomic c.a();
}
""")
    atomic = p.main.second
    assert isinstance(atomic, ast.Atomic)
    assert atomic.contract is None
    assert atomic.body == ast.Call(ast.Var("c"), "a", [])


def test_empty_block_is_null():
    p = lower("class C[o] { void m() <this,bot> { } }")
    assert method_body(p, "C", "m") == ast.Const(None)


def test_inherited_fields_resolve():
    p = lower("""\
class A[o] { int v; }
class B[o] extends A<o> {
    int m() <this,bot> { return v; }
}
""")
    assert method_body(p, "B", "m") == ast.FieldGet(ast.This(), "v")


def test_idempotent_on_core():
    src = """\
class C[o] {
    int v;
    inv v >= 0;
    void m(int x) <this,this> { v += x; v = v * 2; }
}
main {
    C<top> c = new C<top>();
    atomic c.m(3);
}
"""
    once = lower(src)
    assert desugar(once) == once
