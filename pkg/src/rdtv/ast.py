"""Surface-language AST.

All nodes are plain dataclasses. Expression nodes carry a mutable ``ty``
slot that the type checker fills with a resolved type; the parser leaves it
``None``. ``pretty_*`` functions render an AST back to parseable source
(used by the round-trip property tests and diagnostics).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .lexer import Span

NO_SPAN = Span(0, 0, 0, 0)


# ---------------------------------------------------------------------------
# Types (surface level, unresolved)

@dataclass
class TypeExpr:
    pass


@dataclass
class IntT(TypeExpr):
    pass


@dataclass
class StringT(TypeExpr):
    pass


@dataclass
class BoolT(TypeExpr):
    pass


@dataclass
class NamedT(TypeExpr):
    """Named type application. Covers type variables (no args, resolved
    later), classes, traits, enums, builtins and enum-constructor
    refinements."""

    name: str
    args: list[TypeExpr] = field(default_factory=list)


@dataclass
class FunT(TypeExpr):
    params: list[TypeExpr]
    ret: TypeExpr


# ---------------------------------------------------------------------------
# Expressions

@dataclass
class Expr:
    span: Span = field(default=NO_SPAN, kw_only=True)
    ty: object = field(default=None, kw_only=True, compare=False, repr=False)


@dataclass
class IntLit(Expr):
    value: int


@dataclass
class StrLit(Expr):
    value: str


@dataclass
class BoolLit(Expr):
    value: bool


@dataclass
class VarRef(Expr):
    name: str


@dataclass
class BinOp(Expr):
    op: str  # + - * / == != < <= > >= && ||
    lhs: Expr
    rhs: Expr


@dataclass
class Not(Expr):
    operand: Expr


@dataclass
class FieldAccess(Expr):
    receiver: Expr
    field: str


@dataclass
class MethodCall(Expr):
    receiver: Expr
    method: str
    type_args: list[TypeExpr]
    args: list[Expr]


@dataclass
class ValBinding(Expr):
    name: str
    declared_type: Optional[TypeExpr]
    value: Expr
    body: Expr


@dataclass
class IfElse(Expr):
    cond: Expr
    then: Expr
    orelse: Expr


@dataclass
class Lambda(Expr):
    params: list[tuple[str, TypeExpr]]
    body: Expr


@dataclass
class Call(Expr):
    fn: Expr
    args: list[Expr]


@dataclass
class New(Expr):
    """``new C[T…](args)`` — class instantiation, enum-constructor call, or
    empty builtin collection, resolved during checking."""

    name: str
    type_args: list[TypeExpr]
    args: list[Expr]


@dataclass
class Pattern:
    span: Span = field(default=NO_SPAN, kw_only=True)


@dataclass
class CtorPattern(Pattern):
    ctor: str
    binders: list[str]
    bare: bool = False  # `case K =>` with no parens: binds nothing, any arity


@dataclass
class NamePattern(Pattern):
    name: str


@dataclass
class WildcardPattern(Pattern):
    pass


@dataclass
class MatchCase:
    pattern: Pattern
    body: Expr


@dataclass
class Match(Expr):
    scrutinee: Expr
    cases: list[MatchCase]


@dataclass
class Quantifier(Expr):
    kind: str  # 'forall' | 'exists'
    binders: list[tuple[str, TypeExpr]]
    body: Expr


@dataclass
class Implies(Expr):
    lhs: Expr
    rhs: Expr


@dataclass
class Cast(Expr):
    """``e.asInstanceOf[T]`` — unchecked erasure-time coercion."""

    operand: Expr
    target: TypeExpr


# ---------------------------------------------------------------------------
# Declarations

@dataclass
class Param:
    name: str
    type: TypeExpr


@dataclass
class MethodDef:
    name: str
    type_params: list[str]
    params: list[Param]
    return_type: Optional[TypeExpr]  # None: inferred from the body
    body: Expr
    span: Span = NO_SPAN
    override: bool = False


@dataclass
class MethodSig:
    """Abstract method declaration inside a trait."""

    name: str
    type_params: list[str]
    params: list[Param]
    return_type: TypeExpr
    span: Span = NO_SPAN


@dataclass
class ValSig:
    """Abstract value declaration inside a trait."""

    name: str
    type: TypeExpr
    span: Span = NO_SPAN


@dataclass
class ProofDef:
    name: str
    type_params: list[str]
    body: Expr
    span: Span = NO_SPAN


@dataclass
class TraitRef:
    name: str
    args: list[TypeExpr]


@dataclass
class TypeParam:
    """Trait type parameter: optional arity (higher-kinded) and upper bound.

    ``T[X] <: CvRDT[T[X]]`` has name T, binders [X], bound CvRDT[T[X]].
    Class/method type parameters always have arity 0 and no bound.
    """

    name: str
    binders: list[str] = field(default_factory=list)
    bound: Optional[TypeExpr] = None

    @property
    def arity(self) -> int:
        return len(self.binders)


@dataclass
class Decl:
    span: Span = NO_SPAN


@dataclass
class ClassDecl(Decl):
    name: str = ""
    type_params: list[str] = field(default_factory=list)
    fields: list[Param] = field(default_factory=list)
    super_trait: Optional[TraitRef] = None
    methods: list[MethodDef] = field(default_factory=list)


@dataclass
class TraitDecl(Decl):
    name: str = ""
    type_params: list[TypeParam] = field(default_factory=list)
    super_trait: Optional[TraitRef] = None
    val_decls: list[ValSig] = field(default_factory=list)
    method_decls: list[MethodSig] = field(default_factory=list)
    methods: list[MethodDef] = field(default_factory=list)
    proofs: list[ProofDef] = field(default_factory=list)


@dataclass
class ObjectDecl(Decl):
    name: str = ""
    super_trait: Optional[TraitRef] = None
    methods: list[MethodDef] = field(default_factory=list)
    proofs: list[ProofDef] = field(default_factory=list)


@dataclass
class Ctor:
    name: str
    fields: list[Param]
    span: Span = NO_SPAN


@dataclass
class EnumDecl(Decl):
    name: str = ""
    type_params: list[str] = field(default_factory=list)
    ctors: list[Ctor] = field(default_factory=list)


@dataclass
class Program:
    decls: list[Decl]


# ---------------------------------------------------------------------------
# Pretty printer (round-trip: parse(pretty(p)) is structurally equal to p)

_PREC = {
    "=>:": 1, "||": 2, "&&": 3,
    "==": 4, "!=": 4, "<": 5, "<=": 5, ">": 5, ">=": 5,
    "+": 6, "-": 6, "*": 7, "/": 7,
}


def pretty_type(t: TypeExpr) -> str:
    if isinstance(t, IntT):
        return "Int"
    if isinstance(t, StringT):
        return "String"
    if isinstance(t, BoolT):
        return "Boolean"
    if isinstance(t, NamedT):
        if t.args:
            return f"{t.name}[{', '.join(pretty_type(a) for a in t.args)}]"
        return t.name
    if isinstance(t, FunT):
        params = ", ".join(pretty_type(p) for p in t.params)
        return f"(({params}) => {pretty_type(t.ret)})"
    raise TypeError(f"unknown type node {t!r}")


def pretty_expr(e: Expr, prec: int = 0) -> str:
    def paren(inner: str, level: int) -> str:
        return f"({inner})" if level < prec else inner

    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, StrLit):
        escaped = e.value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
        return f'"{escaped}"'
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, VarRef):
        return e.name
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        # All binary operators associate to the left except implication.
        if e.op == "=>:":
            inner = f"{pretty_expr(e.lhs, p + 1)} =>: {pretty_expr(e.rhs, p)}"
        else:
            inner = f"{pretty_expr(e.lhs, p)} {e.op} {pretty_expr(e.rhs, p + 1)}"
        return paren(inner, p)
    if isinstance(e, Not):
        return f"!{pretty_expr(e.operand, 99)}"
    if isinstance(e, FieldAccess):
        return f"{pretty_expr(e.receiver, 99)}.{e.field}"
    if isinstance(e, MethodCall):
        targs = f"[{', '.join(pretty_type(t) for t in e.type_args)}]" if e.type_args else ""
        args = ", ".join(pretty_expr(a) for a in e.args)
        return f"{pretty_expr(e.receiver, 99)}.{e.method}{targs}({args})"
    if isinstance(e, ValBinding):
        ann = f": {pretty_type(e.declared_type)}" if e.declared_type else ""
        return f"{{ val {e.name}{ann} = {pretty_expr(e.value)}; {pretty_expr(e.body)} }}"
    if isinstance(e, IfElse):
        inner = f"if ({pretty_expr(e.cond)}) {pretty_expr(e.then, 99)} else {pretty_expr(e.orelse, 1)}"
        return paren(inner, 1)
    if isinstance(e, Lambda):
        params = ", ".join(f"{n}: {pretty_type(t)}" for n, t in e.params)
        return f"(({params}) => {pretty_expr(e.body)})"
    if isinstance(e, Call):
        args = ", ".join(pretty_expr(a) for a in e.args)
        return f"{pretty_expr(e.fn, 99)}({args})"
    if isinstance(e, New):
        targs = f"[{', '.join(pretty_type(t) for t in e.type_args)}]" if e.type_args else ""
        args = ", ".join(pretty_expr(a) for a in e.args)
        return f"new {e.name}{targs}({args})"
    if isinstance(e, Match):
        cases = " ".join(
            f"case {pretty_pattern(c.pattern)} => {pretty_expr(c.body)}" for c in e.cases
        )
        return f"{pretty_expr(e.scrutinee, 99)} match {{ {cases} }}"
    if isinstance(e, Quantifier):
        binders = ", ".join(f"{n}: {pretty_type(t)}" for n, t in e.binders)
        return f"{e.kind} ({binders}) {{ {pretty_expr(e.body)} }}"
    if isinstance(e, Implies):
        inner = f"{pretty_expr(e.lhs, 2)} =>: {pretty_expr(e.rhs, 1)}"
        return paren(inner, 1)
    if isinstance(e, Cast):
        return f"{pretty_expr(e.operand, 99)}.asInstanceOf[{pretty_type(e.target)}]"
    raise TypeError(f"unknown expr node {e!r}")


def pretty_pattern(p: Pattern) -> str:
    if isinstance(p, CtorPattern):
        if p.bare:
            return p.ctor
        return f"{p.ctor}({', '.join(p.binders)})"
    if isinstance(p, NamePattern):
        return p.name
    if isinstance(p, WildcardPattern):
        return "_"
    raise TypeError(f"unknown pattern {p!r}")


def _pretty_type_param(tp: TypeParam) -> str:
    s = tp.name
    if tp.binders:
        s += f"[{', '.join(tp.binders)}]"
    if tp.bound is not None:
        s += f" <: {pretty_type(tp.bound)}"
    return s


def _pretty_method(m: MethodDef, indent: str) -> str:
    tps = f"[{', '.join(m.type_params)}]" if m.type_params else ""
    params = ", ".join(f"{p.name}: {pretty_type(p.type)}" for p in m.params)
    ret = f": {pretty_type(m.return_type)}" if m.return_type else ""
    kw = "override def" if m.override else "def"
    return f"{indent}{kw} {m.name}{tps}({params}){ret} = {pretty_expr(m.body)}"


def pretty_decl(d: Decl) -> str:
    if isinstance(d, ClassDecl):
        tps = f"[{', '.join(d.type_params)}]" if d.type_params else ""
        fields = ", ".join(f"{p.name}: {pretty_type(p.type)}" for p in d.fields)
        ext = ""
        if d.super_trait:
            args = f"[{', '.join(pretty_type(a) for a in d.super_trait.args)}]" if d.super_trait.args else ""
            ext = f" extends {d.super_trait.name}{args}"
        body = "\n".join(_pretty_method(m, "  ") for m in d.methods)
        if body:
            return f"class {d.name}{tps}({fields}){ext} {{\n{body}\n}}"
        return f"class {d.name}{tps}({fields}){ext}"
    if isinstance(d, TraitDecl):
        tps = f"[{', '.join(_pretty_type_param(tp) for tp in d.type_params)}]" if d.type_params else ""
        ext = ""
        if d.super_trait:
            args = f"[{', '.join(pretty_type(a) for a in d.super_trait.args)}]" if d.super_trait.args else ""
            ext = f" extends {d.super_trait.name}{args}"
        lines = []
        for v in d.val_decls:
            lines.append(f"  val {v.name}: {pretty_type(v.type)}")
        for s in d.method_decls:
            tps2 = f"[{', '.join(s.type_params)}]" if s.type_params else ""
            params = ", ".join(f"{p.name}: {pretty_type(p.type)}" for p in s.params)
            lines.append(f"  def {s.name}{tps2}({params}): {pretty_type(s.return_type)}")
        for m in d.methods:
            lines.append(_pretty_method(m, "  "))
        for pr in d.proofs:
            tps2 = f"[{', '.join(pr.type_params)}]" if pr.type_params else ""
            lines.append(f"  proof {pr.name}{tps2} {{ {pretty_expr(pr.body)} }}")
        return f"trait {d.name}{tps}{ext} {{\n" + "\n".join(lines) + "\n}"
    if isinstance(d, ObjectDecl):
        ext = ""
        if d.super_trait:
            args = f"[{', '.join(pretty_type(a) for a in d.super_trait.args)}]" if d.super_trait.args else ""
            ext = f" extends {d.super_trait.name}{args}"
        lines = [_pretty_method(m, "  ") for m in d.methods]
        for pr in d.proofs:
            tps2 = f"[{', '.join(pr.type_params)}]" if pr.type_params else ""
            lines.append(f"  proof {pr.name}{tps2} {{ {pretty_expr(pr.body)} }}")
        if lines:
            return f"object {d.name}{ext} {{\n" + "\n".join(lines) + "\n}"
        return f"object {d.name}{ext}"
    if isinstance(d, EnumDecl):
        tps = f"[{', '.join(d.type_params)}]" if d.type_params else ""
        ctors = " | ".join(
            f"{c.name}({', '.join(f'{p.name}: {pretty_type(p.type)}' for p in c.fields)})"
            for c in d.ctors
        )
        return f"enum {d.name}{tps} {{ {ctors} }}"
    raise TypeError(f"unknown decl {d!r}")


def pretty_program(p: Program) -> str:
    return "\n\n".join(pretty_decl(d) for d in p.decls) + "\n"
