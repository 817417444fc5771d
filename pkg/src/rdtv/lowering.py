"""Lowering: TypedProgram to Core SMT commands.

Classes become single-constructor ADTs (``C`` with constructor ``C_ctor``)
plus one function per own or trait-inherited method (``C_m``, taking
``this`` first and carrying the class's and method's sort parameters).
Enums become ADTs. Objects become a fresh nullary class ``O!impl``, a
constant ``O`` pinned to its instance, and their proofs become nullary
Boolean functions ``O!proof``. Traits emit nothing.

Builtin collections lower through the combinatory-array-logic templates:
sets are total arrays to Bool, maps are arrays to ``Option``, vectors and
lists are ``(size, entries)`` records over maps. List/vector operations pin
``None`` outside ``[0, size)`` so structurally equal contents compare equal
under SMT ``=`` regardless of ghost entries.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import ast
from .checker import InheritedMethod, ProofInstance, TypedProgram
from .smt import (
    AdtCtor, AdtS, ArrayS, Assert, BOOL_S, BinT, BoolVal, CallT, Command,
    DeclareConst, DefineAdt, DefineFun, FieldT, INT_S, IntVal, Ite, Lam, Let,
    MatchCaseT, MatchT, NotT, Quant, Read, STRING_S, Sort, SortVar, StrVal,
    Term, Var, Write,
)
from .types import (
    RBool, RBuiltin, RClass, REnum, RFun, RInt, RString, RTrait, RType, RVar,
)

OPTION_ADT = DefineAdt(
    "Option", ("T",),
    (AdtCtor("Some", (("value", SortVar("T")),)), AdtCtor("None", ())),
)
TUPLE_ADT = DefineAdt(
    "Tuple", ("A", "B"),
    (AdtCtor("Tuple_ctor", (("fst", SortVar("A")), ("snd", SortVar("B")))),),
)
VECTOR_ADT = DefineAdt(
    "Vector", ("V",),
    (AdtCtor("Vector_ctor", (
        ("size", INT_S),
        ("entries", ArrayS((INT_S,), AdtS("Option", (SortVar("V"),)))),
    )),),
)
LIST_ADT = DefineAdt(
    "List", ("V",),
    (AdtCtor("List_ctor", (
        ("size", INT_S),
        ("entries", ArrayS((INT_S,), AdtS("Option", (SortVar("V"),)))),
    )),),
)


class LoweringError(Exception):
    pass


def impl_name(obj: str) -> str:
    return f"{obj}!impl"


def proof_fn_name(owner: str, proof: str) -> str:
    return f"{owner}!{proof}"


def _and(*terms: Term) -> Term:
    terms = [t for t in terms if t != BoolVal(True)]
    if not terms:
        return BoolVal(True)
    out = terms[0]
    for t in terms[1:]:
        out = BinT("and", out, t)
    return out


def _or(a: Term, b: Term) -> Term:
    return BinT("or", a, b)


def _eq(a: Term, b: Term) -> Term:
    return BinT("=", a, b)


def _some(v: Term, sort: Sort) -> Term:
    return CallT("Some", (sort,), (v,), AdtS("Option", (sort,)), True)


def _none(sort: Sort) -> Term:
    return CallT("None", (sort,), (), AdtS("Option", (sort,)), True)


@dataclass
class LoweringContext:
    """Per-declaration state: the enclosing `this` handling and a fresh-name
    counter (reserved `!` separator keeps generated names collision-free)."""

    this_term: Term
    counter: "itertools.count"

    def fresh(self, base: str) -> str:
        return f"{base}!{next(self.counter)}"


class Lowerer:
    def __init__(self, tp: TypedProgram):
        self.tp = tp
        self.enum_accessor: dict[tuple[str, str, str], str] = {}
        for ename, decl in tp.enums.items():
            counts: dict[str, int] = {}
            for ctor in decl.ctors:
                for p in ctor.fields:
                    counts[p.name] = counts.get(p.name, 0) + 1
            for ctor in decl.ctors:
                for p in ctor.fields:
                    acc = p.name if counts[p.name] == 1 else f"{ctor.name}!{p.name}"
                    self.enum_accessor[(ename, ctor.name, p.name)] = acc

    # -- types ---------------------------------------------------------------

    def lower_type(self, t: RType) -> Sort:
        if isinstance(t, RInt):
            return INT_S
        if isinstance(t, RString):
            return STRING_S
        if isinstance(t, RBool):
            return BOOL_S
        if isinstance(t, RVar):
            if t.args:
                raise LoweringError(f"unapplied type-constructor variable {t} reached lowering")
            return SortVar(t.name)
        if isinstance(t, RClass):
            name = t.name
            if name in self.tp.objects:
                name = impl_name(name)
            return AdtS(name, tuple(self.lower_type(a) for a in t.args))
        if isinstance(t, REnum):
            return AdtS(t.name, tuple(self.lower_type(a) for a in t.args))
        if isinstance(t, RBuiltin):
            args = tuple(self.lower_type(a) for a in t.args)
            if t.name == "Set":
                return ArrayS((args[0],), BOOL_S)
            if t.name == "Map":
                return ArrayS((args[0],), AdtS("Option", (args[1],)))
            if t.name == "Tuple":
                return AdtS("Tuple", args)
            if t.name == "Vector":
                return AdtS("Vector", args)
            if t.name == "List":
                return AdtS("List", args)
        if isinstance(t, RFun):
            return ArrayS(tuple(self.lower_type(p) for p in t.params), self.lower_type(t.ret))
        if isinstance(t, RTrait):
            raise LoweringError(f"trait type {t} reached lowering (traits are compiled away)")
        raise LoweringError(f"cannot lower type {t!r}")

    # -- declarations ----------------------------------------------------------

    def lower_program(self) -> list[Command]:
        adts: list[DefineAdt] = [OPTION_ADT, TUPLE_ADT, VECTOR_ADT, LIST_ADT]
        for decl in self.tp.program.decls:
            if isinstance(decl, ast.EnumDecl):
                adts.append(self.lower_enum(decl))
            elif isinstance(decl, ast.ClassDecl):
                adts.append(self._class_adt(decl.name, decl))
            elif isinstance(decl, ast.ObjectDecl):
                adts.append(DefineAdt(impl_name(decl.name), (), (AdtCtor(f"{impl_name(decl.name)}_ctor", ()),)))
        cmds: list[Command] = list(_topo_adts(adts))
        for decl in self.tp.program.decls:
            if isinstance(decl, ast.ObjectDecl):
                cmds.append(DeclareConst(decl.name, AdtS(impl_name(decl.name), ())))
        for decl in self.tp.program.decls:
            if isinstance(decl, ast.ClassDecl):
                cmds.extend(self._class_functions(decl.name, decl.type_params))
            elif isinstance(decl, ast.ObjectDecl):
                cmds.extend(self._class_functions(decl.name, []))
                cmds.extend(self.lower_object_proofs(decl.name))
        for decl in self.tp.program.decls:
            if isinstance(decl, ast.ObjectDecl):
                base = impl_name(decl.name)
                cmds.append(Assert(_eq(
                    CallT(decl.name, (), ()),
                    CallT(f"{base}_ctor", (), (), AdtS(base, ()), True),
                )))
        return cmds

    def lower_enum(self, decl: ast.EnumDecl) -> DefineAdt:
        from .checker import Checker  # local import to reuse type resolution

        ctors = []
        for ctor in decl.ctors:
            fields = []
            for p, rt in zip(ctor.fields, self._enum_field_types(decl, ctor)):
                acc = self.enum_accessor[(decl.name, ctor.name, p.name)]
                fields.append((acc, self.lower_type(rt)))
            ctors.append(AdtCtor(ctor.name, tuple(fields)))
        return DefineAdt(decl.name, tuple(decl.type_params), tuple(ctors))

    def _enum_field_types(self, decl: ast.EnumDecl, ctor: ast.Ctor) -> list[RType]:
        enum_t = REnum(decl.name, tuple(RVar(n) for n in decl.type_params))
        checker = _checker_view(self.tp)
        fields = checker.ftypes(enum_t, ctor.name)
        assert fields is not None
        return [ft for _, ft in fields]

    def _class_adt(self, name: str, decl: ast.ClassDecl) -> DefineAdt:
        fields = tuple(
            (fname, self.lower_type(ft)) for fname, ft in self.tp.class_fields[name]
        )
        return DefineAdt(name, tuple(decl.type_params), (AdtCtor(f"{name}_ctor", fields),))

    def lower_class(self, decl: ast.ClassDecl) -> list[Command]:
        return [self._class_adt(decl.name, decl), *self._class_functions(decl.name, decl.type_params)]

    def lower_object(self, decl: ast.ObjectDecl) -> list[Command]:
        base = impl_name(decl.name)
        cmds: list[Command] = [
            DefineAdt(base, (), (AdtCtor(f"{base}_ctor", ()),)),
            DeclareConst(decl.name, AdtS(base, ())),
        ]
        cmds.extend(self._class_functions(decl.name, []))
        cmds.extend(self.lower_object_proofs(decl.name))
        cmds.append(Assert(_eq(
            CallT(decl.name, (), ()),
            CallT(f"{base}_ctor", (), (), AdtS(base, ()), True),
        )))
        return cmds

    def _class_functions(self, name: str, type_params: list[str]) -> list[Command]:
        decl_methods: list[tuple[ast.MethodDef, str]] = []
        source = self.tp.classes[name]
        for m in source.methods:
            decl_methods.append((m, name))
        for im in self.tp.inherited.get(name, []):
            decl_methods.append((im.method, name))
        out: list[Command] = []
        base = impl_name(name) if name in self.tp.objects else name
        this_sort_args = tuple(SortVar(n) for n in type_params)
        for m, owner in decl_methods:
            info = self.tp.method_tables[name][m.name]
            ctx = LoweringContext(Var("this"), itertools.count())
            params: list[tuple[str, Sort]] = [("this", AdtS(base, this_sort_args))]
            for pname, ptype in zip(info.param_names, info.param_types):
                params.append((pname, self.lower_type(ptype)))
            assert info.ret is not None
            body = self.lower_expr(ctx, m.body)
            fn_name = f"{base}_{m.name}"
            recursive = _calls_self(body, fn_name)
            out.append(DefineFun(
                fn_name,
                tuple(type_params) + tuple(info.type_params),
                tuple(params),
                self.lower_type(info.ret),
                body,
                recursive,
            ))
        return out

    def lower_object_proofs(self, obj: str) -> list[Command]:
        out: list[Command] = []
        for proof in self.tp.proofs.get(obj, []):
            out.append(self.lower_proof(obj, proof))
        return out

    def lower_proof(self, obj: str, proof: ProofInstance) -> DefineFun:
        ctx = LoweringContext(CallT(obj, (), ()), itertools.count())
        body = self.lower_expr(ctx, proof.body)
        return DefineFun(
            proof_fn_name(obj, proof.name),
            tuple(proof.type_params),
            (),
            BOOL_S,
            body,
            False,
        )

    # -- expressions -------------------------------------------------------------

    def lower_expr(self, ctx: LoweringContext, e: ast.Expr) -> Term:
        if isinstance(e, ast.IntLit):
            return IntVal(e.value)
        if isinstance(e, ast.StrLit):
            return StrVal(e.value)
        if isinstance(e, ast.BoolLit):
            return BoolVal(e.value)
        if isinstance(e, ast.VarRef):
            if e.name == "this":
                return ctx.this_term
            return Var(e.name)
        if isinstance(e, ast.BinOp):
            lhs = self.lower_expr(ctx, e.lhs)
            rhs = self.lower_expr(ctx, e.rhs)
            if e.op == "==":
                return _eq(lhs, rhs)
            if e.op == "!=":
                return NotT(_eq(lhs, rhs))
            if e.op == "&&":
                return BinT("and", lhs, rhs)
            if e.op == "||":
                return BinT("or", lhs, rhs)
            return BinT(e.op, lhs, rhs)
        if isinstance(e, ast.Not):
            return NotT(self.lower_expr(ctx, e.operand))
        if isinstance(e, ast.Implies):
            return BinT("=>", self.lower_expr(ctx, e.lhs), self.lower_expr(ctx, e.rhs))
        if isinstance(e, ast.FieldAccess):
            return self._lower_field(ctx, e)
        if isinstance(e, ast.MethodCall):
            return self._lower_invoke(ctx, e)
        if isinstance(e, ast.ValBinding):
            return Let(e.name, self.lower_expr(ctx, e.value), self.lower_expr(ctx, e.body))
        if isinstance(e, ast.IfElse):
            return Ite(
                self.lower_expr(ctx, e.cond),
                self.lower_expr(ctx, e.then),
                self.lower_expr(ctx, e.orelse),
            )
        if isinstance(e, ast.Lambda):
            ft = e.ty
            assert isinstance(ft, RFun)
            params = tuple(
                (n, self.lower_type(pt)) for (n, _), pt in zip(e.params, ft.params)
            )
            return Lam(params, self.lower_expr(ctx, e.body))
        if isinstance(e, ast.Call):
            fn = self.lower_expr(ctx, e.fn)
            return Read(fn, tuple(self.lower_expr(ctx, a) for a in e.args))
        if isinstance(e, ast.New):
            return self._lower_new(ctx, e)
        if isinstance(e, ast.Match):
            return self._lower_match(ctx, e)
        if isinstance(e, ast.Quantifier):
            binders = tuple((n, self.lower_type(rt)) for (n, _), rt in zip(e.binders, _binder_types(e)))
            return Quant(e.kind, binders, self.lower_expr(ctx, e.body))
        if isinstance(e, ast.Cast):
            return self.lower_expr(ctx, e.operand)
        raise LoweringError(f"cannot lower expression {type(e).__name__}")

    def _lower_field(self, ctx: LoweringContext, e: ast.FieldAccess) -> Term:
        rt = e.receiver.ty
        operand = self.lower_expr(ctx, e.receiver)
        if isinstance(rt, RBuiltin):
            if rt.name == "Tuple":
                return FieldT(operand, e.field)
            if rt.name in ("Vector", "List"):
                return FieldT(operand, "size")
            raise LoweringError(f"no field {e.field} on {rt}")
        if isinstance(rt, RClass):
            return FieldT(operand, e.field)
        if isinstance(rt, REnum):
            decl = self.tp.enums[rt.name]
            if rt.refined is not None:
                ctor = rt.refined
            else:
                ctor = next(c.name for c in decl.ctors if any(p.name == e.field for p in c.fields))
            return FieldT(operand, self.enum_accessor[(rt.name, ctor, e.field)])
        raise LoweringError(f"field access on {rt}")

    def _lower_new(self, ctx: LoweringContext, e: ast.New) -> Term:
        rt = e.ty
        if isinstance(rt, RBuiltin):
            if rt.name == "Set":
                elem = self.lower_type(rt.args[0])
                return Lam(((ctx.fresh("x"), elem),), BoolVal(False))
            if rt.name == "Map":
                key = self.lower_type(rt.args[0])
                val = self.lower_type(rt.args[1])
                return Lam(((ctx.fresh("x"), key),), _none(val))
            if rt.name in ("Vector", "List"):
                elem = self.lower_type(rt.args[0])
                empty = Lam(((ctx.fresh("x"), INT_S),), _none(elem))
                return CallT(
                    f"{rt.name}_ctor", (elem,), (IntVal(0), empty),
                    AdtS(rt.name, (elem,)), True,
                )
            if rt.name == "Tuple":
                sorts = tuple(self.lower_type(a) for a in rt.args)
                args = tuple(self.lower_expr(ctx, a) for a in e.args)
                return CallT("Tuple_ctor", sorts, args, AdtS("Tuple", sorts), True)
        if isinstance(rt, RClass):
            sorts = tuple(self.lower_type(a) for a in rt.args)
            args = tuple(self.lower_expr(ctx, a) for a in e.args)
            return CallT(f"{rt.name}_ctor", sorts, args, AdtS(rt.name, sorts), True)
        if isinstance(rt, REnum):
            sorts = tuple(self.lower_type(a) for a in rt.args)
            args = tuple(self.lower_expr(ctx, a) for a in e.args)
            return CallT(e.name, sorts, args, AdtS(rt.name, sorts), True)
        raise LoweringError(f"cannot lower construction of {rt}")

    def _lower_match(self, ctx: LoweringContext, e: ast.Match) -> Term:
        rt = e.scrutinee.ty
        assert isinstance(rt, REnum)
        decl = self.tp.enums[rt.name]
        arity = {c.name: len(c.fields) for c in decl.ctors}
        scrutinee = self.lower_expr(ctx, e.scrutinee)
        cases: list[MatchCaseT] = []
        for case in e.cases:
            pat = case.pattern
            body = self.lower_expr(ctx, case.body)
            if isinstance(pat, ast.CtorPattern):
                if pat.bare:
                    binders = tuple(ctx.fresh("_") for _ in range(arity[pat.ctor]))
                else:
                    binders = tuple(
                        b if b != "_" else ctx.fresh("_") for b in pat.binders
                    )
                cases.append(MatchCaseT(pat.ctor, binders, body))
            elif isinstance(pat, ast.NamePattern):
                cases.append(MatchCaseT(None, (pat.name,), body))
            else:
                cases.append(MatchCaseT(None, (ctx.fresh("_"),), body))
        return MatchT(scrutinee, tuple(cases))

    def _lower_invoke(self, ctx: LoweringContext, e: ast.MethodCall) -> Term:
        rt = e.receiver.ty
        if isinstance(rt, RBuiltin):
            return self._lower_builtin_call(ctx, rt, e)
        if isinstance(rt, RClass):
            base = impl_name(rt.name) if rt.name in self.tp.objects else rt.name
            sort_args = tuple(self.lower_type(a) for a in rt.args)
            targs = tuple(
                self.lower_type(t) for t in getattr(e, "resolved_type_args", [])
            )
            args = (self.lower_expr(ctx, e.receiver),) + tuple(
                self.lower_expr(ctx, a) for a in e.args
            )
            return CallT(f"{base}_{e.method}", sort_args + targs, args)
        raise LoweringError(f"cannot lower method call on {rt}")

    # -- collection templates -----------------------------------------------------

    def _lower_builtin_call(self, ctx: LoweringContext, rt: RBuiltin, e: ast.MethodCall) -> Term:
        m = e.method
        recv = self.lower_expr(ctx, e.receiver)
        args = [self.lower_expr(ctx, a) for a in e.args]
        if rt.name == "Set":
            return self._set_op(ctx, rt, m, recv, args, e)
        if rt.name == "Map":
            return self._map_op(ctx, rt, m, recv, args, e)
        if rt.name in ("Vector", "List"):
            return self._seq_op(ctx, rt, m, recv, args, e)
        if rt.name == "Tuple":
            raise LoweringError(f"Tuple has no method {m}")
        raise LoweringError(f"unknown builtin {rt.name}")

    def _set_op(self, ctx, rt: RBuiltin, m: str, s: Term, args: list[Term], e: ast.MethodCall) -> Term:
        elem = self.lower_type(rt.args[0])
        if m == "add":
            return Write(s, (args[0],), BoolVal(True))
        if m == "remove":
            return Write(s, (args[0],), BoolVal(False))
        if m == "contains":
            return Read(s, (args[0],))
        if m == "filter":
            x = ctx.fresh("x")
            return Lam(((x, elem),), _and(Read(s, (Var(x),)), Read(args[0], (Var(x),))))
        if m == "map":
            out_elem = self.lower_type(_result_elem(e))
            x, y = ctx.fresh("x"), ctx.fresh("y")
            return Lam(((y, out_elem),), Quant(
                "exists", ((x, elem),),
                _and(Read(s, (Var(x),)), _eq(Read(args[0], (Var(x),)), Var(y))),
            ))
        if m == "union":
            x = ctx.fresh("x")
            return Lam(((x, elem),), _or(Read(s, (Var(x),)), Read(args[0], (Var(x),))))
        if m == "intersect":
            x = ctx.fresh("x")
            return Lam(((x, elem),), _and(Read(s, (Var(x),)), Read(args[0], (Var(x),))))
        if m == "diff":
            x = ctx.fresh("x")
            return Lam(((x, elem),), _and(Read(s, (Var(x),)), NotT(Read(args[0], (Var(x),)))))
        if m == "subsetOf":
            x = ctx.fresh("x")
            return Quant("forall", ((x, elem),), BinT("=>", Read(s, (Var(x),)), Read(args[0], (Var(x),))))
        if m == "isEmpty":
            x = ctx.fresh("x")
            return Quant("forall", ((x, elem),), NotT(Read(s, (Var(x),))))
        if m == "nonEmpty":
            x = ctx.fresh("x")
            return Quant("exists", ((x, elem),), Read(s, (Var(x),)))
        if m == "forall":
            x = ctx.fresh("x")
            return Quant("forall", ((x, elem),), BinT("=>", Read(s, (Var(x),)), Read(args[0], (Var(x),))))
        if m == "exists":
            x = ctx.fresh("x")
            return Quant("exists", ((x, elem),), _and(Read(s, (Var(x),)), Read(args[0], (Var(x),))))
        raise LoweringError(f"Set has no method {m}")

    def _map_op(self, ctx, rt: RBuiltin, m: str, mp: Term, args: list[Term], e: ast.MethodCall) -> Term:
        key = self.lower_type(rt.args[0])
        val = self.lower_type(rt.args[1])

        def read(k: Term) -> Term:
            return Read(mp, (k,))

        def present(k: Term) -> Term:
            return NotT(_eq(read(k), _none(val)))

        def value_of(k: Term) -> Term:
            return FieldT(read(k), "value")

        if m == "add":
            return Write(mp, (args[0],), _some(args[1], val))
        if m == "remove":
            return Write(mp, (args[0],), _none(val))
        if m == "contains":
            return present(args[0])
        if m == "get":
            return value_of(args[0])
        if m == "getOrElse":
            return Ite(_eq(read(args[0]), _none(val)), args[1], value_of(args[0]))
        if m == "keys":
            k = ctx.fresh("k")
            return Lam(((k, key),), present(Var(k)))
        if m == "values":
            v, k = ctx.fresh("v"), ctx.fresh("k")
            return Lam(((v, val),), Quant(
                "exists", ((k, key),), _eq(read(Var(k)), _some(Var(v), val)),
            ))
        if m == "bijective":
            k1, k2 = ctx.fresh("k"), ctx.fresh("k")
            cond = _and(
                NotT(_eq(Var(k1), Var(k2))), present(Var(k1)), present(Var(k2)),
            )
            return Quant(
                "forall", ((k1, key), (k2, key)),
                BinT("=>", cond, NotT(_eq(read(Var(k1)), read(Var(k2))))),
            )
        if m == "forall":
            k = ctx.fresh("k")
            return Quant("forall", ((k, key),), BinT(
                "=>", present(Var(k)), Read(args[0], (Var(k), value_of(Var(k)))),
            ))
        if m == "exists":
            k = ctx.fresh("k")
            return Quant("exists", ((k, key),), _and(
                present(Var(k)), Read(args[0], (Var(k), value_of(Var(k)))),
            ))
        if m == "map":
            out_val = self.lower_type(_result_elem(e, idx=1))
            k = ctx.fresh("k")
            return Lam(((k, key),), Ite(
                present(Var(k)),
                _some(Read(args[0], (Var(k), value_of(Var(k)))), out_val),
                _none(out_val),
            ))
        if m == "mapValues":
            out_val = self.lower_type(_result_elem(e, idx=1))
            k = ctx.fresh("k")
            return Lam(((k, key),), Ite(
                present(Var(k)),
                _some(Read(args[0], (value_of(Var(k)),)), out_val),
                _none(out_val),
            ))
        if m == "filter":
            k = ctx.fresh("k")
            return Lam(((k, key),), Ite(
                _and(present(Var(k)), Read(args[0], (Var(k), value_of(Var(k))))),
                _some(value_of(Var(k)), val),
                _none(val),
            ))
        if m == "zip":
            other_t = e.args[0].ty
            assert isinstance(other_t, RBuiltin)
            wal = self.lower_type(other_t.args[1])
            tup = AdtS("Tuple", (val, wal))
            k = ctx.fresh("k")
            other = args[0]
            present2 = NotT(_eq(Read(other, (Var(k),)), _none(wal)))
            return Lam(((k, key),), Ite(
                _and(present(Var(k)), present2),
                _some(CallT("Tuple_ctor", (val, wal), (
                    value_of(Var(k)), FieldT(Read(other, (Var(k),)), "value"),
                ), tup, True), tup),
                _none(tup),
            ))
        if m == "combine":
            other, f = args[0], args[1]
            k = ctx.fresh("k")
            present2 = NotT(_eq(Read(other, (Var(k),)), _none(val)))
            value2 = FieldT(Read(other, (Var(k),)), "value")
            return Lam(((k, key),), Ite(
                _and(present(Var(k)), present2),
                _some(Read(f, (value_of(Var(k)), value2)), val),
                Ite(present(Var(k)), read(Var(k)),
                    Ite(present2, Read(other, (Var(k),)), _none(val))),
            ))
        if m == "toSet":
            tup = AdtS("Tuple", (key, val))
            t = ctx.fresh("t")
            return Lam(((t, tup),), _eq(
                read(FieldT(Var(t), "fst")),
                _some(FieldT(Var(t), "snd"), val),
            ))
        raise LoweringError(f"Map has no method {m}")

    def _seq_op(self, ctx, rt: RBuiltin, m: str, seq: Term, args: list[Term], e: ast.MethodCall) -> Term:
        kind = rt.name  # Vector | List
        elem = self.lower_type(rt.args[0])
        size = FieldT(seq, "size")
        entries = FieldT(seq, "entries")

        def make(sz: Term, ent: Term, out_elem: Sort | None = None) -> Term:
            es = out_elem if out_elem is not None else elem
            return CallT(f"{kind}_ctor", (es,), (sz, ent), AdtS(kind, (es,)), True)

        def in_range(i: Term, sz: Term) -> Term:
            return _and(BinT("<=", IntVal(0), i), BinT("<", i, sz))

        if m == "get":
            return FieldT(Read(entries, (args[0],)), "value")
        if m == "write" and kind == "Vector":
            return make(size, Write(entries, (args[0],), _some(args[1], elem)))
        if m == "append" and kind == "Vector":
            return make(
                BinT("+", size, IntVal(1)),
                Write(entries, (size,), _some(args[0], elem)),
            )
        if m == "insert" and kind == "List":
            i, v = args
            k = ctx.fresh("k")
            new_size = BinT("+", size, IntVal(1))
            body = Ite(
                in_range(Var(k), new_size),
                Ite(BinT("<", Var(k), i), Read(entries, (Var(k),)),
                    Ite(_eq(Var(k), i), _some(v, elem),
                        Read(entries, (BinT("-", Var(k), IntVal(1)),)))),
                _none(elem),
            )
            return make(new_size, Lam(((k, INT_S),), body))
        if m == "delete" and kind == "List":
            i = args[0]
            k = ctx.fresh("k")
            new_size = BinT("-", size, IntVal(1))
            body = Ite(
                in_range(Var(k), new_size),
                Ite(BinT("<", Var(k), i), Read(entries, (Var(k),)),
                    Read(entries, (BinT("+", Var(k), IntVal(1)),))),
                _none(elem),
            )
            return make(new_size, Lam(((k, INT_S),), body))
        if m == "map":
            out_elem = self.lower_type(_result_elem(e))
            k = ctx.fresh("k")
            body = Ite(
                in_range(Var(k), size),
                _some(Read(args[0], (FieldT(Read(entries, (Var(k),)), "value"),)), out_elem),
                _none(out_elem),
            )
            return make(size, Lam(((k, INT_S),), body), out_elem)
        if m == "zip":
            other_t = e.args[0].ty
            assert isinstance(other_t, RBuiltin)
            welem = self.lower_type(other_t.args[0])
            tup = AdtS("Tuple", (elem, welem))
            other = args[0]
            osize = FieldT(other, "size")
            oentries = FieldT(other, "entries")
            sz = Ite(BinT("<=", size, osize), size, osize)
            k = ctx.fresh("k")
            pair = CallT("Tuple_ctor", (elem, welem), (
                FieldT(Read(entries, (Var(k),)), "value"),
                FieldT(Read(oentries, (Var(k),)), "value"),
            ), tup, True)
            body = Ite(in_range(Var(k), sz), _some(pair, tup), _none(tup))
            return make(sz, Lam(((k, INT_S),), body), tup)
        if m == "forall":
            k = ctx.fresh("k")
            return Quant("forall", ((k, INT_S),), BinT(
                "=>", in_range(Var(k), size),
                Read(args[0], (FieldT(Read(entries, (Var(k),)), "value"),)),
            ))
        if m == "exists":
            k = ctx.fresh("k")
            return Quant("exists", ((k, INT_S),), _and(
                in_range(Var(k), size),
                Read(args[0], (FieldT(Read(entries, (Var(k),)), "value"),)),
            ))
        raise LoweringError(f"{kind} has no method {m}")


def _calls_self(t: Term, name: str) -> bool:
    found = False

    def walk(x: Term) -> None:
        nonlocal found
        if found:
            return
        if isinstance(x, CallT):
            if not x.is_ctor and x.fn == name:
                found = True
                return
            for a in x.args:
                walk(a)
        elif isinstance(x, Read):
            walk(x.array)
            for k in x.keys:
                walk(k)
        elif isinstance(x, Write):
            walk(x.array)
            for k in x.keys:
                walk(k)
            walk(x.value)
        elif isinstance(x, Lam):
            walk(x.body)
        elif isinstance(x, Let):
            walk(x.value)
            walk(x.body)
        elif isinstance(x, Ite):
            walk(x.cond)
            walk(x.then)
            walk(x.orelse)
        elif isinstance(x, MatchT):
            walk(x.scrutinee)
            for c in x.cases:
                walk(c.body)
        elif isinstance(x, FieldT):
            walk(x.operand)
        elif isinstance(x, Quant):
            walk(x.body)
        elif isinstance(x, BinT):
            walk(x.lhs)
            walk(x.rhs)
        elif isinstance(x, NotT):
            walk(x.operand)

    walk(t)
    return found


def _binder_types(e: ast.Quantifier) -> list[RType]:
    types = getattr(e, "resolved_binder_types", None)
    if types is None:
        raise LoweringError("quantifier binders missing resolved types (checker must run first)")
    return types


def _result_elem(e: ast.MethodCall, idx: int = 0) -> RType:
    rt = e.ty
    assert isinstance(rt, RBuiltin)
    return rt.args[idx]


def _topo_adts(adts: list[DefineAdt]) -> list[DefineAdt]:
    """Order ADT definitions so field references point backwards."""
    by_name = {a.name: a for a in adts}

    def deps(a: DefineAdt) -> set[str]:
        out: set[str] = set()

        def walk(s: Sort) -> None:
            if isinstance(s, AdtS):
                if s.name in by_name and s.name != a.name:
                    out.add(s.name)
                for x in s.args:
                    walk(x)
            elif isinstance(s, ArrayS):
                for k in s.keys:
                    walk(k)
                walk(s.value)
            elif isinstance(s, (SortVar,)):
                pass

        for c in a.ctors:
            for _, s in c.fields:
                walk(s)
        return out

    emitted: list[DefineAdt] = []
    done: set[str] = set()
    pending = list(adts)
    while pending:
        progressed = False
        rest: list[DefineAdt] = []
        for a in pending:
            if deps(a) <= done:
                emitted.append(a)
                done.add(a.name)
                progressed = True
            else:
                rest.append(a)
        if not progressed:
            raise LoweringError(
                f"mutually recursive datatypes are not supported: {sorted(x.name for x in rest)}"
            )
        pending = rest
    return emitted


def lower_program(tp: TypedProgram) -> list[Command]:
    return Lowerer(tp).lower_program()


def _checker_view(tp: TypedProgram):
    """A minimal checker facade for enum field-type resolution."""
    from .checker import Checker

    c = Checker(tp.program)
    c.classes = tp.classes
    c.traits = tp.traits
    c.enums = tp.enums
    c.objects = tp.objects
    c.ctor_owner = tp.ctor_owner
    c.class_fields = tp.class_fields
    c.method_tables = tp.method_tables
    for name in tp.traits:
        c._collect_trait_params(tp.traits[name])
    return c
