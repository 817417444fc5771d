"""Type checker: well-formedness, expression typing, declaration checking,
trait flattening and match exhaustiveness.

Produces a :class:`TypedProgram`: every expression node gets its resolved
type written into ``ty``, trait-inherited methods are substituted into
their implementing class/object and re-checked there, and objects collect
the proofs they define or inherit.

Two deliberate extensions over plain Featherweight-Generic-Java-style
checking:

* trait type parameters may be higher-kinded (``T[X] <: CvRDT[T[X]]``) so
  proof traits can take type constructors as arguments;
* a trait method whose body pattern-matches on a value typed by one of the
  trait's own type parameters cannot be checked standalone; it is recorded
  as *deferred* and checked at every instantiation instead.
"""

from __future__ import annotations

import copy
import itertools
from dataclasses import dataclass, field as dc_field

from . import ast
from .lexer import Span
from .types import (
    BOOL, BUILTIN_ARITY, INT, STRING, RBool, RBuiltin, RClass, REnum, RFun,
    RInt, RString, RTrait, RType, RTypeCtor, RVar, TypeArg, subst, unify,
)


class CheckError(Exception):
    def __init__(self, code: str, message: str, span: Span | None = None):
        loc = f"{span.line}:{span.col}: " if span and span.line else ""
        super().__init__(f"{loc}[{code}] {message}")
        self.code = code
        self.message = message
        self.span = span


class CheckErrors(Exception):
    def __init__(self, errors: list[CheckError]):
        super().__init__("\n".join(str(e) for e in errors))
        self.errors = errors


class _DeferBody(Exception):
    """Trait method body cannot be checked until instantiation."""


@dataclass
class TypeParamInfo:
    name: str
    arity: int = 0
    binders: tuple[str, ...] = ()
    bound: RType | None = None  # may mention the parameter itself and its binders


@dataclass
class MethodInfo:
    name: str
    type_params: list[str]
    param_names: list[str]
    param_types: list[RType]
    ret: RType | None  # None until inferred
    abstract: bool
    owner: str
    node: object = None


@dataclass
class InheritedMethod:
    origin: str  # trait the method came from
    method: ast.MethodDef  # substituted copy, checked in the new owner's context


@dataclass
class ProofInstance:
    name: str
    type_params: list[str]
    body: ast.Expr  # substituted copy, checked with `this` = the owner object
    owner: str
    origin: str  # declaring object or trait


@dataclass
class TypedProgram:
    program: ast.Program
    classes: dict[str, ast.ClassDecl]
    traits: dict[str, ast.TraitDecl]
    enums: dict[str, ast.EnumDecl]
    objects: dict[str, ast.ObjectDecl]
    ctor_owner: dict[str, str]
    class_fields: dict[str, list[tuple[str, RType]]]
    method_tables: dict[str, dict[str, MethodInfo]]
    inherited: dict[str, list[InheritedMethod]]
    proofs: dict[str, list[ProofInstance]]
    warnings: list[str]


_BUILTIN_SIGS: dict[str, dict[str, tuple[list[str], list[RType], RType]]] = {}


def _b(name: str, args: tuple[RType, ...] = ()) -> RBuiltin:
    return RBuiltin(name, args)


def _init_builtin_sigs() -> None:
    V, K, W = RVar("V"), RVar("K"), RVar("W")
    setV, setW = _b("Set", (V,)), _b("Set", (W,))
    _BUILTIN_SIGS["Set"] = {
        "add": ([], [V], setV),
        "remove": ([], [V], setV),
        "contains": ([], [V], BOOL),
        "isEmpty": ([], [], BOOL),
        "nonEmpty": ([], [], BOOL),
        "union": ([], [setV], setV),
        "diff": ([], [setV], setV),
        "intersect": ([], [setV], setV),
        "subsetOf": ([], [setV], BOOL),
        "map": (["W"], [RFun((V,), W)], setW),
        "filter": ([], [RFun((V,), BOOL)], setV),
        "forall": ([], [RFun((V,), BOOL)], BOOL),
        "exists": ([], [RFun((V,), BOOL)], BOOL),
    }
    mapKV = _b("Map", (K, V))
    mapKW = _b("Map", (K, W))
    _BUILTIN_SIGS["Map"] = {
        "add": ([], [K, V], mapKV),
        "remove": ([], [K], mapKV),
        "contains": ([], [K], BOOL),
        "get": ([], [K], V),
        "getOrElse": ([], [K, V], V),
        "keys": ([], [], _b("Set", (K,))),
        "values": ([], [], _b("Set", (V,))),
        "bijective": ([], [], BOOL),
        "map": (["W"], [RFun((K, V), W)], mapKW),
        "mapValues": (["W"], [RFun((V,), W)], mapKW),
        "filter": ([], [RFun((K, V), BOOL)], mapKV),
        "zip": (["W"], [mapKW], _b("Map", (K, _b("Tuple", (V, W))))),
        "combine": ([], [mapKV, RFun((V, V), V)], mapKV),
        "forall": ([], [RFun((K, V), BOOL)], BOOL),
        "exists": ([], [RFun((K, V), BOOL)], BOOL),
        "toSet": ([], [], _b("Set", (_b("Tuple", (K, V)),))),
    }
    vecV, vecW = _b("Vector", (V,)), _b("Vector", (W,))
    _BUILTIN_SIGS["Vector"] = {
        "get": ([], [INT], V),
        "write": ([], [INT, V], vecV),
        "append": ([], [V], vecV),
        "map": (["W"], [RFun((V,), W)], vecW),
        "zip": (["W"], [vecW], _b("Vector", (_b("Tuple", (V, W)),))),
        "forall": ([], [RFun((V,), BOOL)], BOOL),
        "exists": ([], [RFun((V,), BOOL)], BOOL),
    }
    listV, listW = _b("List", (V,)), _b("List", (W,))
    _BUILTIN_SIGS["List"] = {
        "get": ([], [INT], V),
        "insert": ([], [INT, V], listV),
        "delete": ([], [INT], listV),
        "map": (["W"], [RFun((V,), W)], listW),
        "zip": (["W"], [listW], _b("List", (_b("Tuple", (V, W)),))),
        "forall": ([], [RFun((V,), BOOL)], BOOL),
        "exists": ([], [RFun((V,), BOOL)], BOOL),
    }
    _BUILTIN_SIGS["Tuple"] = {}


_init_builtin_sigs()


@dataclass
class Env:
    delta: dict[str, TypeParamInfo]
    gamma: dict[str, RType]

    def child(self) -> "Env":
        return Env(dict(self.delta), dict(self.gamma))


class Checker:
    def __init__(self, program: ast.Program):
        self.program = program
        self.errors: list[CheckError] = []
        self.warnings: list[str] = []
        self.classes: dict[str, ast.ClassDecl] = {}
        self.traits: dict[str, ast.TraitDecl] = {}
        self.enums: dict[str, ast.EnumDecl] = {}
        self.objects: dict[str, ast.ObjectDecl] = {}
        self.ctor_owner: dict[str, str] = {}
        self.trait_params: dict[str, list[TypeParamInfo]] = {}
        self.method_tables: dict[str, dict[str, MethodInfo]] = {}
        self.deferred: dict[str, set[str]] = {}  # trait -> method names
        self.inherited: dict[str, list[InheritedMethod]] = {}
        self.proofs: dict[str, list[ProofInstance]] = {}
        self.class_fields: dict[str, list[tuple[str, RType]]] = {}
        self._checking_trait: str | None = None
        self._suppress_bound_checks = 0
        self._fresh = itertools.count()

    # -- entry point --------------------------------------------------------

    def check(self) -> TypedProgram:
        self._collect_names()
        if self.errors:
            raise CheckErrors(self.errors)
        for decl in self.program.decls:
            if isinstance(decl, ast.EnumDecl):
                self._check_enum(decl)
        for decl in self.program.decls:
            if isinstance(decl, ast.TraitDecl):
                self._collect_trait_params(decl)
        for decl in self.program.decls:
            if isinstance(decl, ast.TraitDecl):
                self._check_trait(decl)
        for decl in self.program.decls:
            if isinstance(decl, ast.ClassDecl):
                self._check_class(decl)
        for decl in self.program.decls:
            if isinstance(decl, ast.ObjectDecl):
                self._check_object(decl)
        if self.errors:
            raise CheckErrors(self.errors)
        return TypedProgram(
            program=self.program,
            classes=self.classes,
            traits=self.traits,
            enums=self.enums,
            objects=self.objects,
            ctor_owner=self.ctor_owner,
            class_fields=self.class_fields,
            method_tables=self.method_tables,
            inherited=self.inherited,
            proofs=self.proofs,
            warnings=self.warnings,
        )

    def error(self, code: str, message: str, span: Span | None = None) -> None:
        self.errors.append(CheckError(code, message, span))

    def warn(self, message: str) -> None:
        if message not in self.warnings:
            self.warnings.append(message)

    # -- name collection ----------------------------------------------------

    def _collect_names(self) -> None:
        seen: set[str] = set(BUILTIN_ARITY) | {"Int", "String", "Boolean"}
        for decl in self.program.decls:
            name = decl.name
            if name in seen:
                self.error("dup-decl", f"duplicate declaration name {name!r}", decl.span)
                continue
            seen.add(name)
            if isinstance(decl, ast.ClassDecl):
                self.classes[name] = decl
            elif isinstance(decl, ast.TraitDecl):
                self.traits[name] = decl
            elif isinstance(decl, ast.EnumDecl):
                self.enums[name] = decl
                ctor_names: set[str] = set()
                for ctor in decl.ctors:
                    if ctor.name in ctor_names:
                        self.error("dup-ctor", f"duplicate constructor {ctor.name!r} in enum {name}", ctor.span)
                    ctor_names.add(ctor.name)
                    if ctor.name in self.ctor_owner:
                        self.error("dup-ctor", f"constructor name {ctor.name!r} already used by enum {self.ctor_owner[ctor.name]}", ctor.span)
                    self.ctor_owner[ctor.name] = name
            elif isinstance(decl, ast.ObjectDecl):
                self.objects[name] = decl

    def _collect_trait_params(self, decl: ast.TraitDecl) -> None:
        infos: list[TypeParamInfo] = []
        for tp in decl.type_params:
            infos.append(TypeParamInfo(tp.name, tp.arity, tuple(tp.binders), None))
        self.trait_params[decl.name] = infos
        # Bounds may mention any of the trait's own parameters (F-bounded
        # pattern), so install them without bound-checking first; they are
        # re-validated in _check_trait once every bound is in place.
        delta = {p.name: p for p in infos}
        self._suppress_bound_checks += 1
        try:
            for tp, info in zip(decl.type_params, infos):
                if tp.bound is not None:
                    d = dict(delta)
                    for b in tp.binders:
                        d[b] = TypeParamInfo(b)
                    try:
                        info.bound = self.resolve_type(Env(d, {}), tp.bound)
                    except CheckError as e:
                        self.errors.append(e)
        finally:
            self._suppress_bound_checks -= 1

    # -- type resolution (well-formedness) -----------------------------------

    def resolve_type(self, env: Env, t: ast.TypeExpr) -> RType:
        if isinstance(t, ast.IntT):
            return INT
        if isinstance(t, ast.StringT):
            return STRING
        if isinstance(t, ast.BoolT):
            return BOOL
        if isinstance(t, ast.FunT):
            return RFun(
                tuple(self.resolve_type(env, p) for p in t.params),
                self.resolve_type(env, t.ret),
            )
        assert isinstance(t, ast.NamedT)
        name = t.name
        args = tuple(self.resolve_type(env, a) for a in t.args)
        if name in env.delta:
            info = env.delta[name]
            if len(args) != info.arity:
                raise CheckError(
                    "arity", f"type variable {name} expects {info.arity} argument(s), got {len(args)}"
                )
            return RVar(name, args)
        if name in self.classes:
            decl = self.classes[name]
            if len(args) != len(decl.type_params):
                raise CheckError("arity", f"class {name} expects {len(decl.type_params)} type argument(s), got {len(args)}")
            return RClass(name, args)
        if name in self.enums:
            decl = self.enums[name]
            if len(args) != len(decl.type_params):
                raise CheckError("arity", f"enum {name} expects {len(decl.type_params)} type argument(s), got {len(args)}")
            return REnum(name, args)
        if name in self.traits:
            params = self.trait_params[name]
            if len(args) != len(params):
                raise CheckError("arity", f"trait {name} expects {len(params)} type argument(s), got {len(args)}")
            for param, arg in zip(params, args):
                if param.arity:
                    raise CheckError("kind", f"trait {name} parameter {param.name} expects a type constructor")
                self._check_bound(env, name, params, args, param, arg)
            return RTrait(name, args)
        if name in BUILTIN_ARITY:
            if len(args) != BUILTIN_ARITY[name]:
                raise CheckError("arity", f"{name} expects {BUILTIN_ARITY[name]} type argument(s), got {len(args)}")
            return RBuiltin(name, args)
        if name in self.ctor_owner:
            owner = self.enums[self.ctor_owner[name]]
            if owner.type_params:
                raise CheckError(
                    "ctor-type", f"constructor {name} of generic enum {owner.name} cannot be used as a type; write {owner.name}[…]"
                )
            if args:
                raise CheckError("arity", f"constructor type {name} takes no type arguments")
            return REnum(owner.name, (), refined=name)
        raise CheckError("unknown-type", f"unknown type {name!r}")

    def _check_bound(
        self,
        env: Env,
        trait_name: str,
        params: list[TypeParamInfo],
        args: tuple[TypeArg, ...],
        param: TypeParamInfo,
        arg: TypeArg,
    ) -> None:
        if param.bound is None or self._suppress_bound_checks:
            return
        mapping: dict[str, TypeArg] = {p.name: a for p, a in zip(params, args)}
        if isinstance(arg, RTypeCtor):
            # Instantiate the parameter's binders with fresh variables on
            # both sides of the check.
            fresh = tuple(RVar(b) for b in param.binders)
            mapping.update({b: f for b, f in zip(param.binders, fresh)})
            applied = self._apply_ctor(arg, fresh)
            bound = subst(param.bound, mapping)
            inner = env.child()
            for b in param.binders:
                inner.delta[b] = TypeParamInfo(b)
            if not self.is_subtype(inner, applied, bound):
                raise CheckError("bound", f"{arg} does not satisfy bound {bound} of trait {trait_name}")
        else:
            bound = subst(param.bound, mapping)
            if not self.is_subtype(env, arg, bound):
                raise CheckError("bound", f"{arg} is not a subtype of bound {bound} required by trait {trait_name}")

    @staticmethod
    def _apply_ctor(ctor: RTypeCtor, args: tuple[RType, ...]) -> RType:
        if ctor.kind == "class":
            return RClass(ctor.name, args)
        if ctor.kind == "enum":
            return REnum(ctor.name, args)
        return RVar(ctor.name, args)

    def resolve_trait_ref(
        self, env: Env, ref: ast.TraitRef, check_bounds: bool = True
    ) -> tuple[str, tuple[TypeArg, ...]]:
        """Resolve an ``extends`` clause; arguments may be type constructors
        for higher-kinded parameters. ``check_bounds=False`` is used when
        walking already-checked extension chains (the F-bounded pattern
        would otherwise recurse forever)."""
        if ref.name not in self.traits:
            raise CheckError("unknown-trait", f"unknown trait {ref.name!r}")
        params = self.trait_params[ref.name]
        if len(ref.args) != len(params):
            raise CheckError("arity", f"trait {ref.name} expects {len(params)} type argument(s), got {len(ref.args)}")
        args: list[TypeArg] = []
        for param, arg_expr in zip(params, ref.args):
            if param.arity:
                if not (isinstance(arg_expr, ast.NamedT) and not arg_expr.args):
                    raise CheckError("kind", f"trait {ref.name} parameter {param.name} expects a type constructor name")
                cname = arg_expr.name
                if cname in self.classes:
                    actual_arity = len(self.classes[cname].type_params)
                    ctor = RTypeCtor("class", cname, actual_arity)
                elif cname in self.enums:
                    actual_arity = len(self.enums[cname].type_params)
                    ctor = RTypeCtor("enum", cname, actual_arity)
                elif cname in env.delta and env.delta[cname].arity:
                    ctor = RTypeCtor("var", cname, env.delta[cname].arity)
                else:
                    raise CheckError("kind", f"{cname!r} is not a type constructor")
                if ctor.arity != param.arity:
                    raise CheckError("kind", f"type constructor {cname} has arity {ctor.arity}, parameter {param.name} expects {param.arity}")
                args.append(ctor)
            else:
                args.append(self.resolve_type(env, arg_expr))
        # Bound checks need the full argument vector (F-bounded patterns).
        if check_bounds:
            for param, arg in zip(params, args):
                self._check_bound(env, ref.name, params, tuple(args), param, arg)
        return ref.name, tuple(args)

    # -- subtyping (reflexivity + declared trait-extension chain) ------------

    def is_subtype(self, env: Env, t: RType, bound: RType) -> bool:
        if t == bound:
            return True
        for sup in self._supertraits(env, t):
            if sup == bound:
                return True
        return False

    def _supertraits(self, env: Env, t: RType) -> list[RType]:
        out: list[RType] = []
        seen: set[str] = set()
        current: RType | None = t
        while current is not None:
            nxt: RType | None = None
            if isinstance(current, RVar):
                info = env.delta.get(current.name)
                if info is None or info.bound is None:
                    break
                mapping: dict[str, TypeArg] = {b: a for b, a in zip(info.binders, current.args)}
                nxt = subst(info.bound, mapping)
            elif isinstance(current, RClass):
                decl = self.classes.get(current.name)
                if decl is None or decl.super_trait is None:
                    break
                nxt = self._super_of(decl.type_params, current.args, decl.super_trait)
            elif isinstance(current, RTrait):
                decl = self.traits.get(current.name)
                if decl is None or decl.super_trait is None:
                    break
                names = [p.name for p in self.trait_params[current.name]]
                nxt = self._super_of(names, current.args, decl.super_trait)
            else:
                break
            if nxt is None:
                break
            key = str(nxt)
            if key in seen:
                break
            seen.add(key)
            out.append(nxt)
            current = nxt
        return out

    def _super_of(self, param_names: list[str], args: tuple[TypeArg, ...], ref: ast.TraitRef) -> RType | None:
        """Resolve a declared super-trait reference under an instantiation."""
        delta = {n: TypeParamInfo(n) for n in param_names}
        env = Env(delta, {})
        try:
            name, raw_args = self.resolve_trait_ref(env, ref, check_bounds=False)
        except CheckError:
            return None
        mapping: dict[str, TypeArg] = {n: a for n, a in zip(param_names, args)}
        resolved: list[RType] = []
        for a in raw_args:
            if isinstance(a, RTypeCtor):
                if a.kind == "var" and a.name in mapping:
                    target = mapping[a.name]
                    assert isinstance(target, RTypeCtor)
                    resolved.append(target)  # type: ignore[arg-type]
                else:
                    resolved.append(a)  # type: ignore[arg-type]
            else:
                resolved.append(subst(a, mapping))
        return RTrait(name, tuple(resolved))  # type: ignore[arg-type]

    # -- member lookup --------------------------------------------------------

    def fields_of(self, env: Env, t: RType) -> list[tuple[str, RType]] | None:
        if isinstance(t, RClass):
            decl = self.classes.get(t.name)
            if decl is None:
                return None
            mapping: dict[str, TypeArg] = {n: a for n, a in zip(decl.type_params, t.args)}
            base = self.class_fields.get(t.name)
            if base is None:
                # During checking of the class itself.
                inner = Env({n: TypeParamInfo(n) for n in decl.type_params}, {})
                base = [(p.name, self.resolve_type(inner, p.type)) for p in decl.fields]
            return [(n, subst(ft, mapping)) for n, ft in base]
        if isinstance(t, RBuiltin) and t.name == "Tuple":
            return [("fst", t.args[0]), ("snd", t.args[1])]
        if isinstance(t, RBuiltin) and t.name in ("Vector", "List"):
            return [("size", INT)]
        return None

    def ftypes(self, enum_type: REnum, ctor_name: str) -> list[tuple[str, RType]] | None:
        decl = self.enums.get(enum_type.name)
        if decl is None:
            return None
        for ctor in decl.ctors:
            if ctor.name == ctor_name:
                mapping: dict[str, TypeArg] = {n: a for n, a in zip(decl.type_params, enum_type.args)}
                inner = Env({n: TypeParamInfo(n) for n in decl.type_params}, {})
                return [
                    (p.name, subst(self.resolve_type(inner, p.type), mapping))
                    for p in ctor.fields
                ]
        return None

    def ctors_of(self, enum_name: str) -> list[str]:
        return [c.name for c in self.enums[enum_name].ctors]

    def mtype(self, env: Env, m: str, t: RType, span: Span | None = None) -> tuple[list[str], list[str], list[RType], RType | None] | None:
        """Return (type_params, param_names, param_types, return_type) of
        method ``m`` on receiver type ``t``, substituted by the receiver's
        type arguments. Walks the trait chain (MT-*-rec)."""
        if isinstance(t, RBuiltin):
            sig = _BUILTIN_SIGS.get(t.name, {}).get(m)
            if sig is None:
                return None
            tparams, ptypes, ret = sig
            names = {"Set": ["V"], "Map": ["K", "V"], "Vector": ["V"], "List": ["V"], "Tuple": ["A", "B"]}[t.name]
            mapping: dict[str, TypeArg] = {n: a for n, a in zip(names, t.args)}
            return (
                list(tparams),
                [f"x{i}" for i in range(len(ptypes))],
                [subst(p, {k: v for k, v in mapping.items() if k not in tparams}) for p in ptypes],
                subst(ret, {k: v for k, v in mapping.items() if k not in tparams}),
            )
        if isinstance(t, RClass):
            decl = self.classes.get(t.name)
            if decl is None:
                return None
            table = self.method_tables.get(t.name, {})
            info = table.get(m)
            mapping: dict[str, TypeArg] = {n: a for n, a in zip(decl.type_params, t.args)}
            if info is not None:
                return self._subst_sig(info, mapping)
            if decl.super_trait is not None:
                sup = self._super_of(decl.type_params, t.args, decl.super_trait)
                if sup is not None:
                    return self.mtype(env, m, sup, span)
            return None
        if isinstance(t, RTrait):
            decl = self.traits.get(t.name)
            if decl is None:
                return None
            table = self.method_tables.get(t.name, {})
            info = table.get(m)
            names = [p.name for p in self.trait_params[t.name]]
            mapping = {n: a for n, a in zip(names, t.args)}
            if info is not None:
                return self._subst_sig(info, mapping)
            if decl.super_trait is not None:
                sup = self._super_of(names, t.args, decl.super_trait)
                if sup is not None:
                    return self.mtype(env, m, sup, span)
            return None
        if isinstance(t, RVar):
            info = env.delta.get(t.name)
            if info is None or info.bound is None:
                return None
            mapping = {b: a for b, a in zip(info.binders, t.args)}
            return self.mtype(env, m, subst(info.bound, mapping), span)
        return None

    def _subst_sig(self, info: MethodInfo, mapping: dict[str, TypeArg]):
        mapping = {k: v for k, v in mapping.items() if k not in info.type_params}
        ptypes = [subst(p, mapping) for p in info.param_types]
        ret = subst(info.ret, mapping) if info.ret is not None else None
        return (list(info.type_params), list(info.param_names), ptypes, ret)

    # -- expression typing -----------------------------------------------------

    def type_of(self, env: Env, e: ast.Expr) -> RType:
        t = self._type_of(env, e)
        e.ty = t
        return t

    def _type_of(self, env: Env, e: ast.Expr) -> RType:
        if isinstance(e, ast.IntLit):
            return INT
        if isinstance(e, ast.StrLit):
            return STRING
        if isinstance(e, ast.BoolLit):
            return BOOL
        if isinstance(e, ast.VarRef):
            if e.name not in env.gamma:
                raise CheckError("unbound", f"unbound variable {e.name!r}", e.span)
            return env.gamma[e.name]
        if isinstance(e, ast.BinOp):
            lt = self.type_of(env, e.lhs)
            rt = self.type_of(env, e.rhs)
            if e.op in ("+", "-", "*", "/"):
                if lt != INT or rt != INT:
                    raise CheckError("op-type", f"arithmetic {e.op} needs Int operands, got {lt} and {rt}", e.span)
                return INT
            if e.op in ("<", "<=", ">", ">="):
                if lt != INT or rt != INT:
                    raise CheckError("op-type", f"comparison {e.op} needs Int operands, got {lt} and {rt}", e.span)
                return BOOL
            if e.op in ("&&", "||"):
                if lt != BOOL or rt != BOOL:
                    raise CheckError("op-type", f"boolean {e.op} needs Boolean operands, got {lt} and {rt}", e.span)
                return BOOL
            if e.op in ("==", "!="):
                if lt != rt:
                    raise CheckError("eq-type", f"cannot compare {lt} with {rt}", e.span)
                return BOOL
            raise CheckError("op", f"unknown operator {e.op}", e.span)
        if isinstance(e, ast.Not):
            if self.type_of(env, e.operand) != BOOL:
                raise CheckError("op-type", "negation needs a Boolean operand", e.span)
            return BOOL
        if isinstance(e, ast.Implies):
            lt = self.type_of(env, e.lhs)
            rt = self.type_of(env, e.rhs)
            if lt != BOOL or rt != BOOL:
                raise CheckError("op-type", "implication needs Boolean operands", e.span)
            return BOOL
        if isinstance(e, ast.FieldAccess):
            rt = self.type_of(env, e.receiver)
            if isinstance(rt, REnum):
                return self._enum_field(rt, e)
            fields = self.fields_of(env, rt)
            if fields is None:
                if isinstance(rt, RVar):
                    raise _DeferBody()
                raise CheckError("no-fields", f"type {rt} has no fields", e.span)
            for name, ft in fields:
                if name == e.field:
                    return ft
            raise CheckError("unknown-field", f"type {rt} has no field {e.field!r}", e.span)
        if isinstance(e, ast.MethodCall):
            return self._type_invoke(env, e)
        if isinstance(e, ast.ValBinding):
            vt = self.type_of(env, e.value)
            if e.declared_type is not None:
                declared = self.resolve_type(env, e.declared_type)
                if declared != vt:
                    raise CheckError("val-type", f"val {e.name}: declared {declared}, got {vt}", e.span)
                vt = declared
            inner = env.child()
            inner.gamma[e.name] = vt
            return self.type_of(inner, e.body)
        if isinstance(e, ast.IfElse):
            if self.type_of(env, e.cond) != BOOL:
                raise CheckError("if-cond", "if condition must be Boolean", e.span)
            tt = self.type_of(env, e.then)
            et = self.type_of(env, e.orelse)
            if tt != et:
                raise CheckError("if-branches", f"if branches disagree: {tt} vs {et}", e.span)
            return tt
        if isinstance(e, ast.Lambda):
            inner = env.child()
            ptypes = []
            for name, texpr in e.params:
                pt = self.resolve_type(env, texpr)
                inner.gamma[name] = pt
                ptypes.append(pt)
            return RFun(tuple(ptypes), self.type_of(inner, e.body))
        if isinstance(e, ast.Call):
            ft = self.type_of(env, e.fn)
            if not isinstance(ft, RFun):
                raise CheckError("call-nonfun", f"cannot call a value of type {ft}", e.span)
            if len(e.args) != len(ft.params):
                raise CheckError("call-arity", f"function expects {len(ft.params)} argument(s), got {len(e.args)}", e.span)
            for a, pt in zip(e.args, ft.params):
                at = self.type_of(env, a)
                if at != pt:
                    raise CheckError("call-arg", f"argument has type {at}, expected {pt}", a.span)
            return ft.ret
        if isinstance(e, ast.New):
            return self._type_new(env, e)
        if isinstance(e, ast.Match):
            return self._type_match(env, e)
        if isinstance(e, ast.Quantifier):
            inner = env.child()
            binder_types = []
            for name, texpr in e.binders:
                bt0 = self.resolve_type(env, texpr)
                inner.gamma[name] = bt0
                binder_types.append(bt0)
            e.resolved_binder_types = binder_types  # type: ignore[attr-defined]
            bt = self.type_of(inner, e.body)
            if bt != BOOL:
                raise CheckError("quantifier-body", f"quantifier body must be Boolean, got {bt}", e.span)
            return BOOL
        if isinstance(e, ast.Cast):
            self.type_of(env, e.operand)
            return self.resolve_type(env, e.target)
        raise CheckError("expr", f"cannot type expression {type(e).__name__}", getattr(e, "span", None))

    def _enum_field(self, rt: REnum, e: ast.FieldAccess) -> RType:
        decl = self.enums.get(rt.name)
        if decl is None:
            raise CheckError("unknown-enum", f"unknown enum {rt.name}", e.span)
        candidates = [c for c in decl.ctors if any(p.name == e.field for p in c.fields)]
        if not candidates:
            raise CheckError("unknown-field", f"no constructor of enum {rt.name} has a field {e.field!r}", e.span)
        if rt.refined is not None:
            chosen = next((c for c in candidates if c.name == rt.refined), None)
            if chosen is None:
                raise CheckError("unknown-field", f"constructor {rt.refined} of {rt.name} has no field {e.field!r}", e.span)
        else:
            chosen = candidates[0]
            self.warn(
                f"{e.span.line}:{e.span.col}: field {e.field!r} read from enum {rt.name} "
                f"without a proven constructor; using accessor of {chosen.name} (unspecified on other variants)"
            )
        fields = self.ftypes(rt, chosen.name)
        assert fields is not None
        for name, ft in fields:
            if name == e.field:
                return ft
        raise AssertionError

    def _type_invoke(self, env: Env, e: ast.MethodCall) -> RType:
        rt = self.type_of(env, e.receiver)
        sig = self.mtype(env, e.method, rt, e.span)
        if sig is None:
            if isinstance(rt, RVar) and self._checking_trait is not None:
                raise _DeferBody()
            raise CheckError("unknown-method", f"type {rt} has no method {e.method!r}", e.span)
        tparams, pnames, ptypes, ret = sig
        if ret is None:
            raise CheckError(
                "ret-infer",
                f"method {e.method!r} is referenced before its return type is known; annotate it",
                e.span,
            )
        arg_types = [self.type_of(env, a) for a in e.args]
        if len(arg_types) != len(ptypes):
            raise CheckError("invoke-arity", f"method {e.method} expects {len(ptypes)} argument(s), got {len(arg_types)}", e.span)
        mapping: dict[str, TypeArg] = {}
        if e.type_args:
            if len(e.type_args) != len(tparams):
                raise CheckError("invoke-targs", f"method {e.method} expects {len(tparams)} type argument(s)", e.span)
            for n, texpr in zip(tparams, e.type_args):
                mapping[n] = self.resolve_type(env, texpr)
        elif tparams:
            holes = set(tparams)
            out: dict[str, TypeArg] = {}
            for pt, at in zip(ptypes, arg_types):
                unify(pt, at, holes, out)
            missing = [n for n in tparams if n not in out]
            if missing:
                raise CheckError("invoke-infer", f"cannot infer type argument(s) {missing} of method {e.method}", e.span)
            mapping = out
        for pt, at, a in zip(ptypes, arg_types, e.args):
            expected = subst(pt, mapping) if mapping else pt
            if expected != at:
                raise CheckError("invoke-arg", f"argument of {e.method} has type {at}, expected {expected}", a.span)
        resolved_targs = [mapping[n] for n in tparams] if tparams else []
        e.resolved_type_args = resolved_targs  # type: ignore[attr-defined]
        return subst(ret, mapping) if mapping else ret

    def _type_new(self, env: Env, e: ast.New) -> RType:
        name = e.name
        if name in BUILTIN_ARITY:
            if name == "Tuple":
                if len(e.args) != 2:
                    raise CheckError("new-arity", "Tuple takes exactly two arguments", e.span)
                if e.type_args:
                    targs = tuple(self.resolve_type(env, t) for t in e.type_args)
                    if len(targs) != 2:
                        raise CheckError("new-targs", "Tuple takes two type arguments", e.span)
                    for a, expect in zip(e.args, targs):
                        at = self.type_of(env, a)
                        if at != expect:
                            raise CheckError("new-arg", f"Tuple argument has type {at}, expected {expect}", a.span)
                    return RBuiltin("Tuple", targs)
                return RBuiltin("Tuple", (self.type_of(env, e.args[0]), self.type_of(env, e.args[1])))
            if e.args:
                raise CheckError("new-arity", f"new {name}[…]() takes no arguments", e.span)
            if len(e.type_args) != BUILTIN_ARITY[name]:
                raise CheckError(
                    "new-targs",
                    f"explicit type argument required: new {name} takes {BUILTIN_ARITY[name]} type argument(s)",
                    e.span,
                )
            return RBuiltin(name, tuple(self.resolve_type(env, t) for t in e.type_args))
        if name in self.classes:
            decl = self.classes[name]
            field_list = self.class_fields.get(name)
            if field_list is None:
                inner = Env({n: TypeParamInfo(n) for n in decl.type_params}, {})
                field_list = [(p.name, self.resolve_type(inner, p.type)) for p in decl.fields]
            if len(e.args) != len(field_list):
                raise CheckError("new-arity", f"class {name} has {len(field_list)} field(s), got {len(e.args)} argument(s)", e.span)
            arg_types = [self.type_of(env, a) for a in e.args]
            targs = self.infer_ctor_type_args(
                env, e, decl.type_params, [ft for _, ft in field_list], arg_types
            )
            return RClass(name, targs)
        if name in self.ctor_owner:
            enum_name = self.ctor_owner[name]
            decl = self.enums[enum_name]
            inner = Env({n: TypeParamInfo(n) for n in decl.type_params}, {})
            ctor = next(c for c in decl.ctors if c.name == name)
            field_types = [self.resolve_type(inner, p.type) for p in ctor.fields]
            if len(e.args) != len(field_types):
                raise CheckError("new-arity", f"constructor {name} has {len(field_types)} field(s), got {len(e.args)} argument(s)", e.span)
            arg_types = [self.type_of(env, a) for a in e.args]
            targs = self.infer_ctor_type_args(env, e, decl.type_params, field_types, arg_types)
            return REnum(enum_name, targs, refined=name)
        if name in self.traits:
            raise CheckError("new-trait", f"cannot instantiate trait {name}", e.span)
        if self._checking_trait is not None:
            raise _DeferBody()
        raise CheckError("unknown-class", f"unknown class or constructor {name!r}", e.span)

    def infer_ctor_type_args(
        self,
        env: Env,
        e: ast.New,
        type_params: list[str],
        field_types: list[RType],
        arg_types: list[RType],
    ) -> tuple[RType, ...]:
        """Infer (or check explicit) constructor type arguments by
        first-order unification of argument types against field types."""
        if e.type_args:
            if len(e.type_args) != len(type_params):
                raise CheckError("new-targs", f"{e.name} expects {len(type_params)} type argument(s)", e.span)
            mapping: dict[str, TypeArg] = {
                n: self.resolve_type(env, t) for n, t in zip(type_params, e.type_args)
            }
        else:
            holes = set(type_params)
            out: dict[str, TypeArg] = {}
            for ft, at in zip(field_types, arg_types):
                unify(ft, at, holes, out)
            missing = [n for n in type_params if n not in out]
            if missing:
                raise CheckError(
                    "new-infer",
                    f"explicit type argument required for new {e.name} (cannot determine {', '.join(missing)})",
                    e.span,
                )
            mapping = out
        for ft, at, a in zip(field_types, arg_types, e.args):
            expected = subst(ft, mapping)
            if expected != at:
                raise CheckError("new-arg", f"argument of new {e.name} has type {at}, expected {expected}", a.span)
        result = tuple(mapping[n] for n in type_params)
        for r in result:
            if isinstance(r, RTypeCtor):
                raise CheckError("new-targs", f"type constructor {r.name} cannot be a value type argument", e.span)
        e.resolved_type_args = list(result)  # type: ignore[attr-defined]
        return result  # type: ignore[return-value]

    def _type_match(self, env: Env, e: ast.Match) -> RType:
        st = self.type_of(env, e.scrutinee)
        if isinstance(st, RVar):
            raise _DeferBody()
        if not isinstance(st, REnum):
            raise CheckError("match-scrutinee", f"can only match on enum values, got {st}", e.span)
        decl = self.enums.get(st.name)
        if decl is None:
            raise CheckError("unknown-enum", f"unknown enum {st.name}", e.span)
        result: RType | None = None
        covered: set[str] = set()
        has_catchall = False
        for case in e.cases:
            inner = env.child()
            pat = case.pattern
            if isinstance(pat, ast.CtorPattern):
                fields = self.ftypes(st, pat.ctor)
                if fields is None:
                    raise CheckError("match-ctor", f"enum {st.name} has no constructor {pat.ctor!r}", pat.span)
                if not pat.bare:
                    if len(pat.binders) != len(fields):
                        raise CheckError(
                            "match-binders",
                            f"constructor {pat.ctor} has {len(fields)} field(s), pattern binds {len(pat.binders)}",
                            pat.span,
                        )
                    named = [b for b in pat.binders if b != "_"]
                    if len(named) != len(set(named)):
                        raise CheckError("match-binders", f"duplicate binder in pattern {pat.ctor}", pat.span)
                    for binder, (_, ft) in zip(pat.binders, fields):
                        if binder != "_":
                            inner.gamma[binder] = ft
                covered.add(pat.ctor)
                if isinstance(e.scrutinee, ast.VarRef):
                    inner.gamma[e.scrutinee.name] = REnum(st.name, st.args, refined=pat.ctor)
            elif isinstance(pat, ast.NamePattern):
                inner.gamma[pat.name] = st
                has_catchall = True
            else:
                has_catchall = True
            bt = self.type_of(inner, case.body)
            if result is None:
                result = bt
            elif result != bt:
                raise CheckError("match-branches", f"match cases disagree: {result} vs {bt}", case.body.span)
        if not has_catchall:
            missing = [c.name for c in decl.ctors if c.name not in covered]
            if missing:
                raise CheckError("match-exhaustive", f"match is not exhaustive; missing {', '.join(missing)}", e.span)
        assert result is not None
        return result

    # -- declaration checking ---------------------------------------------------

    def _check_enum(self, decl: ast.EnumDecl) -> None:
        env = Env({n: TypeParamInfo(n) for n in decl.type_params}, {})
        for ctor in decl.ctors:
            seen: set[str] = set()
            for p in ctor.fields:
                if p.name in seen:
                    self.error("dup-field", f"duplicate field {p.name!r} in constructor {ctor.name}", ctor.span)
                seen.add(p.name)
                try:
                    self.resolve_type(env, p.type)
                except CheckError as e:
                    self.error(e.code, f"in enum {decl.name}, constructor {ctor.name}: {e.message}", ctor.span)

    def _signatures_of(self, owner: str, methods: list, env: Env) -> dict[str, MethodInfo]:
        table: dict[str, MethodInfo] = {}
        for m in methods:
            if m.name in table:
                self.error("dup-method", f"duplicate method {m.name!r} in {owner}", m.span)
                continue
            inner = env.child()
            for tp in m.type_params:
                if tp in inner.delta:
                    self.error("tparam-shadow", f"method type parameter {tp} shadows an enclosing parameter in {owner}.{m.name}", m.span)
                inner.delta[tp] = TypeParamInfo(tp)
            try:
                ptypes = [self.resolve_type(inner, p.type) for p in m.params]
                ret = (
                    self.resolve_type(inner, m.return_type)
                    if m.return_type is not None
                    else None
                )
            except CheckError as e:
                self.error(e.code, f"in {owner}.{m.name}: {e.message}", m.span)
                continue
            pnames = [p.name for p in m.params]
            if len(pnames) != len(set(pnames)):
                self.error("dup-param", f"duplicate parameter name in {owner}.{m.name}", m.span)
            table[m.name] = MethodInfo(
                name=m.name,
                type_params=list(m.type_params),
                param_names=pnames,
                param_types=ptypes,
                ret=ret,
                abstract=isinstance(m, ast.MethodSig),
                owner=owner,
                node=m,
            )
        return table

    def _check_method_body(self, owner: str, this_type: RType, env: Env, m: ast.MethodDef, info: MethodInfo) -> None:
        inner = env.child()
        for tp in m.type_params:
            inner.delta[tp] = TypeParamInfo(tp)
        for name, pt in zip(info.param_names, info.param_types):
            inner.gamma[name] = pt
        inner.gamma["this"] = this_type
        body_type = self.type_of(inner, m.body)
        if info.ret is None:
            info.ret = body_type
        elif info.ret != body_type:
            raise CheckError(
                "ret-type",
                f"method {owner}.{m.name} declares return type {info.ret} but body has type {body_type}",
                m.span,
            )

    def _check_trait(self, decl: ast.TraitDecl) -> None:
        params = self.trait_params[decl.name]
        delta: dict[str, TypeParamInfo] = {p.name: p for p in params}
        env = Env(delta, {})
        for tp in decl.type_params:
            if tp.bound is not None:
                d = dict(delta)
                for b in tp.binders:
                    d[b] = TypeParamInfo(b)
                try:
                    self.resolve_type(Env(d, {}), tp.bound)
                except CheckError as e:
                    self.error(e.code, f"in trait {decl.name}, bound of {tp.name}: {e.message}", decl.span)
        if decl.super_trait is not None:
            try:
                self.resolve_trait_ref(env, decl.super_trait)
            except CheckError as e:
                self.error(e.code, f"in trait {decl.name}: {e.message}", decl.span)
        for v in decl.val_decls:
            try:
                self.resolve_type(env, v.type)
            except CheckError as e:
                self.error(e.code, f"in trait {decl.name}, val {v.name}: {e.message}", v.span)
        table = self._signatures_of(decl.name, list(decl.method_decls) + list(decl.methods), env)
        self.method_tables[decl.name] = table
        self.deferred[decl.name] = set()
        this_type = RTrait(decl.name, tuple(RVar(p.name) for p in params))
        self._checking_trait = decl.name
        try:
            for m in decl.methods:
                info = table.get(m.name)
                if info is None:
                    continue
                try:
                    self._check_method_body(decl.name, this_type, env, m, info)
                except _DeferBody:
                    self.deferred[decl.name].add(m.name)
                    if info.ret is None:
                        self.error(
                            "ret-infer",
                            f"deferred trait method {decl.name}.{m.name} needs an explicit return type",
                            m.span,
                        )
                except CheckError as e:
                    self.errors.append(e)
            for proof in decl.proofs:
                penv = env.child()
                for tp in proof.type_params:
                    penv.delta[tp] = TypeParamInfo(tp)
                penv.gamma["this"] = this_type
                try:
                    pt = self.type_of(penv, proof.body)
                    if pt != BOOL:
                        self.error("proof-type", f"proof {decl.name}.{proof.name} body must be Boolean, got {pt}", proof.span)
                except _DeferBody:
                    pass  # checked per instantiation
                except CheckError as e:
                    self.errors.append(e)
        finally:
            self._checking_trait = None

    def _trait_chain(self, env: Env, ref: ast.TraitRef) -> list[tuple[str, dict[str, TypeArg]]]:
        """Walk ``extends`` chain from ``ref``; returns (trait name, mapping
        of that trait's parameter names to fully-substituted arguments)."""
        chain: list[tuple[str, dict[str, TypeArg]]] = []
        name, args = self.resolve_trait_ref(env, ref)
        seen: set[str] = set()
        while True:
            if name in seen:
                raise CheckError("trait-cycle", f"cyclic trait extension at {name}")
            seen.add(name)
            params = self.trait_params[name]
            mapping: dict[str, TypeArg] = {p.name: a for p, a in zip(params, args)}
            chain.append((name, mapping))
            decl = self.traits[name]
            if decl.super_trait is None:
                return chain
            sup_env = Env({p.name: p for p in params}, {})
            sup_name, sup_args = self.resolve_trait_ref(sup_env, decl.super_trait, check_bounds=False)
            resolved: list[TypeArg] = []
            for a in sup_args:
                if isinstance(a, RTypeCtor):
                    if a.kind == "var" and a.name in mapping:
                        resolved.append(mapping[a.name])
                    else:
                        resolved.append(a)
                else:
                    resolved.append(_subst_typearg(a, mapping))
            name, args = sup_name, tuple(resolved)

    def _check_class(self, decl: ast.ClassDecl) -> None:
        env = Env({n: TypeParamInfo(n) for n in decl.type_params}, {})
        fields: list[tuple[str, RType]] = []
        seen: set[str] = set()
        for p in decl.fields:
            if p.name in seen:
                self.error("dup-field", f"duplicate field {p.name!r} in class {decl.name}", decl.span)
            seen.add(p.name)
            try:
                ft = self.resolve_type(env, p.type)
                if isinstance(ft, RTrait):
                    self.error("trait-field", f"field {p.name} of class {decl.name} cannot have trait type {ft}", decl.span)
                fields.append((p.name, ft))
            except CheckError as e:
                self.error(e.code, f"in class {decl.name}, field {p.name}: {e.message}", decl.span)
        self.class_fields[decl.name] = fields
        table = self._signatures_of(decl.name, decl.methods, env)
        self.method_tables[decl.name] = table
        for info in table.values():
            for pt in info.param_types:
                if isinstance(pt, RTrait):
                    self.error("trait-param", f"method {decl.name}.{info.name} parameter cannot have trait type {pt}", info.node.span)
        this_type = RClass(decl.name, tuple(RVar(n) for n in decl.type_params))
        for m in decl.methods:
            info = table.get(m.name)
            if info is None:
                continue
            try:
                self._check_method_body(decl.name, this_type, env, m, info)
            except _DeferBody:
                self.error("defer", f"class method {decl.name}.{m.name} cannot be checked (matches on an abstract type)", m.span)
            except CheckError as e:
                self.errors.append(e)
        self.inherited[decl.name] = []
        if decl.super_trait is not None:
            try:
                self._flatten_into(decl.name, env, this_type, decl.super_trait, table, is_object=False)
            except CheckError as e:
                self.error(e.code, f"in class {decl.name}: {e.message}", decl.span)

    def _check_object(self, decl: ast.ObjectDecl) -> None:
        env = Env({}, {})
        table = self._signatures_of(decl.name, decl.methods, env)
        self.method_tables[decl.name] = table
        self.class_fields[decl.name] = []
        self.classes[decl.name] = ast.ClassDecl(
            span=decl.span, name=decl.name, type_params=[], fields=[],
            super_trait=decl.super_trait, methods=decl.methods,
        )
        this_type = RClass(decl.name, ())
        for m in decl.methods:
            info = table.get(m.name)
            if info is None:
                continue
            try:
                self._check_method_body(decl.name, this_type, env, m, info)
            except _DeferBody:
                self.error("defer", f"object method {decl.name}.{m.name} cannot be checked (matches on an abstract type)", m.span)
            except CheckError as e:
                self.errors.append(e)
        self.inherited[decl.name] = []
        self.proofs[decl.name] = []
        for proof in decl.proofs:
            penv = env.child()
            for tp in proof.type_params:
                penv.delta[tp] = TypeParamInfo(tp)
            penv.gamma["this"] = this_type
            try:
                pt = self.type_of(penv, proof.body)
                if pt != BOOL:
                    self.error("proof-type", f"proof {decl.name}.{proof.name} body must be Boolean, got {pt}", proof.span)
                else:
                    self.proofs[decl.name].append(
                        ProofInstance(proof.name, list(proof.type_params), proof.body, decl.name, decl.name)
                    )
            except CheckError as e:
                self.errors.append(e)
        if decl.super_trait is not None:
            try:
                self._flatten_into(decl.name, env, this_type, decl.super_trait, table, is_object=True)
            except CheckError as e:
                self.error(e.code, f"in object {decl.name}: {e.message}", decl.span)

    def _flatten_into(
        self,
        owner: str,
        env: Env,
        this_type: RType,
        ref: ast.TraitRef,
        own_table: dict[str, MethodInfo],
        is_object: bool,
    ) -> None:
        """Check trait obligations of ``owner`` and record inherited methods
        (and proofs, for objects) with the trait-argument substitution
        applied."""
        chain = self._trait_chain(env, ref)
        provided: set[str] = set(own_table)
        for trait_name, mapping in chain:
            trait = self.traits[trait_name]
            # Obligations: abstract vals must be fields, abstract methods
            # must be implemented somewhere nearer in the chain.
            for v in trait.val_decls:
                wanted = subst(self._trait_member_type(trait_name, v), mapping)
                fields = dict(self.class_fields.get(owner, []))
                have = fields.get(v.name)
                if have is None:
                    self.error("missing-val", f"{owner} must define val {v.name!r} required by trait {trait_name}")
                elif have != wanted:
                    self.error("val-type", f"{owner}.{v.name} has type {have}, trait {trait_name} requires {wanted}")
            for sig in trait.method_decls:
                if sig.name in provided:
                    self._check_override(owner, own_table.get(sig.name), trait_name, sig, mapping)
                    continue
                self.error("missing-method", f"unimplemented trait method {sig.name!r} (declared by {trait_name}) in {owner}")
            for m in trait.methods:
                if m.name in provided:
                    continue
                provided.add(m.name)
                substituted = _substitute_method(m, mapping)
                info_env = Env(dict(env.delta), {})
                stable = self._signatures_of(owner, [substituted], info_env)
                info = stable[m.name]
                try:
                    self._check_method_body(owner, this_type, info_env, substituted, info)
                except _DeferBody:
                    self.error(
                        "defer",
                        f"trait method {trait_name}.{m.name} cannot be instantiated for {owner} (matches on an abstract type)",
                        m.span,
                    )
                    continue
                except CheckError as e:
                    self.errors.append(CheckError(e.code, f"in {owner} (inherited from {trait_name}): {e.message}", e.span))
                    continue
                self.method_tables[owner][m.name] = info
                self.inherited[owner].append(InheritedMethod(trait_name, substituted))
            if is_object:
                for proof in trait.proofs:
                    body = _substitute_expr(copy.deepcopy(proof.body), mapping)
                    penv = Env(dict(env.delta), {})
                    for tp in proof.type_params:
                        penv.delta[tp] = TypeParamInfo(tp)
                    penv.gamma["this"] = this_type
                    try:
                        pt = self.type_of(penv, body)
                        if pt != BOOL:
                            self.error("proof-type", f"inherited proof {proof.name} in {owner} must be Boolean, got {pt}")
                            continue
                    except CheckError as e:
                        self.errors.append(CheckError(e.code, f"in {owner}, inherited proof {proof.name}: {e.message}", e.span))
                        continue
                    self.proofs[owner].append(
                        ProofInstance(proof.name, list(proof.type_params), body, owner, trait_name)
                    )

    def _trait_member_type(self, trait_name: str, v: ast.ValSig) -> RType:
        params = self.trait_params[trait_name]
        env = Env({p.name: p for p in params}, {})
        return self.resolve_type(env, v.type)

    def _check_override(
        self,
        owner: str,
        impl: MethodInfo | None,
        trait_name: str,
        sig: ast.MethodSig,
        mapping: dict[str, TypeArg],
    ) -> None:
        if impl is None:
            return
        params = self.trait_params[trait_name]
        env = Env({p.name: p for p in params}, {})
        for tp in sig.type_params:
            env.delta[tp] = TypeParamInfo(tp)
        try:
            want_params = [subst(self.resolve_type(env, p.type), mapping) for p in sig.params]
            want_ret = subst(self.resolve_type(env, sig.return_type), mapping)
        except CheckError as e:
            self.errors.append(e)
            return
        if len(sig.type_params) != len(impl.type_params):
            self.error("override", f"{owner}.{impl.name} has different type-parameter count than trait {trait_name} declares")
            return
        rename: dict[str, TypeArg] = {
            a: RVar(b) for a, b in zip(sig.type_params, impl.type_params)
        }
        want_params = [subst(p, rename) for p in want_params]
        want_ret = subst(want_ret, rename)
        if want_params != impl.param_types:
            self.error(
                "override",
                f"{owner}.{impl.name} parameter types {[str(t) for t in impl.param_types]} do not match "
                f"trait {trait_name} declaration {[str(t) for t in want_params]}",
            )
        if impl.ret is not None and impl.ret != want_ret:
            self.error("override", f"{owner}.{impl.name} returns {impl.ret}, trait {trait_name} declares {want_ret}")


def _subst_typearg(a: TypeArg, mapping: dict[str, TypeArg]) -> TypeArg:
    if isinstance(a, RTypeCtor):
        if a.kind == "var" and a.name in mapping:
            return mapping[a.name]
        return a
    return subst(a, mapping)


# -- surface-level substitution for inherited members -------------------------

def _type_arg_to_texpr(a: TypeArg) -> ast.TypeExpr:
    if isinstance(a, RTypeCtor):
        return ast.NamedT(a.name, [])
    return _rtype_to_texpr(a)


def _rtype_to_texpr(t: RType) -> ast.TypeExpr:
    if isinstance(t, RInt):
        return ast.IntT()
    if isinstance(t, RString):
        return ast.StringT()
    if isinstance(t, RBool):
        return ast.BoolT()
    if isinstance(t, (RVar, RClass, RTrait, RBuiltin)):
        return ast.NamedT(t.name, [_rtype_to_texpr(a) for a in t.args])
    if isinstance(t, REnum):
        name = t.refined if t.refined is not None and not t.args else t.name
        return ast.NamedT(name, [_rtype_to_texpr(a) for a in t.args])
    if isinstance(t, RFun):
        return ast.FunT([_rtype_to_texpr(p) for p in t.params], _rtype_to_texpr(t.ret))
    raise TypeError(f"cannot render {t!r}")


def _substitute_texpr(t: ast.TypeExpr, mapping: dict[str, TypeArg]) -> ast.TypeExpr:
    if isinstance(t, ast.NamedT):
        args = [_substitute_texpr(a, mapping) for a in t.args]
        if t.name in mapping:
            target = mapping[t.name]
            if isinstance(target, RTypeCtor):
                return ast.NamedT(target.name, args)
            if args:
                raise CheckError("kind", f"type {target} applied to arguments")
            return _type_arg_to_texpr(target)
        return ast.NamedT(t.name, args)
    if isinstance(t, ast.FunT):
        return ast.FunT(
            [_substitute_texpr(p, mapping) for p in t.params],
            _substitute_texpr(t.ret, mapping),
        )
    return t


def _substitute_expr(e: ast.Expr, mapping: dict[str, TypeArg]) -> ast.Expr:
    """In-place type substitution over a (deep-copied) expression tree."""
    if isinstance(e, ast.MethodCall):
        e.receiver = _substitute_expr(e.receiver, mapping)
        e.type_args = [_substitute_texpr(t, mapping) for t in e.type_args]
        e.args = [_substitute_expr(a, mapping) for a in e.args]
    elif isinstance(e, ast.New):
        e.type_args = [_substitute_texpr(t, mapping) for t in e.type_args]
        if e.name in mapping:
            target = mapping[e.name]
            if isinstance(target, RTypeCtor):
                e.name = target.name
        e.args = [_substitute_expr(a, mapping) for a in e.args]
    elif isinstance(e, ast.BinOp):
        e.lhs = _substitute_expr(e.lhs, mapping)
        e.rhs = _substitute_expr(e.rhs, mapping)
    elif isinstance(e, ast.Not):
        e.operand = _substitute_expr(e.operand, mapping)
    elif isinstance(e, ast.Implies):
        e.lhs = _substitute_expr(e.lhs, mapping)
        e.rhs = _substitute_expr(e.rhs, mapping)
    elif isinstance(e, ast.FieldAccess):
        e.receiver = _substitute_expr(e.receiver, mapping)
    elif isinstance(e, ast.ValBinding):
        if e.declared_type is not None:
            e.declared_type = _substitute_texpr(e.declared_type, mapping)
        e.value = _substitute_expr(e.value, mapping)
        e.body = _substitute_expr(e.body, mapping)
    elif isinstance(e, ast.IfElse):
        e.cond = _substitute_expr(e.cond, mapping)
        e.then = _substitute_expr(e.then, mapping)
        e.orelse = _substitute_expr(e.orelse, mapping)
    elif isinstance(e, ast.Lambda):
        e.params = [(n, _substitute_texpr(t, mapping)) for n, t in e.params]
        e.body = _substitute_expr(e.body, mapping)
    elif isinstance(e, ast.Call):
        e.fn = _substitute_expr(e.fn, mapping)
        e.args = [_substitute_expr(a, mapping) for a in e.args]
    elif isinstance(e, ast.Match):
        e.scrutinee = _substitute_expr(e.scrutinee, mapping)
        for case in e.cases:
            case.body = _substitute_expr(case.body, mapping)
    elif isinstance(e, ast.Quantifier):
        e.binders = [(n, _substitute_texpr(t, mapping)) for n, t in e.binders]
        e.body = _substitute_expr(e.body, mapping)
    elif isinstance(e, ast.Cast):
        e.operand = _substitute_expr(e.operand, mapping)
        e.target = _substitute_texpr(e.target, mapping)
    return e


def _substitute_method(m: ast.MethodDef, mapping: dict[str, TypeArg]) -> ast.MethodDef:
    m2 = copy.deepcopy(m)
    mapping = {k: v for k, v in mapping.items() if k not in m2.type_params}
    m2.params = [ast.Param(p.name, _substitute_texpr(p.type, mapping)) for p in m2.params]
    if m2.return_type is not None:
        m2.return_type = _substitute_texpr(m2.return_type, mapping)
    m2.body = _substitute_expr(m2.body, mapping)
    return m2


def check_declarations(program: ast.Program) -> TypedProgram:
    """Type-check a parsed program; raises :class:`CheckErrors` on failure."""
    return Checker(program).check()


def exhaustive(checker_or_tp, match_expr: ast.Match, enum_type: REnum) -> list[str]:
    """Constructor names not covered by ``match_expr`` (empty = exhaustive)."""
    if isinstance(checker_or_tp, TypedProgram):
        decl = checker_or_tp.enums[enum_type.name]
    else:
        decl = checker_or_tp.enums[enum_type.name]
    covered: set[str] = set()
    for case in match_expr.cases:
        if isinstance(case.pattern, (ast.NamePattern, ast.WildcardPattern)):
            return []
        if isinstance(case.pattern, ast.CtorPattern):
            covered.add(case.pattern.ctor)
    return [c.name for c in decl.ctors if c.name not in covered]
