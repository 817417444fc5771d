"""Resolved types and substitution.

Surface ``TypeExpr`` trees resolve to these after name/arity checking. The
variants mirror the declaration kinds so later passes can dispatch without
consulting the class table. ``REnum.refined`` carries a constructor
refinement (a parameter declared with a constructor name, or a match-arm
flow refinement); it is ignored by equality so refined and plain enum types
are interchangeable as types.
"""

from __future__ import annotations

from dataclasses import dataclass, field

BUILTIN_ARITY = {"Set": 1, "Map": 2, "Vector": 1, "List": 1, "Tuple": 2}


@dataclass(frozen=True)
class RType:
    pass


@dataclass(frozen=True)
class RInt(RType):
    def __str__(self) -> str:
        return "Int"


@dataclass(frozen=True)
class RString(RType):
    def __str__(self) -> str:
        return "String"


@dataclass(frozen=True)
class RBool(RType):
    def __str__(self) -> str:
        return "Boolean"


@dataclass(frozen=True)
class RVar(RType):
    """Type variable, possibly applied (higher-kinded trait parameter)."""

    name: str
    args: tuple[RType, ...] = ()

    def __str__(self) -> str:
        return f"{self.name}[{', '.join(map(str, self.args))}]" if self.args else self.name


@dataclass(frozen=True)
class RClass(RType):
    name: str
    args: tuple[RType, ...] = ()

    def __str__(self) -> str:
        return f"{self.name}[{', '.join(map(str, self.args))}]" if self.args else self.name


@dataclass(frozen=True)
class RTrait(RType):
    name: str
    args: tuple[RType, ...] = ()

    def __str__(self) -> str:
        return f"{self.name}[{', '.join(map(str, self.args))}]" if self.args else self.name


@dataclass(frozen=True)
class REnum(RType):
    name: str
    args: tuple[RType, ...] = ()
    refined: str | None = field(default=None, compare=False)

    def __str__(self) -> str:
        base = f"{self.name}[{', '.join(map(str, self.args))}]" if self.args else self.name
        return base


@dataclass(frozen=True)
class RBuiltin(RType):
    name: str  # Set | Map | Vector | List | Tuple
    args: tuple[RType, ...] = ()

    def __str__(self) -> str:
        return f"{self.name}[{', '.join(map(str, self.args))}]"


@dataclass(frozen=True)
class RFun(RType):
    params: tuple[RType, ...]
    ret: RType

    def __str__(self) -> str:
        return f"({', '.join(map(str, self.params))}) => {self.ret}"


@dataclass(frozen=True)
class RTypeCtor:
    """A type constructor passed as a trait type argument (e.g. the
    ``TwoPSet`` in ``CvRDTProof1[TwoPSet]``). Not itself a type."""

    kind: str  # 'class' | 'enum' | 'var'
    name: str
    arity: int

    def __str__(self) -> str:
        return self.name


TypeArg = RType | RTypeCtor

INT = RInt()
STRING = RString()
BOOL = RBool()


def subst(t: RType, mapping: dict[str, TypeArg]) -> RType:
    """Capture-free substitution of type variables (plain or applied)."""
    if isinstance(t, (RInt, RString, RBool)):
        return t
    if isinstance(t, RVar):
        args = tuple(subst(a, mapping) for a in t.args)
        if t.name in mapping:
            target = mapping[t.name]
            if isinstance(target, RTypeCtor):
                if len(args) != target.arity:
                    raise TypeError(
                        f"type constructor {target.name} expects {target.arity} argument(s)"
                    )
                if target.kind == "class":
                    return RClass(target.name, args)
                if target.kind == "enum":
                    return REnum(target.name, args)
                return RVar(target.name, args)
            if args:
                raise TypeError(f"type {target} applied to arguments")
            return target
        return RVar(t.name, args)
    if isinstance(t, RClass):
        return RClass(t.name, tuple(subst(a, mapping) for a in t.args))
    if isinstance(t, RTrait):
        return RTrait(t.name, tuple(subst(a, mapping) for a in t.args))
    if isinstance(t, REnum):
        return REnum(t.name, tuple(subst(a, mapping) for a in t.args), refined=t.refined)
    if isinstance(t, RBuiltin):
        return RBuiltin(t.name, tuple(subst(a, mapping) for a in t.args))
    if isinstance(t, RFun):
        return RFun(tuple(subst(p, mapping) for p in t.params), subst(t.ret, mapping))
    raise TypeError(f"cannot substitute in {t!r}")


def free_vars(t: RType) -> set[str]:
    if isinstance(t, RVar):
        out = {t.name}
        for a in t.args:
            out |= free_vars(a)
        return out
    if isinstance(t, (RClass, RTrait, REnum, RBuiltin)):
        out = set()
        for a in t.args:
            out |= free_vars(a)
        return out
    if isinstance(t, RFun):
        out = set()
        for p in t.params:
            out |= free_vars(p)
        return out | free_vars(t.ret)
    return set()


def unify(declared: RType, actual: RType, holes: set[str], out: dict[str, TypeArg]) -> bool:
    """First-order unification of ``actual`` against ``declared``, solving
    only variables in ``holes``. Conflicting solutions fail."""
    if isinstance(declared, RVar) and declared.name in holes and not declared.args:
        prior = out.get(declared.name)
        if prior is None:
            out[declared.name] = actual
            return True
        return prior == actual
    if isinstance(declared, RVar) and declared.name in holes and declared.args:
        # Applied hole: solve the constructor, then the arguments.
        if isinstance(actual, (RClass, REnum, RVar)) and len(actual.args) == len(declared.args):
            kind = {"RClass": "class", "REnum": "enum", "RVar": "var"}[type(actual).__name__]
            ctor = RTypeCtor(kind, actual.name, len(actual.args))
            prior = out.get(declared.name)
            if prior is not None and prior != ctor:
                return False
            out[declared.name] = ctor
            return all(
                unify(d, a, holes, out) for d, a in zip(declared.args, actual.args)
            )
        return False
    if type(declared) is not type(actual):
        return False
    if isinstance(declared, (RInt, RString, RBool)):
        return True
    if isinstance(declared, (RVar, RClass, RTrait, REnum, RBuiltin)):
        if declared.name != actual.name or len(declared.args) != len(actual.args):
            return False
        return all(unify(d, a, holes, out) for d, a in zip(declared.args, actual.args))
    if isinstance(declared, RFun):
        if len(declared.params) != len(actual.params):
            return False
        return all(
            unify(d, a, holes, out) for d, a in zip(declared.params, actual.params)
        ) and unify(declared.ret, actual.ret, holes, out)
    return False
