"""Core SMT intermediate form and its SMT-LIB v2.6 rendering.

The term language is the small SMT subset the lowering pass targets:
multidimensional total arrays (with the solver's ``lambda`` binder
extension), parametric algebraic datatypes, pattern matches, let/ite,
quantifiers and the usual arithmetic/boolean operators.

Three operations are exposed: :func:`emit_script` (deterministic SMT-LIB
text), :func:`sort_check` (structural sort consistency), and
:func:`monomorphize_script` (polymorphic function definitions are replaced
by ground copies, one per used sort-argument vector).
"""

from __future__ import annotations

from dataclasses import dataclass, field


# ---------------------------------------------------------------------------
# Sorts

@dataclass(frozen=True)
class Sort:
    pass


@dataclass(frozen=True)
class IntS(Sort):
    pass


@dataclass(frozen=True)
class StringS(Sort):
    pass


@dataclass(frozen=True)
class BoolS(Sort):
    pass


@dataclass(frozen=True)
class ArrayS(Sort):
    keys: tuple[Sort, ...]
    value: Sort

    def __post_init__(self):
        assert self.keys, "arrays take at least one key sort"


@dataclass(frozen=True)
class AdtS(Sort):
    name: str
    args: tuple[Sort, ...] = ()


@dataclass(frozen=True)
class DeclaredS(Sort):
    name: str
    args: tuple[Sort, ...] = ()


@dataclass(frozen=True)
class SortVar(Sort):
    name: str


INT_S = IntS()
STRING_S = StringS()
BOOL_S = BoolS()


def subst_sort(s: Sort, mapping: dict[str, Sort]) -> Sort:
    if isinstance(s, SortVar):
        return mapping.get(s.name, s)
    if isinstance(s, ArrayS):
        return ArrayS(tuple(subst_sort(k, mapping) for k in s.keys), subst_sort(s.value, mapping))
    if isinstance(s, AdtS):
        return AdtS(s.name, tuple(subst_sort(a, mapping) for a in s.args))
    if isinstance(s, DeclaredS):
        return DeclaredS(s.name, tuple(subst_sort(a, mapping) for a in s.args))
    return s


def sort_has_var(s: Sort) -> bool:
    if isinstance(s, SortVar):
        return True
    if isinstance(s, ArrayS):
        return any(sort_has_var(k) for k in s.keys) or sort_has_var(s.value)
    if isinstance(s, (AdtS, DeclaredS)):
        return any(sort_has_var(a) for a in s.args)
    return False


# ---------------------------------------------------------------------------
# Terms

@dataclass(frozen=True)
class Term:
    pass


@dataclass(frozen=True)
class IntVal(Term):
    value: int


@dataclass(frozen=True)
class StrVal(Term):
    value: str


@dataclass(frozen=True)
class BoolVal(Term):
    value: bool


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Read(Term):
    array: Term
    keys: tuple[Term, ...]


@dataclass(frozen=True)
class Write(Term):
    array: Term
    keys: tuple[Term, ...]
    value: Term


@dataclass(frozen=True)
class Lam(Term):
    params: tuple[tuple[str, Sort], ...]
    body: Term


@dataclass(frozen=True)
class Let(Term):
    name: str
    value: Term
    body: Term


@dataclass(frozen=True)
class Ite(Term):
    cond: Term
    then: Term
    orelse: Term


@dataclass(frozen=True)
class MatchCaseT:
    ctor: str | None  # None: variable pattern (binders[0] binds the value)
    binders: tuple[str, ...]
    body: Term


@dataclass(frozen=True)
class MatchT(Term):
    scrutinee: Term
    cases: tuple[MatchCaseT, ...]


@dataclass(frozen=True)
class CallT(Term):
    """Function or constructor application with explicit sort arguments.
    ``result_sort`` qualifies constructor calls whose sort arguments cannot
    be inferred from the value arguments (e.g. ``None``)."""

    fn: str
    sort_args: tuple[Sort, ...]
    args: tuple[Term, ...]
    result_sort: Sort | None = None
    is_ctor: bool = False


@dataclass(frozen=True)
class FieldT(Term):
    operand: Term
    accessor: str


@dataclass(frozen=True)
class Quant(Term):
    kind: str  # 'forall' | 'exists'
    binders: tuple[tuple[str, Sort], ...]
    body: Term


@dataclass(frozen=True)
class BinT(Term):
    op: str  # + - * / < <= > >= = => and or
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class NotT(Term):
    operand: Term


# ---------------------------------------------------------------------------
# Commands

@dataclass(frozen=True)
class Command:
    pass


@dataclass(frozen=True)
class SetOption(Command):
    name: str
    value: str


@dataclass(frozen=True)
class SetLogic(Command):
    logic: str


@dataclass(frozen=True)
class DeclareConst(Command):
    name: str
    sort: Sort


@dataclass(frozen=True)
class DeclareSort(Command):
    name: str
    arity: int


@dataclass(frozen=True)
class AdtCtor:
    name: str
    fields: tuple[tuple[str, Sort], ...]


@dataclass(frozen=True)
class DefineAdt(Command):
    name: str
    sort_params: tuple[str, ...]
    ctors: tuple[AdtCtor, ...]

    def __post_init__(self):
        assert self.ctors, "ADTs need at least one constructor"


@dataclass(frozen=True)
class DefineFun(Command):
    name: str
    sort_params: tuple[str, ...]
    params: tuple[tuple[str, Sort], ...]
    ret: Sort
    body: Term
    recursive: bool = False


@dataclass(frozen=True)
class Assert(Command):
    term: Term


@dataclass(frozen=True)
class Check(Command):
    get_model: bool = False


class SmtError(Exception):
    pass


# ---------------------------------------------------------------------------
# Emission

_SYMBOL_SAFE = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
                   "~!@$%^&*_-+=<>.?/")


def _sym(name: str) -> str:
    if name and all(c in _SYMBOL_SAFE for c in name) and not name[0].isdigit():
        return name
    return f"|{name}|"


def render_sort(s: Sort) -> str:
    if isinstance(s, IntS):
        return "Int"
    if isinstance(s, StringS):
        return "String"
    if isinstance(s, BoolS):
        return "Bool"
    if isinstance(s, ArrayS):
        return f"(Array {' '.join(render_sort(k) for k in s.keys)} {render_sort(s.value)})"
    if isinstance(s, (AdtS, DeclaredS)):
        if s.args:
            return f"({_sym(s.name)} {' '.join(render_sort(a) for a in s.args)})"
        return _sym(s.name)
    if isinstance(s, SortVar):
        return _sym(s.name)
    raise SmtError(f"cannot render sort {s!r}")


def mangle_sort(s: Sort) -> str:
    """Flat, injective, symbol-safe rendering used in monomorphized names."""
    if isinstance(s, ArrayS):
        inner = ".".join(mangle_sort(k) for k in s.keys) + "." + mangle_sort(s.value)
        return f"Array<{inner}>"
    if isinstance(s, (AdtS, DeclaredS)) and s.args:
        return f"{s.name}<{'.'.join(mangle_sort(a) for a in s.args)}>"
    if isinstance(s, (AdtS, DeclaredS)):
        return s.name
    if isinstance(s, SortVar):
        return s.name
    return render_sort(s)


def mangle(name: str, sorts: tuple[Sort, ...]) -> str:
    if not sorts:
        return name
    return name + "!" + "!".join(mangle_sort(s) for s in sorts)


def _escape_string(s: str) -> str:
    return s.replace('"', '""')


def render_term(t: Term) -> str:
    if isinstance(t, IntVal):
        return str(t.value) if t.value >= 0 else f"(- {-t.value})"
    if isinstance(t, StrVal):
        return f'"{_escape_string(t.value)}"'
    if isinstance(t, BoolVal):
        return "true" if t.value else "false"
    if isinstance(t, Var):
        return _sym(t.name)
    if isinstance(t, Read):
        return f"(select {render_term(t.array)} {' '.join(render_term(k) for k in t.keys)})"
    if isinstance(t, Write):
        return (
            f"(store {render_term(t.array)} {' '.join(render_term(k) for k in t.keys)} "
            f"{render_term(t.value)})"
        )
    if isinstance(t, Lam):
        binders = " ".join(f"({_sym(n)} {render_sort(s)})" for n, s in t.params)
        return f"(lambda ({binders}) {render_term(t.body)})"
    if isinstance(t, Let):
        return f"(let (({_sym(t.name)} {render_term(t.value)})) {render_term(t.body)})"
    if isinstance(t, Ite):
        return f"(ite {render_term(t.cond)} {render_term(t.then)} {render_term(t.orelse)})"
    if isinstance(t, MatchT):
        cases = []
        for c in t.cases:
            if c.ctor is None:
                pat = _sym(c.binders[0])
            elif c.binders:
                pat = f"({_sym(c.ctor)} {' '.join(_sym(b) for b in c.binders)})"
            else:
                pat = _sym(c.ctor)
            cases.append(f"({pat} {render_term(c.body)})")
        return f"(match {render_term(t.scrutinee)} ({' '.join(cases)}))"
    if isinstance(t, CallT):
        head = _sym(t.fn)
        if t.is_ctor and t.result_sort is not None and (not t.args or _needs_qualifier(t)):
            head = f"(as {head} {render_sort(t.result_sort)})"
        if not t.args:
            return head
        return f"({head} {' '.join(render_term(a) for a in t.args)})"
    if isinstance(t, FieldT):
        return f"({_sym(t.accessor)} {render_term(t.operand)})"
    if isinstance(t, Quant):
        binders = " ".join(f"({_sym(n)} {render_sort(s)})" for n, s in t.binders)
        return f"({t.kind} ({binders}) {render_term(t.body)})"
    if isinstance(t, BinT):
        return f"({t.op} {render_term(t.lhs)} {render_term(t.rhs)})"
    if isinstance(t, NotT):
        return f"(not {render_term(t.operand)})"
    raise SmtError(f"cannot render term {t!r}")


def _needs_qualifier(t: CallT) -> bool:
    # A constructor application needs an `as` qualifier when some sort
    # argument does not occur in any value argument (None is the usual case).
    return t.result_sort is not None and bool(t.sort_args) and not t.args


def emit_script(cmds: list[Command]) -> str:
    """Render commands to SMT-LIB v2.6 text (with the lambda extension)."""
    out: list[str] = []
    for cmd in cmds:
        if isinstance(cmd, SetOption):
            out.append(f"(set-option :{cmd.name} {cmd.value})")
        elif isinstance(cmd, SetLogic):
            out.append(f"(set-logic {cmd.logic})")
        elif isinstance(cmd, DeclareSort):
            out.append(f"(declare-sort {_sym(cmd.name)} {cmd.arity})")
        elif isinstance(cmd, DeclareConst):
            out.append(f"(declare-const {_sym(cmd.name)} {render_sort(cmd.sort)})")
        elif isinstance(cmd, DefineAdt):
            ctors = []
            for c in cmd.ctors:
                fields = " ".join(f"({_sym(n)} {render_sort(s)})" for n, s in c.fields)
                ctors.append(f"({_sym(c.name)}{(' ' + fields) if fields else ''})")
            body = f"({' '.join(ctors)})"
            if cmd.sort_params:
                body = f"(par ({' '.join(cmd.sort_params)}) {body})"
            out.append(f"(declare-datatypes (({_sym(cmd.name)} {len(cmd.sort_params)})) ({body}))")
        elif isinstance(cmd, DefineFun):
            if cmd.sort_params:
                raise SmtError(
                    f"polymorphic function {cmd.name} reached emission; run monomorphize_script first"
                )
            params = " ".join(f"({_sym(n)} {render_sort(s)})" for n, s in cmd.params)
            form = "define-fun-rec" if cmd.recursive else "define-fun"
            out.append(
                f"({form} {_sym(cmd.name)} ({params}) {render_sort(cmd.ret)}\n"
                f"  {render_term(cmd.body)})"
            )
        elif isinstance(cmd, Assert):
            out.append(f"(assert {render_term(cmd.term)})")
        elif isinstance(cmd, Check):
            out.append("(check-sat)")
            if cmd.get_model:
                out.append("(get-model)")
        else:
            raise SmtError(f"cannot emit command {cmd!r}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Sort checking

@dataclass
class _Tables:
    sorts: dict[str, int]
    adts: dict[str, DefineAdt]
    ctors: dict[str, tuple[str, AdtCtor]]  # ctor name -> (adt, ctor)
    accessors: dict[tuple[str, str], int]  # (adt, accessor) -> ctor field index
    funs: dict[str, DefineFun]
    consts: dict[str, Sort]


def _build_tables(cmds: list[Command]) -> _Tables:
    t = _Tables({}, {}, {}, {}, {}, {})
    for i, cmd in enumerate(cmds):
        if isinstance(cmd, DeclareSort):
            t.sorts[cmd.name] = cmd.arity
        elif isinstance(cmd, DefineAdt):
            if cmd.name in t.adts:
                raise SmtError(f"command {i}: duplicate ADT {cmd.name}")
            t.adts[cmd.name] = cmd
            for c in cmd.ctors:
                t.ctors[c.name] = (cmd.name, c)
                for idx, (fname, _) in enumerate(c.fields):
                    t.accessors[(cmd.name, fname)] = idx
        elif isinstance(cmd, DefineFun):
            if cmd.name in t.funs:
                raise SmtError(f"command {i}: duplicate function {cmd.name}")
            t.funs[cmd.name] = cmd
        elif isinstance(cmd, DeclareConst):
            t.consts[cmd.name] = cmd.sort
    return t


def _ctor_instance(tables: _Tables, ctor_name: str, sort_args: tuple[Sort, ...]):
    adt_name, ctor = tables.ctors[ctor_name]
    adt = tables.adts[adt_name]
    if len(sort_args) != len(adt.sort_params):
        raise SmtError(f"constructor {ctor_name}: expected {len(adt.sort_params)} sort args")
    mapping = dict(zip(adt.sort_params, sort_args))
    fields = [(n, subst_sort(s, mapping)) for n, s in ctor.fields]
    return AdtS(adt_name, sort_args), fields


class _SortChecker:
    def __init__(self, tables: _Tables):
        self.tables = tables

    def infer(self, t: Term, env: dict[str, Sort]) -> Sort:
        if isinstance(t, IntVal):
            return INT_S
        if isinstance(t, StrVal):
            return STRING_S
        if isinstance(t, BoolVal):
            return BOOL_S
        if isinstance(t, Var):
            if t.name in env:
                return env[t.name]
            if t.name in self.tables.consts:
                return self.tables.consts[t.name]
            fn = self.tables.funs.get(t.name)
            if fn is not None and not fn.params and not fn.sort_params:
                return fn.ret
            raise SmtError(f"unbound variable {t.name}")
        if isinstance(t, Read):
            arr = self.infer(t.array, env)
            if not isinstance(arr, ArrayS):
                raise SmtError(f"select on non-array sort {render_sort(arr)}")
            if len(t.keys) != len(arr.keys):
                raise SmtError("select key arity mismatch")
            for k, ks in zip(t.keys, arr.keys):
                actual = self.infer(k, env)
                if actual != ks:
                    raise SmtError(
                        f"select key sort {render_sort(actual)} does not match {render_sort(ks)}"
                    )
            return arr.value
        if isinstance(t, Write):
            arr = self.infer(t.array, env)
            if not isinstance(arr, ArrayS):
                raise SmtError(f"store on non-array sort {render_sort(arr)}")
            if len(t.keys) != len(arr.keys):
                raise SmtError("store key arity mismatch")
            for k, ks in zip(t.keys, arr.keys):
                if self.infer(k, env) != ks:
                    raise SmtError("store key sort mismatch")
            if self.infer(t.value, env) != arr.value:
                raise SmtError("store value sort mismatch")
            return arr
        if isinstance(t, Lam):
            inner = dict(env)
            inner.update({n: s for n, s in t.params})
            ret = self.infer(t.body, inner)
            return ArrayS(tuple(s for _, s in t.params), ret)
        if isinstance(t, Let):
            inner = dict(env)
            inner[t.name] = self.infer(t.value, env)
            return self.infer(t.body, inner)
        if isinstance(t, Ite):
            if self.infer(t.cond, env) != BOOL_S:
                raise SmtError("ite condition must be Bool")
            a = self.infer(t.then, env)
            b = self.infer(t.orelse, env)
            if a != b:
                raise SmtError(f"ite branches disagree: {render_sort(a)} vs {render_sort(b)}")
            return a
        if isinstance(t, MatchT):
            st = self.infer(t.scrutinee, env)
            if not isinstance(st, AdtS):
                raise SmtError(f"match on non-ADT sort {render_sort(st)}")
            adt = self.tables.adts.get(st.name)
            if adt is None:
                raise SmtError(f"match on unknown ADT {st.name}")
            covered: set[str] = set()
            catchall = False
            result: Sort | None = None
            for c in t.cases:
                inner = dict(env)
                if c.ctor is None:
                    inner[c.binders[0]] = st
                    catchall = True
                else:
                    _, fields = _ctor_instance(self.tables, c.ctor, st.args)
                    if len(c.binders) != len(fields):
                        raise SmtError(f"pattern {c.ctor} binder arity mismatch")
                    for b, (_, fs) in zip(c.binders, fields):
                        inner[b] = fs
                    covered.add(c.ctor)
                r = self.infer(c.body, inner)
                if result is None:
                    result = r
                elif result != r:
                    raise SmtError("match cases disagree in sort")
            if not catchall:
                missing = [c.name for c in adt.ctors if c.name not in covered]
                if missing:
                    raise SmtError(f"match not exhaustive, missing {missing}")
            assert result is not None
            return result
        if isinstance(t, CallT):
            if t.fn in self.tables.ctors:
                result, fields = _ctor_instance(self.tables, t.fn, t.sort_args)
                if len(t.args) != len(fields):
                    raise SmtError(f"constructor {t.fn} arity mismatch")
                for a, (_, fs) in zip(t.args, fields):
                    actual = self.infer(a, env)
                    if actual != fs:
                        raise SmtError(
                            f"constructor {t.fn} field sort {render_sort(actual)} != {render_sort(fs)}"
                        )
                return result
            fn = self.tables.funs.get(t.fn)
            if fn is None:
                raise SmtError(f"call to unknown function {t.fn}")
            if len(t.sort_args) != len(fn.sort_params):
                raise SmtError(f"function {t.fn} expects {len(fn.sort_params)} sort args")
            mapping = dict(zip(fn.sort_params, t.sort_args))
            if len(t.args) != len(fn.params):
                raise SmtError(f"function {t.fn} arity mismatch")
            for a, (_, ps) in zip(t.args, fn.params):
                actual = self.infer(a, env)
                want = subst_sort(ps, mapping)
                if actual != want:
                    raise SmtError(
                        f"function {t.fn}: argument sort {render_sort(actual)} != {render_sort(want)}"
                    )
            return subst_sort(fn.ret, mapping)
        if isinstance(t, FieldT):
            st = self.infer(t.operand, env)
            if not isinstance(st, AdtS):
                raise SmtError(f"field access on non-ADT sort {render_sort(st)}")
            adt = self.tables.adts.get(st.name)
            if adt is None:
                raise SmtError(f"field access on unknown ADT {st.name}")
            mapping = dict(zip(adt.sort_params, st.args))
            for c in adt.ctors:
                for fname, fsort in c.fields:
                    if fname == t.accessor:
                        return subst_sort(fsort, mapping)
            raise SmtError(f"ADT {st.name} has no accessor {t.accessor}")
        if isinstance(t, Quant):
            inner = dict(env)
            inner.update({n: s for n, s in t.binders})
            if self.infer(t.body, inner) != BOOL_S:
                raise SmtError("quantifier body must be Bool")
            return BOOL_S
        if isinstance(t, BinT):
            a = self.infer(t.lhs, env)
            b = self.infer(t.rhs, env)
            if t.op in ("+", "-", "*", "/"):
                if a != INT_S or b != INT_S:
                    raise SmtError(f"arithmetic {t.op} on non-Int operands")
                return INT_S
            if t.op in ("<", "<=", ">", ">="):
                if a != INT_S or b != INT_S:
                    raise SmtError(f"comparison {t.op} on non-Int operands")
                return BOOL_S
            if t.op in ("and", "or", "=>"):
                if a != BOOL_S or b != BOOL_S:
                    raise SmtError(f"boolean {t.op} on non-Bool operands")
                return BOOL_S
            if t.op == "=":
                if a != b:
                    raise SmtError(f"equality between {render_sort(a)} and {render_sort(b)}")
                return BOOL_S
            raise SmtError(f"unknown operator {t.op}")
        if isinstance(t, NotT):
            if self.infer(t.operand, env) != BOOL_S:
                raise SmtError("not on non-Bool operand")
            return BOOL_S
        raise SmtError(f"cannot infer sort of {t!r}")


def sort_check(cmds: list[Command]) -> None:
    """Check sort consistency of a whole script; raises :class:`SmtError`
    naming the first offending command index."""
    tables = _build_tables(cmds)
    checker = _SortChecker(tables)
    for i, cmd in enumerate(cmds):
        try:
            if isinstance(cmd, DefineFun):
                env = {n: s for n, s in cmd.params}
                ret = checker.infer(cmd.body, env)
                if ret != cmd.ret:
                    raise SmtError(
                        f"function {cmd.name} declares {render_sort(cmd.ret)} but body has {render_sort(ret)}"
                    )
            elif isinstance(cmd, Assert):
                if checker.infer(cmd.term, {}) != BOOL_S:
                    raise SmtError("assertion is not Bool")
        except SmtError as e:
            raise SmtError(f"command {i}: {e}") from None


# ---------------------------------------------------------------------------
# Monomorphization

def _subst_term(t: Term, mapping: dict[str, Sort]) -> Term:
    if isinstance(t, (IntVal, StrVal, BoolVal, Var)):
        return t
    if isinstance(t, Read):
        return Read(_subst_term(t.array, mapping), tuple(_subst_term(k, mapping) for k in t.keys))
    if isinstance(t, Write):
        return Write(
            _subst_term(t.array, mapping),
            tuple(_subst_term(k, mapping) for k in t.keys),
            _subst_term(t.value, mapping),
        )
    if isinstance(t, Lam):
        return Lam(
            tuple((n, subst_sort(s, mapping)) for n, s in t.params),
            _subst_term(t.body, mapping),
        )
    if isinstance(t, Let):
        return Let(t.name, _subst_term(t.value, mapping), _subst_term(t.body, mapping))
    if isinstance(t, Ite):
        return Ite(
            _subst_term(t.cond, mapping),
            _subst_term(t.then, mapping),
            _subst_term(t.orelse, mapping),
        )
    if isinstance(t, MatchT):
        return MatchT(
            _subst_term(t.scrutinee, mapping),
            tuple(MatchCaseT(c.ctor, c.binders, _subst_term(c.body, mapping)) for c in t.cases),
        )
    if isinstance(t, CallT):
        return CallT(
            t.fn,
            tuple(subst_sort(s, mapping) for s in t.sort_args),
            tuple(_subst_term(a, mapping) for a in t.args),
            subst_sort(t.result_sort, mapping) if t.result_sort is not None else None,
            t.is_ctor,
        )
    if isinstance(t, FieldT):
        return FieldT(_subst_term(t.operand, mapping), t.accessor)
    if isinstance(t, Quant):
        return Quant(
            t.kind,
            tuple((n, subst_sort(s, mapping)) for n, s in t.binders),
            _subst_term(t.body, mapping),
        )
    if isinstance(t, BinT):
        return BinT(t.op, _subst_term(t.lhs, mapping), _subst_term(t.rhs, mapping))
    if isinstance(t, NotT):
        return NotT(_subst_term(t.operand, mapping))
    raise SmtError(f"cannot substitute in {t!r}")


def _rename_calls(t: Term, renames: dict[tuple[str, tuple[Sort, ...]], str]) -> Term:
    if isinstance(t, (IntVal, StrVal, BoolVal, Var)):
        return t
    if isinstance(t, Read):
        return Read(_rename_calls(t.array, renames), tuple(_rename_calls(k, renames) for k in t.keys))
    if isinstance(t, Write):
        return Write(
            _rename_calls(t.array, renames),
            tuple(_rename_calls(k, renames) for k in t.keys),
            _rename_calls(t.value, renames),
        )
    if isinstance(t, Lam):
        return Lam(t.params, _rename_calls(t.body, renames))
    if isinstance(t, Let):
        return Let(t.name, _rename_calls(t.value, renames), _rename_calls(t.body, renames))
    if isinstance(t, Ite):
        return Ite(
            _rename_calls(t.cond, renames),
            _rename_calls(t.then, renames),
            _rename_calls(t.orelse, renames),
        )
    if isinstance(t, MatchT):
        return MatchT(
            _rename_calls(t.scrutinee, renames),
            tuple(MatchCaseT(c.ctor, c.binders, _rename_calls(c.body, renames)) for c in t.cases),
        )
    if isinstance(t, CallT):
        args = tuple(_rename_calls(a, renames) for a in t.args)
        if t.is_ctor:
            return CallT(t.fn, t.sort_args, args, t.result_sort, True)
        key = (t.fn, t.sort_args)
        if key in renames:
            return CallT(renames[key], (), args, t.result_sort, False)
        return CallT(t.fn, t.sort_args, args, t.result_sort, False)
    if isinstance(t, FieldT):
        return FieldT(_rename_calls(t.operand, renames), t.accessor)
    if isinstance(t, Quant):
        return Quant(t.kind, t.binders, _rename_calls(t.body, renames))
    if isinstance(t, BinT):
        return BinT(t.op, _rename_calls(t.lhs, renames), _rename_calls(t.rhs, renames))
    if isinstance(t, NotT):
        return NotT(_rename_calls(t.operand, renames))
    raise SmtError(f"cannot rename in {t!r}")


def _collect_calls(t: Term, out: list[tuple[str, tuple[Sort, ...]]]) -> None:
    if isinstance(t, Read):
        _collect_calls(t.array, out)
        for k in t.keys:
            _collect_calls(k, out)
    elif isinstance(t, Write):
        _collect_calls(t.array, out)
        for k in t.keys:
            _collect_calls(k, out)
        _collect_calls(t.value, out)
    elif isinstance(t, Lam):
        _collect_calls(t.body, out)
    elif isinstance(t, Let):
        _collect_calls(t.value, out)
        _collect_calls(t.body, out)
    elif isinstance(t, Ite):
        _collect_calls(t.cond, out)
        _collect_calls(t.then, out)
        _collect_calls(t.orelse, out)
    elif isinstance(t, MatchT):
        _collect_calls(t.scrutinee, out)
        for c in t.cases:
            _collect_calls(c.body, out)
    elif isinstance(t, CallT):
        if not t.is_ctor:
            out.append((t.fn, t.sort_args))
        for a in t.args:
            _collect_calls(a, out)
    elif isinstance(t, FieldT):
        _collect_calls(t.operand, out)
    elif isinstance(t, Quant):
        _collect_calls(t.body, out)
    elif isinstance(t, BinT):
        _collect_calls(t.lhs, out)
        _collect_calls(t.rhs, out)
    elif isinstance(t, NotT):
        _collect_calls(t.operand, out)
    elif isinstance(t, Var):
        # Nullary function references appear as plain variables.
        out.append((t.name, ()))


def monomorphize_script(cmds: list[Command]) -> list[Command]:
    """Replace every (function, sort-argument-vector) pair reachable from
    the asserts with a ground copy named ``name!Sort…``; sort-parametric
    definitions are dropped, unused functions pruned, and definitions
    reordered so every function is defined before use (self-recursive ones
    keep the recursive definition form)."""
    funs: dict[str, DefineFun] = {}
    for cmd in cmds:
        if isinstance(cmd, DefineFun):
            funs[cmd.name] = cmd

    instances: dict[tuple[str, tuple[Sort, ...]], DefineFun] = {}
    order: list[tuple[str, tuple[Sort, ...]]] = []

    def request(name: str, sort_args: tuple[Sort, ...]) -> None:
        fn = funs.get(name)
        if fn is None:
            return  # constant or bound variable
        key = (name, sort_args)
        if key in instances:
            return
        if len(sort_args) != len(fn.sort_params):
            raise SmtError(f"call to {name} with {len(sort_args)} sort args, expected {len(fn.sort_params)}")
        for s in sort_args:
            if sort_has_var(s):
                raise SmtError(f"unresolved sort variable in call to {name}: {[render_sort(x) for x in sort_args]}")
        mapping = dict(zip(fn.sort_params, sort_args))
        body = _subst_term(fn.body, mapping) if mapping else fn.body
        params = tuple((n, subst_sort(s, mapping)) for n, s in fn.params)
        ret = subst_sort(fn.ret, mapping)
        new_name = mangle(name, sort_args)
        inst = DefineFun(new_name, (), params, ret, body, fn.recursive)
        instances[key] = inst
        order.append(key)
        calls: list[tuple[str, tuple[Sort, ...]]] = []
        _collect_calls(body, calls)
        for cname, csorts in calls:
            request(cname, csorts)

    roots: list[tuple[str, tuple[Sort, ...]]] = []
    for cmd in cmds:
        if isinstance(cmd, Assert):
            _collect_calls(cmd.term, roots)
    for name, sorts in roots:
        request(name, sorts)

    renames = {key: mangle(*key) for key in instances}
    final: dict[str, DefineFun] = {}
    for key in order:
        inst = instances[key]
        final[inst.name] = DefineFun(
            inst.name, (), inst.params, inst.ret,
            _rename_calls(inst.body, renames), inst.recursive,
        )

    ordered = _order_functions(final)
    out: list[Command] = []
    emitted_funs = False
    for cmd in cmds:
        if isinstance(cmd, DefineFun):
            if not emitted_funs:
                out.extend(ordered)
                emitted_funs = True
            continue
        if isinstance(cmd, Assert):
            out.append(Assert(_rename_calls(cmd.term, renames)))
        else:
            out.append(cmd)
    if not emitted_funs and ordered:
        # No function definitions in the input but instances exist: impossible.
        out.extend(ordered)
    return out


def _order_functions(funs: dict[str, DefineFun]) -> list[Command]:
    """Stable topological order by call dependency (bodies only reference
    earlier definitions afterwards); self-recursion is kept in place."""
    deps: dict[str, set[str]] = {}
    for name, fn in funs.items():
        calls: list[tuple[str, tuple[Sort, ...]]] = []
        _collect_calls(fn.body, calls)
        deps[name] = {c for c, _ in calls if c in funs and c != name}
    result: list[Command] = []
    emitted: set[str] = set()
    pending = list(funs)
    guard = 0
    while pending:
        progressed = False
        remaining: list[str] = []
        for name in pending:
            if deps[name] <= emitted:
                result.append(funs[name])
                emitted.add(name)
                progressed = True
            else:
                remaining.append(name)
        pending = remaining
        guard += 1
        if not progressed:
            raise SmtError(f"mutually recursive functions are not supported: {sorted(pending)}")
        if guard > 10000:
            raise SmtError("function ordering did not terminate")
    return result
