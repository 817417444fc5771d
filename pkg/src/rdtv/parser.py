"""Recursive descent parser for the surface language.

Scala-flavoured syntax: classes with constructor-style field lists, traits
with bounded (possibly higher-kinded) type parameters, objects, enums with
`K(fields) | …` constructor alternatives, single-expression method bodies,
`proof name { expr }` members, and the `=>:` implication operator (right
associative, binding below `||`).

Errors are collected with recovery at declaration boundaries; a failed
parse raises :class:`ParseErrors` carrying every diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import ast
from .lexer import LexError, Span, Token, tokenize

DECL_KEYWORDS = ("class", "trait", "object", "enum")


@dataclass
class ParseDiagnostic:
    message: str
    span: Span
    expected: tuple[str, ...] = ()


class ParseErrors(Exception):
    def __init__(self, errors: list[ParseDiagnostic]):
        super().__init__("; ".join(f"{e.span}: {e.message}" for e in errors))
        self.errors = errors


class _ParseAbort(Exception):
    """Internal: unwinds to the declaration-recovery loop."""


class Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.errors: list[ParseDiagnostic] = []

    # -- token helpers ------------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        idx = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[idx]

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.peek()
        return t.kind == kind and (text is None or t.text == text)

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        if self.pos < len(self.tokens) - 1:
            self.pos += 1
        return t

    def accept(self, kind: str, text: str | None = None) -> Token | None:
        if self.at(kind, text):
            return self.advance()
        return None

    def expect(self, kind: str, text: str | None = None) -> Token:
        if self.at(kind, text):
            return self.advance()
        got = self.peek()
        want = text if text is not None else kind
        self.errors.append(
            ParseDiagnostic(
                f"expected {want!r}, got {got.text or got.kind!r}",
                got.span,
                expected=(want,),
            )
        )
        raise _ParseAbort()

    def error(self, message: str) -> None:
        self.errors.append(ParseDiagnostic(message, self.peek().span))
        raise _ParseAbort()

    # -- program ------------------------------------------------------------

    def parse_program(self) -> ast.Program:
        decls: list[ast.Decl] = []
        while not self.at("eof"):
            try:
                decls.append(self.parse_decl())
            except _ParseAbort:
                self._recover_to_decl()
        return ast.Program(decls)

    def _recover_to_decl(self) -> None:
        depth = 0
        while not self.at("eof"):
            t = self.peek()
            if t.kind == "op" and t.text == "{":
                depth += 1
            elif t.kind == "op" and t.text == "}":
                depth = max(0, depth - 1)
            elif t.kind == "kw" and t.text in DECL_KEYWORDS and depth == 0:
                return
            self.advance()

    # -- declarations -------------------------------------------------------

    def parse_decl(self) -> ast.Decl:
        t = self.peek()
        if self.at("kw", "class"):
            return self.parse_class()
        if self.at("kw", "trait"):
            return self.parse_trait()
        if self.at("kw", "object"):
            return self.parse_object()
        if self.at("kw", "enum"):
            return self.parse_enum()
        self.error(f"expected declaration, got {t.text or t.kind!r}")
        raise AssertionError

    def parse_class(self) -> ast.ClassDecl:
        span = self.expect("kw", "class").span
        name = self.expect("ident").text
        type_params = self.parse_plain_type_params()
        self.expect("op", "(")
        fields: list[ast.Param] = []
        if not self.at("op", ")"):
            fields = self.parse_params()
        self.expect("op", ")")
        super_trait = self.parse_extends()
        methods: list[ast.MethodDef] = []
        if self.accept("op", "{"):
            while not self.at("op", "}"):
                member = self.parse_method_or_sig()
                if isinstance(member, ast.MethodSig):
                    self.error("classes cannot declare abstract methods")
                methods.append(member)
            self.expect("op", "}")
        return ast.ClassDecl(
            span=span, name=name, type_params=type_params, fields=fields,
            super_trait=super_trait, methods=methods,
        )

    def parse_trait(self) -> ast.TraitDecl:
        span = self.expect("kw", "trait").span
        name = self.expect("ident").text
        type_params: list[ast.TypeParam] = []
        if self.accept("op", "["):
            while True:
                type_params.append(self.parse_trait_type_param())
                if not self.accept("op", ","):
                    break
            self.expect("op", "]")
        super_trait = self.parse_extends()
        val_decls: list[ast.ValSig] = []
        method_decls: list[ast.MethodSig] = []
        methods: list[ast.MethodDef] = []
        proofs: list[ast.ProofDef] = []
        if self.accept("op", "{"):
            while not self.at("op", "}"):
                if self.at("kw", "val"):
                    vspan = self.advance().span
                    vname = self.expect("ident").text
                    self.expect("op", ":")
                    vtype = self.parse_type()
                    val_decls.append(ast.ValSig(vname, vtype, span=vspan))
                elif self.at("kw", "proof"):
                    proofs.append(self.parse_proof())
                else:
                    member = self.parse_method_or_sig()
                    if isinstance(member, ast.MethodSig):
                        method_decls.append(member)
                    else:
                        methods.append(member)
            self.expect("op", "}")
        return ast.TraitDecl(
            span=span, name=name, type_params=type_params, super_trait=super_trait,
            val_decls=val_decls, method_decls=method_decls, methods=methods,
            proofs=proofs,
        )

    def parse_trait_type_param(self) -> ast.TypeParam:
        name = self.expect("ident").text
        binders: list[str] = []
        if self.accept("op", "["):
            while True:
                if self.accept("op", "_"):
                    binders.append("_")
                else:
                    binders.append(self.expect("ident").text)
                if not self.accept("op", ","):
                    break
            self.expect("op", "]")
        bound = None
        if self.accept("op", "<:"):
            bound = self.parse_type()
        return ast.TypeParam(name, binders, bound)

    def parse_object(self) -> ast.ObjectDecl:
        span = self.expect("kw", "object").span
        name = self.expect("ident").text
        super_trait = self.parse_extends()
        methods: list[ast.MethodDef] = []
        proofs: list[ast.ProofDef] = []
        if self.accept("op", "{"):
            while not self.at("op", "}"):
                if self.at("kw", "proof"):
                    proofs.append(self.parse_proof())
                else:
                    member = self.parse_method_or_sig()
                    if isinstance(member, ast.MethodSig):
                        self.error("objects cannot declare abstract methods")
                    methods.append(member)
            self.expect("op", "}")
        return ast.ObjectDecl(
            span=span, name=name, super_trait=super_trait, methods=methods,
            proofs=proofs,
        )

    def parse_enum(self) -> ast.EnumDecl:
        span = self.expect("kw", "enum").span
        name = self.expect("ident").text
        type_params = self.parse_plain_type_params()
        self.expect("op", "{")
        ctors = [self.parse_ctor()]
        while self.accept("op", "|"):
            ctors.append(self.parse_ctor())
        self.expect("op", "}")
        return ast.EnumDecl(span=span, name=name, type_params=type_params, ctors=ctors)

    def parse_ctor(self) -> ast.Ctor:
        tok = self.expect("ident")
        fields: list[ast.Param] = []
        self.expect("op", "(")
        if not self.at("op", ")"):
            fields = self.parse_params()
        self.expect("op", ")")
        return ast.Ctor(tok.text, fields, span=tok.span)

    def parse_extends(self) -> ast.TraitRef | None:
        if not self.accept("kw", "extends"):
            return None
        name = self.expect("ident").text
        args: list[ast.TypeExpr] = []
        if self.accept("op", "["):
            while True:
                args.append(self.parse_type())
                if not self.accept("op", ","):
                    break
            self.expect("op", "]")
        return ast.TraitRef(name, args)

    def parse_plain_type_params(self) -> list[str]:
        params: list[str] = []
        if self.accept("op", "["):
            while True:
                params.append(self.expect("ident").text)
                if not self.accept("op", ","):
                    break
            self.expect("op", "]")
        return params

    def parse_params(self) -> list[ast.Param]:
        params = [self.parse_param()]
        while self.accept("op", ","):
            params.append(self.parse_param())
        return params

    def parse_param(self) -> ast.Param:
        name = self.expect("ident").text
        self.expect("op", ":")
        return ast.Param(name, self.parse_type())

    def parse_method_or_sig(self) -> ast.MethodDef | ast.MethodSig:
        override = False
        if self.at("ident", "override"):
            self.advance()
            override = True
        span = self.expect("kw", "def").span
        name_tok = self.peek()
        if name_tok.kind in ("ident", "kw"):
            # Method names like `apply` are plain idents; no keyword clash
            # exists today but accept idents only.
            name = self.expect("ident").text
        else:
            self.error("expected method name")
            raise AssertionError
        type_params = self.parse_plain_type_params()
        self.expect("op", "(")
        params: list[ast.Param] = []
        if not self.at("op", ")"):
            params = self.parse_params()
        self.expect("op", ")")
        return_type = None
        if self.accept("op", ":"):
            return_type = self.parse_type()
        if self.accept("op", "="):
            body = self.parse_expr()
            return ast.MethodDef(
                name, type_params, params, return_type, body, span=span,
                override=override,
            )
        if return_type is None:
            self.error(f"abstract method {name!r} needs a return type")
        return ast.MethodSig(name, type_params, params, return_type, span=span)

    def parse_proof(self) -> ast.ProofDef:
        span = self.expect("kw", "proof").span
        name = self.expect("ident").text
        type_params = self.parse_plain_type_params()
        self.expect("op", "{")
        body = self.parse_block_body()
        self.expect("op", "}")
        return ast.ProofDef(name, type_params, body, span=span)

    # -- types ---------------------------------------------------------------

    def parse_type(self) -> ast.TypeExpr:
        if self.at("op", "("):
            saved = self.pos
            self.advance()
            params = [self.parse_type()]
            while self.accept("op", ","):
                params.append(self.parse_type())
            self.expect("op", ")")
            if self.accept("op", "=>"):
                return ast.FunT(params, self.parse_type())
            if len(params) == 1:
                t = params[0]
                if self.accept("op", "=>"):
                    return ast.FunT([t], self.parse_type())
                return t
            self.pos = saved
            self.error("tuple types are written Tuple[A, B]")
        t = self.parse_simple_type()
        if self.accept("op", "=>"):
            return ast.FunT([t], self.parse_type())
        return t

    def parse_simple_type(self) -> ast.TypeExpr:
        tok = self.expect("ident")
        name = tok.text
        if name == "Int":
            return ast.IntT()
        if name == "String":
            return ast.StringT()
        if name in ("Boolean", "Bool"):
            return ast.BoolT()
        args: list[ast.TypeExpr] = []
        if self.accept("op", "["):
            while True:
                args.append(self.parse_type())
                if not self.accept("op", ","):
                    break
            self.expect("op", "]")
        return ast.NamedT(name, args)

    # -- expressions ----------------------------------------------------------

    def parse_expr(self) -> ast.Expr:
        return self.parse_implies()

    def parse_implies(self) -> ast.Expr:
        lhs = self.parse_or()
        if self.at("op", "=>:"):
            span = self.advance().span
            rhs = self.parse_implies()
            return ast.Implies(lhs, rhs, span=span)
        return lhs

    def parse_or(self) -> ast.Expr:
        e = self.parse_and()
        while self.at("op", "||"):
            span = self.advance().span
            e = ast.BinOp("||", e, self.parse_and(), span=span)
        return e

    def parse_and(self) -> ast.Expr:
        e = self.parse_cmp()
        while self.at("op", "&&"):
            span = self.advance().span
            e = ast.BinOp("&&", e, self.parse_cmp(), span=span)
        return e

    def parse_cmp(self) -> ast.Expr:
        e = self.parse_add()
        while self.peek().kind == "op" and self.peek().text in ("==", "!=", "<", "<=", ">", ">="):
            op = self.advance()
            e = ast.BinOp(op.text, e, self.parse_add(), span=op.span)
        return e

    def parse_add(self) -> ast.Expr:
        e = self.parse_mul()
        while self.peek().kind == "op" and self.peek().text in ("+", "-"):
            op = self.advance()
            e = ast.BinOp(op.text, e, self.parse_mul(), span=op.span)
        return e

    def parse_mul(self) -> ast.Expr:
        e = self.parse_unary()
        while self.peek().kind == "op" and self.peek().text in ("*", "/"):
            op = self.advance()
            e = ast.BinOp(op.text, e, self.parse_unary(), span=op.span)
        return e

    def parse_unary(self) -> ast.Expr:
        if self.at("op", "!"):
            span = self.advance().span
            return ast.Not(self.parse_unary(), span=span)
        if self.at("op", "-"):
            span = self.advance().span
            if self.at("int"):
                tok = self.advance()
                return ast.IntLit(-int(tok.text), span=span)
            return ast.BinOp("-", ast.IntLit(0, span=span), self.parse_unary(), span=span)
        return self.parse_postfix()

    def parse_postfix(self) -> ast.Expr:
        e = self.parse_primary()
        while True:
            if self.at("op", "."):
                self.advance()
                name_tok = self.expect("ident")
                name = name_tok.text
                if name == "asInstanceOf":
                    self.expect("op", "[")
                    target = self.parse_type()
                    self.expect("op", "]")
                    e = ast.Cast(e, target, span=name_tok.span)
                    continue
                type_args: list[ast.TypeExpr] = []
                if self.at("op", "["):
                    self.advance()
                    while True:
                        type_args.append(self.parse_type())
                        if not self.accept("op", ","):
                            break
                    self.expect("op", "]")
                if self.at("op", "("):
                    self.advance()
                    args: list[ast.Expr] = []
                    if not self.at("op", ")"):
                        args.append(self.parse_expr())
                        while self.accept("op", ","):
                            args.append(self.parse_expr())
                    self.expect("op", ")")
                    e = ast.MethodCall(e, name, type_args, args, span=name_tok.span)
                else:
                    if type_args:
                        self.error("field access takes no type arguments")
                    e = ast.FieldAccess(e, name, span=name_tok.span)
                continue
            if self.at("op", "("):
                span = self.advance().span
                args = []
                if not self.at("op", ")"):
                    args.append(self.parse_expr())
                    while self.accept("op", ","):
                        args.append(self.parse_expr())
                self.expect("op", ")")
                e = ast.Call(e, args, span=span)
                continue
            if self.at("kw", "match"):
                span = self.advance().span
                self.expect("op", "{")
                cases: list[ast.MatchCase] = []
                while self.at("kw", "case"):
                    cases.append(self.parse_case())
                self.expect("op", "}")
                if not cases:
                    self.error("match needs at least one case")
                e = ast.Match(e, cases, span=span)
                continue
            return e

    def parse_case(self) -> ast.MatchCase:
        self.expect("kw", "case")
        pat = self.parse_pattern()
        self.expect("op", "=>")
        body = self.parse_block_body()
        return ast.MatchCase(pat, body)

    def parse_pattern(self) -> ast.Pattern:
        wc = self.accept("op", "_")
        if wc is not None:
            return ast.WildcardPattern(span=wc.span)
        tok = self.expect("ident")
        if self.at("op", "("):
            self.advance()
            binders: list[str] = []
            if not self.at("op", ")"):
                while True:
                    if self.accept("op", "_"):
                        binders.append("_")
                    else:
                        binders.append(self.expect("ident").text)
                    if not self.accept("op", ","):
                        break
            self.expect("op", ")")
            return ast.CtorPattern(tok.text, binders, span=tok.span)
        if tok.text[0].isupper():
            return ast.CtorPattern(tok.text, [], bare=True, span=tok.span)
        return ast.NamePattern(tok.text, span=tok.span)

    def parse_primary(self) -> ast.Expr:
        t = self.peek()
        if t.kind == "int":
            self.advance()
            return ast.IntLit(int(t.text), span=t.span)
        if t.kind == "string":
            self.advance()
            return ast.StrLit(t.text, span=t.span)
        if self.at("kw", "true"):
            self.advance()
            return ast.BoolLit(True, span=t.span)
        if self.at("kw", "false"):
            self.advance()
            return ast.BoolLit(False, span=t.span)
        if self.at("kw", "this"):
            self.advance()
            return ast.VarRef("this", span=t.span)
        if self.at("kw", "new"):
            return self.parse_new()
        if self.at("kw", "if"):
            return self.parse_if()
        if self.at("kw", "forall") or self.at("kw", "exists"):
            return self.parse_quantifier()
        if t.kind == "ident":
            self.advance()
            return ast.VarRef(t.text, span=t.span)
        if self.at("op", "("):
            lam = self.try_parse_lambda()
            if lam is not None:
                return lam
            self.expect("op", "(")
            e = self.parse_expr()
            self.expect("op", ")")
            return e
        if self.at("op", "{"):
            self.advance()
            e = self.parse_block_body()
            self.expect("op", "}")
            return e
        self.error(f"expected expression, got {t.text or t.kind!r}")
        raise AssertionError

    def try_parse_lambda(self) -> ast.Lambda | None:
        """Parse ``(x: T, …) => body``; backtracks if it is not a lambda."""
        saved = self.pos
        saved_errors = len(self.errors)
        span = self.expect("op", "(").span
        params: list[tuple[str, ast.TypeExpr]] = []
        try:
            if not self.at("op", ")"):
                while True:
                    if not self.at("ident"):
                        raise _ParseAbort()
                    name = self.advance().text
                    if not self.accept("op", ":"):
                        raise _ParseAbort()
                    params.append((name, self.parse_type()))
                    if not self.accept("op", ","):
                        break
            if not self.accept("op", ")"):
                raise _ParseAbort()
            if not self.accept("op", "=>"):
                raise _ParseAbort()
        except _ParseAbort:
            self.pos = saved
            del self.errors[saved_errors:]
            return None
        if not params:
            self.error("lambdas take at least one parameter")
        body = self.parse_expr()
        return ast.Lambda(params, body, span=span)

    def parse_new(self) -> ast.Expr:
        span = self.expect("kw", "new").span
        name = self.expect("ident").text
        type_args: list[ast.TypeExpr] = []
        if self.accept("op", "["):
            while True:
                type_args.append(self.parse_type())
                if not self.accept("op", ","):
                    break
            self.expect("op", "]")
        self.expect("op", "(")
        args: list[ast.Expr] = []
        if not self.at("op", ")"):
            args.append(self.parse_expr())
            while self.accept("op", ","):
                args.append(self.parse_expr())
        self.expect("op", ")")
        return ast.New(name, type_args, args, span=span)

    def parse_if(self) -> ast.Expr:
        span = self.expect("kw", "if").span
        self.expect("op", "(")
        cond = self.parse_expr()
        self.expect("op", ")")
        then = self.parse_expr()
        self.expect("kw", "else")
        orelse = self.parse_expr()
        return ast.IfElse(cond, then, orelse, span=span)

    def parse_quantifier(self) -> ast.Expr:
        tok = self.advance()
        kind = tok.text
        self.expect("op", "(")
        binders: list[tuple[str, ast.TypeExpr]] = []
        while True:
            name = self.expect("ident").text
            self.expect("op", ":")
            binders.append((name, self.parse_type()))
            if not self.accept("op", ","):
                break
        self.expect("op", ")")
        self.expect("op", "{")
        body = self.parse_block_body()
        self.expect("op", "}")
        return ast.Quantifier(kind, binders, body, span=tok.span)

    def parse_block_body(self) -> ast.Expr:
        """Body of ``{ … }``: zero or more ``val`` bindings, then one
        expression, desugared to nested val-binding expressions."""
        bindings: list[tuple[str, ast.TypeExpr | None, ast.Expr, Span]] = []
        while self.at("kw", "val"):
            span = self.advance().span
            name = self.expect("ident").text
            declared = None
            if self.accept("op", ":"):
                declared = self.parse_type()
            self.expect("op", "=")
            value = self.parse_expr()
            self.accept("op", ";")
            bindings.append((name, declared, value, span))
        expr = self.parse_expr()
        for name, declared, value, span in reversed(bindings):
            expr = ast.ValBinding(name, declared, value, expr, span=span)
        return expr


def parse_program(source: str) -> ast.Program:
    """Parse ``source`` into a :class:`~rdtv.ast.Program`.

    Raises :class:`ParseErrors` (carrying every recovered diagnostic) or
    :class:`~rdtv.lexer.LexError` on failure.
    """
    tokens = tokenize(source)
    parser = Parser(tokens)
    program = parser.parse_program()
    if parser.errors:
        raise ParseErrors(parser.errors)
    return program


def parse_expr(source: str) -> ast.Expr:
    """Parse a single expression (test helper)."""
    tokens = tokenize(source)
    parser = Parser(tokens)
    e = parser.parse_expr()
    if parser.errors:
        raise ParseErrors(parser.errors)
    if not parser.at("eof"):
        raise ParseErrors([ParseDiagnostic("trailing input after expression", parser.peek().span)])
    return e
