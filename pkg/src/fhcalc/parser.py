"""Recursive-descent parser for the ASCII surface syntax.

Source files have an optional ``signature { ... }`` block that declares extra
primitive operations, an optional ``context { ... }`` block that declares
free variables, and then one term::

    signature {
      is_empty : (n:Int) -> Bool by is_zero;
      flip : (b:Bool) -> Bool by table { (true) -> false, _ -> true };
    }
    context {
      x : {y:Int | y > 0};
      type a;
    }
    <Int => {x:Int | 0 < x}>^l 5
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import signature as sigmod
from .signature import INFIX, OpSig, Signature
from .syntax import (
    BOOL,
    INT,
    ActiveCheck,
    App,
    Blame,
    Cast,
    Const,
    Context,
    Forall,
    Fun,
    Lam,
    Op,
    Refine,
    TApp,
    TermBind,
    TLam,
    TVar,
    Var,
    WaitCheck,
    arrow,
    mk_let,
)


class ParseError(Exception):
    pass


KEYWORDS = {
    "fun", "tyfun", "let", "in", "forall", "blame", "true", "false",
    "Bool", "Int", "by", "table", "signature", "context", "type",
}

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_§][A-Za-z0-9_?'§]*)
  | (?P<sym>=>|->|==|!=|<=|>=|&&|\|\||[(){}\[\]<>:|,.=^+\-*;])
    """,
    re.VERBOSE,
)

_SYMBOL_OPS = {v: k for k, v in INFIX.items()}
_LEVELS = [
    (1, {"||"}),
    (2, {"&&"}),
    (3, {"==", "!=", "<", "<=", ">", ">="}),
    (4, {"+", "-"}),
    (5, {"*"}),
]


@dataclass(frozen=True)
class Tok:
    kind: str  # "int", "ident", "sym", "eof"
    text: str
    pos: int


def tokenize(text: str) -> list[Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r} at offset {pos}")
        kind = m.lastgroup
        if kind != "ws":
            toks.append(Tok(kind, m.group(), pos))
        pos = m.end()
    toks.append(Tok("eof", "", pos))
    return toks


@dataclass
class SourceFile:
    term: object
    context: Context = field(default_factory=Context)
    signature: Signature = field(default_factory=lambda: sigmod.DEFAULT)
    declared_ops: tuple = ()


class Parser:
    def __init__(self, text: str, sig: Signature | None = None):
        self.toks = tokenize(text)
        self.i = 0
        self.sig = sig or sigmod.DEFAULT

    # -- token helpers

    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("sym", "ident") and t.text == text

    def advance(self) -> Tok:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Tok:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.advance()

    def fail(self, msg: str):
        t = self.tok
        raise ParseError(f"{msg} at offset {t.pos}, found {t.text or 'end of input'!r}")

    def ident(self) -> str:
        t = self.tok
        if t.kind != "ident" or t.text in KEYWORDS:
            self.fail("expected an identifier")
        self.i += 1
        return t.text

    def label(self) -> str:
        t = self.tok
        if t.kind not in ("ident", "int"):
            self.fail("expected a label")
        self.i += 1
        return t.text

    # -- types

    def type_(self):
        if self.at("forall"):
            self.advance()
            a = self.ident()
            self.expect(".")
            return Forall(a, self.type_())
        if self.at("(") and self.peek().kind == "ident" and self.peek(2).text == ":" and self.peek().text not in KEYWORDS:
            self.advance()
            x = self.ident()
            self.expect(":")
            dom = self.type_()
            self.expect(")")
            self.expect("->")
            return Fun(x, dom, self.type_())
        left = self.type_atom()
        if self.at("->"):
            self.advance()
            return arrow(left, self.type_())
        return left

    def type_atom(self):
        t = self.tok
        if self.at("Bool"):
            self.advance()
            return BOOL
        if self.at("Int"):
            self.advance()
            return INT
        if self.at("{"):
            self.advance()
            x = self.ident()
            self.expect(":")
            base = self.type_()
            self.expect("|")
            pred = self.expr()
            self.expect("}")
            return Refine(x, base, pred)
        if self.at("("):
            self.advance()
            ty = self.type_()
            self.expect(")")
            return ty
        if t.kind == "ident" and t.text not in KEYWORDS:
            self.advance()
            return TVar(t.text)
        self.fail("expected a type")

    def refine_type(self):
        ty = self.type_atom()
        if not isinstance(ty, Refine):
            self.fail("expected a refinement type")
        return ty

    # -- terms

    def expr(self):
        if self.at("fun"):
            self.advance()
            self.expect("(")
            x = self.ident()
            self.expect(":")
            ty = self.type_()
            self.expect(")")
            return Lam(x, ty, self.expr())
        if self.at("tyfun"):
            self.advance()
            self.expect("(")
            a = self.ident()
            self.expect(")")
            return TLam(a, self.expr())
        if self.at("let"):
            self.advance()
            x = self.ident()
            self.expect(":")
            ty = self.type_()
            self.expect("=")
            bound = self.expr()
            self.expect("in")
            return mk_let(x, ty, bound, self.expr())
        return self.infix(0)

    def _closing_gt(self) -> bool:
        # ">" directly followed by ">" or "^" closes a cast or check
        return self.at(">") and self.peek().text in (">", "^")

    def infix(self, idx: int):
        if idx == len(_LEVELS):
            return self.application()
        level, syms = _LEVELS[idx]
        left = self.infix(idx + 1)
        while self.tok.kind == "sym" and self.tok.text in syms and not self._closing_gt():
            sym = self.advance().text
            right = self.infix(idx + 1)
            left = Op(_SYMBOL_OPS[sym], (left, right))
            if level == 3:
                break  # comparisons do not associate
        return left

    def _starts_argument(self) -> bool:
        t = self.tok
        if t.kind == "int":
            return True
        if t.kind == "ident":
            return t.text not in KEYWORDS or t.text in ("true", "false", "blame")
        return t.kind == "sym" and t.text == "("

    def application(self):
        e = self.atom()
        while True:
            if self.at("["):
                self.advance()
                ty = self.type_()
                self.expect("]")
                e = TApp(e, ty)
            elif self._starts_argument():
                e = App(e, self.atom())
            else:
                return e

    def atom(self):
        t = self.tok
        if t.kind == "int":
            self.advance()
            return Const(int(t.text))
        if self.at("-") and self.peek().kind == "int":
            self.advance()
            return Const(-int(self.advance().text))
        if self.at("true"):
            self.advance()
            return Const(True)
        if self.at("false"):
            self.advance()
            return Const(False)
        if self.at("blame"):
            self.advance()
            return Blame(self.label())
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if self.at("<"):
            return self.cast_or_check()
        if t.kind == "ident" and t.text not in KEYWORDS:
            self.advance()
            if t.text in self.sig and self.at("("):
                return self.op_call(t.text)
            return Var(t.text)
        self.fail("expected a term")

    def op_call(self, name: str):
        self.expect("(")
        args = []
        if not self.at(")"):
            args.append(self.expr())
            while self.at(","):
                self.advance()
                args.append(self.expr())
        self.expect(")")
        return Op(name, tuple(args))

    def cast_or_check(self):
        self.expect("<")
        if self.at("<"):
            self.advance()
            ref = self.refine_type()
            self.expect(",")
            subject = self.expr()
            self.expect(">")
            self.expect(">")
            self.expect("^")
            return WaitCheck(ref, subject, self.label())
        src = self.type_()
        if self.at(","):
            if not isinstance(src, Refine):
                self.fail("an active check needs a refinement type")
            self.advance()
            state = self.expr()
            self.expect(",")
            value = self.expr()
            self.expect(">")
            self.expect("^")
            return ActiveCheck(src, state, value, self.label())
        self.expect("=>")
        tgt = self.type_()
        self.expect(">")
        self.expect("^")
        return Cast(src, tgt, self.label())

    # -- files

    def source_file(self) -> SourceFile:
        declared = []
        ctx = Context()
        if self.at("signature"):
            self.advance()
            self.expect("{")
            while not self.at("}"):
                opsig = self.op_decl()
                declared.append(opsig)
                self.sig = self.sig.extend(opsig)
            self.expect("}")
        if self.at("context"):
            self.advance()
            self.expect("{")
            while not self.at("}"):
                if self.at("type"):
                    self.advance()
                    ctx = ctx.bind_type(self.ident())
                else:
                    x = self.ident()
                    self.expect(":")
                    ctx = ctx.bind(x, self.type_())
                self.expect(";")
            self.expect("}")
        term = self.expr()
        if self.tok.kind != "eof":
            self.fail("trailing input")
        return SourceFile(term, ctx, self.sig, tuple(declared))

    def op_decl(self) -> OpSig:
        name = self.ident()
        self.expect(":")
        ty = self.type_()
        params = []
        while isinstance(ty, Fun):
            params.append((ty.var, ty.dom))
            ty = ty.cod
        self.expect("by")
        if self.at("table"):
            self.advance()
            impl, selector = self.table()
        else:
            selector = self.ident()
            if selector not in sigmod.BUILTINS:
                raise ParseError(f"unknown denotation {selector!r} for operation {name}")
            impl = sigmod.BUILTINS[selector]
        self.expect(";")
        opsig = OpSig(name, tuple(params), ty, impl, selector)
        problem = sigmod.check_shape(opsig)
        if problem:
            raise ParseError(problem)
        return opsig

    def table(self):
        self.expect("{")
        rows: dict = {}
        default = None
        while True:
            if self.at("_"):
                self.advance()
                self.expect("->")
                default = self.constant()
            else:
                self.expect("(")
                key = []
                if not self.at(")"):
                    key.append(self.constant())
                    while self.at(","):
                        self.advance()
                        key.append(self.constant())
                self.expect(")")
                self.expect("->")
                rows[tuple(key)] = self.constant()
            if not self.at(","):
                break
            self.advance()
        self.expect("}")
        shown = [f"({', '.join(_show_const(k) for k in key)}) -> {_show_const(v)}" for key, v in rows.items()]
        if default is not None:
            shown.append(f"_ -> {_show_const(default)}")
        return sigmod.table_impl(rows, default), "table { " + ", ".join(shown) + " }"

    def constant(self):
        e = self.atom()
        if not isinstance(e, Const):
            self.fail("expected a constant")
        return e.value


def _show_const(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def show_file(src: SourceFile) -> str:
    """Print a source file; parsing the output gives back an equivalent file."""
    from .printer import show_term, show_type

    lines = []
    if src.declared_ops:
        lines.append("signature {")
        for op in src.declared_ops:
            lines.append(f"  {op.name} : {show_type(op.as_type())} by {op.selector};")
        lines.append("}")
    if len(src.context):
        lines.append("context {")
        for entry in src.context:
            if isinstance(entry, TermBind):
                lines.append(f"  {entry.name} : {show_type(entry.ty)};")
            else:
                lines.append(f"  type {entry.name};")
        lines.append("}")
    lines.append(show_term(src.term))
    return "\n".join(lines) + "\n"


def parse_term(text: str, sig: Signature | None = None):
    p = Parser(text, sig)
    e = p.expr()
    if p.tok.kind != "eof":
        p.fail("trailing input")
    return e


def parse_type(text: str, sig: Signature | None = None):
    p = Parser(text, sig)
    ty = p.type_()
    if p.tok.kind != "eof":
        p.fail("trailing input")
    return ty


def parse_file(text: str, sig: Signature | None = None) -> SourceFile:
    return Parser(text, sig).source_file()


def parse_context(text: str, sig: Signature | None = None) -> Context:
    """``x : T; type a; ...`` as used by the ``--ctx`` flag."""
    p = Parser(text, sig)
    ctx = Context()
    while p.tok.kind != "eof":
        if p.at("type"):
            p.advance()
            ctx = ctx.bind_type(p.ident())
        else:
            x = p.ident()
            p.expect(":")
            ctx = ctx.bind(x, p.type_())
        if p.at(";"):
            p.advance()
        elif p.tok.kind != "eof":
            p.fail("expected ';'")
    return ctx
