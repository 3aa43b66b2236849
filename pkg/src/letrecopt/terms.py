"""Lambda-letrec terms: AST, concrete syntax, naming hygiene, substitution.

Terms are immutable values; every operation here is pure and returns fresh
terms, so they can be shared freely across threads and analyses.

Concrete grammar (UTF-8, conventional extension ``.ll``)::

    term ::= "\\" var+ "." term
           | "letrec" bind (";" bind)* "in" term
           | app
    app  ::= atom+                 -- left-associative application
    atom ::= var | "(" term ")"
    bind ::= var "=" term
    var  ::= [A-Za-z_][A-Za-z0-9_']*

Line comments start with ``--``.  Free variables are legal everywhere and
act as uninterpreted constructors (``cons``, ``nil``, ``hd``, ...).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Mapping

__all__ = [
    "Term",
    "Var",
    "Abs",
    "App",
    "Letrec",
    "Path",
    "ParseError",
    "parse",
    "pretty",
    "subterm_at",
    "replace_at",
    "subterms",
    "free_vars",
    "all_names",
    "binders",
    "fresh_name",
    "ensure_distinctly_bound",
    "substitute",
    "substitute_parallel",
    "alpha_eq",
    "spine",
    "make_app",
    "abs_chain",
    "strip_abs",
]

VarName = str

# A path selects one subterm: each step is 'fun' | 'arg' | 'body' | ('def', i).
Path = tuple


@dataclass(frozen=True)
class Term:
    pass


@dataclass(frozen=True)
class Var(Term):
    name: VarName


@dataclass(frozen=True)
class Abs(Term):
    binder: VarName
    body: Term


@dataclass(frozen=True)
class App(Term):
    fun: Term
    arg: Term


@dataclass(frozen=True)
class Letrec(Term):
    defs: tuple[tuple[VarName, Term], ...]
    body: Term

    def names(self) -> tuple[VarName, ...]:
        return tuple(n for n, _ in self.defs)


# ---------------------------------------------------------------------------
# Parsing

VAR_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")
KEYWORDS = {"letrec", "in"}


class ParseError(ValueError):
    """Syntax error carrying a 1-based source location."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


def _tokenize(text: str) -> list[tuple[str, str, int, int]]:
    # token kinds: 'var', 'kw', 'punct'
    tokens = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
        elif c in " \t\r":
            i += 1
            col += 1
        elif text.startswith("--", i):
            while i < n and text[i] != "\n":
                i += 1
        elif c in "\\.();=":
            tokens.append(("punct", c, line, col))
            i += 1
            col += 1
        else:
            m = VAR_RE.match(text, i)
            if not m:
                raise ParseError(f"unexpected character {c!r}", line, col)
            word = m.group(0)
            kind = "kw" if word in KEYWORDS else "var"
            tokens.append((kind, word, line, col))
            i = m.end()
            col += len(word)
    tokens.append(("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> tuple[str, str, int, int]:
        return self.tokens[self.pos]

    def next(self) -> tuple[str, str, int, int]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message: str) -> ParseError:
        _, _, line, col = self.peek()
        return ParseError(message, line, col)

    def expect(self, value: str) -> None:
        kind, val, _, _ = self.peek()
        if val != value or kind == "eof":
            raise self.error(f"expected {value!r}, found {val or 'end of input'!r}")
        self.next()

    def var(self) -> VarName:
        kind, val, _, _ = self.peek()
        if kind != "var":
            raise self.error(f"expected a variable, found {val or 'end of input'!r}")
        self.next()
        return val

    def term(self) -> Term:
        kind, val, line, col = self.peek()
        if val == "\\":
            self.next()
            params = [self.var()]
            while self.peek()[0] == "var":
                params.append(self.var())
            self.expect(".")
            body = self.term()
            return abs_chain(params, body)
        if val == "letrec":
            self.next()
            defs = [self.binding()]
            while self.peek()[1] == ";":
                self.next()
                defs.append(self.binding())
            seen: set[str] = set()
            for name, _ in defs:
                if name in seen:
                    raise ParseError(f"duplicate definition name {name!r}", line, col)
                seen.add(name)
            self.expect("in")
            body = self.term()
            return Letrec(tuple(defs), body)
        return self.app()

    def binding(self) -> tuple[VarName, Term]:
        name = self.var()
        self.expect("=")
        return name, self.term()

    def app(self) -> Term:
        t = self.atom()
        if t is None:
            raise self.error("expected a term")
        while True:
            nxt = self.atom()
            if nxt is None:
                return t
            t = App(t, nxt)

    def atom(self) -> Term | None:
        kind, val, _, _ = self.peek()
        if kind == "var":
            self.next()
            return Var(val)
        if val == "(":
            self.next()
            t = self.term()
            self.expect(")")
            return t
        return None


def parse(text: str) -> Term:
    """Parse concrete syntax into a term, or raise ParseError."""
    p = _Parser(text)
    t = p.term()
    kind, val, line, col = p.peek()
    if kind != "eof":
        raise ParseError(f"trailing input starting at {val!r}", line, col)
    return t


# ---------------------------------------------------------------------------
# Printing

def pretty(t: Term) -> str:
    """Render a term with minimal parentheses; parse(pretty(t)) == t."""
    return _pretty(t, "top")


def _pretty(t: Term, ctx: str) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Abs):
        params, body = strip_abs(t)
        s = "\\" + " ".join(params) + ". " + _pretty(body, "top")
        return f"({s})" if ctx != "top" else s
    if isinstance(t, App):
        s = _pretty(t.fun, "fun") + " " + _pretty(t.arg, "arg")
        return f"({s})" if ctx == "arg" else s
    if isinstance(t, Letrec):
        binds = "; ".join(f"{n} = {_pretty(d, 'top')}" for n, d in t.defs)
        s = f"letrec {binds} in " + _pretty(t.body, "top")
        return f"({s})" if ctx != "top" else s
    raise TypeError(f"not a term: {t!r}")


# ---------------------------------------------------------------------------
# Structure helpers

def _children(t: Term) -> list[tuple[object, Term]]:
    if isinstance(t, Abs):
        return [("body", t.body)]
    if isinstance(t, App):
        return [("fun", t.fun), ("arg", t.arg)]
    if isinstance(t, Letrec):
        steps: list[tuple[object, Term]] = [(("def", i), d) for i, (_, d) in enumerate(t.defs)]
        steps.append(("body", t.body))
        return steps
    return []


def subterms(t: Term, path: Path = ()) -> Iterator[tuple[Path, Term]]:
    """Yield (path, subterm) pairs in pre-order."""
    yield path, t
    for step, child in _children(t):
        yield from subterms(child, path + (step,))


def subterm_at(t: Term, path: Path) -> Term:
    for step in path:
        if step == "body" and isinstance(t, (Abs, Letrec)):
            t = t.body
        elif step == "fun" and isinstance(t, App):
            t = t.fun
        elif step == "arg" and isinstance(t, App):
            t = t.arg
        elif isinstance(step, tuple) and step[0] == "def" and isinstance(t, Letrec):
            t = t.defs[step[1]][1]
        else:
            raise KeyError(f"path step {step!r} does not apply to {type(t).__name__}")
    return t


def replace_at(t: Term, path: Path, new: Term) -> Term:
    if not path:
        return new
    step, rest = path[0], path[1:]
    if step == "body" and isinstance(t, Abs):
        return Abs(t.binder, replace_at(t.body, rest, new))
    if step == "body" and isinstance(t, Letrec):
        return Letrec(t.defs, replace_at(t.body, rest, new))
    if step == "fun" and isinstance(t, App):
        return App(replace_at(t.fun, rest, new), t.arg)
    if step == "arg" and isinstance(t, App):
        return App(t.fun, replace_at(t.arg, rest, new))
    if isinstance(step, tuple) and step[0] == "def" and isinstance(t, Letrec):
        i = step[1]
        defs = list(t.defs)
        defs[i] = (defs[i][0], replace_at(defs[i][1], rest, new))
        return Letrec(tuple(defs), t.body)
    raise KeyError(f"path step {step!r} does not apply to {type(t).__name__}")


_STEP_ORDER = {"fun": 1, "arg": 2, "body": 3}


def path_key(path: Path) -> tuple:
    """Sort key placing paths in term-text order (defs before bodies)."""
    return tuple(
        (0, s[1]) if isinstance(s, tuple) else (_STEP_ORDER[s], 0) for s in path
    )


def spine(t: Term) -> tuple[Term, list[Term]]:
    """Decompose nested applications into (head, [arg1, ..., argN])."""
    args: list[Term] = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fun
    args.reverse()
    return t, args


def make_app(head: Term, args: list[Term]) -> Term:
    for a in args:
        head = App(head, a)
    return head


def abs_chain(params: list[VarName], body: Term) -> Term:
    for p in reversed(params):
        body = Abs(p, body)
    return body


def strip_abs(t: Term) -> tuple[list[VarName], Term]:
    params: list[VarName] = []
    while isinstance(t, Abs):
        params.append(t.binder)
        t = t.body
    return params, t


# ---------------------------------------------------------------------------
# Names and scope

def free_vars(t: Term) -> frozenset[VarName]:
    if isinstance(t, Var):
        return frozenset((t.name,))
    if isinstance(t, Abs):
        return free_vars(t.body) - {t.binder}
    if isinstance(t, App):
        return free_vars(t.fun) | free_vars(t.arg)
    if isinstance(t, Letrec):
        acc = free_vars(t.body)
        for _, d in t.defs:
            acc |= free_vars(d)
        return acc - set(t.names())
    raise TypeError(f"not a term: {t!r}")


def all_names(t: Term) -> frozenset[VarName]:
    """Every identifier appearing anywhere, bound or free."""
    acc: set[VarName] = set()
    for _, sub in subterms(t):
        if isinstance(sub, Var):
            acc.add(sub.name)
        elif isinstance(sub, Abs):
            acc.add(sub.binder)
        elif isinstance(sub, Letrec):
            acc.update(sub.names())
    return frozenset(acc)


def binders(t: Term) -> frozenset[VarName]:
    """All binder names: abstraction parameters and letrec definition names."""
    acc: set[VarName] = set()
    for _, sub in subterms(t):
        if isinstance(sub, Abs):
            acc.add(sub.binder)
        elif isinstance(sub, Letrec):
            acc.update(sub.names())
    return frozenset(acc)


_SUFFIX_RE = re.compile(r"^(.*?)(\d+)$")


def fresh_name(base: VarName, taken: set[VarName]) -> VarName:
    """Smallest base+index not in `taken` (the base itself is never returned)."""
    m = _SUFFIX_RE.match(base)
    stem = m.group(1) if m else base
    i = 1
    while f"{stem}{i}" in taken:
        i += 1
    return f"{stem}{i}"


def ensure_distinctly_bound(t: Term) -> Term:
    """Rename binders so the term observes the variable convention.

    Afterwards every abstraction and letrec definition binds a distinct
    name and no name has both a free and a bound occurrence.  Renaming is
    deterministic: binders are visited leftmost-outermost and clashes get
    the smallest unused numeric suffix.  Free variables are never renamed.
    """
    taken = set(all_names(t))
    used = set(free_vars(t))

    def pick(name: VarName) -> VarName:
        if name not in used:
            used.add(name)
            return name
        new = fresh_name(name, taken)
        taken.add(new)
        used.add(new)
        return new

    def go(t: Term, env: Mapping[VarName, VarName]) -> Term:
        if isinstance(t, Var):
            return Var(env.get(t.name, t.name))
        if isinstance(t, Abs):
            new = pick(t.binder)
            inner = dict(env)
            inner[t.binder] = new
            return Abs(new, go(t.body, inner))
        if isinstance(t, App):
            return App(go(t.fun, env), go(t.arg, env))
        if isinstance(t, Letrec):
            inner = dict(env)
            new_names = []
            for name, _ in t.defs:
                new = pick(name)
                inner[name] = new
                new_names.append(new)
            defs = tuple((new_names[i], go(d, inner)) for i, (_, d) in enumerate(t.defs))
            return Letrec(defs, go(t.body, inner))
        raise TypeError(f"not a term: {t!r}")

    return go(t, {})


# ---------------------------------------------------------------------------
# Substitution

def substitute(t: Term, x: VarName, d: Term) -> Term:
    """Capture-avoiding substitution of d for every free occurrence of x."""
    return substitute_parallel(t, {x: d})


def substitute_parallel(t: Term, mapping: Mapping[VarName, Term]) -> Term:
    """Simultaneous capture-avoiding substitution."""
    if not mapping:
        return t
    # Names that must not be captured by any binder we pass under.
    avoid = frozenset().union(*(free_vars(d) for d in mapping.values()))

    def go(t: Term, mapping: dict[VarName, Term]) -> Term:
        if not mapping:
            return t
        if isinstance(t, Var):
            return mapping.get(t.name, t)
        if isinstance(t, App):
            return App(go(t.fun, mapping), go(t.arg, mapping))
        if isinstance(t, Abs):
            live = {k: v for k, v in mapping.items() if k != t.binder and k in free_vars(t.body)}
            if not live:
                return t
            binder, body = t.binder, t.body
            if binder in avoid:
                new = fresh_name(binder, set(avoid) | set(all_names(body)) | set(live))
                body = go(body, {binder: Var(new)})
                binder = new
            return Abs(binder, go(body, live))
        if isinstance(t, Letrec):
            names = t.names()
            fv = free_vars(t)
            live = {k: v for k, v in mapping.items() if k not in names and k in fv}
            if not live:
                return t
            clashing = [n for n in names if n in avoid]
            if clashing:
                taken = set(avoid) | set(all_names(t)) | set(live)
                renames: dict[VarName, Term] = {}
                new_names = list(names)
                for n in clashing:
                    new = fresh_name(n, taken)
                    taken.add(new)
                    renames[n] = Var(new)
                    new_names[names.index(n)] = new
                defs = tuple((new_names[i], go(d, dict(renames))) for i, (_, d) in enumerate(t.defs))
                body = go(t.body, dict(renames))
                t = Letrec(defs, body)
            defs = tuple((n, go(d, dict(live))) for n, d in t.defs)
            return Letrec(defs, go(t.body, dict(live)))
        raise TypeError(f"not a term: {t!r}")

    return go(t, dict(mapping))


# ---------------------------------------------------------------------------
# Alpha-equivalence

def alpha_eq(t1: Term, t2: Term) -> bool:
    """Structural equality up to consistent renaming of bound names.

    Letrec definitions are compared in listed order.
    """

    def go(a: Term, b: Term, env1: dict, env2: dict, depth: int) -> bool:
        if isinstance(a, Var) and isinstance(b, Var):
            i1 = env1.get(a.name)
            i2 = env2.get(b.name)
            if i1 is None and i2 is None:
                return a.name == b.name  # both free
            return i1 == i2
        if isinstance(a, Abs) and isinstance(b, Abs):
            e1 = dict(env1)
            e2 = dict(env2)
            e1[a.binder] = depth
            e2[b.binder] = depth
            return go(a.body, b.body, e1, e2, depth + 1)
        if isinstance(a, App) and isinstance(b, App):
            return go(a.fun, b.fun, env1, env2, depth) and go(a.arg, b.arg, env1, env2, depth)
        if isinstance(a, Letrec) and isinstance(b, Letrec):
            if len(a.defs) != len(b.defs):
                return False
            e1 = dict(env1)
            e2 = dict(env2)
            d = depth
            for (n1, _), (n2, _) in zip(a.defs, b.defs):
                e1[n1] = d
                e2[n2] = d
                d += 1
            for (_, d1), (_, d2) in zip(a.defs, b.defs):
                if not go(d1, d2, e1, e2, d):
                    return False
            return go(a.body, b.body, e1, e2, d)
        return False

    return go(t1, t2, {}, {}, 0)
