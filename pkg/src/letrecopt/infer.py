"""Simple-type inference for lambda-letrec with monomorphic recursion.

Letrec definitions get one monomorphic type each (no let-polymorphism).
Unconstrained residual type variables default to the base type ``i``, so
inference is total on typable terms and downstream decoration is
deterministic.  Free variables act as constants: they may be pinned by a
signature and are otherwise inferred and defaulted.

Signature files (``.sig``) contain lines ``name : type`` with
``type ::= "i" | type "->" type`` (right-associative; parentheses are
accepted as a convenience).  Lines may carry ``--`` comments.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .terms import Abs, App, Letrec, Path, Term, Var, subterms

__all__ = [
    "Base",
    "Arrow",
    "BareType",
    "IOTA",
    "TypedTerm",
    "TypeInferenceError",
    "UntypableError",
    "SignatureMismatchError",
    "infer_types",
    "parse_signature",
    "type_str",
]


@dataclass(frozen=True)
class Base:
    name: str = "i"


@dataclass(frozen=True)
class Arrow:
    dom: "BareType"
    cod: "BareType"


BareType = Base | Arrow

IOTA = Base("i")


class TypeInferenceError(ValueError):
    pass


class UntypableError(TypeInferenceError):
    pass


class SignatureMismatchError(TypeInferenceError):
    pass


def type_str(t: BareType) -> str:
    if isinstance(t, Base):
        return t.name
    dom = type_str(t.dom)
    if isinstance(t.dom, Arrow):
        dom = f"({dom})"
    return f"{dom} -> {type_str(t.cod)}"


@dataclass(frozen=True)
class TypedTerm:
    """A term with a fully resolved bare type at every subterm position."""

    term: Term
    types: dict[Path, BareType] = field(compare=False)
    free_types: dict[str, BareType] = field(compare=False)

    @property
    def top(self) -> BareType:
        return self.types[()]

    def type_at(self, path: Path) -> BareType:
        return self.types[path]


# ---------------------------------------------------------------------------
# Unification

@dataclass(frozen=True)
class _TVar:
    id: int


def _find(t, subst):
    while isinstance(t, _TVar) and t.id in subst:
        t = subst[t.id]
    return t


def _occurs(v: _TVar, t, subst) -> bool:
    t = _find(t, subst)
    if isinstance(t, _TVar):
        return t == v
    if isinstance(t, Arrow):
        return _occurs(v, t.dom, subst) or _occurs(v, t.cod, subst)
    return False


def _unify(a, b, subst) -> None:
    a = _find(a, subst)
    b = _find(b, subst)
    if a == b:
        return
    if isinstance(a, _TVar):
        if _occurs(a, b, subst):
            raise UntypableError("untypable: occurs check failed")
        subst[a.id] = b
        return
    if isinstance(b, _TVar):
        _unify(b, a, subst)
        return
    if isinstance(a, Arrow) and isinstance(b, Arrow):
        _unify(a.dom, b.dom, subst)
        _unify(a.cod, b.cod, subst)
        return
    if isinstance(a, Base) and isinstance(b, Base) and a.name == b.name:
        return
    raise UntypableError(
        f"untypable: cannot unify {_render(a, subst)} with {_render(b, subst)}"
    )


def _render(t, subst) -> str:
    t = _find(t, subst)
    if isinstance(t, _TVar):
        return f"t{t.id}"
    if isinstance(t, Base):
        return t.name
    return f"({_render(t.dom, subst)} -> {_render(t.cod, subst)})"


def _default(t, subst) -> BareType:
    t = _find(t, subst)
    if isinstance(t, _TVar):
        return IOTA
    if isinstance(t, Arrow):
        return Arrow(_default(t.dom, subst), _default(t.cod, subst))
    return t


# ---------------------------------------------------------------------------
# Inference

def infer_types(t: Term, sig: dict[str, BareType] | None = None) -> TypedTerm:
    """Principal simple typing with defaulting, or raise.

    Occurs-check and constructor clashes raise UntypableError; if the term
    is typable without the signature but not with it, the failure is
    reported as SignatureMismatchError instead.
    """
    sig = sig or {}
    try:
        return _infer(t, sig)
    except UntypableError:
        if sig:
            try:
                _infer(t, {})
            except UntypableError:
                raise
            raise SignatureMismatchError(
                "signature mismatch: term is typable only without the signature"
            ) from None
        raise


def _infer(t: Term, sig: dict[str, BareType]) -> TypedTerm:
    subst: dict[int, object] = {}
    raw: dict[Path, object] = {}
    free: dict[str, object] = {}
    ids = itertools.count()

    def fresh() -> _TVar:
        return _TVar(next(ids))

    def check(path: Path, t: Term, env: dict[str, object]):
        if isinstance(t, Var):
            if t.name in env:
                ty = env[t.name]
            elif t.name in free:
                ty = free[t.name]
            else:
                ty = free.setdefault(t.name, sig.get(t.name, fresh()))
        elif isinstance(t, Abs):
            dom = fresh()
            inner = dict(env)
            inner[t.binder] = dom
            cod = check(path + ("body",), t.body, inner)
            ty = Arrow(dom, cod)
        elif isinstance(t, App):
            tf = check(path + ("fun",), t.fun, env)
            ta = check(path + ("arg",), t.arg, env)
            res = fresh()
            _unify(tf, Arrow(ta, res), subst)
            ty = res
        elif isinstance(t, Letrec):
            inner = dict(env)
            for name, _ in t.defs:
                inner[name] = fresh()
            for i, (name, d) in enumerate(t.defs):
                td = check(path + (("def", i),), d, inner)
                _unify(td, inner[name], subst)
            ty = check(path + ("body",), t.body, inner)
        else:  # pragma: no cover
            raise TypeError(f"not a term: {t!r}")
        raw[path] = ty
        return ty

    check((), t, {})
    types = {path: _default(ty, subst) for path, ty in raw.items()}
    free_types = {name: _default(ty, subst) for name, ty in free.items()}
    return TypedTerm(t, types, free_types)


# ---------------------------------------------------------------------------
# Signatures

def parse_signature(text: str) -> dict[str, BareType]:
    sig: dict[str, BareType] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("--", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ValueError(f"signature line {lineno}: expected 'name : type'")
        name, _, rhs = line.partition(":")
        name = name.strip()
        if not name:
            raise ValueError(f"signature line {lineno}: missing name")
        sig[name] = _parse_type(rhs.strip(), lineno)
    return sig


def _parse_type(s: str, lineno: int) -> BareType:
    tokens = s.replace("(", " ( ").replace(")", " ) ").replace("->", " -> ").split()
    pos = 0

    def atom() -> BareType:
        nonlocal pos
        if pos >= len(tokens):
            raise ValueError(f"signature line {lineno}: unexpected end of type")
        tok = tokens[pos]
        if tok == "(":
            pos += 1
            inner = arrow()
            if pos >= len(tokens) or tokens[pos] != ")":
                raise ValueError(f"signature line {lineno}: missing ')'")
            pos += 1
            return inner
        if tok == "i":
            pos += 1
            return IOTA
        raise ValueError(f"signature line {lineno}: unexpected token {tok!r}")

    def arrow() -> BareType:
        nonlocal pos
        left = atom()
        if pos < len(tokens) and tokens[pos] == "->":
            pos += 1
            return Arrow(left, arrow())
        return left

    ty = arrow()
    if pos != len(tokens):
        raise ValueError(f"signature line {lineno}: trailing tokens in type")
    return ty
