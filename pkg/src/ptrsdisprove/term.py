"""First-order terms, positions, substitutions and syntactic matching.

Terms are immutable: a :class:`Var` or an :class:`App` of a function symbol
to a tuple of argument terms. Positions are tuples of 1-based argument
indices, the empty tuple being the root position.
"""

from __future__ import annotations

import re
import weakref
from dataclasses import dataclass, field
from typing import Iterator, Literal, Mapping, Union

Position = tuple[int, ...]
ROOT: Position = ()


class TermError(Exception):
    pass


class InvalidPosition(TermError):
    pass


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


_interned: "weakref.WeakValueDictionary[tuple, App]" = weakref.WeakValueDictionary()


@dataclass(frozen=True, eq=False)
class App:
    fn: str
    args: tuple["Term", ...] = ()
    # hash and size are cached: terms are compared and measured constantly
    _hash: int = field(init=False, repr=False)
    _size: int = field(init=False, repr=False)

    def __new__(cls, fn: str, args: tuple["Term", ...] = ()) -> "App":
        # hash-consing: equal terms are usually the same object
        key = (fn, args)
        t = _interned.get(key)
        if t is None:
            t = object.__new__(cls)
            _interned[key] = t
        return t

    def __post_init__(self) -> None:
        object.__setattr__(self, "_hash", hash((self.fn, self.args)))
        object.__setattr__(self, "_size", 1 + sum(a._size if isinstance(a, App) else 1 for a in self.args))

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, App):
            return NotImplemented
        return self._hash == other._hash and self.fn == other.fn and self.args == other.args

    def __str__(self) -> str:
        if not self.args:
            return self.fn
        return f"{self.fn}({','.join(str(a) for a in self.args)})"


Term = Union[Var, App]
Substitution = Mapping[str, Term]

HOLE_NAME = "□"
HOLE = App(HOLE_NAME)


def is_var(t: Term) -> bool:
    return isinstance(t, Var)


def walk(t: Term) -> Iterator[tuple[Position, Term]]:
    """Yield ``(position, subterm)`` pairs in pre-order without recursion."""
    stack: list[tuple[Position, Term]] = [(ROOT, t)]
    while stack:
        pos, s = stack.pop()
        yield pos, s
        if isinstance(s, App):
            for i in range(len(s.args), 0, -1):
                stack.append((pos + (i,), s.args[i - 1]))


def positions(t: Term) -> list[Position]:
    return [p for p, _ in walk(t)]


def fun_positions(t: Term) -> list[Position]:
    """Positions of function symbols (Pos_Σ)."""
    return [p for p, s in walk(t) if isinstance(s, App)]


def var_positions(t: Term) -> list[Position]:
    """Positions of variables (Pos_V)."""
    return [p for p, s in walk(t) if isinstance(s, Var)]


def size(t: Term) -> int:
    return t._size if isinstance(t, App) else 1


def depth(t: Term) -> int:
    return max(len(p) for p, _ in walk(t))


def variables(t: Term) -> list[str]:
    """Variable names of ``t`` in order of first occurrence."""
    seen: dict[str, None] = {}
    for _, s in walk(t):
        if isinstance(s, Var):
            seen.setdefault(s.name)
    return list(seen)


def symbols(t: Term) -> set[tuple[str, int]]:
    return {(s.fn, len(s.args)) for _, s in walk(t) if isinstance(s, App)}


def var_count(t: Term, x: str) -> int:
    return sum(1 for _, s in walk(t) if s == Var(x))


def is_linear(t: Term) -> bool:
    names = [s.name for _, s in walk(t) if isinstance(s, Var)]
    return len(names) == len(set(names))


def is_position(t: Term, pos: Position) -> bool:
    s = t
    for i in pos:
        if not isinstance(s, App) or not 1 <= i <= len(s.args):
            return False
        s = s.args[i - 1]
    return True


def subterm_at(t: Term, pos: Position) -> Term:
    s = t
    for i in pos:
        if not isinstance(s, App) or not 1 <= i <= len(s.args):
            raise InvalidPosition(f"{format_position(pos)} is not a position of {t}")
        s = s.args[i - 1]
    return s


def replace_at(t: Term, pos: Position, r: Term) -> Term:
    if not pos:
        return r
    if not isinstance(t, App) or not 1 <= pos[0] <= len(t.args):
        raise InvalidPosition(f"{format_position(pos)} is not a position of {t}")
    i = pos[0] - 1
    args = list(t.args)
    args[i] = replace_at(args[i], pos[1:], r)
    return App(t.fn, tuple(args))


def substitute(sigma: Substitution, t: Term) -> Term:
    if isinstance(t, Var):
        return sigma.get(t.name, t)
    if not t.args:
        return t
    return App(t.fn, tuple(substitute(sigma, a) for a in t.args))


def substitute_power(sigma: Substitution, t: Term, n: int) -> Term:
    for _ in range(n):
        t = substitute(sigma, t)
    return t


def compose(first: Substitution, second: Substitution) -> dict[str, Term]:
    """The substitution ``x ↦ (x first) second``."""
    out: dict[str, Term] = {}
    for x in set(first) | set(second):
        v = substitute(second, first.get(x, Var(x)))
        if v != Var(x):
            out[x] = v
    return out


def normalize(sigma: Substitution) -> dict[str, Term]:
    """Drop identity bindings so that the keys are exactly dom(σ)."""
    return {x: v for x, v in sigma.items() if v != Var(x)}


def match(pattern: Term, subject: Term) -> dict[str, Term] | None:
    """Syntactic matching: σ with ``pattern σ = subject``, or ``None``.

    Variables of ``subject`` are treated as constants. The returned
    substitution binds exactly the variables of ``pattern`` (identity
    bindings included, so it also serves as a witness on V(pattern)).
    """
    sigma: dict[str, Term] = {}
    stack = [(pattern, subject)]
    while stack:
        p, s = stack.pop()
        if isinstance(p, Var):
            bound = sigma.get(p.name)
            if bound is None:
                sigma[p.name] = s
            elif bound != s:
                return None
        elif isinstance(s, App) and s.fn == p.fn and len(s.args) == len(p.args):
            stack.extend(zip(p.args, s.args))
        else:
            return None
    return sigma


def matches(pattern: Term, subject: Term) -> bool:
    return match(pattern, subject) is not None


Relation = Literal["above", "below", "orthogonal", "equal"]


def position_relation(p1: Position, p2: Position) -> Relation:
    if p1 == p2:
        return "equal"
    if p2[: len(p1)] == p1:
        return "above"
    if p1[: len(p2)] == p2:
        return "below"
    return "orthogonal"


def orthogonal(p1: Position, p2: Position) -> bool:
    return position_relation(p1, p2) == "orthogonal"


def format_position(pos: Position) -> str:
    return ".".join(map(str, pos)) if pos else "ε"


@dataclass(frozen=True)
class Context:
    """A term with exactly one occurrence of the hole constant."""

    term: Term

    def __post_init__(self) -> None:
        holes = [p for p, s in walk(self.term) if s == HOLE]
        if len(holes) != 1:
            raise TermError(f"a context needs exactly one hole, found {len(holes)}")

    @classmethod
    def around(cls, t: Term, pos: Position) -> "Context":
        return cls(replace_at(t, pos, HOLE))

    @property
    def hole(self) -> Position:
        return next(p for p, s in walk(self.term) if s == HOLE)

    def fill(self, t: Term) -> Term:
        return replace_at(self.term, self.hole, t)

    def __str__(self) -> str:
        return str(self.term)


# Textual syntax. Identifiers follow the .ptrs grammar; purely numeric
# names are also accepted as constants so that terms like geo(0) can be written.
_TOKEN = re.compile(r"\s*(?:([A-Za-z_][A-Za-z0-9_']*|[0-9]+|□)|(.))")


def parse_term(text: str, variables: frozenset[str] | set[str] | tuple[str, ...] = ()) -> Term:
    """Parse ``f(t1,...,tn)`` syntax; identifiers in ``variables`` become :class:`Var`."""
    tokens = [(m.group(1) or m.group(2)) for m in _TOKEN.finditer(text) if m.group(0).strip()]
    varset = set(variables)
    pos = 0

    def term() -> Term:
        nonlocal pos
        if pos >= len(tokens) or tokens[pos] in "(),":
            raise TermError(f"expected identifier in {text!r}")
        name = tokens[pos]
        pos += 1
        if pos < len(tokens) and tokens[pos] == "(":
            if name in varset:
                raise TermError(f"variable {name} applied to arguments")
            pos += 1
            args = [term()]
            while pos < len(tokens) and tokens[pos] == ",":
                pos += 1
                args.append(term())
            if pos >= len(tokens) or tokens[pos] != ")":
                raise TermError(f"expected ')' in {text!r}")
            pos += 1
            return App(name, tuple(args))
        return Var(name) if name in varset else App(name)

    t = term()
    if pos != len(tokens):
        raise TermError(f"trailing input in {text!r}")
    return t


def format_subst(sigma: Substitution) -> str:
    return "[" + ", ".join(f"{x}/{v}" for x, v in sorted(sigma.items())) + "]"


def parse_subst(text: str, variables: frozenset[str] | set[str] | tuple[str, ...] = ()) -> dict[str, Term]:
    """Parse ``[x/t1, y/t2]`` (the format of :func:`format_subst`)."""
    body = text.strip()
    if not (body.startswith("[") and body.endswith("]")):
        raise TermError(f"substitution must be written as [x/t, ...], got {text!r}")
    body = body[1:-1].strip()
    items, depth, start = [], 0, 0
    for i, ch in enumerate(body):
        depth += {"(": 1, ")": -1}.get(ch, 0)
        if ch == "," and depth == 0:
            items.append(body[start:i])
            start = i + 1
    if body:
        items.append(body[start:])
    sigma: dict[str, Term] = {}
    for item in items:
        name, sep, rhs = item.partition("/")
        name = name.strip()
        if not sep or not name or name in sigma:
            raise TermError(f"bad substitution entry {item.strip()!r}")
        sigma[name] = parse_term(rhs, variables)
    return sigma
