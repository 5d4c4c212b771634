"""Normal forms ``s_mu s_nu^*`` for words in ``p_v``, ``s_e`` and ``s_e^*``.

Any product of generators is either zero or a single ``s_mu s_nu^*`` with
``s(mu) == s(nu)``; ``None`` stands for zero throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .graph import DirectedGraph, GraphError, Path

__all__ = [
    "WordError",
    "NormalForm",
    "Token",
    "multiply",
    "reduce_word",
    "parse_word",
    "generator",
    "adjoint",
    "word_of",
    "format_word",
    "star_word",
]


class WordError(GraphError):
    """Malformed word or token."""


@dataclass(frozen=True)
class NormalForm:
    mu: Path
    nu: Path

    def __post_init__(self):
        if self.mu.source != self.nu.source:
            raise GraphError(f"s({self.mu}) != s({self.nu}); this product is zero")

    @property
    def degree(self) -> int:
        return len(self.mu) - len(self.nu)

    @property
    def is_diagonal(self) -> bool:
        return self.mu == self.nu

    def __str__(self) -> str:
        return f"s[{self.mu}] s*[{self.nu}]"


# (kind, name) with kind in {"p", "s", "s*"}
Token = tuple[str, str]


def multiply(x: NormalForm | None, y: NormalForm | None) -> NormalForm | None:
    if x is None or y is None:
        return None
    mu, nu = x.mu, x.nu
    al, ga = y.mu, y.nu
    if nu.is_prefix_of(al):
        return NormalForm(mu + al.strip_prefix(nu), ga)
    if al.is_prefix_of(nu):
        return NormalForm(mu, ga + nu.strip_prefix(al))
    return None


def generator(g: DirectedGraph, token: Token) -> NormalForm:
    kind, name = token
    if kind == "p":
        if name not in g.index:
            raise WordError(f"unknown vertex {name!r}")
        v = g.vertex_path(name)
        return NormalForm(v, v)
    if kind in ("s", "s*"):
        if name not in g.edge_by_id:
            raise WordError(f"unknown edge {name!r}")
        e = g.path([name])
        s = g.vertex_path(e.source)
        return NormalForm(e, s) if kind == "s" else NormalForm(s, e)
    raise WordError(f"unknown generator kind {kind!r}")


def parse_word(text: str) -> list[Token]:
    """``"p:v s:e s*:f"`` to tokens."""
    tokens = []
    for raw in text.split():
        kind, sep, name = raw.partition(":")
        if not sep or not name or kind not in ("p", "s", "s*"):
            raise WordError(f"malformed token {raw!r}; expected p:<vertex>, s:<edge> or s*:<edge>")
        tokens.append((kind, name))
    if not tokens:
        raise WordError("empty word")
    return tokens


def reduce_word(g: DirectedGraph, word: str | Iterable[Token]) -> NormalForm | None:
    """Fold a word left to right with ``multiply``."""
    tokens = parse_word(word) if isinstance(word, str) else list(word)
    if not tokens:
        raise WordError("empty word")
    acc = generator(g, tokens[0])
    for tok in tokens[1:]:
        nxt = generator(g, tok)
        if acc is not None:
            acc = multiply(acc, nxt)
    return acc


def adjoint(x: NormalForm | None) -> NormalForm | None:
    return None if x is None else NormalForm(x.nu, x.mu)


def word_of(x: NormalForm) -> list[Token]:
    """A generator word reducing to ``x``."""
    if x.mu.is_vertex and x.nu.is_vertex:
        return [("p", x.mu.range)]
    word: list[Token] = [("s", e) for e in x.mu.edges]
    word += [("s*", e) for e in reversed(x.nu.edges)]
    return word


def format_word(tokens: Sequence[Token]) -> str:
    return " ".join(f"{k}:{n}" for k, n in tokens)


def star_word(tokens: Sequence[Token]) -> list[Token]:
    """Adjoint of a word: reverse it and star each letter."""
    flip = {"p": "p", "s": "s*", "s*": "s"}
    return [(flip[k], n) for k, n in reversed(tokens)]
