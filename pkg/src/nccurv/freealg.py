"""Free algebra over symmetric non-commuting letters.

Letters come in three classes, ``x`` (the variables), ``h`` (directions) and
``k`` (a second direction, used only by mixed Hessians).  A letter is the
pair ``(cls, index)`` with ``cls`` in ``{0, 1, 2}`` for ``x, h, k`` and a
1-based ``index``.  Words are tuples of letters; the empty tuple is the
identity.  Tuple comparison of letters gives the canonical letter order
``x1 < ... < xg < h1 < ... < hg < k1 < ... < kg`` and words are ordered
graded-lexicographically, see :func:`word_key`.
"""

from __future__ import annotations

import itertools
import re
from collections.abc import Iterable, Mapping
from numbers import Real
from typing import Union

from .errors import InputError, ParseError

X, H, K = 0, 1, 2
CLASS_NAMES = "xhk"

Letter = tuple[int, int]
Word = tuple[Letter, ...]

ORDERING_TAG = "graded-lex;x<h<k;border=(length,h-index,word)"


def word_key(w: Word):
    return (len(w), w)


def letter_name(a: Letter) -> str:
    return f"{CLASS_NAMES[a[0]]}{a[1]}"


def reverse(w: Word) -> Word:
    return w[::-1]


def words_of_length(g: int, k: int, cls: int = X) -> list[Word]:
    return [tuple((cls, i + 1) for i in idx) for idx in itertools.product(range(g), repeat=k)]


def words_upto(g: int, N: int, cls: int = X) -> list[Word]:
    """All words of length ``<= N`` in graded-lex order (``alpha(g, N)`` many)."""
    out: list[Word] = []
    for k in range(N + 1):
        out.extend(words_of_length(g, k, cls))
    return out


def word_to_string(w: Word) -> str:
    if not w:
        return "1"
    parts = []
    for letter, run in itertools.groupby(w):
        n = len(list(run))
        name = letter_name(letter)
        parts.append(name if n == 1 else f"{name}^{n}")
    return "*".join(parts)


def _format_coeff(c: float) -> str:
    if float(c).is_integer() and abs(c) < 1e16:
        return str(int(c))
    return repr(float(c))


Scalar = Union[int, float]


class NcPoly:
    """Real polynomial in symmetric non-commuting letters.

    Instances are treated as immutable.  ``g`` is the number of variables
    in each letter class; zero coefficients are never stored.
    """

    __slots__ = ("g", "_terms", "_hash")

    def __init__(self, g: int, terms: Mapping[Word, Scalar] | Iterable[tuple[Word, Scalar]] = ()):
        if g < 1:
            raise InputError("g must be at least 1")
        self.g = int(g)
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Word, float] = {}
        for w, c in items:
            w = tuple(w)
            for cls, i in w:
                if not (0 <= cls <= 2 and 1 <= i <= self.g):
                    raise InputError(f"letter {(cls, i)} out of range for g={self.g}")
            acc[w] = acc.get(w, 0.0) + float(c)
        self._terms = {w: c for w, c in acc.items() if c != 0.0}
        self._hash = None

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, g: int) -> "NcPoly":
        return cls(g)

    @classmethod
    def constant(cls, g: int, c: Scalar) -> "NcPoly":
        return cls(g, {(): c})

    @classmethod
    def letter(cls, g: int, i: int, kind: int = X) -> "NcPoly":
        return cls(g, {((kind, i),): 1.0})

    @classmethod
    def word(cls, g: int, w: Word, c: Scalar = 1.0) -> "NcPoly":
        return cls(g, {w: c})

    # -- inspection ---------------------------------------------------------

    @property
    def terms(self) -> dict[Word, float]:
        return dict(self._terms)

    def items(self) -> list[tuple[Word, float]]:
        """Terms in canonical (graded-lex) order."""
        return sorted(self._terms.items(), key=lambda t: word_key(t[0]))

    def coefficient(self, w: Word) -> float:
        return self._terms.get(tuple(w), 0.0)

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> int:
        """Total degree; ``-1`` for the zero polynomial."""
        return max((len(w) for w in self._terms), default=-1)

    def class_degree(self, kind: int) -> int:
        return max((sum(1 for a in w if a[0] == kind) for w in self._terms), default=-1)

    @property
    def x_degree(self) -> int:
        return self.class_degree(X)

    @property
    def h_degree(self) -> int:
        return self.class_degree(H)

    def h_degrees(self) -> set[int]:
        return {sum(1 for a in w if a[0] == H) for w in self._terms}

    def is_homogeneous_in(self, kind: int, k: int) -> bool:
        return all(sum(1 for a in w if a[0] == kind) == k for w in self._terms)

    def letters_used(self) -> set[int]:
        return {a[0] for w in self._terms for a in w}

    def constant_term(self) -> float:
        return self._terms.get((), 0.0)

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def profile(self) -> dict:
        """Degree bookkeeping used by reports."""
        return {
            "degree": self.degree,
            "x_degree": self.x_degree,
            "h_degree": self.h_degree,
            "h_homogeneous": len(self.h_degrees()) <= 1,
            "symmetric": self.is_symmetric(),
        }

    # -- involution ---------------------------------------------------------

    def transpose(self) -> "NcPoly":
        return NcPoly(self.g, {reverse(w): c for w, c in self._terms.items()})

    @property
    def T(self) -> "NcPoly":
        return self.transpose()

    def is_symmetric(self, tol: float = 0.0) -> bool:
        if tol == 0.0:
            return self.transpose() == self
        return (self - self.transpose()).max_abs_coeff() <= tol

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> "NcPoly":
        if isinstance(other, NcPoly):
            if other.g != self.g:
                raise InputError(f"mismatched g: {self.g} vs {other.g}")
            return other
        if isinstance(other, Real):
            return NcPoly.constant(self.g, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        acc = dict(self._terms)
        for w, c in other._terms.items():
            acc[w] = acc.get(w, 0.0) + c
        return NcPoly(self.g, acc)

    __radd__ = __add__

    def __neg__(self):
        return NcPoly(self.g, {w: -c for w, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, a: Scalar) -> "NcPoly":
        a = float(a)
        if a == 0.0:
            return NcPoly.zero(self.g)
        return NcPoly(self.g, {w: a * c for w, c in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, Real):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        acc: dict[Word, float] = {}
        for w1, c1 in self._terms.items():
            for w2, c2 in other._terms.items():
                w = w1 + w2
                acc[w] = acc.get(w, 0.0) + c1 * c2
        return NcPoly(self.g, acc)

    def __rmul__(self, other):
        if isinstance(other, Real):
            return self.scale(other)
        return NotImplemented

    def __truediv__(self, a):
        if isinstance(a, Real):
            return self.scale(1.0 / a)
        return NotImplemented

    def __pow__(self, k: int) -> "NcPoly":
        if not isinstance(k, int) or k < 0:
            raise InputError("exponent must be a nonnegative integer")
        out = NcPoly.constant(self.g, 1.0)
        for _ in range(k):
            out = out * self
        return out

    def map_words(self, f) -> "NcPoly":
        """Apply ``f: Word -> Iterable[(Word, coeff)]`` termwise and sum."""
        acc: dict[Word, float] = {}
        for w, c in self._terms.items():
            for w2, c2 in f(w):
                acc[w2] = acc.get(w2, 0.0) + c * c2
        return NcPoly(self.g, acc)

    # -- comparison ---------------------------------------------------------

    def __eq__(self, other) -> bool:
        if isinstance(other, Real):
            other = NcPoly.constant(self.g, other)
        if not isinstance(other, NcPoly):
            return NotImplemented
        return self.g == other.g and self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.g, frozenset(self._terms.items())))
        return self._hash

    def allclose(self, other: "NcPoly", tol: float = 1e-12) -> bool:
        return (self - other).max_abs_coeff() <= tol

    # -- printing -----------------------------------------------------------

    def to_string(self) -> str:
        if not self._terms:
            return "0"
        out = []
        for i, (w, c) in enumerate(self.items()):
            sign = "-" if c < 0 else "+"
            a = abs(c)
            if not w:
                body = _format_coeff(a)
            elif a == 1.0:
                body = word_to_string(w)
            else:
                body = f"{_format_coeff(a)}*{word_to_string(w)}"
            if i == 0:
                out.append(body if sign == "+" else f"-{body}")
            else:
                out.append(f" {sign} {body}")
        return "".join(out)

    __str__ = to_string

    def __repr__(self) -> str:
        return f"NcPoly(g={self.g}, {self.to_string()!r})"


def transpose(p: NcPoly) -> NcPoly:
    return p.transpose()


def is_symmetric(p: NcPoly) -> bool:
    return p.is_symmetric()


def degree(p: NcPoly) -> int:
    return p.degree


def h_degree_profile(p: NcPoly) -> dict:
    return p.profile()


def poly_arith(p: NcPoly, q, op: str) -> NcPoly:
    """Dispatch ``add|sub|mul|scale|pow``; ``q`` is a scalar for the last two."""
    if op == "add":
        return p + q
    if op == "sub":
        return p - q
    if op == "mul":
        return p * q
    if op == "scale":
        return p.scale(q)
    if op == "pow":
        return p ** q
    raise InputError(f"unknown operation {op!r}")


# -- parser -------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<var>[a-zA-Z]+)(?P<idx>\d*)"
    r"|(?P<op>[-+*^()'])"
    r")"
)


class _Parser:
    def __init__(self, text: str, g: int, letters: str):
        self.text = text
        self.g = g
        self.letters = letters
        self.tokens = self._tokenize(text)
        self.i = 0

    def _tokenize(self, text):
        toks = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                raise ParseError("unexpected character", text, pos)
            start = m.end() - len(m.group().lstrip())
            if m.group("num") is not None:
                toks.append(("num", m.group("num"), start))
            elif m.group("var") is not None:
                toks.append(("var", (m.group("var"), m.group("idx")), start))
            else:
                toks.append(("op", m.group("op"), start))
            pos = m.end()
        toks.append(("end", None, len(text)))
        return toks

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, op):
        t = self.take()
        if t[0] != "op" or t[1] != op:
            raise ParseError(f"expected {op!r}", self.text, t[2])

    def parse(self) -> NcPoly:
        p = self.expr()
        t = self.peek()
        if t[0] != "end":
            raise ParseError("unexpected token", self.text, t[2])
        return p

    def expr(self) -> NcPoly:
        t = self.peek()
        neg = False
        if t[0] == "op" and t[1] in "+-":
            self.take()
            neg = t[1] == "-"
        p = self.term()
        if neg:
            p = -p
        while True:
            t = self.peek()
            if t[0] == "op" and t[1] in "+-":
                self.take()
                q = self.term()
                p = p + q if t[1] == "+" else p - q
            else:
                return p

    def term(self) -> NcPoly:
        p = self.factor()
        while True:
            t = self.peek()
            if t[0] == "op" and t[1] == "*":
                self.take()
                p = p * self.factor()
            else:
                return p

    def factor(self) -> NcPoly:
        p = self.primary()
        while True:
            t = self.peek()
            if t[0] == "op" and t[1] == "^":
                self.take()
                e = self.take()
                if e[0] != "num" or not e[1].isdigit():
                    raise ParseError("exponent must be an unsigned integer", self.text, e[2])
                p = p ** int(e[1])
            elif t[0] == "op" and t[1] == "'":
                self.take()
                p = p.transpose()
            else:
                return p

    def primary(self) -> NcPoly:
        t = self.take()
        kind, val, pos = t
        if kind == "num":
            return NcPoly.constant(self.g, float(val))
        if kind == "var":
            name, idx = val
            if len(name) != 1 or name not in CLASS_NAMES:
                raise ParseError(f"unknown symbol {name + idx!r}", self.text, pos)
            if name not in self.letters:
                raise ParseError(f"letter class {name!r} not enabled", self.text, pos)
            if not idx:
                raise ParseError("variable needs an index", self.text, pos)
            i = int(idx)
            if not 1 <= i <= self.g:
                raise ParseError(f"index {i} out of range 1..{self.g}", self.text, pos)
            return NcPoly.letter(self.g, i, CLASS_NAMES.index(name))
        if kind == "op" and val == "(":
            p = self.expr()
            self.expect(")")
            return p
        raise ParseError("expected a number, variable or '('", self.text, pos)


def parse(text: str, g: int, letters: str = "x") -> NcPoly:
    """Parse an expression such as ``"3*x1*x2^3 + x2 + x3*x1*x2"``.

    ``letters`` lists the enabled letter classes; pass ``"xh"`` to allow
    direction letters and ``"xhk"`` for mixed forms.
    """
    if g < 1:
        raise InputError("g must be at least 1")
    return _Parser(text, g, letters).parse()
