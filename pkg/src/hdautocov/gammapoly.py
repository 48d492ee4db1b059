"""
Formal polynomials in the autocovariance symbols ``G<u>`` and ``G<u>t``.

``G<u>`` stands for the lag-``u`` sample autocovariance and ``G<u>t`` for its
transpose. Text form uses ``*``, ``+``, ``-``, ``/`` (by a number),
parentheses and decimal or integer literals, e.g. ``G1*G1t + G2*G2t`` or
``(G1 + G1t)/2``. Decimal literals parse to exact fractions.
"""

from __future__ import annotations

import re
from fractions import Fraction
from numbers import Number
from typing import Iterable, Mapping

from .errors import ValidationError

__all__ = ["Atom", "GammaPolynomial", "parse_polynomial", "format_coefficient"]

# (lag, star)
Atom = tuple[int, bool]
Word = tuple[Atom, ...]


def _is_zero(c) -> bool:
    return c == 0


class GammaPolynomial:
    """Finite linear combination of words in ``G_u`` and ``G_u*`` with real coefficients."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Word, object] | Iterable[tuple[object, Word]] = ()):
        acc: dict[Word, object] = {}
        items = terms.items() if isinstance(terms, Mapping) else ((w, c) for c, w in terms)
        for word, coef in items:
            # the lag-0 autocovariance is symmetric, so G0t is G0
            word = tuple((int(u), bool(s) and int(u) != 0) for u, s in word)
            for u, _ in word:
                if u < 0:
                    raise ValidationError(f"negative lag {u}")
            acc[word] = acc.get(word, 0) + coef
        self._terms = tuple(sorted(((w, c) for w, c in acc.items() if not _is_zero(c)),
                                   key=lambda wc: (len(wc[0]), wc[0])))
        self._hash = None

    # -- constructors --------------------------------------------------

    @classmethod
    def atom(cls, lag: int, star: bool = False) -> "GammaPolynomial":
        return cls({((lag, star),): 1})

    @classmethod
    def constant(cls, value) -> "GammaPolynomial":
        return cls({(): value})

    @classmethod
    def parse(cls, text: str) -> "GammaPolynomial":
        return parse_polynomial(text)

    # -- structure -----------------------------------------------------

    @property
    def terms(self) -> tuple[tuple[Word, object], ...]:
        return self._terms

    def __iter__(self):
        return iter(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    @property
    def degree(self) -> int:
        return max((len(w) for w, _ in self._terms), default=0)

    def lags(self) -> set[int]:
        return {u for w, _ in self._terms for u, _ in w}

    @property
    def u_max(self) -> int:
        return max(self.lags(), default=0)

    def star(self) -> "GammaPolynomial":
        """Adjoint: reverse every word and swap ``G_u <-> G_u*`` (coefficients are real)."""
        return GammaPolynomial({tuple((u, not s) for u, s in reversed(w)): c for w, c in self._terms})

    def is_symmetric(self) -> bool:
        return self.star() == self

    def map_lags(self, fn) -> "GammaPolynomial":
        return GammaPolynomial({tuple((fn(u), s) for u, s in w): c for w, c in self._terms})

    # -- algebra -------------------------------------------------------

    @staticmethod
    def _coerce(other) -> "GammaPolynomial":
        if isinstance(other, GammaPolynomial):
            return other
        if isinstance(other, Number):
            return GammaPolynomial.constant(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return GammaPolynomial(list((c, w) for w, c in self._terms) + list((c, w) for w, c in other._terms))

    __radd__ = __add__

    def __neg__(self):
        return GammaPolynomial({w: -c for w, c in self._terms})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict[Word, object] = {}
        for w1, c1 in self._terms:
            for w2, c2 in other._terms:
                w = w1 + w2
                out[w] = out.get(w, 0) + c1 * c2
        return GammaPolynomial(out)

    def __rmul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other * self

    def __truediv__(self, other):
        if not isinstance(other, Number):
            return NotImplemented
        if isinstance(other, int):
            other = Fraction(other)
        return GammaPolynomial({w: c / other for w, c in self._terms})

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValidationError(f"polynomial power must be a non-negative integer, got {k!r}")
        result = GammaPolynomial.constant(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, Number):
            other = GammaPolynomial.constant(other)
        if not isinstance(other, GammaPolynomial):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._terms)
        return self._hash

    def __repr__(self):
        return f"GammaPolynomial({str(self)!r})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for w, c in self._terms:
            sign = "-" if c < 0 else "+"
            mag = -c if c < 0 else c
            atoms = "*".join(f"G{u}{'t' if s else ''}" for u, s in w)
            if not atoms:
                body = format_coefficient(mag)
            elif mag == 1:
                body = atoms
            else:
                body = f"{format_coefficient(mag)}*{atoms}"
            parts.append((sign, body))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out


def format_coefficient(c) -> str:
    """Exact text for a coefficient; terminating fractions print as decimals."""
    if isinstance(c, bool):
        c = int(c)
    if isinstance(c, int):
        return str(c)
    if isinstance(c, Fraction):
        if c.denominator == 1:
            return str(c.numerator)
        d = c.denominator
        twos = fives = 0
        while d % 2 == 0:
            d //= 2
            twos += 1
        while d % 5 == 0:
            d //= 5
            fives += 1
        if d == 1:
            digits = max(twos, fives)
            scaled = c * 10 ** digits
            s = str(abs(scaled.numerator)).rjust(digits + 1, "0")
            text = s[:-digits] + "." + s[-digits:]
            return ("-" if c < 0 else "") + text
        return f"{c.numerator}/{c.denominator}"
    return repr(float(c))


_TOKEN = re.compile(r"\s*(?:(?P<atom>G(?P<lag>\d+)(?P<star>t?))|(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|(?P<op>[-+*/()]))")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens: list[tuple[str, object, int]] = []
        pos = 0
        stripped_end = len(text.rstrip())
        while pos < stripped_end:
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                while text[pos].isspace():
                    pos += 1
                raise ValidationError(f"unexpected character {text[pos:pos + 1]!r} at position {pos} in {text!r}")
            start = m.start() + (len(m.group(0)) - len(m.group(0).lstrip()))
            if m.group("atom"):
                self.tokens.append(("atom", (int(m.group("lag")), bool(m.group("star"))), start))
            elif m.group("num"):
                self.tokens.append(("num", Fraction(m.group("num")), start))
            else:
                self.tokens.append(("op", m.group("op"), start))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else ("end", None, len(self.text))

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def error(self, msg: str):
        _, _, pos = self.peek()
        raise ValidationError(f"{msg} at position {pos} in {self.text!r}")

    def parse(self) -> GammaPolynomial:
        if not self.tokens:
            raise ValidationError("empty polynomial expression")
        out = self.expr()
        if self.peek()[0] != "end":
            self.error(f"unexpected token {self.peek()[1]!r}")
        return out

    def expr(self) -> GammaPolynomial:
        out = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def term(self) -> GammaPolynomial:
        out = self.factor()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            rhs = self.factor()
            if op == "*":
                out = out * rhs
            else:
                if rhs.degree != 0 or len(rhs) != 1:
                    self.error("division is only allowed by a nonzero number")
                out = out / rhs.terms[0][1]
        return out

    def factor(self) -> GammaPolynomial:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return -self.factor()
        if kind == "op" and val == "+":
            self.take()
            return self.factor()
        if kind == "num":
            self.take()
            return GammaPolynomial.constant(val)
        if kind == "atom":
            self.take()
            return GammaPolynomial.atom(*val)
        if kind == "op" and val == "(":
            self.take()
            out = self.expr()
            if self.peek()[:2] != ("op", ")"):
                self.error("expected ')'")
            self.take()
            return out
        self.error("expected a number, an atom G<u>/G<u>t or '('")


def parse_polynomial(text: str) -> GammaPolynomial:
    """Parse the text form; errors carry the character position."""
    return _Parser(text).parse()
