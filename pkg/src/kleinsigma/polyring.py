"""Exact multivariate polynomials over the rationals and curve normal forms.

``MultiPoly`` is a sparse dict from exponent tuples to ``Fraction``.  The
variable set is an explicit tuple of names so that polynomials in several
point copies (``x_1, y7_1, x_2, ...``) can live side by side.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product
from numbers import Number, Rational

import numpy as np

from .errors import UnboundVariable


def _frac(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError(f"coefficient {c!r} is not an exact rational")


class MultiPoly:
    """Sparse polynomial with exact rational coefficients."""

    __slots__ = ("vars", "terms", "_hash")

    def __init__(self, variables, terms=None):
        self.vars = tuple(variables)
        clean = {}
        for mono, c in (terms or {}).items():
            if len(mono) != len(self.vars):
                raise ValueError("exponent tuple does not match variables")
            c = _frac(c)
            if c:
                clean[tuple(int(e) for e in mono)] = c
        self.terms = clean
        self._hash = None

    # construction helpers -------------------------------------------------
    @classmethod
    def const(cls, variables, c) -> MultiPoly:
        return cls(variables, {(0,) * len(variables): c})

    @classmethod
    def var(cls, variables, name) -> MultiPoly:
        variables = tuple(variables)
        mono = [0] * len(variables)
        mono[variables.index(name)] = 1
        return cls(variables, {tuple(mono): 1})

    @classmethod
    def monomial(cls, variables, exps: dict, c=1) -> MultiPoly:
        variables = tuple(variables)
        mono = [0] * len(variables)
        for name, e in exps.items():
            mono[variables.index(name)] = e
        return cls(variables, {tuple(mono): c})

    @classmethod
    def univariate(cls, variables, name, coeffs) -> MultiPoly:
        """``sum coeffs[k] * name**k`` (coefficients in ascending order)."""
        variables = tuple(variables)
        i = variables.index(name)
        terms = {}
        for k, c in enumerate(coeffs):
            mono = [0] * len(variables)
            mono[i] = k
            terms[tuple(mono)] = c
        return cls(variables, terms)

    @classmethod
    def parse(cls, text: str, variables) -> MultiPoly:
        """Parse ``"y7^2*y8 - 3/2*x"`` style input (sympy does the parsing)."""
        import sympy

        variables = tuple(variables)
        syms = sympy.symbols(variables)
        local = dict(zip(variables, syms))
        expr = sympy.sympify(text.replace("^", "**"), locals=local)
        free = {str(s) for s in expr.free_symbols}
        unknown = free - set(variables)
        if unknown:
            raise UnboundVariable(f"unknown variables {sorted(unknown)}")
        poly = sympy.Poly(sympy.expand(expr), *syms, domain="QQ")
        terms = {m: Fraction(int(c.p), int(c.q)) for m, c in poly.as_dict().items()}
        return cls(variables, terms)

    # basic protocol -------------------------------------------------------
    def _coerce(self, other) -> MultiPoly:
        if isinstance(other, MultiPoly):
            if other.vars != self.vars:
                raise ValueError(f"variable mismatch {self.vars} vs {other.vars}")
            return other
        return MultiPoly.const(self.vars, other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return MultiPoly(self.vars, out)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.vars, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, MultiPoly):
            c = _frac(other)
            return MultiPoly(self.vars, {m: c * v for m, v in self.terms.items()})
        other = self._coerce(other)
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                out[m] = out.get(m, 0) + c1 * c2
        return MultiPoly(self.vars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        result = MultiPoly.const(self.vars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, Number) and not isinstance(other, MultiPoly):
            other = MultiPoly.const(self.vars, other)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.vars == other.vars and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.vars, frozenset(self.terms.items())))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __repr__(self):
        return f"MultiPoly({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for m in sorted(self.terms, reverse=True):
            c = self.terms[m]
            mono = "*".join(
                v if e == 1 else f"{v}^{e}" for v, e in zip(self.vars, m) if e
            )
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    # structure ------------------------------------------------------------
    def degree(self, name: str) -> int:
        i = self.vars.index(name)
        return max((m[i] for m in self.terms), default=0)

    def variables_used(self) -> set[str]:
        return {v for i, v in enumerate(self.vars) if any(m[i] for m in self.terms)}

    def extend(self, variables) -> MultiPoly:
        """Re-express over a larger (or reordered) variable tuple."""
        variables = tuple(variables)
        idx = [variables.index(v) for v in self.vars]
        out = {}
        for m, c in self.terms.items():
            mono = [0] * len(variables)
            for i, e in zip(idx, m):
                mono[i] = e
            out[tuple(mono)] = c
        for v in self.variables_used():
            if v not in variables:
                raise UnboundVariable(v)
        return MultiPoly(variables, out)

    def rename(self, mapping: dict) -> MultiPoly:
        return MultiPoly(tuple(mapping.get(v, v) for v in self.vars), self.terms)

    def diff(self, name: str) -> MultiPoly:
        i = self.vars.index(name)
        out = {}
        for m, c in self.terms.items():
            if m[i]:
                mono = list(m)
                mono[i] -= 1
                out[tuple(mono)] = c * m[i]
        return MultiPoly(self.vars, out)

    def substitute(self, mapping: dict, variables=None) -> MultiPoly:
        """Replace variables by polynomials over ``variables``.

        Variables missing from ``mapping`` must themselves appear in the
        target variable tuple.
        """
        if variables is None:
            variables = next(iter(mapping.values())).vars if mapping else self.vars
        variables = tuple(variables)
        images = []
        for v in self.vars:
            if v in mapping:
                p = mapping[v]
                images.append(p if isinstance(p, MultiPoly) else MultiPoly.const(variables, p))
            else:
                images.append(MultiPoly.var(variables, v))
        cache: dict = {}

        def power(i, e):
            key = (i, e)
            if key not in cache:
                cache[key] = images[i] ** e
            return cache[key]

        result = MultiPoly(variables)
        for m, c in self.terms.items():
            term = MultiPoly.const(variables, c)
            for i, e in enumerate(m):
                if e:
                    term = term * power(i, e)
            result = result + term
        return result

    def coefficient_in(self, names, mono) -> MultiPoly:
        """Coefficient of a monomial in ``names`` (as polynomial in the rest)."""
        idx = [self.vars.index(n) for n in names]
        out = {}
        for m, c in self.terms.items():
            if all(m[i] == e for i, e in zip(idx, mono)):
                mm = list(m)
                for i in idx:
                    mm[i] = 0
                out[tuple(mm)] = out.get(tuple(mm), 0) + c
        return MultiPoly(self.vars, out)

    def split_by(self, names) -> dict:
        """Group terms by their exponents in ``names``."""
        idx = [self.vars.index(n) for n in names]
        groups: dict = {}
        for m, c in self.terms.items():
            key = tuple(m[i] for i in idx)
            mm = list(m)
            for i in idx:
                mm[i] = 0
            groups.setdefault(key, {})[tuple(mm)] = c
        return {k: MultiPoly(self.vars, v) for k, v in groups.items()}

    # evaluation -------------------------------------------------------------
    def evaluate(self, values: dict):
        """Evaluate at complex numbers (scalars or equally shaped arrays)."""
        used = self.variables_used()
        missing = [v for v in used if v not in values]
        if missing:
            raise UnboundVariable(f"no value for {sorted(missing)}")
        if not self.terms:
            return 0j
        cols = []
        for i, v in enumerate(self.vars):
            top = max(m[i] for m in self.terms)
            if top == 0:
                cols.append(None)
                continue
            z = np.asarray(values[v], dtype=complex)
            pw = [np.ones_like(z), z]
            for _ in range(top - 1):
                pw.append(pw[-1] * z)
            cols.append(pw)
        total = 0j
        for m, c in self.terms.items():
            t = complex(c)
            for i, e in enumerate(m):
                if e:
                    t = t * cols[i][e]
            total = total + t
        return total

    def to_complex_coeffs(self) -> dict:
        return {m: complex(c) for m, c in self.terms.items()}


def univariate_from_roots(variables, name, roots) -> MultiPoly:
    """``prod (name - r)`` with exact rational roots."""
    p = MultiPoly.const(variables, 1)
    xv = MultiPoly.var(variables, name)
    for r in roots:
        p = p * (xv - _frac(r))
    return p


def elementary_symmetric(values) -> list[Fraction]:
    """Coefficients ``lambda_1..lambda_k`` of ``prod (x - b) = x^k + lambda_1 x^(k-1) + ...``."""
    coeffs = [Fraction(1)]
    for b in values:
        b = _frac(b)
        nxt = coeffs + [Fraction(0)]
        for i in range(1, len(nxt)):
            nxt[i] -= b * coeffs[i - 1]
        coeffs = nxt
    return coeffs[1:]


class RewriteSystem:
    """Directed rules ``lead monomial -> replacement`` applied to a fixpoint.

    ``leads`` are exponent tuples over the rewritten variables only; the
    replacement polynomials live over the full variable tuple.
    """

    def __init__(self, variables, rewritten, rules):
        self.vars = tuple(variables)
        self.rewritten = tuple(rewritten)
        self._idx = [self.vars.index(v) for v in self.rewritten]
        self.rules = []
        for lead, repl in rules:
            repl = repl.extend(self.vars) if repl.vars != self.vars else repl
            self.rules.append((tuple(lead), repl))

    def relabel(self, mapping: dict, variables) -> RewriteSystem:
        """The same rules over renamed variables (e.g. a second point copy)."""
        variables = tuple(variables)
        rules = [(lead, repl.rename(mapping).extend(variables)) for lead, repl in self.rules]
        return RewriteSystem(variables, [mapping.get(v, v) for v in self.rewritten], rules)

    def _match(self, mono):
        sub = [mono[i] for i in self._idx]
        for lead, repl in self.rules:
            if all(a >= b for a, b in zip(sub, lead)):
                return lead, repl
        return None

    def reduce(self, p: MultiPoly) -> MultiPoly:
        if p.vars != self.vars:
            p = p.extend(self.vars)
        done: dict = {}
        work = dict(p.terms)
        guard = 0
        while work:
            guard += 1
            if guard > 10**6:
                raise RuntimeError("rewriting did not terminate")
            mono, c = work.popitem()
            hit = self._match(mono)
            if hit is None:
                done[mono] = done.get(mono, 0) + c
                continue
            lead, repl = hit
            rest = list(mono)
            for i, e in zip(self._idx, lead):
                rest[i] -= e
            for m2, c2 in repl.terms.items():
                m = tuple(a + b for a, b in zip(rest, m2))
                work[m] = work.get(m, 0) + c * c2
                if not work[m]:
                    del work[m]
        return MultiPoly(self.vars, done)

    def is_normal(self, p: MultiPoly) -> bool:
        return all(self._match(m) is None for m in p.terms)


def monomial_weight(exps: dict, weights: dict) -> int:
    """Signed pole order at infinity of ``prod v**e`` (negative e allowed)."""
    total = 0
    for v, e in exps.items():
        if v not in weights:
            raise UnboundVariable(v)
        total += weights[v] * e
    return total


def all_monomials(nvars: int, max_degree: int):
    for m in product(range(max_degree + 1), repeat=nvars):
        if sum(m) <= max_degree:
            yield m
