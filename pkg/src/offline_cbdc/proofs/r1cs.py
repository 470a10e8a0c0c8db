"""Rank-1 constraint systems with witness values computed during synthesis.

Variable 0 is the constant one, variables ``1..num_public`` are the public
inputs, everything after is private. Linear combinations carry their current
value so gadgets can compute witnesses while they emit constraints; the same
synthesis code therefore serves key generation, proving and debugging.
"""

from __future__ import annotations

import hashlib
from contextlib import contextmanager

from ..crypto.field import P


class LC:
    """Linear combination sum(coeff * var) with its value under the current assignment."""

    __slots__ = ("terms", "value")

    def __init__(self, terms: dict[int, int], value: int):
        self.terms = terms
        self.value = value % P

    @classmethod
    def const(cls, c: int) -> "LC":
        c %= P
        return cls({0: c} if c else {}, c)

    def is_const(self) -> bool:
        return all(k == 0 for k in self.terms)

    def _combine(self, other, sign: int) -> "LC":
        if not isinstance(other, LC):
            other = LC.const(other)
        terms = dict(self.terms)
        for k, c in other.terms.items():
            v = (terms.get(k, 0) + sign * c) % P
            if v:
                terms[k] = v
            else:
                terms.pop(k, None)
        return LC(terms, self.value + sign * other.value)

    def __add__(self, other) -> "LC":
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other) -> "LC":
        return self._combine(other, -1)

    def __rsub__(self, other) -> "LC":
        return LC.const(other)._combine(self, -1)

    def __neg__(self) -> "LC":
        return LC({k: (-c) % P for k, c in self.terms.items()}, -self.value)

    def scale(self, k: int) -> "LC":
        k %= P
        if k == 0:
            return LC({}, 0)
        return LC({v: c * k % P for v, c in self.terms.items()}, self.value * k)

    def __repr__(self) -> str:
        return f"LC(value={self.value}, terms={len(self.terms)})"


class ConstraintSystem:
    def __init__(self) -> None:
        self.values: list[int] = [1]
        self.num_public = 0
        self.a: list[dict[int, int]] = []
        self.b: list[dict[int, int]] = []
        self.c: list[dict[int, int]] = []
        self.labels: list[int] = []
        self.label_names: list[str] = [""]
        self._label_stack: list[int] = [0]

    # -- variables -------------------------------------------------------

    @property
    def num_vars(self) -> int:
        return len(self.values)

    def public_input(self, value: int) -> LC:
        if self.num_public != len(self.values) - 1:
            raise RuntimeError("public inputs must be allocated before private variables")
        self.num_public += 1
        return self._alloc(value)

    def witness(self, value: int) -> LC:
        return self._alloc(value)

    def _alloc(self, value: int) -> LC:
        idx = len(self.values)
        self.values.append(value % P)
        return LC({idx: 1}, value)

    # -- constraints -----------------------------------------------------

    @contextmanager
    def scope(self, label: str):
        try:
            idx = self.label_names.index(label)
        except ValueError:
            idx = len(self.label_names)
            self.label_names.append(label)
        self._label_stack.append(idx)
        try:
            yield
        finally:
            self._label_stack.pop()

    def enforce(self, a: LC, b: LC, c: LC) -> None:
        self.a.append(a.terms)
        self.b.append(b.terms)
        self.c.append(c.terms)
        self.labels.append(self._label_stack[-1])

    def enforce_equal(self, x: LC, y: LC) -> None:
        self.enforce(x - y, LC.const(1), LC.const(0))

    def mul(self, x: LC, y: LC) -> LC:
        """x*y as a new variable; free when either side is a constant."""
        if x.is_const():
            return y.scale(x.value)
        if y.is_const():
            return x.scale(y.value)
        out = self.witness(x.value * y.value)
        self.enforce(x, y, out)
        return out

    def div(self, num: LC, den: LC) -> LC:
        """num/den as a new variable (zero when den is zero, which leaves the constraint unmet)."""
        dv = den.value
        q = num.value * pow(dv, P - 2, P) if dv else 0
        if den.is_const():
            return num.scale(pow(dv, P - 2, P)) if dv else LC.const(0)
        out = self.witness(q)
        self.enforce(out, den, num)
        return out

    # -- inspection ------------------------------------------------------

    @property
    def num_constraints(self) -> int:
        return len(self.a)

    def _eval(self, terms: dict[int, int]) -> int:
        vals = self.values
        return sum(c * vals[k] for k, c in terms.items()) % P

    def failing_constraints(self) -> list[int]:
        out = []
        for i, (a, b, c) in enumerate(zip(self.a, self.b, self.c)):
            if self._eval(a) * self._eval(b) % P != self._eval(c):
                out.append(i)
        return out

    def unsatisfied_labels(self) -> list[str]:
        """Labels of failing constraints, each once, in emission order."""
        seen: list[str] = []
        for i in self.failing_constraints():
            name = self.label_names[self.labels[i]]
            if name not in seen:
                seen.append(name)
        return seen

    def is_satisfied(self) -> bool:
        return not self.failing_constraints()

    def public_values(self) -> list[int]:
        return self.values[1 : 1 + self.num_public]

    def digest(self) -> bytes:
        """Hash of the constraint structure (not the assignment)."""
        h = hashlib.sha256()
        h.update(b"%d/%d/%d;" % (self.num_public, self.num_vars, self.num_constraints))
        for row in zip(self.a, self.b, self.c):
            for terms in row:
                h.update(repr(sorted(terms.items())).encode())
                h.update(b"|")
        return h.digest()
