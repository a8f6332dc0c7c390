"""Straight-line programs over rational/root constants, and randomized
identity testing of the rational functions they compute.

Programs are immutable DAGs built with operator overloading.  Evaluation is
over F_q through an FFEmbedding; a zero denominator raises Pole and the test
point is resampled without consuming a trial.  Degree bounds (numerator,
denominator) propagate structurally and feed the reported error bound.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction

from .cyclotomic import FFEmbedding, Root


class Pole(ArithmeticError):
    """Evaluation hit a zero denominator."""


class ResampleBudgetExceeded(RuntimeError):
    """Too many consecutive evaluation points hit poles."""


_ids = itertools.count()


class Expr:
    """One SLP node; sharing subexpressions shares nodes."""

    __slots__ = ("op", "args", "payload", "_id")

    def __init__(self, op: str, args: tuple["Expr", ...] = (), payload=None):
        self.op = op
        self.args = args
        self.payload = payload
        self._id = next(_ids)

    # -- construction -------------------------------------------------------

    @staticmethod
    def var(name: str) -> "Expr":
        return Expr("var", payload=name)

    @staticmethod
    def const(value: Fraction | int | Root) -> "Expr":
        if isinstance(value, int):
            value = Fraction(value)
        return Expr("const", payload=value)

    def __add__(self, other: "Expr") -> "Expr":
        return Expr("add", (self, _coerce(other)))

    def __sub__(self, other: "Expr") -> "Expr":
        return Expr("sub", (self, _coerce(other)))

    def __mul__(self, other: "Expr") -> "Expr":
        return Expr("mul", (self, _coerce(other)))

    def __truediv__(self, other: "Expr") -> "Expr":
        return Expr("div", (self, _coerce(other)))

    def __pow__(self, n: int) -> "Expr":
        return Expr("pow", (self,), payload=int(n))

    # -- analysis ------------------------------------------------------------

    def variables(self) -> set[str]:
        out: set[str] = set()
        seen: set[int] = set()
        stack = [self]
        while stack:
            node = stack.pop()
            if node._id in seen:
                continue
            seen.add(node._id)
            if node.op == "var":
                out.add(node.payload)
            stack.extend(node.args)
        return out

    def degree_bound(self, memo: dict[int, tuple[int, int]] | None = None) -> tuple[int, int]:
        """(numerator, denominator) total-degree bounds."""
        if memo is None:
            memo = {}
        got = memo.get(self._id)
        if got is not None:
            return got
        if self.op == "var":
            res = (1, 0)
        elif self.op == "const":
            res = (0, 0)
        elif self.op in ("add", "sub"):
            (n1, d1) = self.args[0].degree_bound(memo)
            (n2, d2) = self.args[1].degree_bound(memo)
            res = (max(n1 + d2, n2 + d1), d1 + d2)
        elif self.op == "mul":
            (n1, d1) = self.args[0].degree_bound(memo)
            (n2, d2) = self.args[1].degree_bound(memo)
            res = (n1 + n2, d1 + d2)
        elif self.op == "div":
            (n1, d1) = self.args[0].degree_bound(memo)
            (n2, d2) = self.args[1].degree_bound(memo)
            res = (n1 + d2, d1 + n2)
        elif self.op == "pow":
            (n1, d1) = self.args[0].degree_bound(memo)
            k = self.payload
            res = (n1 * k, d1 * k) if k >= 0 else (d1 * -k, n1 * -k)
        else:  # pragma: no cover
            raise AssertionError(self.op)
        memo[self._id] = res
        return res

    def evaluate(
        self,
        point: dict[str, int],
        embedding: FFEmbedding,
        memo: dict[int, int] | None = None,
    ) -> int:
        """Value in F_q; raises Pole on zero denominators."""
        if memo is None:
            memo = {}
        got = memo.get(self._id)
        if got is not None:
            return got
        q = embedding.q
        if self.op == "var":
            res = point[self.payload] % q
        elif self.op == "const":
            c = self.payload
            res = (
                embedding.embed_root(c)
                if isinstance(c, Root)
                else embedding.embed_fraction(c)
            )
        elif self.op == "add":
            res = (self.args[0].evaluate(point, embedding, memo)
                   + self.args[1].evaluate(point, embedding, memo)) % q
        elif self.op == "sub":
            res = (self.args[0].evaluate(point, embedding, memo)
                   - self.args[1].evaluate(point, embedding, memo)) % q
        elif self.op == "mul":
            res = (self.args[0].evaluate(point, embedding, memo)
                   * self.args[1].evaluate(point, embedding, memo)) % q
        elif self.op == "div":
            den = self.args[1].evaluate(point, embedding, memo)
            if den == 0:
                raise Pole()
            res = (self.args[0].evaluate(point, embedding, memo)
                   * pow(den, -1, q)) % q
        elif self.op == "pow":
            base = self.args[0].evaluate(point, embedding, memo)
            k = self.payload
            if k < 0:
                if base == 0:
                    raise Pole()
                base = pow(base, -1, q)
                k = -k
            res = pow(base, k, q)
        else:  # pragma: no cover
            raise AssertionError(self.op)
        memo[self._id] = res
        return res

    def substitute(self, mapping: dict[str, "Expr"]) -> "Expr":
        """Structural substitution of variables by expressions."""
        cache: dict[int, Expr] = {}

        def walk(node: Expr) -> Expr:
            got = cache.get(node._id)
            if got is not None:
                return got
            if node.op == "var":
                res = mapping.get(node.payload, node)
            elif node.op == "const":
                res = node
            else:
                res = Expr(node.op, tuple(walk(a) for a in node.args), node.payload)
            cache[node._id] = res
            return res

        return walk(self)


def _coerce(x) -> Expr:
    if isinstance(x, Expr):
        return x
    return Expr.const(x)


def product(exprs: list[Expr]) -> Expr:
    acc = exprs[0]
    for e in exprs[1:]:
        acc = acc * e
    return acc


@dataclass(frozen=True)
class PitVerdict:
    outcome: str  # "equal" | "unequal" | "inconclusive"
    trials: int
    per_trial_bound: Fraction
    total_bound: Fraction
    witness: dict[str, int] | None = None


def pit_equal(
    a: Expr,
    b: Expr,
    embedding: FFEmbedding,
    trials: int = 3,
    seed: int = 0,
    resample_budget: int = 200,
) -> PitVerdict:
    """Test a = b as rational functions by evaluation at uniform points of F_q.

    Poles trigger resampling without consuming a trial.  An `equal` verdict
    carries error bound ((d_a + d_b)/q)^trials where d_x bounds the total
    degree of x's numerator plus denominator.
    """
    names = sorted(a.variables() | b.variables())
    na, da = a.degree_bound()
    nb, db = b.degree_bound()
    d = (na + da) + (nb + db)
    q = embedding.q
    if d >= q:
        raise ValueError(f"field size {q} is below the degree bound {d}")
    per_trial = Fraction(d, q)
    rng = random.Random(seed)

    done = 0
    resamples = 0
    while done < trials:
        point = {nm: rng.randrange(q) for nm in names}
        try:
            va = a.evaluate(point, embedding)
            vb = b.evaluate(point, embedding)
        except Pole:
            resamples += 1
            if resamples > resample_budget:
                raise ResampleBudgetExceeded(
                    f"{resamples} consecutive pole hits; denominators look degenerate"
                )
            continue
        resamples = 0
        if va != vb:
            return PitVerdict(
                outcome="unequal",
                trials=done + 1,
                per_trial_bound=per_trial,
                total_bound=Fraction(0),
                witness=point,
            )
        done += 1
    return PitVerdict(
        outcome="equal",
        trials=trials,
        per_trial_bound=per_trial,
        total_bound=per_trial**trials,
    )
