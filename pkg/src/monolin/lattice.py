"""Fixed-field generators of a diagonal abelian action via integer lattices.

A diagonal action is a character matrix: row i gives, for each variable, the
exponent of the acting root for generator i (modulo that generator's order).
The invariant Laurent monomials form a full-rank sublattice of Z^n; its row
Hermite normal form is the canonical basis, and the n basis monomials generate
the fixed field.  `brute_check` is the independent enumeration oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import intlinalg


@dataclass(frozen=True)
class DiagonalAction:
    orders: tuple[int, ...]                 # per abelian generator
    chars: tuple[tuple[int, ...], ...]      # rows per generator, one column per variable
    var_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.chars) != len(self.orders):
            raise ValueError("one character row per generator required")
        n = self.nvars
        reduced = []
        for row, order in zip(self.chars, self.orders):
            if len(row) != n:
                raise ValueError("ragged character matrix")
            reduced.append(tuple(x % order for x in row))
        object.__setattr__(self, "chars", tuple(reduced))

    @property
    def nvars(self) -> int:
        return len(self.chars[0]) if self.chars else (
            len(self.var_names) if self.var_names else 0
        )


@dataclass(frozen=True)
class LatticeBasis:
    rows: tuple[tuple[int, ...], ...]
    det: int


def hnf(mat) -> tuple[list[list[int]], list[list[int]]]:
    """Row Hermite normal form (H, U) with U * mat = H, det U = +-1."""
    return intlinalg.hnf(mat)


def invariant_lattice(action: DiagonalAction) -> LatticeBasis:
    """HNF basis of {m in Z^n : chars . m = 0 (mod orders)}.

    Computed as the projection of the integer left-kernel of the stacked
    matrix [chars^T ; diag(orders)]; the determinant of the basis equals the
    order of the image of the character map.
    """
    g = len(action.orders)
    n = action.nvars
    if n == 0:
        return LatticeBasis(rows=(), det=1)
    if g == 0:
        return LatticeBasis(
            rows=tuple(tuple(int(i == j) for j in range(n)) for i in range(n)),
            det=1,
        )
    stacked = [[action.chars[i][j] for i in range(g)] for j in range(n)]
    stacked += [
        [action.orders[i] if k == i else 0 for i in range(g)] for k in range(g)
    ]
    h, u = intlinalg.hnf(stacked)
    kernel_rows = [u[r][:n] for r in range(len(h)) if not any(h[r])]
    if len(kernel_rows) != n:
        raise AssertionError("kernel projection is not full rank")
    basis, _ = intlinalg.hnf(kernel_rows)
    rows = tuple(tuple(r) for r in basis)
    d = 1
    for i in range(n):
        d *= rows[i][i]
    return LatticeBasis(rows=rows, det=d)


def fixed_generators(action: DiagonalAction) -> list[tuple[int, ...]]:
    """The n basis monomials (exponent rows) of the fixed field; each is
    verified invariant exactly."""
    basis = invariant_lattice(action)
    for row in basis.rows:
        for crow, order in zip(action.chars, action.orders):
            if sum(c * m for c, m in zip(crow, row)) % order:
                raise AssertionError("basis monomial is not invariant")
    return [tuple(r) for r in basis.rows]


def format_monomial(exps: tuple[int, ...], names: tuple[str, ...] | None = None) -> str:
    if names is None:
        names = tuple(f"y{i + 1}" for i in range(len(exps)))
    parts = []
    for name, e in zip(names, exps):
        if e == 0:
            continue
        parts.append(name if e == 1 else f"{name}^{e}")
    return "*".join(parts) if parts else "1"


@dataclass(frozen=True)
class BruteReport:
    box: int
    points_checked: int
    invariants_found: int


class LatticeCounterexample(AssertionError):
    pass


def brute_check(
    gens: list[tuple[int, ...]], action: DiagonalAction, box: int = 4
) -> BruteReport:
    """Enumerate every exponent vector in [-box, box]^n; each invariant one
    must be an integer combination of the basis rows, and each basis row must
    be invariant.  Fatal on any counterexample."""
    n = action.nvars
    orders = np.array(action.orders, dtype=np.int64)
    chars = np.array(action.chars, dtype=np.int64).reshape(len(action.orders), n)

    basis = np.array(gens, dtype=np.int64).reshape(n, n)
    for row in gens:
        for crow, order in zip(action.chars, action.orders):
            if sum(c * m for c, m in zip(crow, row)) % order:
                raise LatticeCounterexample(f"basis monomial {row} is not invariant")

    grids = np.meshgrid(*([np.arange(-box, box + 1)] * n), indexing="ij")
    points = np.stack([g.ravel() for g in grids]).astype(np.int64)  # n x B
    vals = (chars @ points) % orders[:, None]
    invariant = ~np.any(vals, axis=0)
    inv_points = points[:, invariant].T  # rows are invariant exponent vectors

    # membership: solve m = z . basis by forward substitution (basis is HNF)
    found = 0
    for m in inv_points:
        z = _in_row_span(m, basis)
        if z is None:
            raise LatticeCounterexample(
                f"invariant monomial {tuple(int(x) for x in m)} is outside the basis span"
            )
        found += 1
    return BruteReport(box=box, points_checked=points.shape[1], invariants_found=found)


def _in_row_span(m: np.ndarray, basis: np.ndarray) -> list[int] | None:
    n = len(m)
    rem = [int(x) for x in m]
    coeffs = []
    for i in range(n):
        piv = int(basis[i][i])
        if piv == 0:
            if rem[i]:
                return None
            coeffs.append(0)
            continue
        if rem[i] % piv:
            return None
        z = rem[i] // piv
        coeffs.append(z)
        if z:
            for j in range(i, n):
                rem[j] -= z * int(basis[i][j])
    return coeffs if not any(rem) else None


def image_order_by_enumeration(action: DiagonalAction) -> int:
    """|image of the character map|, by BFS over the generated subgroup of
    the product of cyclic groups.  Independent oracle for det(HNF)."""
    orders = action.orders
    n = action.nvars
    cols = [tuple(action.chars[i][j] % orders[i] for i in range(len(orders)))
            for j in range(n)]
    zero = tuple(0 for _ in orders)
    seen = {zero}
    frontier = [zero]
    while frontier:
        nxt = []
        for x in frontier:
            for col in cols:
                y = tuple((a + b) % o for a, b, o in zip(x, col, orders))
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return len(seen)


def kernel_order_by_enumeration(action: DiagonalAction) -> int:
    """Order of the kernel of the pairing on the generator side: tuples t with
    sum_i t_i * chars[i][j] = 0 (mod lcm-lifted orders) for every variable j."""
    orders = action.orders
    total = 1
    for o in orders:
        total *= o
    if total > 10**6:
        raise ValueError("generator group too large to enumerate")
    n = action.nvars
    count = 0
    idx = [0] * len(orders)
    while True:
        ok = True
        for j in range(n):
            acc = 0.0
            frac = 0
            # exact test over Q/Z with denominator lcm of orders
            lcm = 1
            for o in orders:
                lcm = lcm * o // _gcd(lcm, o)
            frac = sum(
                idx[i] * action.chars[i][j] * (lcm // orders[i])
                for i in range(len(orders))
            )
            if frac % lcm:
                ok = False
                break
        if ok:
            count += 1
        # odometer
        i = len(orders) - 1
        while i >= 0:
            idx[i] += 1
            if idx[i] < orders[i]:
                break
            idx[i] = 0
            i -= 1
        if i < 0:
            break
    return count


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a
