"""Small exact integer linear algebra: determinants, inverses, row HNF.

Matrices are lists of lists (or tuples) of Python ints; everything is exact.
Sizes in this project stay in the low tens, so simplicity wins over asymptotics.
"""

from __future__ import annotations

from fractions import Fraction


Mat = list[list[int]]


def identity_matrix(n: int) -> Mat:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def mat_mul(a, b) -> Mat:
    rows, inner, cols = len(a), len(b), len(b[0]) if b else 0
    out = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        ai = a[i]
        for k in range(inner):
            x = ai[k]
            if x:
                bk = b[k]
                row = out[i]
                for j in range(cols):
                    row[j] += x * bk[j]
    return out


def vec_mat(v, m) -> list[int]:
    cols = len(m[0]) if m else 0
    out = [0] * cols
    for k, x in enumerate(v):
        if x:
            row = m[k]
            for j in range(cols):
                out[j] += x * row[j]
    return out


def det(mat) -> int:
    """Bareiss fraction-free determinant."""
    n = len(mat)
    if n == 0:
        return 1
    a = [list(map(int, row)) for row in mat]
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            a[i][k] = 0
        prev = a[k][k]
    return sign * a[-1][-1]


def inv_rational(mat) -> list[list[Fraction]]:
    """Exact inverse over Q (raises ZeroDivisionError on singular input)."""
    n = len(mat)
    a = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(mat)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        a[col], a[piv] = a[piv], a[col]
        inv = 1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]


def inv_unimodular(mat) -> Mat:
    """Integer inverse of a unimodular matrix (checked)."""
    d = det(mat)
    if d not in (1, -1):
        raise ValueError(f"matrix is not unimodular (det {d})")
    inv = inv_rational(mat)
    out = []
    for row in inv:
        irow = []
        for x in row:
            assert x.denominator == 1
            irow.append(x.numerator)
        out.append(irow)
    return out


def inv_scaled(mat) -> tuple[Mat, int]:
    """(S, d) with mat @ S = d * I, S integral, d > 0 (the denominator lcm)."""
    inv = inv_rational(mat)
    d = 1
    for row in inv:
        for x in row:
            g = _gcd(d, x.denominator)
            d = d // g * x.denominator
    s = [[int(x.numerator * (d // x.denominator)) for x in row] for row in inv]
    return s, d


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def solve_integer(mat, rhs) -> list[int] | None:
    """Solve x * mat = rhs over Z for square invertible mat; None if the
    rational solution is not integral."""
    s, d = inv_scaled(mat)
    return solve_integer_scaled(s, d, rhs)


def solve_integer_scaled(s: Mat, d: int, rhs) -> list[int] | None:
    """Solve x * mat = rhs given (S, d) from inv_scaled(mat): x = rhs @ S / d."""
    n = len(s)
    sol = []
    for i in range(n):
        acc = 0
        for j, w in enumerate(rhs):
            if w:
                acc += w * s[j][i]
        if acc % d:
            return None
        sol.append(acc // d)
    return sol


def hnf(mat) -> tuple[Mat, Mat]:
    """Row Hermite normal form H = U * mat with U unimodular.

    H is in row-echelon form with positive pivots and entries above each
    pivot reduced into [0, pivot).  Zero rows sink to the bottom.
    """
    rows = [list(map(int, r)) for r in mat]
    m = len(rows)
    n = len(rows[0]) if m else 0
    u = identity_matrix(m)
    r = 0
    for c in range(n):
        piv = None
        for i in range(r, m):
            if rows[i][c] != 0 and (piv is None or abs(rows[i][c]) < abs(rows[piv][c])):
                piv = i
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        u[r], u[piv] = u[piv], u[r]
        # clear below the pivot by gcd steps
        while True:
            done = True
            for i in range(r + 1, m):
                if rows[i][c] == 0:
                    continue
                q = rows[i][c] // rows[r][c]
                rows[i] = [x - q * y for x, y in zip(rows[i], rows[r])]
                u[i] = [x - q * y for x, y in zip(u[i], u[r])]
                if rows[i][c] != 0:
                    rows[r], rows[i] = rows[i], rows[r]
                    u[r], u[i] = u[i], u[r]
                    done = False
            if done:
                break
        if rows[r][c] < 0:
            rows[r] = [-x for x in rows[r]]
            u[r] = [-x for x in u[r]]
        for i in range(r):
            q = rows[i][c] // rows[r][c]
            if q:
                rows[i] = [x - q * y for x, y in zip(rows[i], rows[r])]
                u[i] = [x - q * y for x, y in zip(u[i], u[r])]
        r += 1
    return rows, u
