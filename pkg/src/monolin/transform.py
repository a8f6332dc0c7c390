"""Invertible changes of variables and their action conjugation.

Four working variants plus one for monomial subfield descent:

  MonomialSub   y_i = scale_i * prod x^{B[i]}, B unimodular (field automorphism)
  RestrictSub   same shape, |det B| > 1: passage to the invariant subfield of a
                diagonal generator; certified against an invariant-lattice HNF
  LinearSub     an invertible matrix over exact cyclotomic numbers acting on
                one block of variables (inverse supplied and checked exactly)
  RatioDrop     a unimodular re-coordinatization followed by discarding fiber
                variables on which every generator acts by survivor-monomial
                scalings (one invariant generator recorded per dropped variable)
  Lemma24Sub    the rational cycle-linearization substitution, verified by
                randomized identity testing

Monomial and linear conjugations are computed exactly in closed form; the
cycle linearization is the one genuinely rational substitution and is checked
by PIT against its claimed diagonal form.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import intlinalg
from .action import GroupAction, MonomialMap, VarImage, VarSpace
from .cyclotomic import CycloField, CycloNum, FFEmbedding, Root
from .slp import Expr, PitVerdict, pit_equal, product


class SubstitutionError(ValueError):
    pass


class ClaimedFormViolation(AssertionError):
    """A conjugated action failed to match its claimed closed form."""


@dataclass(frozen=True)
class MonomialSub:
    in_space: VarSpace
    out_names: tuple[str, ...]
    matrix: tuple[tuple[int, ...], ...]  # rows: out-variable exponents over in-variables
    scales: tuple[Root, ...] | None = None
    origin: str = "monomial"

    def __post_init__(self) -> None:
        n = len(self.in_space)
        if len(self.out_names) != n or any(len(r) != n for r in self.matrix):
            raise SubstitutionError("monomial substitution must be square")

    def out_space(self) -> VarSpace:
        return VarSpace.of(list(self.out_names), origin=self.origin)


@dataclass(frozen=True)
class RestrictSub:
    """Monomial descent to the invariant subfield of one diagonal generator.

    The rows span a finite-index sublattice; `lattice_hnf` is the HNF basis
    of the expected invariant lattice, which the rows must generate exactly."""

    in_space: VarSpace
    out_names: tuple[str, ...]
    matrix: tuple[tuple[int, ...], ...]
    lattice_hnf: tuple[tuple[int, ...], ...]
    origin: str = "restrict"

    def out_space(self) -> VarSpace:
        return VarSpace.of(list(self.out_names), origin=self.origin)


@dataclass(frozen=True)
class LinearSub:
    """Invertible linear change on one block of variables."""

    in_space: VarSpace
    block: tuple[int, ...]                # indices of the transformed variables
    out_block_names: tuple[str, ...]
    fwd: tuple[tuple[CycloNum, ...], ...]   # new = fwd . old (block only)
    inv: tuple[tuple[CycloNum, ...], ...]
    origin: str = "linear"

    def out_space(self) -> VarSpace:
        names = list(self.in_space.names)
        for pos, idx in enumerate(self.block):
            names[idx] = self.out_block_names[pos]
        return VarSpace.of(names, origin=self.origin)


@dataclass(frozen=True)
class RatioDrop:
    """Unimodular re-coordinatization plus a fiber drop of the named outputs."""

    sub: MonomialSub
    dropped: tuple[str, ...]


@dataclass(frozen=True)
class Lemma24Sub:
    """Cycle linearization: n-term product-inverse cycle to a diagonal action."""

    n: int
    xi: Root
    in_names: tuple[str, ...]   # the cycle variables, in cycle order
    out_names: tuple[str, ...]


Substitution = MonomialSub | RestrictSub | LinearSub | RatioDrop | Lemma24Sub


@dataclass(frozen=True)
class ReductionRecord:
    dropped: tuple[str, ...]
    invariants_recorded: int
    reason: str
    fiber_forms: dict[str, dict[str, str]]


# ---------------------------------------------------------------------------
# invertibility certification


def verify_invertible(
    sub: Substitution, embeddings: list[FFEmbedding] | None = None
) -> dict:
    """Certificate fragment for the substitution's invertibility."""
    if isinstance(sub, MonomialSub):
        d = intlinalg.det([list(r) for r in sub.matrix])
        if d not in (1, -1):
            raise SubstitutionError(
                f"monomial substitution is not unimodular (det {d})"
            )
        return {"variant": "monomial", "det": d}
    if isinstance(sub, RestrictSub):
        d = intlinalg.det([list(r) for r in sub.matrix])
        if d == 0:
            raise SubstitutionError("restriction rows are not independent")
        h, _ = intlinalg.hnf([list(r) for r in sub.matrix])
        expected = [list(r) for r in sub.lattice_hnf]
        if h != expected:
            raise ClaimedFormViolation(
                "restriction rows do not generate the expected invariant lattice"
            )
        return {"variant": "restrict", "det": d, "index": abs(d)}
    if isinstance(sub, LinearSub):
        _check_linear_inverse(sub)
        record: dict = {"variant": "linear", "size": len(sub.block)}
        if embeddings:
            for emb in embeddings:
                residue = _det_residue(sub.fwd, emb)
                record.setdefault("det_residues", []).append(
                    {"q": emb.q, "residue": residue}
                )
                if residue != 0:
                    record["nonzero_certified"] = True
                    break
            else:
                raise SubstitutionError(
                    "determinant vanished under every supplied embedding"
                )
        return record
    if isinstance(sub, RatioDrop):
        inner = verify_invertible(sub.sub)
        return {"variant": "ratio-drop", "inner": inner, "dropped": list(sub.dropped)}
    if isinstance(sub, Lemma24Sub):
        return {"variant": "lemma24", "n": sub.n}
    raise TypeError(f"unknown substitution {sub!r}")


def _check_linear_inverse(sub: LinearSub) -> None:
    k = len(sub.block)
    field = sub.fwd[0][0].field
    for i in range(k):
        for j in range(k):
            acc = field.zero()
            for t in range(k):
                acc = acc + sub.fwd[i][t] * sub.inv[t][j]
            expected = field.one() if i == j else field.zero()
            if not (acc - expected).is_zero():
                raise SubstitutionError("supplied linear inverse is wrong")


def _det_residue(mat, emb: FFEmbedding) -> int:
    k = len(mat)
    a = [[emb.embed_cyclo(x) for x in row] for row in mat]
    q = emb.q
    det, sign = 1, 1
    for col in range(k):
        piv = next((r for r in range(col, k) if a[r][col] % q), None)
        if piv is None:
            return 0
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            sign = -sign
        det = det * a[col][col] % q
        inv = pow(a[col][col], -1, q)
        for r in range(col + 1, k):
            f = a[r][col] * inv % q
            if f:
                a[r] = [(x - f * y) % q for x, y in zip(a[r], a[col])]
    return det * sign % q


# ---------------------------------------------------------------------------
# conjugation


def apply_substitution(action: GroupAction, sub: Substitution, **kwargs):
    if isinstance(sub, (MonomialSub, RestrictSub)):
        return _apply_monomial(action, sub)
    if isinstance(sub, LinearSub):
        return _apply_linear(action, sub)
    if isinstance(sub, RatioDrop):
        return drop_fibers(action, sub, **kwargs)
    if isinstance(sub, Lemma24Sub):
        return _apply_lemma24(action, sub, **kwargs)
    raise TypeError(f"unknown substitution {sub!r}")


def _apply_monomial(
    action: GroupAction, sub: MonomialSub | RestrictSub
) -> GroupAction:
    """Exact conjugation by y = scale * x^B: the new image of y_i under g is
    scale and coefficient bookkeeping around exps(B[i] . M_g) rewritten over B."""
    if sub.in_space != action.space:
        raise SubstitutionError("substitution does not match the action's space")
    n = len(action.space)
    b_rows = [list(r) for r in sub.matrix]
    b_inv, b_den = intlinalg.inv_scaled(b_rows)
    scales = (
        list(sub.scales)
        if isinstance(sub, MonomialSub) and sub.scales is not None
        else [Root(action.level, 0)] * n
    )
    out_space = sub.out_space()
    one = Root(action.level, 0)

    new_maps = []
    for gmap in action.gen_maps:
        images = []
        for i in range(n):
            coeff = scales[i]
            w = [0] * n
            for t, m in enumerate(b_rows[i]):
                if m:
                    img = gmap.images[t]
                    coeff = coeff * (img.coeff**m)
                    for j, e in enumerate(img.exps):
                        if e:
                            w[j] += m * e
            z = intlinalg.solve_integer_scaled(b_inv, b_den, w)
            if z is None:
                raise ClaimedFormViolation(
                    f"image of '{sub.out_names[i]}' leaves the substitution lattice"
                )
            for t, zt in enumerate(z):
                if zt:
                    coeff = coeff * (scales[t] ** (-zt))
            images.append(VarImage(coeff if coeff else one, tuple(z)))
        new_maps.append(MonomialMap(out_space, tuple(images)))
    return action.with_maps(tuple(new_maps), out_space)


def _apply_linear(action: GroupAction, sub: LinearSub) -> GroupAction:
    """Sandwich each generator's block action between fwd and inv; the result
    must be recognizable as a monomial map again (single root per row)."""
    if sub.in_space != action.space:
        raise SubstitutionError("substitution does not match the action's space")
    _check_linear_inverse(sub)
    field = sub.fwd[0][0].field
    block = list(sub.block)
    pos_of = {idx: pos for pos, idx in enumerate(block)}
    k = len(block)
    n = len(action.space)
    out_space = sub.out_space()

    new_maps = []
    for gmap in action.gen_maps:
        # block-closure sanity: block variables map to single block variables,
        # non-block variables never reference the block
        gmat = [[field.zero() for _ in range(k)] for _ in range(k)]
        for pos, idx in enumerate(block):
            img = gmap.images[idx]
            nz = [(j, e) for j, e in enumerate(img.exps) if e]
            if len(nz) != 1 or nz[0][1] != 1 or nz[0][0] not in pos_of:
                raise ClaimedFormViolation(
                    "generator does not act linearly within the transformed block"
                )
            gmat[pos][pos_of[nz[0][0]]] = field.from_root(img.coeff)
        for idx in range(n):
            if idx in pos_of:
                continue
            if any(gmap.images[idx].exps[b] for b in block):
                raise ClaimedFormViolation(
                    "a variable outside the block references the block"
                )

        prod = _matmul(field, _matmul(field, sub.fwd, gmat), sub.inv)
        images = list(gmap.images)
        for pos, idx in enumerate(block):
            row = prod[pos]
            nz = [(j, x) for j, x in enumerate(row) if not x.is_zero()]
            if len(nz) != 1:
                raise ClaimedFormViolation(
                    "conjugated block action is not monomial"
                )
            j, val = nz[0]
            root = val.as_root()
            if root is None:
                raise ClaimedFormViolation(
                    "conjugated block coefficient is not a root of unity"
                )
            exps = [0] * n
            exps[block[j]] = 1
            images[idx] = VarImage(root, tuple(exps))
        new_maps.append(MonomialMap(out_space, tuple(images)))
    return action.with_maps(tuple(new_maps), out_space)


def _matmul(field: CycloField, a, b):
    rows, inner, cols = len(a), len(b), len(b[0])
    out = [[field.zero() for _ in range(cols)] for _ in range(rows)]
    for i in range(rows):
        for t in range(inner):
            x = a[i][t]
            if x.is_zero():
                continue
            for j in range(cols):
                y = b[t][j]
                if not y.is_zero():
                    out[i][j] = out[i][j] + x * y
    return out


def dft_linear_sub(
    space: VarSpace,
    block: list[int],
    out_names: list[str],
    field: CycloField,
    xi: Root,
    stride: int,
) -> LinearSub:
    """Block DFT: out[l*stride + k] = sum_t (xi^l)^t in[k + t*stride].

    `block` lists the input variables in index order; the frequency count is
    len(block)/stride and xi must have exactly that order."""
    size = len(block)
    freqs = size // stride
    if freqs * stride != size or xi.order() != max(freqs, 1):
        raise SubstitutionError("DFT shape mismatch")
    fwd = [[field.zero() for _ in range(size)] for _ in range(size)]
    inv = [[field.zero() for _ in range(size)] for _ in range(size)]
    inv_scale = Fraction(1, freqs)
    for ell in range(freqs):
        for k in range(stride):
            row = ell * stride + k
            for t in range(freqs):
                col = t * stride + k
                fwd[row][col] = field.from_root(xi ** (ell * t))
                inv[col][row] = field.from_root(xi ** (-ell * t)).scale(inv_scale)
    return LinearSub(
        in_space=space,
        block=tuple(block),
        out_block_names=tuple(out_names),
        fwd=tuple(tuple(r) for r in fwd),
        inv=tuple(tuple(r) for r in inv),
        origin="dft",
    )


# ---------------------------------------------------------------------------
# fiber drops


def drop_fibers(
    action: GroupAction, drop: RatioDrop, reason: str = "affine fiber drop"
) -> tuple[GroupAction, ReductionRecord]:
    """Re-coordinatize by drop.sub, check the fiber form on the dropped
    variables, and restrict the action to the survivors.

    Fiber form: every generator sends a dropped variable x0 to itself times a
    root times a monomial in the survivors, and survivors never reference the
    dropped variables.  One invariant generator per dropped variable is
    recorded (not constructed)."""
    verify_invertible(drop.sub)
    full = _apply_monomial(action, drop.sub)
    out_names = list(full.space.names)
    drop_idx = [out_names.index(nm) for nm in drop.dropped]
    keep_idx = [i for i in range(len(out_names)) if i not in drop_idx]

    fiber_forms: dict[str, dict[str, str]] = {nm: {} for nm in drop.dropped}
    for gname, gmap in zip(action.group.names, full.gen_maps):
        for i in keep_idx:
            img = gmap.images[i]
            if any(img.exps[d] for d in drop_idx):
                raise ClaimedFormViolation(
                    f"survivor '{out_names[i]}' is not closed under '{gname}'"
                )
        for d in drop_idx:
            img = gmap.images[d]
            if img.exps[d] != 1 or any(
                img.exps[d2] for d2 in drop_idx if d2 != d
            ):
                raise ClaimedFormViolation(
                    f"'{out_names[d]}' does not have fiber form under '{gname}'"
                )
            mono = "*".join(
                f"{out_names[j]}^{img.exps[j]}"
                for j in keep_idx
                if img.exps[j]
            )
            fiber_forms[out_names[d]][gname] = (
                f"z{img.coeff.level}^{img.coeff.exp}" + (f"*{mono}" if mono else "")
            )

    new_space = VarSpace(tuple(full.space.variables[i] for i in keep_idx))
    new_maps = []
    for gmap in full.gen_maps:
        images = []
        for i in keep_idx:
            img = gmap.images[i]
            images.append(VarImage(img.coeff, tuple(img.exps[j] for j in keep_idx)))
        new_maps.append(MonomialMap(new_space, tuple(images)))
    record = ReductionRecord(
        dropped=tuple(drop.dropped),
        invariants_recorded=len(drop.dropped),
        reason=reason,
        fiber_forms=fiber_forms,
    )
    return action.with_maps(tuple(new_maps), new_space), record


def consecutive_ratio_drop(
    space: VarSpace,
    level: int,
    cycle: list[str],
    new_names: list[str],
    origin: str,
) -> RatioDrop:
    """The standard move: keep cycle[0], replace cycle[i] by
    cycle[i]/cycle[i-1], then drop cycle[0]."""
    n = len(space)
    names = list(space.names)
    matrix = [[int(i == j) for j in range(n)] for i in range(n)]
    out_names = list(names)
    idxs = [space.index(nm) for nm in cycle]
    for pos in range(1, len(idxs)):
        row = [0] * n
        row[idxs[pos]] = 1
        row[idxs[pos - 1]] = -1
        matrix[idxs[pos]] = row
        out_names[idxs[pos]] = new_names[pos - 1]
    sub = MonomialSub(
        in_space=space,
        out_names=tuple(out_names),
        matrix=tuple(tuple(r) for r in matrix),
        origin=origin,
    )
    return RatioDrop(sub=sub, dropped=(cycle[0],))


# ---------------------------------------------------------------------------
# cycle linearization (the one rational substitution)


class Lemma24Failure(AssertionError):
    """The claimed diagonal identity failed PIT (with a witness point)."""


@dataclass(frozen=True)
class Lemma24Report:
    n: int
    diagonal_verdicts: tuple[PitVerdict, ...]
    roundtrip_verdicts: tuple[PitVerdict, ...]

    @property
    def total_bound(self) -> Fraction:
        return sum(
            (v.total_bound for v in self.diagonal_verdicts + self.roundtrip_verdicts),
            Fraction(0),
        )


def lemma24_exprs(n: int, xi: Root) -> tuple[list[Expr], list[Expr], list[Expr]]:
    """Building blocks over generic cycle variables v1..v_{n-1}:
    returns (v, s, v_back) where s are the diagonalizing combinations and
    v_back recovers v from generic s-variables."""
    v = [Expr.var(f"v{i}") for i in range(1, n)]
    prods = []
    acc = None
    for i in range(n - 1):
        acc = v[i] if acc is None else acc * v[i]
        prods.append(acc)
    w0 = Expr.const(1)
    for pr in prods:
        w0 = w0 + pr
    inv_n = Expr.const(Fraction(1, n))
    w = [Expr.const(1) / w0 - inv_n]
    for i in range(1, n):
        w.append(prods[i - 1] / w0 - inv_n)
    s = []
    for i in range(1, n):
        acc_s = None
        for j in range(1, n + 1):
            term = Expr.const(xi ** (-i * j)) * w[j - 1]
            acc_s = term if acc_s is None else acc_s + term
        s.append(acc_s)

    s_vars = [Expr.var(f"s{i}") for i in range(1, n)]
    w_back = []
    for j in range(1, n + 1):
        acc_w = None
        for i in range(1, n):
            term = Expr.const(xi ** (i * j)) * s_vars[i - 1]
            acc_w = term if acc_w is None else acc_w + term
        w_back.append(acc_w * Expr.const(Fraction(1, n)))
    v_back = []
    for i in range(1, n):
        v_back.append((w_back[i] + inv_n) / (w_back[i - 1] + inv_n))
    return v, s, v_back


def lemma24_sub(
    n: int,
    embedding: FFEmbedding,
    trials: int = 3,
    seed: int = 0,
    level: int | None = None,
    in_names: tuple[str, ...] | None = None,
    out_names: tuple[str, ...] | None = None,
) -> tuple[Lemma24Sub, Lemma24Report]:
    """Build the cycle-linearization substitution for the product-inverse
    cycle of length n and verify, by PIT, that it diagonalizes the cycle with
    spectrum xi, xi^2, ..., xi^{n-1}, and that it is invertible (round trip).

    The embedding's level must be a multiple of n.
    """
    if n < 2:
        raise SubstitutionError("cycle linearization needs n >= 2")
    lvl = level if level is not None else embedding.level
    if lvl % n != 0 or embedding.level % lvl != 0:
        raise SubstitutionError("root level does not support an order-n root")
    xi = Root.of_order(lvl, n)
    v, s, v_back = lemma24_exprs(n, xi)

    tau_map = {f"v{i}": v[i] for i in range(1, n - 1)}
    tau_map[f"v{n - 1}"] = Expr.const(1) / product(v)
    if n == 2:
        tau_map = {"v1": Expr.const(1) / v[0]}

    diag_verdicts = []
    for i in range(1, n):
        lhs = s[i - 1].substitute(tau_map)
        rhs = Expr.const(xi**i) * s[i - 1]
        verdict = pit_equal(lhs, rhs, embedding, trials=trials, seed=seed + i)
        if verdict.outcome != "equal":
            raise Lemma24Failure(
                f"diagonal identity for s{i} failed at point {verdict.witness}"
            )
        diag_verdicts.append(verdict)

    s_in_v = {f"s{i}": s[i - 1] for i in range(1, n)}
    roundtrip_verdicts = []
    for i in range(1, n):
        expr = v_back[i - 1].substitute(s_in_v)
        verdict = pit_equal(
            expr, v[i - 1], embedding, trials=trials, seed=seed + n + i
        )
        if verdict.outcome != "equal":
            raise Lemma24Failure(
                f"round-trip recovery of v{i} failed at point {verdict.witness}"
            )
        roundtrip_verdicts.append(verdict)

    sub = Lemma24Sub(
        n=n,
        xi=xi,
        in_names=in_names or tuple(f"v{i}" for i in range(1, n)),
        out_names=out_names or tuple(f"s{i}" for i in range(1, n)),
    )
    report = Lemma24Report(
        n=n,
        diagonal_verdicts=tuple(diag_verdicts),
        roundtrip_verdicts=tuple(roundtrip_verdicts),
    )
    return sub, report


def _apply_lemma24(
    action: GroupAction, sub: Lemma24Sub, cycle_generator: int = 0
) -> GroupAction:
    """Replace the verified product-inverse cycle by its diagonal form.

    Preconditions checked exactly: the cycle generator acts on the named
    variables by the standard product-inverse cycle with trivial coefficients,
    every other generator fixes them, and no other variable references them."""
    space = action.space
    idxs = [space.index(nm) for nm in sub.in_names]
    n_all = len(space)
    m = len(idxs)
    if m != sub.n - 1:
        raise SubstitutionError("cycle variable count must be n - 1")

    cyc = action.gen_maps[cycle_generator]
    for pos, idx in enumerate(idxs):
        img = cyc.images[idx]
        if not img.coeff.is_one():
            raise ClaimedFormViolation("cycle carries a non-trivial coefficient")
        expected = [0] * n_all
        if pos + 1 < m:
            expected[idxs[pos + 1]] = 1
        else:
            for t in idxs:
                expected[t] = -1
        if list(img.exps) != expected:
            raise ClaimedFormViolation(
                f"'{sub.in_names[pos]}' is not on a standard product-inverse cycle"
            )
    for gpos, gmap in enumerate(action.gen_maps):
        for idx in range(n_all):
            img = gmap.images[idx]
            if idx in idxs:
                if gpos != cycle_generator and not (
                    img.coeff.is_one()
                    and img.exps == tuple(int(t == idx) for t in range(n_all))
                ):
                    raise ClaimedFormViolation(
                        "a non-cycle generator moves the cycle variables"
                    )
            elif any(img.exps[t] for t in idxs):
                raise ClaimedFormViolation(
                    "an outside variable references the cycle variables"
                )

    names = list(space.names)
    for pos, idx in enumerate(idxs):
        names[idx] = sub.out_names[pos]
    new_space = VarSpace.of(names, origin="lemma24")
    xi = sub.xi.at_level(action.level)

    new_maps = []
    for gpos, gmap in enumerate(action.gen_maps):
        images = list(gmap.images)
        for pos, idx in enumerate(idxs):
            coeff = xi ** (pos + 1) if gpos == cycle_generator else Root(action.level, 0)
            images[idx] = VarImage(
                coeff, tuple(int(t == idx) for t in range(n_all))
            )
        new_maps.append(MonomialMap(new_space, tuple(images)))
    return action.with_maps(tuple(new_maps), new_space)
