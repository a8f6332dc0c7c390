"""Group actions on rational function fields by monomial automorphisms.

A monomial map sends each variable to a root of unity times a Laurent
monomial; the exponent rows form an integer matrix that must be invertible
over Q (unimodular when the map is to be inverted within the type).  All map
arithmetic is exact: coefficients are Root values at one common level.

`induce_representation` builds the induced monomial action of a split
abelian-by-cyclic p-group: one block of p^a variables per H-basis generator,
the top generator rotating indices, H acting diagonally through characters of
the collected conjugates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import intlinalg
from .cyclotomic import Root
from .pcgroup import (
    ABCWitness,
    Element,
    EnumeratedGroup,
    PcGroup,
    PipelineScopeError,
    check_abc,
    collector_for,
    element_word,
    enumerate_group,
    require_basis_form,
    verify_consistency,
)


@dataclass(frozen=True)
class Variable:
    name: str
    origin: str = ""


@dataclass(frozen=True)
class VarSpace:
    variables: tuple[Variable, ...]

    def __post_init__(self) -> None:
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValueError("variable names must be unique")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def __len__(self) -> int:
        return len(self.variables)

    def index(self, name: str) -> int:
        return self.names.index(name)

    @staticmethod
    def of(names: list[str], origin: str = "") -> "VarSpace":
        return VarSpace(tuple(Variable(n, origin) for n in names))


@dataclass(frozen=True)
class VarImage:
    coeff: Root
    exps: tuple[int, ...]


class NotMultiplicativelyInvertible(ValueError):
    pass


@dataclass(frozen=True)
class MonomialMap:
    space: VarSpace
    images: tuple[VarImage, ...]

    def __post_init__(self) -> None:
        if len(self.images) != len(self.space):
            raise ValueError("one image per variable required")

    @staticmethod
    def identity(space: VarSpace, level: int) -> "MonomialMap":
        n = len(space)
        one = Root(level, 0)
        return MonomialMap(
            space,
            tuple(
                VarImage(one, tuple(int(i == j) for j in range(n)))
                for i in range(n)
            ),
        )

    def exponent_matrix(self) -> list[list[int]]:
        return [list(img.exps) for img in self.images]

    def is_identity(self) -> bool:
        n = len(self.space)
        for i, img in enumerate(self.images):
            if not img.coeff.is_one():
                return False
            if img.exps != tuple(int(i == j) for j in range(n)):
                return False
        return True

    def is_linear_form(self) -> bool:
        """Every image is a root times a single variable to the first power."""
        for img in self.images:
            nz = [e for e in img.exps if e]
            if len(nz) != 1 or nz[0] != 1:
                return False
        return True

    def is_diagonal(self) -> bool:
        n = len(self.space)
        return all(
            img.exps == tuple(int(i == j) for j in range(n))
            for i, img in enumerate(self.images)
        )


def compose(f: MonomialMap, g: MonomialMap) -> MonomialMap:
    """(f o g)(v) = f(g(v)); coefficients of g pass through f unchanged and
    f's coefficients enter through the monomial expansion."""
    if f.space != g.space:
        raise ValueError("maps live on different variable spaces")
    n = len(f.space)
    out = []
    for img in g.images:
        coeff = img.coeff
        exps = [0] * n
        for t, m in enumerate(img.exps):
            if m:
                ft = f.images[t]
                coeff = coeff * (ft.coeff**m)
                for j, e in enumerate(ft.exps):
                    if e:
                        exps[j] += m * e
        out.append(VarImage(coeff, tuple(exps)))
    return MonomialMap(f.space, tuple(out))


def invert(f: MonomialMap) -> MonomialMap:
    mat = f.exponent_matrix()
    d = intlinalg.det(mat)
    if d not in (1, -1):
        raise NotMultiplicativelyInvertible(
            f"exponent matrix has determinant {d}; not multiplicatively invertible"
        )
    inv = intlinalg.inv_unimodular(mat)
    n = len(f.space)
    out = []
    for i in range(n):
        row = inv[i]
        coeff = Root(f.images[0].coeff.level, 0)
        for t, e in enumerate(row):
            if e:
                coeff = coeff * (f.images[t].coeff ** (-e))
        out.append(VarImage(coeff, tuple(row)))
    return MonomialMap(f.space, tuple(out))


def map_power(f: MonomialMap, n: int) -> MonomialMap:
    if n < 0:
        return map_power(invert(f), -n)
    acc = MonomialMap.identity(f.space, f.images[0].coeff.level if f.images else 1)
    for _ in range(n):
        acc = compose(f, acc)
    return acc


# ---------------------------------------------------------------------------


@dataclass
class GroupAction:
    """Per-generator monomial maps for a PcGroup on a common variable space."""

    group: PcGroup
    space: VarSpace
    level: int
    gen_maps: tuple[MonomialMap, ...]
    homomorphism_verified: bool = False
    faithful_verified: bool = False
    _element_cache: dict[Element, MonomialMap] = field(default_factory=dict, repr=False)

    def element_map(self, x: Element) -> MonomialMap:
        got = self._element_cache.get(x)
        if got is not None:
            return got
        acc = MonomialMap.identity(self.space, self.level)
        for g, e in element_word(x):
            acc = compose(acc, map_power(self.gen_maps[g], e))
        self._element_cache[x] = acc
        return acc

    def word_map(self, word) -> MonomialMap:
        acc = MonomialMap.identity(self.space, self.level)
        for g, e in word:
            acc = compose(acc, map_power(self.gen_maps[g], e))
        return acc

    def with_maps(self, maps: tuple[MonomialMap, ...], space: VarSpace) -> "GroupAction":
        return GroupAction(
            group=self.group,
            space=space,
            level=self.level,
            gen_maps=maps,
        )


@dataclass(frozen=True)
class HomomorphismReport:
    relators_checked: int
    ok: bool
    failure: str | None = None


class RelatorViolation(AssertionError):
    pass


def verify_homomorphism(action: GroupAction) -> HomomorphismReport:
    """Every defining relation must act as the identity map (exact exponent
    and root comparison)."""
    g = action.group
    checked = 0
    for i in range(g.ngens):
        lhs = map_power(action.gen_maps[i], g.orders[i])
        rhs = action.word_map(g.power_words[i])
        checked += 1
        if lhs != rhs:
            raise RelatorViolation(
                f"power relation of '{g.names[i]}' does not act as declared"
            )
    for j in range(g.ngens):
        for i in range(j):
            w = g.commutators.get((j, i), ())
            lhs = compose(action.gen_maps[j], action.gen_maps[i])
            rhs = compose(
                compose(action.gen_maps[i], action.gen_maps[j]), action.word_map(w)
            )
            checked += 1
            if lhs != rhs:
                raise RelatorViolation(
                    f"conjugation relation [{g.names[j]}, {g.names[i]}] "
                    "does not act as declared"
                )
    action.homomorphism_verified = True
    return HomomorphismReport(relators_checked=checked, ok=True)


@dataclass(frozen=True)
class FaithfulnessReport:
    elements_checked: int
    ok: bool
    kernel_witness: Element | None = None


class UnfaithfulAction(AssertionError):
    pass


def verify_faithful(action: GroupAction, max_order: int = 10**6) -> FaithfulnessReport:
    """Every non-identity element must move some variable; checked by walking
    all normal forms with incrementally composed maps."""
    g = action.group
    enum = enumerate_group(g, max_order)
    ident = MonomialMap.identity(action.space, action.level)
    n = g.ngens

    # odometer over exponent tuples with partial compositions per digit
    partial: list[MonomialMap] = [ident] * (n + 1)
    exps = [0] * n

    def recurse(pos: int) -> Element | None:
        if pos == n:
            if any(exps) and partial[n].is_identity():
                return tuple(exps)
            return None
        gen_pow = ident
        for e in range(g.orders[pos]):
            exps[pos] = e
            partial[pos + 1] = compose(partial[pos], gen_pow)
            bad = recurse(pos + 1)
            if bad is not None:
                return bad
            if e + 1 < g.orders[pos]:
                gen_pow = compose(gen_pow, action.gen_maps[pos])
        exps[pos] = 0
        return None

    witness = recurse(0)
    if witness is not None:
        raise UnfaithfulAction(f"kernel element with exponents {witness}")
    action.faithful_verified = True
    return FaithfulnessReport(elements_checked=enum.order, ok=True)


# ---------------------------------------------------------------------------
# induced representation


@dataclass(frozen=True)
class InducedStructure:
    """Block layout of the induced action: block j holds the variables
    x[j,0..p^a-1] attached to the j-th H-basis character."""

    abc: ABCWitness
    h_positions: tuple[int, ...]      # generator indices of the H basis, in block order
    block_vars: tuple[tuple[int, ...], ...]  # variable indices per block
    period: int                       # p^a


class NonSplitInput(PipelineScopeError):
    pass


def induce_representation(
    group: PcGroup,
    level: int | None = None,
    max_order: int = 10**6,
) -> tuple[GroupAction, InducedStructure]:
    """Induced monomial action of a split ABC group.

    Variables x[j,i] for each H-basis generator j and 0 <= i < p^a.  The top
    generator rotates i; an H generator h multiplies x[j,i] by the block-j
    character value of the collected conjugate top^-i h top^i.  Faithfulness
    and the homomorphism property are verified before returning.
    """
    require_basis_form(group)
    report = verify_consistency(group, max_order)
    abc = check_abc(group, max_order)
    if abc.quotient_order > 1 and not abc.split:
        raise NonSplitInput(
            "non-split extension: the reduction of top^{p^a} in H to the "
            "split case is out of scope"
        )
    if level is None:
        level = max(report.exponent, group.p)

    col = collector_for(group)
    h_positions = tuple(group.h_indices)
    s = len(h_positions)
    period = abc.quotient_order
    top = group.top_index

    names = [f"x[{j + 1},{i}]" for j in range(s) for i in range(period)]
    space = VarSpace.of(names, origin="induced")
    block_vars = tuple(
        tuple(j * period + i for i in range(period)) for j in range(s)
    )

    def char_value(block: int, h_elt: Element) -> Root:
        """Block character: the H-basis exponent of the block generator."""
        gidx = h_positions[block]
        return Root.of_order(level, group.orders[gidx], h_elt[gidx])

    nvars = len(names)
    maps = []
    for gidx in range(group.ngens):
        images: list[VarImage] = [None] * nvars  # type: ignore[list-item]
        if gidx == top and period > 1:
            for j in range(s):
                for i in range(period):
                    tgt = j * period + (i + 1) % period
                    coeff = Root(level, 0)
                    if i + 1 == period:
                        # wraparound through top^{p^a}, trivial in the split case
                        coeff = char_value(j, abc.top_power_in_h)
                    images[j * period + i] = VarImage(
                        coeff, tuple(int(t == tgt) for t in range(nvars))
                    )
        else:
            gen_elt = group.gen(gidx)
            top_elt = group.gen(top)
            for i in range(period):
                conj = col.mult(
                    col.mult(col.power(top_elt, -i), gen_elt), col.power(top_elt, i)
                )
                if any(conj[t] for t in range(group.ngens) if t not in h_positions):
                    raise PipelineScopeError(
                        "conjugate of an H generator leaves the H basis"
                    )
                for j in range(s):
                    v = j * period + i
                    images[v] = VarImage(
                        char_value(j, conj),
                        tuple(int(t == v) for t in range(nvars)),
                    )
        maps.append(MonomialMap(space, tuple(images)))

    action = GroupAction(
        group=group, space=space, level=level, gen_maps=tuple(maps)
    )
    verify_homomorphism(action)
    verify_faithful(action, max_order)
    structure = InducedStructure(
        abc=abc, h_positions=h_positions, block_vars=block_vars, period=period
    )
    return action, structure
