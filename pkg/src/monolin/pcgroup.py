"""Power-conjugate presentations of finite p-groups.

A presentation lists generators g_1 < ... < g_n with p-power relative orders,
power relations g_i^{ord_i} = word over later generators, and conjugation
relations encoded as commutators [g_j, g_i] (j > i, word over generators of
index > i).  The commutator convention throughout is

    [g, h] = g^-1 h^-1 g h,   so that   g h = h g [g, h].

Elements are exponent tuples (e_1, ..., e_n) with 0 <= e_i < ord_i; `collect`
rewrites any word into this normal form by collection from the left.  Nothing
here certifies that the presentation is consistent: `verify_consistency`
builds the right-regular permutation action by enumeration and checks every
defining relation on every element, which (with the full orbit of the
identity) pins the group order to the product of the relative orders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


Element = tuple[int, ...]
Word = tuple[tuple[int, int], ...]  # (generator index, exponent)


class GroupSpecError(ValueError):
    """Malformed group-spec input (parse-level)."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InconsistentPresentation(ValueError):
    """A defining relation fails on the enumerated group."""


class EnumerationBoundExceeded(RuntimeError):
    """Presented order exceeds the configured enumeration bound."""


class CollectionBudgetExceeded(RuntimeError):
    """Collection exceeded its rewriting budget (pathological input)."""


@dataclass(frozen=True)
class PcGroup:
    p: int
    names: tuple[str, ...]
    orders: tuple[int, ...]
    power_words: tuple[Word, ...]
    commutators: dict[tuple[int, int], Word] = field(hash=False)
    h_indices: tuple[int, ...] = ()
    top_index: int = 0
    label: str = ""

    def __post_init__(self) -> None:
        for name, o in zip(self.names, self.orders):
            if not _is_p_power(o, self.p):
                raise GroupSpecError(
                    f"order {o} of generator '{name}' is not a power of p = {self.p}"
                )
        for i, w in enumerate(self.power_words):
            for g, _ in w:
                if g <= i:
                    raise GroupSpecError(
                        f"power relation for '{self.names[i]}' uses a generator "
                        f"of index <= {i}; words must use later generators only"
                    )
        for (j, i), w in self.commutators.items():
            if not j > i:
                raise GroupSpecError("commutator keys must satisfy j > i")
            for g, _ in w:
                if g <= i:
                    raise GroupSpecError(
                        f"commutator [{self.names[j]}, {self.names[i]}] uses a "
                        "generator of too-small index"
                    )

    @property
    def ngens(self) -> int:
        return len(self.names)

    @property
    def presented_order(self) -> int:
        return math.prod(self.orders)

    def identity(self) -> Element:
        return (0,) * self.ngens

    def gen(self, i: int) -> Element:
        e = [0] * self.ngens
        e[i] = 1
        return tuple(e)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise GroupSpecError(f"unknown generator name '{name}'") from None

    def __hash__(self) -> int:
        return hash((self.names, self.orders, self.power_words,
                     tuple(sorted(self.commutators.items())),
                     self.h_indices, self.top_index))


def _is_p_power(n: int, p: int) -> bool:
    if n < 1:
        return False
    while n % p == 0:
        n //= p
    return n == 1


def word_inverse(word: Word) -> Word:
    return tuple((g, -e) for g, e in reversed(word))


def element_word(x: Element) -> Word:
    return tuple((i, e) for i, e in enumerate(x) if e)


# ---------------------------------------------------------------------------
# collection


class Collector:
    """Collection-from-the-left with a memoized push table."""

    def __init__(self, group: PcGroup, budget: int = 10**7):
        self.group = group
        self.budget = budget
        self._steps = 0
        self._push_memo: dict[tuple[Element, int], Element] = {}

    def _tick(self) -> None:
        self._steps += 1
        if self._steps > self.budget:
            raise CollectionBudgetExceeded(
                f"collection exceeded {self.budget} rewriting steps"
            )

    def push_gen(self, x: Element, i: int) -> Element:
        """Normal form of x * g_i."""
        key = (x, i)
        cached = self._push_memo.get(key)
        if cached is not None:
            return cached
        self._tick()
        g = self.group
        j = None
        for t in range(g.ngens - 1, i, -1):
            if x[t]:
                j = t
                break
        if j is None:
            e = x[i] + 1
            if e < g.orders[i]:
                res = x[:i] + (e,) + x[i + 1:]
            else:
                res = self.push_word(x[:i] + (0,) + x[i + 1:], g.power_words[i])
        else:
            y = x[:j] + (x[j] - 1,) + x[j + 1:]
            r = self.push_gen(self.push_gen(y, i), j)
            res = self.push_word(r, g.commutators.get((j, i), ()))
        self._push_memo[key] = res
        return res

    def push_inv_gen(self, x: Element, i: int) -> Element:
        """Normal form of x * g_i^-1 (via g_i^-1 = g_i^{ord-1} * P_i^-1)."""
        g = self.group
        for _ in range(g.orders[i] - 1):
            x = self.push_gen(x, i)
        return self.push_word(x, word_inverse(g.power_words[i]))

    def push_word(self, x: Element, word: Word) -> Element:
        for gidx, e in word:
            if e >= 0:
                for _ in range(e):
                    x = self.push_gen(x, gidx)
            else:
                for _ in range(-e):
                    x = self.push_inv_gen(x, gidx)
        return x

    def collect(self, word: Word) -> Element:
        return self.push_word(self.group.identity(), word)

    def mult(self, x: Element, y: Element) -> Element:
        return self.push_word(x, element_word(y))

    def inverse(self, x: Element) -> Element:
        z = self.group.identity()
        for gidx, e in reversed(element_word(x)):
            for _ in range(e):
                z = self.push_inv_gen(z, gidx)
        return z

    def conjugate(self, x: Element, by: Element) -> Element:
        return self.mult(self.mult(self.inverse(by), x), by)

    def commutator(self, x: Element, y: Element) -> Element:
        return self.mult(
            self.mult(self.inverse(x), self.inverse(y)), self.mult(x, y)
        )

    def power(self, x: Element, n: int) -> Element:
        # square-and-multiply: exponents can be astronomically large here
        if n < 0:
            return self.power(self.inverse(x), -n)
        acc = self.group.identity()
        base = x
        while n:
            if n & 1:
                acc = self.mult(acc, base)
            base = self.mult(base, base)
            n >>= 1
        return acc

    def element_order(self, x: Element) -> int:
        acc, n = x, 1
        ident = self.group.identity()
        while acc != ident:
            acc = self.mult(acc, x)
            n += 1
        return n


_COLLECTORS: dict[PcGroup, Collector] = {}


def collector_for(group: PcGroup) -> Collector:
    c = _COLLECTORS.get(group)
    if c is None:
        c = Collector(group)
        _COLLECTORS[group] = c
    return c


def collect(word: Word | list, group: PcGroup) -> Element:
    return collector_for(group).collect(tuple(word))


# ---------------------------------------------------------------------------
# enumeration-backed verification


@dataclass(frozen=True)
class ConsistencyReport:
    order: int
    exponent: int
    exponent_log: int
    regular_degree: int


class EnumeratedGroup:
    """The fully enumerated group with index arithmetic over the right-regular
    permutation action.  Construction performs the consistency verification."""

    def __init__(self, group: PcGroup, max_order: int = 10**6):
        order = group.presented_order
        if order > max_order:
            raise EnumerationBoundExceeded(
                f"presented order {order} exceeds bound {max_order}"
            )
        self.group = group
        self.order = order
        self.collector = collector_for(group)
        radices = group.orders
        self._radices = radices

        elements: list[Element] = []
        index: dict[Element, int] = {}
        for idx in range(order):
            e = self._decode(idx)
            elements.append(e)
            index[e] = idx
        self.elements = elements
        self.index = index

        # right multiplication by each generator, as arrays over element indices
        self.rho: list[list[int]] = []
        for i in range(group.ngens):
            tab = [index[self.collector.push_gen(x, i)] for x in elements]
            if sorted(tab) != list(range(order)):
                raise InconsistentPresentation(
                    f"right multiplication by '{group.names[i]}' is not a bijection"
                )
            self.rho.append(tab)

        self._check_relators()
        self._check_orbit()
        self._exponent = None

    def _decode(self, idx: int) -> Element:
        out = []
        for o in reversed(self._radices):
            idx, r = divmod(idx, o)
            out.append(r)
        return tuple(reversed(out))

    def apply_word(self, idx: int, word: Word) -> int:
        for g, e in word:
            if e >= 0:
                for _ in range(e):
                    idx = self.rho[g][idx]
            else:
                inv = self._rho_inverse(g)
                for _ in range(-e):
                    idx = inv[idx]
        return idx

    def _rho_inverse(self, g: int) -> list[int]:
        if not hasattr(self, "_rho_inv"):
            self._rho_inv: dict[int, list[int]] = {}
        tab = self._rho_inv.get(g)
        if tab is None:
            tab = [0] * self.order
            for src, dst in enumerate(self.rho[g]):
                tab[dst] = src
            self._rho_inv[g] = tab
        return tab

    def _check_relators(self) -> None:
        g = self.group
        for i in range(g.ngens):
            lhs: Word = ((i, g.orders[i]),)
            rhs = g.power_words[i]
            self._relator_equal(lhs, rhs, f"{g.names[i]}^{g.orders[i]}")
        for j in range(g.ngens):
            for i in range(j):
                w = g.commutators.get((j, i), ())
                lhs = ((j, 1), (i, 1))
                rhs = ((i, 1), (j, 1)) + w
                self._relator_equal(
                    lhs, rhs, f"[{g.names[j]}, {g.names[i]}] relation"
                )

    def _relator_equal(self, lhs: Word, rhs: Word, what: str) -> None:
        for idx in range(self.order):
            if self.apply_word(idx, lhs) != self.apply_word(idx, rhs):
                raise InconsistentPresentation(
                    f"{what} fails at element {self.elements[idx]}"
                )

    def _check_orbit(self) -> None:
        seen = {0}
        frontier = [0]
        while frontier:
            nxt = []
            for idx in frontier:
                for tab in self.rho:
                    t = tab[idx]
                    if t not in seen:
                        seen.add(t)
                        nxt.append(t)
            frontier = nxt
        if len(seen) != self.order:
            raise InconsistentPresentation(
                "regular orbit of the identity does not cover all normal forms"
            )

    # --- index arithmetic -------------------------------------------------

    def mult_idx(self, a: int, b: int) -> int:
        return self.apply_word(a, element_word(self.elements[b]))

    def inv_idx(self, a: int) -> int:
        return self.apply_word(0, word_inverse(element_word(self.elements[a])))

    def comm_idx(self, a: int, b: int) -> int:
        t = self.mult_idx(self.inv_idx(a), self.inv_idx(b))
        return self.mult_idx(t, self.mult_idx(a, b))

    def conj_idx(self, a: int, by: int) -> int:
        return self.mult_idx(self.mult_idx(self.inv_idx(by), a), by)

    def order_of_idx(self, a: int) -> int:
        n, x = 1, a
        while x != 0:
            x = self.mult_idx(x, a)
            n += 1
        return n

    def exponent(self) -> int:
        if self._exponent is None:
            self._exponent = max(self.order_of_idx(i) for i in range(self.order))
        return self._exponent

    def subgroup_closure(self, gens: set[int]) -> set[int]:
        closed = {0} | set(gens)
        frontier = list(closed)
        while frontier:
            nxt = []
            for x in frontier:
                for g in gens:
                    y = self.mult_idx(x, g)
                    if y not in closed:
                        closed.add(y)
                        nxt.append(y)
            frontier = nxt
        return closed

    def normal_closure(self, gens: set[int]) -> set[int]:
        gen_idxs = [self.index[self.group.gen(i)] for i in range(self.group.ngens)]
        current = set(gens)
        while True:
            extra = set()
            for x in current:
                for g in gen_idxs:
                    c = self.conj_idx(x, g)
                    if c not in current:
                        extra.add(c)
            if not extra:
                break
            current |= extra
            current = self.subgroup_closure(current)
        return self.subgroup_closure(current)


_ENUMERATIONS: dict[tuple[PcGroup, int], EnumeratedGroup] = {}


def enumerate_group(group: PcGroup, max_order: int = 10**6) -> EnumeratedGroup:
    key = (group, max_order)
    e = _ENUMERATIONS.get(key)
    if e is None:
        e = EnumeratedGroup(group, max_order)
        _ENUMERATIONS[key] = e
    return e


def verify_consistency(group: PcGroup, max_order: int = 10**6) -> ConsistencyReport:
    """Build the regular permutation action and check every defining relation.

    Success certifies: the presentation is consistent, the group order equals
    the product of relative orders, normal forms are unique, and the regular
    action is faithful of degree |G|.
    """
    enum = enumerate_group(group, max_order)
    exponent = enum.exponent()
    elog = 0
    t = exponent
    while t > 1:
        t //= group.p
        elog += 1
    return ConsistencyReport(
        order=enum.order,
        exponent=exponent,
        exponent_log=elog,
        regular_degree=enum.order,
    )


def nilpotency_class(group: PcGroup, max_order: int = 10**6) -> int:
    """Length of the lower central series G = G_(0) >= G_(1) >= ..."""
    enum = enumerate_group(group, max_order)
    gen_idxs = [enum.index[group.gen(i)] for i in range(group.ngens)]
    current = set(range(enum.order))  # G_(0)
    klass = 0
    while len(current) > 1:
        comms = {
            enum.comm_idx(x, g) for x in current for g in gen_idxs
        }
        nxt = enum.normal_closure(comms) if comms - {0} else {0}
        if len(nxt) >= len(current):
            raise InconsistentPresentation("lower central series is not descending")
        current = nxt
        klass += 1
    return klass


@dataclass(frozen=True)
class ABCWitness:
    h_order: int
    quotient_order: int
    quotient_log: int  # the a with index = p^a
    h_abelian: bool
    h_normal: bool
    quotient_cyclic: bool
    split: bool
    top_power_in_h: Element  # normal form of top^{p^a}

    @property
    def ok(self) -> bool:
        return self.h_abelian and self.h_normal and self.quotient_cyclic


class ABCFailure(ValueError):
    def __init__(self, tag: str, message: str):
        self.tag = tag
        super().__init__(message)


def check_abc(group: PcGroup, max_order: int = 10**6) -> ABCWitness:
    """Witness that <H> is abelian and normal with cyclic quotient generated
    by the top generator; also record whether the extension splits."""
    enum = enumerate_group(group, max_order)
    col = enum.collector
    h_gen_idxs = [enum.index[group.gen(i)] for i in group.h_indices]

    for a in group.h_indices:
        for b in group.h_indices:
            if a < b:
                c = col.commutator(group.gen(a), group.gen(b))
                if c != group.identity():
                    raise ABCFailure(
                        "h-not-abelian",
                        f"[{group.names[a]}, {group.names[b]}] = {c} != 1",
                    )

    h_set = enum.subgroup_closure(set(h_gen_idxs))
    all_gen_idxs = [enum.index[group.gen(i)] for i in range(group.ngens)]
    for h in h_gen_idxs:
        for g in all_gen_idxs:
            if enum.conj_idx(h, g) not in h_set:
                raise ABCFailure(
                    "h-not-normal",
                    f"a conjugate of an H-generator leaves <H>",
                )

    h_order = len(h_set)
    if enum.order % h_order:
        raise ABCFailure("h-order", "subgroup order does not divide group order")
    quotient_order = enum.order // h_order

    top = enum.index[group.gen(group.top_index)]
    k, x = 1, top
    while x not in h_set:
        x = enum.mult_idx(x, top)
        k += 1
    # k is the order of the image of top in G/<H>
    if k != quotient_order:
        raise ABCFailure(
            "quotient-not-cyclic",
            f"top image has order {k} in a quotient of order {quotient_order}",
        )

    a_log = 0
    t = quotient_order
    while t > 1:
        t //= group.p
        a_log += 1

    top_power = col.power(group.gen(group.top_index), quotient_order)
    split = quotient_order == 1 or top_power == group.identity()
    return ABCWitness(
        h_order=h_order,
        quotient_order=quotient_order,
        quotient_log=a_log,
        h_abelian=True,
        h_normal=True,
        quotient_cyclic=True,
        split=split,
        top_power_in_h=top_power,
    )


@dataclass(frozen=True)
class CommutatorData:
    """For each H-generator a_j, the commutator c_j = [a_j, top] decomposed
    over the H-generator basis: c_j = prod_i a_i^{unit_ij * p^valuation_ij}."""

    h_names: tuple[str, ...]
    gammas: tuple[Element, ...]
    # decomp[j][i] = (valuation, unit) for the a_i-exponent of gamma_j, or None
    decomp: tuple[tuple[tuple[int, int] | None, ...], ...]
    central: bool


class PipelineScopeError(ValueError):
    """Input outside the supported reduction scope (with a diagnostic)."""


def require_basis_form(group: PcGroup) -> None:
    """Pipelines require generators = {top} + H with H given as an independent
    basis (trivial power words on the H part).  The degenerate case top in H
    (so H is the whole group and the quotient is trivial) is allowed."""
    declared = set(group.h_indices) | {group.top_index}
    if declared != set(range(group.ngens)):
        raise PipelineScopeError(
            "pipelines require the generator list to be exactly the top "
            "generator together with the H basis"
        )
    for i in group.h_indices:
        if group.power_words[i]:
            raise PipelineScopeError(
                f"H generator '{group.names[i]}' has a non-trivial power "
                "relation; H must be presented as an independent basis"
            )


def commutator_data(group: PcGroup, max_order: int = 10**6) -> CommutatorData:
    """Decompose each [a_j, top] over the H basis with p-adic valuations.

    Requires class <= 2 so the commutators are central; verifies the
    reconstruction, the centrality, and the order consequence
    gamma_j^{p^a} = 1 (so that a_i - valuation <= a)."""
    require_basis_form(group)
    abc = check_abc(group, max_order)
    if not abc.split:
        raise PipelineScopeError(
            "non-split extension: top^{p^a} lies in H non-trivially; the "
            "reduction to the split case is out of scope"
        )
    klass = nilpotency_class(group, max_order)
    if klass > 2:
        raise PipelineScopeError(
            f"nilpotency class {klass} > 2: not handled by the class-2 pipeline"
        )
    col = collector_for(group)
    top = group.gen(group.top_index)
    p = group.p

    h_names = tuple(group.names[i] for i in group.h_indices)
    gammas = []
    decomp_rows = []
    central = True
    for j in group.h_indices:
        gamma = col.commutator(group.gen(j), top)
        gammas.append(gamma)
        if any(gamma[t] for t in range(group.ngens) if t not in group.h_indices):
            raise PipelineScopeError("a commutator [H, top] leaves <H>")
        row: list[tuple[int, int] | None] = []
        for i in group.h_indices:
            e = gamma[i]
            if e == 0:
                row.append(None)
            else:
                val = 0
                while e % p == 0:
                    e //= p
                    val += 1
                row.append((val, e))
        decomp_rows.append(tuple(row))
        # reconstruction: collecting the decomposition gives gamma back
        word = tuple((i, gamma[i]) for i in group.h_indices if gamma[i])
        if col.collect(word) != gamma:
            raise InconsistentPresentation("commutator decomposition failed")
        if klass == 2:
            for t in range(group.ngens):
                if col.commutator(gamma, group.gen(t)) != group.identity():
                    central = False
        # gamma^{p^a} must vanish (order consequence)
        if col.power(gamma, abc.quotient_order) != group.identity():
            raise InconsistentPresentation(
                "commutator order exceeds the quotient order"
            )
        for pos, entry in enumerate(row):
            if entry is not None:
                order_log = _log_p(group.orders[group.h_indices[pos]], p)
                if order_log - entry[0] > abc.quotient_log:
                    raise InconsistentPresentation(
                        "commutator valuation violates the order consequence"
                    )
    if klass == 2 and not central:
        raise InconsistentPresentation("class-2 commutator is not central")
    return CommutatorData(
        h_names=h_names,
        gammas=tuple(gammas),
        decomp=tuple(decomp_rows),
        central=central,
    )


def _log_p(n: int, p: int) -> int:
    out = 0
    while n > 1:
        n //= p
        out += 1
    return out


# ---------------------------------------------------------------------------
# group-spec parsing


@dataclass(frozen=True)
class ParsedSpec:
    group: PcGroup
    family: str | None = None
    params: tuple[int, ...] | None = None


def parse_group_spec(text: str) -> PcGroup:
    return parse_spec_document(text).group


def parse_spec_document(text: str) -> ParsedSpec:
    """Parse the line-oriented group-spec format (see README for the grammar).

    Plain presentations use keys p/generators/orders/H/top plus optional
    `power <g>` and `comm <g> <h>` lines; the shorthand `family`/`params`
    expands to the bundled three-generator families G1/G2."""
    entries: list[tuple[int, str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise GroupSpecError("expected 'key = value'", lineno)
        key, value = line.split("=", 1)
        entries.append((lineno, key.strip(), value.strip()))

    keys = [k for _, k, _ in entries]
    if "family" in keys:
        return _parse_family(entries)

    known_scalar = {"p", "generators", "orders", "H", "top", "name"}
    scalars: dict[str, tuple[int, str]] = {}
    powers: list[tuple[int, str, str]] = []
    comms: list[tuple[int, str, str, str]] = []
    for lineno, key, value in entries:
        parts = key.split()
        if len(parts) == 1 and parts[0] in known_scalar:
            if parts[0] in scalars:
                raise GroupSpecError(f"duplicate key '{parts[0]}'", lineno)
            scalars[parts[0]] = (lineno, value)
        elif len(parts) == 2 and parts[0] == "power":
            powers.append((lineno, parts[1], value))
        elif len(parts) == 3 and parts[0] == "comm":
            comms.append((lineno, parts[1], parts[2], value))
        else:
            raise GroupSpecError(f"unknown key '{key}'", lineno)

    for req in ("p", "generators", "orders", "H", "top"):
        if req not in scalars:
            raise GroupSpecError(f"missing required key '{req}'")

    lineno, pval = scalars["p"]
    try:
        p = int(pval)
    except ValueError:
        raise GroupSpecError(f"p must be an integer, got '{pval}'", lineno)
    if p < 2 or not _is_prime_small(p):
        raise GroupSpecError(f"p must be prime, got {p}", lineno)

    names = tuple(_split_list(scalars["generators"][1]))
    if len(set(names)) != len(names):
        raise GroupSpecError("duplicate generator names", scalars["generators"][0])
    lineno, oval = scalars["orders"]
    try:
        orders = tuple(int(t) for t in _split_list(oval))
    except ValueError:
        raise GroupSpecError("orders must be integers", lineno)
    if len(orders) != len(names):
        raise GroupSpecError("orders count does not match generators", lineno)
    for o in orders:
        if not _is_p_power(o, p):
            raise GroupSpecError(f"order {o} is not a power of p = {p}", lineno)

    def gen_index(name: str, at: int) -> int:
        if name not in names:
            raise GroupSpecError(f"unknown generator name '{name}'", at)
        return names.index(name)

    h_indices = tuple(
        gen_index(nm, scalars["H"][0]) for nm in _split_list(scalars["H"][1])
    )
    top_index = gen_index(scalars["top"][1], scalars["top"][0])

    power_words: list[Word] = [() for _ in names]
    for lineno, gname, value in powers:
        power_words[gen_index(gname, lineno)] = _parse_word(value, names, lineno)

    commutators: dict[tuple[int, int], Word] = {}
    for lineno, ga, gb, value in comms:
        j, i = gen_index(ga, lineno), gen_index(gb, lineno)
        if j == i:
            raise GroupSpecError("commutator of a generator with itself", lineno)
        word = _parse_word(value, names, lineno)
        if j < i:
            # [a, b] given with a earlier than b: store [b, a] = [a, b]^-1
            j, i = i, j
            word = word_inverse(word)
        if (j, i) in commutators:
            raise GroupSpecError("duplicate commutator declaration", lineno)
        if word:
            commutators[(j, i)] = word

    group = PcGroup(
        p=p,
        names=names,
        orders=orders,
        power_words=tuple(power_words),
        commutators=commutators,
        h_indices=h_indices,
        top_index=top_index,
        label=scalars.get("name", (0, ""))[1],
    )
    return ParsedSpec(group=group)


def _parse_family(entries: list[tuple[int, str, str]]) -> ParsedSpec:
    fam: str | None = None
    params: tuple[int, ...] | None = None
    label = ""
    for lineno, key, value in entries:
        if key == "family":
            fam = value.upper()
            if fam not in ("G1", "G2"):
                raise GroupSpecError(f"unknown family '{value}'", lineno)
        elif key == "params":
            try:
                params = tuple(int(t) for t in _split_list(value))
            except ValueError:
                raise GroupSpecError("params must be integers", lineno)
        elif key == "name":
            label = value
        else:
            raise GroupSpecError(
                f"key '{key}' not allowed in a family shorthand spec", lineno
            )
    if fam is None or params is None:
        raise GroupSpecError("family specs need both 'family' and 'params'")
    if len(params) != 6:
        raise GroupSpecError(
            "params must be p, a, b, c, s, x (G1) or p, a, b, c, r, x (G2)"
        )
    group = family_presentation(fam, *params, label=label)
    return ParsedSpec(group=group, family=fam, params=params)


def family_presentation(
    fam: str, p: int, a: int, b: int, c: int, sr: int, x: int, label: str = ""
) -> PcGroup:
    """The three-generator families: top alpha of order p^a over the abelian
    H = <beta, gamma> of orders p^b, p^c, with
        G1: [beta, alpha] = 1,         [gamma, alpha] = beta^x gamma^{p^s}
        G2: [beta, alpha] = beta^{p^r}, [gamma, alpha] = beta^x
    """
    if not _is_prime_small(p):
        raise GroupSpecError(f"p must be prime, got {p}")
    if min(a, b, c) < 1 or sr < 1:
        raise GroupSpecError("family parameters a, b, c and s/r must be >= 1")
    names = ("alpha", "beta", "gamma")
    orders = (p**a, p**b, p**c)
    commutators: dict[tuple[int, int], Word] = {}
    if fam == "G1":
        word: Word = ()
        if x % p**b:
            word += ((1, x % p**b),)
        if p**sr % p**c:
            word += ((2, p**sr % p**c),)
        if word:
            commutators[(2, 0)] = word
    elif fam == "G2":
        if p**sr % p**b:
            commutators[(1, 0)] = ((1, p**sr % p**b),)
        if x % p**b:
            commutators[(2, 0)] = ((1, x % p**b),)
    else:
        raise GroupSpecError(f"unknown family '{fam}'")
    return PcGroup(
        p=p,
        names=names,
        orders=orders,
        power_words=((), (), ()),
        commutators=commutators,
        h_indices=(1, 2),
        top_index=0,
        label=label or f"{fam}({p},{a},{b},{c},{sr},{x})",
    )


def _split_list(value: str) -> list[str]:
    parts = [t for chunk in value.split(",") for t in chunk.split()]
    return [t for t in parts if t]


def _parse_word(value: str, names: tuple[str, ...], lineno: int) -> Word:
    value = value.strip()
    if value in ("1", ""):
        return ()
    word: list[tuple[int, int]] = []
    for term in value.split("*"):
        term = term.strip()
        if not term:
            raise GroupSpecError("empty term in word", lineno)
        if "^" in term:
            base, _, exp = term.partition("^")
            base = base.strip()
            try:
                e = int(exp.strip())
            except ValueError:
                raise GroupSpecError(f"bad exponent in '{term}'", lineno)
        else:
            base, e = term, 1
        if base not in names:
            raise GroupSpecError(f"unknown generator name '{base}'", lineno)
        if e:
            word.append((names.index(base), e))
    return tuple(word)


def _is_prime_small(p: int) -> bool:
    if p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True
