"""Chemical reaction networks and the mass-action compiler.

A :class:`Crn` is a species list plus reactions (reactant/product
stoichiometric vectors and a positive rate).  :func:`mass_action_odes`
compiles a network to its polynomial reaction rate equations;
:func:`ode_to_crn` inverts that for any kinetic system, using the canonical
construction where a positive term bumps the owning species by one and a
negative term consumes one unit of it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .odes import Monomial, PolyOdeSystem, is_kinetic


class CrnError(ValueError):
    """Invalid CRN data (bad stoichiometry, rates, names...)."""


class NotKineticError(ValueError):
    """Raised when a polynomial system cannot be realized by mass action."""

    def __init__(self, violations):
        self.violations = violations
        terms = ", ".join(f"eq {i}: coeff {m.coeff:g}, exps {m.exps}" for i, m in violations[:4])
        more = "" if len(violations) <= 4 else f" (+{len(violations) - 4} more)"
        super().__init__(f"negative cross terms violate mass-action realizability: {terms}{more}")


_FORBIDDEN_NAME_PARTS = (" ", "\t", "+", "@", ">", "-")


@dataclass(frozen=True)
class Species:
    id: int
    name: str

    def __post_init__(self):
        if self.id < 0:
            raise CrnError(f"species id must be non-negative, got {self.id}")
        if not self.name or self.name == "0" or self.name[0].isdigit():
            raise CrnError(f"invalid species name {self.name!r}")
        if any(ch in self.name for ch in _FORBIDDEN_NAME_PARTS):
            raise CrnError(f"invalid species name {self.name!r}")


@dataclass(frozen=True)
class Reaction:
    """reactant -> product with mass-action rate constant > 0."""

    reactant: tuple[int, ...]
    product: tuple[int, ...]
    rate: float

    def __post_init__(self):
        object.__setattr__(self, "reactant", tuple(int(v) for v in self.reactant))
        object.__setattr__(self, "product", tuple(int(v) for v in self.product))
        if len(self.reactant) != len(self.product):
            raise CrnError("reactant/product stoichiometry lengths differ")
        if any(v < 0 for v in self.reactant) or any(v < 0 for v in self.product):
            raise CrnError("stoichiometric counts must be non-negative")
        if not self.rate > 0:
            raise CrnError(f"reaction rate must be positive, got {self.rate}")
        if self.reactant == self.product:
            raise CrnError("no-op reaction (reactant == product) is rejected")

    @property
    def order(self) -> int:
        return sum(self.reactant)


class Crn:
    """Immutable reaction network over an ordered species list."""

    __slots__ = ("species", "reactions")

    def __init__(self, species, reactions):
        species = tuple(species)
        if [s.id for s in species] != list(range(len(species))):
            raise CrnError("species ids must be dense 0..N-1 in order")
        names = [s.name for s in species]
        if len(set(names)) != len(names):
            raise CrnError("species names must be unique")
        n = len(species)
        reactions = tuple(reactions)
        for r in reactions:
            if len(r.reactant) != n:
                raise CrnError(f"reaction stoichiometry length {len(r.reactant)} != {n} species")
        self.species = species
        self.reactions = reactions

    @property
    def n_species(self) -> int:
        return len(self.species)

    @property
    def n_reactions(self) -> int:
        return len(self.reactions)

    @property
    def species_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.species)

    def __eq__(self, other):
        if not isinstance(other, Crn):
            return NotImplemented
        return self.species == other.species and self.reactions == other.reactions

    __hash__ = None

    def __repr__(self):
        return f"Crn(species={self.n_species}, reactions={self.n_reactions})"


def species_list(names) -> tuple[Species, ...]:
    return tuple(Species(i, n) for i, n in enumerate(names))


def max_order(crn: Crn) -> int:
    """Largest reactant order over all reactions."""
    return max((r.order for r in crn.reactions), default=0)


def mass_action_odes(crn: Crn) -> PolyOdeSystem:
    """Reaction rate equations of ``crn`` under mass action kinetics.

    Each reaction with rate k contributes ``k * (product - reactant)_i *
    prod_l x_l**reactant_l`` to equation i; like monomials are combined.
    """
    n = crn.n_species
    rhs: list[list[Monomial]] = [[] for _ in range(n)]
    for r in crn.reactions:
        exps = r.reactant
        for i in range(n):
            delta = r.product[i] - r.reactant[i]
            if delta:
                rhs[i].append(Monomial(r.rate * delta, exps))
    return PolyOdeSystem(n, rhs, names=crn.species_names)


class MergePolicy(enum.Enum):
    """How ode_to_crn maps monomials to reactions.

    PER_TERM realizes every monomial as its own reaction.
    MERGE_SHARED_REACTANTS additionally collapses negative monomials that
    appear in several equations with identical exponent vectors and identical
    |coefficient| into one consumption reaction that decrements every owning
    species at once (e.g. a shared -v x^2 y^2 loss in the x and y equations
    becomes V + 2X + 2Y -> V + X + Y).  Production terms are never merged:
    the canonical network keeps one source reaction per produced species.
    """

    PER_TERM = "per-term"
    MERGE_SHARED_REACTANTS = "merge-shared-reactants"


def ode_to_crn(
    sys: PolyOdeSystem,
    merge_policy: MergePolicy = MergePolicy.PER_TERM,
    names=None,
) -> Crn:
    """Construct a CRN whose mass-action equations reproduce ``sys``.

    Requires :func:`is_kinetic` to hold.  A positive monomial ``a x^v`` in
    equation i becomes ``v -> v + e_i`` with rate a; a negative one becomes
    ``v -> v - e_i`` with rate -a (the owning species is consumed, never
    redistributed).  Under MERGE_SHARED_REACTANTS, groups of equations
    sharing an exponent vector and the exact |coefficient| are realized by
    one reaction whose product applies every +-1 adjustment at once.
    """
    check = is_kinetic(sys)
    if not check.ok:
        raise NotKineticError(check.violations)
    if names is None:
        names = sys.names if sys.names is not None else tuple(f"X{i+1}" for i in range(sys.dim))
    reactions: list[Reaction] = []

    if merge_policy is MergePolicy.MERGE_SHARED_REACTANTS:
        # negative monomials group by (exps, |coeff|); exact float equality only
        groups: dict[tuple[tuple[int, ...], float], list[int]] = {}
        order_seen: list[tuple[int, tuple[tuple[int, ...], float] | tuple[int, float]]] = []
        for i, eq in enumerate(sys.rhs):
            for m in eq:
                if m.coeff >= 0:
                    order_seen.append((0, (i, m.coeff, m.exps)))
                    continue
                key = (m.exps, -m.coeff)
                if key not in groups:
                    groups[key] = []
                    order_seen.append((1, key))
                groups[key].append(i)
        for tag, item in order_seen:
            if tag == 0:
                i, coeff, exps = item
                product = list(exps)
                product[i] += 1
                reactions.append(Reaction(exps, tuple(product), coeff))
            else:
                exps, mag = item
                product = list(exps)
                for i in groups[item]:
                    product[i] -= 1
                reactions.append(Reaction(exps, tuple(product), mag))
    else:
        for i, eq in enumerate(sys.rhs):
            for m in eq:
                product = list(m.exps)
                product[i] += 1 if m.coeff > 0 else -1
                reactions.append(Reaction(m.exps, tuple(product), abs(m.coeff)))

    return Crn(species_list(names), reactions)
