"""Generators for the limit-cycle system families.

Everything here is driven by a set of K cycle centers (a_i, b_i).  The
planar vector field places one attracting unit circle around each center;
the other generators reshape that field step by step until it is realizable
as chemistry:

* ``planar_field`` / ``xfactor_planar``: the closed-form planar fields.
* ``reciprocal_extension``: polynomial (K+2)-dim form using u_i = 1/(1 +
  (x-a_i)^6 + (y-b_i)^6) as extra states (dynamics preserved only for the
  matching initial data).
* ``fast_slow_extension``: polynomial (K+2)-dim fast-slow form whose slow
  manifold v_i = q_i(x, y) reproduces the planar field.
* ``factored_system``: the x-factorable transform of the fast-slow form; a
  kinetic system, compiled to the (K+2)-species CRN by
  :func:`seventh_order_crn`.
* ``quadratized_system``: auxiliary species W/Z reduce all terms to degree
  two; compiled to the bimolecular CRN by :func:`bimolecular_crn`.
* ``two_species_system``: time-rescaled planar polynomial system of degree
  6K-2 in just x and y.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .crn import Crn, MergePolicy, ode_to_crn
from .odes import Monomial, Poly, PolyOdeSystem, shifted_power

#: Largest integer magnitude exactly representable in a double.
EXACT_INT_LIMIT = 2.0**53


class ExactnessLoss(UserWarning):
    """Rate constants exceed 2**53 and are no longer exact integers."""


class SeparationWarning(UserWarning):
    """Centers violate the sufficient separation condition; the K-cycle
    guarantee does not apply (the systems are still generated)."""


class NonpositiveRateError(ValueError):
    """A derived rate constant came out <= 0 (centers too close to 1)."""


@dataclass(frozen=True)
class CenterSet:
    """K cycle centers; ``a[i]``, ``b[i]`` position the i-th target cycle."""

    a: tuple[float, ...]
    b: tuple[float, ...]

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        b = tuple(float(v) for v in self.b)
        if len(a) != len(b) or not a:
            raise ValueError("a and b must be equal-length, non-empty")
        if any(v <= 0 for v in a + b):
            raise ValueError("centers must be positive")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def K(self) -> int:
        return len(self.a)

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[float, float]]) -> "CenterSet":
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.a, self.b))


def default_centers(K: int) -> CenterSet:
    """Diagonal placement a_i = b_i = 8iK, far enough apart for any K."""
    if K < 1:
        raise ValueError("K must be >= 1")
    vals = tuple(float(8 * i * K) for i in range(1, K + 1))
    return CenterSet(vals, vals)


class SeparationReport(NamedTuple):
    ok: bool
    threshold: float
    min_sq_distance: float  # inf when K == 1
    worst_pair: tuple[int, int] | None

    def __bool__(self) -> bool:
        return self.ok


def check_separation(c: CenterSet) -> SeparationReport:
    """Pairwise (a_i-a_j)^2 + (b_i-b_j)^2 > 15(K^(2/3) + 2) for all i != j."""
    K = c.K
    threshold = 15.0 * (K ** (2.0 / 3.0) + 2.0)
    best = math.inf
    pair = None
    for i in range(K):
        for j in range(i + 1, K):
            d2 = (c.a[i] - c.a[j]) ** 2 + (c.b[i] - c.b[j]) ** 2
            if d2 < best:
                best = d2
                pair = (i, j)
    return SeparationReport(best > threshold, threshold, best, pair)


def _warn_exactness(c: CenterSet) -> None:
    worst = max(1.0 + a**6 + b**6 for a, b in zip(c.a, c.b))
    if worst > EXACT_INT_LIMIT:
        warnings.warn(
            f"1 + a^6 + b^6 reaches {worst:.3g} > 2^53; derived rate constants "
            "are rounded doubles, not exact integers",
            ExactnessLoss,
            stacklevel=3,
        )


def _warn_separation(c: CenterSet) -> None:
    rep = check_separation(c)
    if not rep.ok:
        i, j = rep.worst_pair
        warnings.warn(
            f"centers {i} and {j} are squared-distance {rep.min_sq_distance:g} apart "
            f"(need > {rep.threshold:g}); the K-cycle guarantee does not apply",
            SeparationWarning,
            stacklevel=3,
        )


# -- closed-form planar fields ----------------------------------------------


def _components(c: CenterSet, x, y):
    """Vectorized per-center sums f, g of the planar field."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    f = np.zeros(np.broadcast(x, y).shape)
    g = np.zeros_like(f)
    for a, b in c.pairs():
        zx = x - a
        zy = y - b
        s = 1.0 - zx * zx - zy * zy
        den = 1.0 + zx**6 + zy**6
        f += (zx * s - zy) / den
        g += (zy * s + zx) / den
    return f, g


def planar_field(c: CenterSet, x: float, y: float) -> tuple[float, float]:
    """Exact evaluation of the planar vector field (f, g) at one point."""
    f, g = _components(c, x, y)
    return float(f), float(g)


def xfactor_planar(c: CenterSet, x: float, y: float) -> tuple[float, float]:
    """The x-factorable planar field (x f, y g); axes become invariant."""
    f, g = _components(c, x, y)
    return float(x * f), float(y * g)


def offset_denominator(c: CenterSet, x, y) -> np.ndarray:
    """Per-center 1 + (x-a_i)^6 + (y-b_i)^6, shape (K,) + broadcast shape."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.stack([1.0 + (x - a) ** 6 + (y - b) ** 6 for a, b in c.pairs()])


def slow_manifold_v(c: CenterSet, x, y) -> np.ndarray:
    """q_i(x, y): the v-values on which the fast relaxation comes to rest."""
    return 1.0 / offset_denominator(c, x, y)


def denominator_product(c: CenterSet, x, y) -> np.ndarray:
    """h(x, y) = prod_i (1 + (x-a_i)^6 + (y-b_i)^6)."""
    return np.prod(offset_denominator(c, x, y), axis=0)


class Family(enum.Enum):
    """Closed-form field families understood by the compiled integrator."""

    PLANAR = 0
    XFACTOR_PLANAR = 1
    RECIPROCAL = 2
    FAST_SLOW = 3
    XFACTOR_FAST_SLOW = 4
    RESCALED_TWO_SPECIES = 5


@dataclass(frozen=True)
class CenterField:
    """Integrable closed-form field for one of the :class:`Family` kinds.

    Mathematically identical to the corresponding PolyOdeSystem where one
    exists, but evaluated from the per-center closed form, which is both
    faster and better conditioned than the expanded monomial sum.
    """

    family: Family
    centers: CenterSet
    eps: float = 1.0

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")

    @property
    def dim(self) -> int:
        if self.family in (Family.PLANAR, Family.XFACTOR_PLANAR, Family.RESCALED_TWO_SPECIES):
            return 2
        return self.centers.K + 2

    @property
    def names(self) -> tuple[str, ...]:
        if self.dim == 2:
            return ("X", "Y")
        prefix = "U" if self.family is Family.RECIPROCAL else "V"
        return ("X", "Y", *(f"{prefix}{i+1}" for i in range(self.centers.K)))

    def evaluate(self, state) -> np.ndarray:
        state = np.asarray(state, dtype=float)
        if state.shape != (self.dim,):
            raise ValueError(f"state has shape {state.shape}, expected ({self.dim},)")
        from . import _kernels

        out = np.empty(self.dim)
        _kernels.center_rhs(self.family.value, self.centers.K, self.kernel_floats(), state, out)
        return out

    def kernel_floats(self) -> np.ndarray:
        c = self.centers
        return np.array([*c.a, *c.b, self.eps], dtype=np.float64)


# -- rate constants ----------------------------------------------------------


@dataclass(frozen=True)
class RateTable:
    """The 21 rate constants per center for the seventh-order network.

    Column j holds constant number j+1: columns 0..10 are the fast-equation
    constants (scaled by 1/eps), columns 11..20 the x/y-equation constants.
    """

    k: np.ndarray  # (K, 21)
    eps: float

    def __post_init__(self):
        if np.any(self.k <= 0):
            raise NonpositiveRateError("rate table contains non-positive entries")


def rate_table(c: CenterSet, eps: float) -> RateTable:
    """All 21K rate constants; raises NonpositiveRateError for centers <= 1."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    _warn_exactness(c)
    K = c.K
    k = np.empty((K, 21))
    for i, (a, b) in enumerate(c.pairs()):
        k[i, 0] = (1.0 + a**6 + b**6) / eps
        k[i, 1] = 6.0 * a**5 / eps
        k[i, 2] = 6.0 * b**5 / eps
        k[i, 3] = 15.0 * a**4 / eps
        k[i, 4] = 15.0 * b**4 / eps
        k[i, 5] = 20.0 * a**3 / eps
        k[i, 6] = 20.0 * b**3 / eps
        k[i, 7] = 15.0 * a**2 / eps
        k[i, 8] = 15.0 * b**2 / eps
        k[i, 9] = 6.0 * a / eps
        k[i, 10] = 6.0 * b / eps
        k[i, 11] = 3.0 * a
        k[i, 12] = 3.0 * a**2 + b**2 - 1.0
        k[i, 13] = a**3 + a * b**2 + b - a
        k[i, 14] = 2.0 * b
        k[i, 15] = 1.0 + 2.0 * a * b
        k[i, 16] = 3.0 * b
        k[i, 17] = a**2 + 3.0 * b**2 - 1.0
        k[i, 18] = b**3 + a**2 * b - a - b
        k[i, 19] = 2.0 * a
        k[i, 20] = 2.0 * a * b - 1.0
    bad = np.argwhere(k <= 0)
    if bad.size:
        i, j = bad[0]
        raise NonpositiveRateError(
            f"constant {j + 1} for center {i + 1} is {k[i, j]:g} <= 0 "
            f"(centers must exceed 1)"
        )
    return RateTable(k, eps)


# -- polynomial system builders ---------------------------------------------


def _center_brackets(n: int, a: float, b: float) -> tuple[Poly, Poly]:
    """The per-center numerators (x-a){1-(x-a)^2-(y-b)^2}-(y-b) and the
    y-counterpart, expanded over n variables (x is var 0, y is var 1)."""
    zx = shifted_power(n, 0, a, 1)
    zy = shifted_power(n, 1, b, 1)
    s = Poly.const(n, 1.0) - zx * zx - zy * zy
    return zx * s - zy, zy * s + zx


def _v_names(K: int, prefix: str = "V") -> tuple[str, ...]:
    return tuple(f"{prefix}{i+1}" for i in range(K))


def reciprocal_extension(c: CenterSet) -> PolyOdeSystem:
    """(K+2)-dim polynomial form with u_i = 1/(1+(x-a_i)^6+(y-b_i)^6).

    Equivalent to the planar flow only when the u_i start at their defining
    values; other initial data drifts off (u_i -> 0 or blows up), which is
    why the fast-slow extension replaces it.
    """
    _warn_exactness(c)
    _warn_separation(c)
    K = c.K
    n = K + 2
    ex = []
    ey = []
    for a, b in c.pairs():
        bx, by = _center_brackets(n, a, b)
        ex.append(bx)
        ey.append(by)
    F = Poly(n)
    G = Poly(n)
    for k in range(K):
        u_k = Poly.var(n, 2 + k)
        F = F + u_k * ex[k]
        G = G + u_k * ey[k]
    rhs = [F.monomials(), G.monomials()]
    for i, (a, b) in enumerate(c.pairs()):
        u_sq = Poly.var(n, 2 + i) * Poly.var(n, 2 + i)
        du = (u_sq * (shifted_power(n, 0, a, 5) * F + shifted_power(n, 1, b, 5) * G)) * -6.0
        rhs.append(du.monomials())
    return PolyOdeSystem(n, rhs, names=("X", "Y", *_v_names(K, "U")))


def _fast_slow_rhs(c: CenterSet, eps: float, x_factored: bool):
    K = c.K
    n = K + 2
    x_var = Poly.var(n, 0)
    y_var = Poly.var(n, 1)
    F = Poly(n)
    G = Poly(n)
    for k, (a, b) in enumerate(c.pairs()):
        bx, by = _center_brackets(n, a, b)
        v_k = Poly.var(n, 2 + k)
        F = F + v_k * bx
        G = G + v_k * by
    if x_factored:
        F = x_var * F
        G = y_var * G
    rhs = [F.monomials(), G.monomials()]
    for i, (a, b) in enumerate(c.pairs()):
        den = Poly.const(n, 1.0) + shifted_power(n, 0, a, 6) + shifted_power(n, 1, b, 6)
        dv = (Poly.const(n, 1.0) - Poly.var(n, 2 + i) * den) * (1.0 / eps)
        rhs.append(dv.monomials())
    return PolyOdeSystem(n, rhs, names=("X", "Y", *_v_names(K)))


def fast_slow_extension(c: CenterSet, eps: float) -> PolyOdeSystem:
    """(K+2)-dim fast-slow polynomial system.

    eps * dv_i/dt = 1 - v_i (1 + (x-a_i)^6 + (y-b_i)^6), so the v_i relax
    onto the slow manifold v_i = q_i(x, y) and the (x, y) dynamics reduce to
    the planar field.  Not kinetic: the x/y equations keep negative cross
    terms, which the x-factorable transform removes.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    _warn_exactness(c)
    _warn_separation(c)
    return _fast_slow_rhs(c, eps, x_factored=False)


def factored_system(c: CenterSet, eps: float) -> PolyOdeSystem:
    """x-factorable transform of the fast-slow system: a kinetic system.

    The x and y equations are multiplied by their own variable, making every
    negative term own at least one unit of its species.  Centers must exceed
    1 so all derived rate constants stay positive.
    """
    rate_table(c, eps)  # validates positivity, warns on exactness
    _warn_separation(c)
    return _fast_slow_rhs(c, eps, x_factored=True)


def seventh_order_crn(
    K: int,
    eps: float,
    centers: CenterSet | None = None,
    merge_policy: MergePolicy = MergePolicy.MERGE_SHARED_REACTANTS,
) -> Crn:
    """CRN with K+2 species and 29K reactions of order <= 7, K stable cycles.

    Built by compiling :func:`factored_system`; the shared -v_i x^2 y^2 term
    of the x and y equations is realized as the single merged reaction
    V_i + 2X + 2Y -> V_i + X + Y, giving 29K instead of 30K reactions.
    """
    if centers is None:
        centers = default_centers(K)
    elif centers.K != K:
        raise ValueError(f"centers have K={centers.K}, expected {K}")
    sys = factored_system(centers, eps)
    return ode_to_crn(sys, merge_policy)


# -- quadratized (bimolecular) construction ---------------------------------

#: Slaved value of each auxiliary W species, as (exponent of x, exponent of y).
W_MONOMIALS = (
    (2, 0), (3, 0), (4, 0), (5, 0), (6, 0),
    (0, 2), (0, 3), (0, 4), (0, 5), (0, 6),
    (1, 2), (2, 1),
)
#: Slaved value of each Z_{i,j} species as (x, y) exponents (times v_i).
Z_MONOMIALS = ((1, 0), (0, 1), (3, 0), (0, 3), (1, 2), (2, 1))


def quadratized_names(K: int) -> tuple[str, ...]:
    return (
        "X",
        "Y",
        *_v_names(K),
        *(f"W{l+1}" for l in range(12)),
        *(f"Z{i+1},{j+1}" for i in range(K) for j in range(6)),
    )


def quadratized_system(
    K: int,
    eps: float,
    delta: float,
    centers: CenterSet | None = None,
) -> PolyOdeSystem:
    """(7K+14)-dim kinetic system with all terms of degree <= 2.

    W species track powers of x and y (W1=x^2 ... W5=x^6, W6=y^2 ... W10=y^6,
    W11=xy^2, W12=x^2y) and Z_{i,j} track v_i times small monomials, each
    relaxing at rate 1/delta; substituting their rest values recovers the
    seventh-order right-hand sides.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if centers is None:
        centers = default_centers(K)
    elif centers.K != K:
        raise ValueError(f"centers have K={centers.K}, expected {K}")
    kt = rate_table(centers, eps).k
    _warn_separation(centers)

    n = 7 * K + 14
    x, y = 0, 1

    def v(i: int) -> int:
        return 2 + i

    def w(l: int) -> int:  # l is 0-based (W1 -> 0)
        return 2 + K + l

    def z(i: int, j: int) -> int:  # j is 0-based (Z_{i,1} -> 0)
        return 2 + K + 12 + 6 * i + j

    def mono(coef: float, *factors: int) -> Monomial:
        e = [0] * n
        for d in factors:
            e[d] += 1
        return Monomial(coef, tuple(e))

    dx: list[Monomial] = []
    dy: list[Monomial] = []
    for i in range(K):
        a, b = centers.a[i], centers.b[i]
        k = kt[i]
        dx += [
            mono(-1.0, x, z(i, 2)),
            mono(k[11], v(i), w(1)),
            mono(-k[12], x, z(i, 0)),
            mono(k[13], v(i), x),
            mono(a, v(i), w(10)),
            mono(k[14], v(i), w(11)),
            mono(-k[15], x, z(i, 1)),
            mono(-1.0, x, z(i, 4)),
        ]
        dy += [
            mono(-1.0, y, z(i, 3)),
            mono(k[16], v(i), w(6)),
            mono(-k[17], y, z(i, 1)),
            mono(k[18], v(i), y),
            mono(b, v(i), w(11)),
            mono(k[19], v(i), w(10)),
            mono(-k[20], y, z(i, 0)),
            mono(-1.0, y, z(i, 5)),
        ]
    rhs: list[list[Monomial]] = [dx, dy]

    inv_eps = 1.0 / eps
    for i in range(K):
        k = kt[i]
        rhs.append(
            [
                mono(-k[0], v(i)),
                mono(k[1], v(i), x),
                mono(k[2], v(i), y),
                mono(-k[3], v(i), w(0)),
                mono(-k[4], v(i), w(5)),
                mono(k[5], v(i), w(1)),
                mono(k[6], v(i), w(6)),
                mono(-k[7], v(i), w(2)),
                mono(-k[8], v(i), w(7)),
                mono(k[9], v(i), w(3)),
                mono(k[10], v(i), w(8)),
                mono(-inv_eps, v(i), w(4)),
                mono(-inv_eps, v(i), w(9)),
                Monomial(inv_eps, (0,) * n),
            ]
        )

    inv_delta = 1.0 / delta
    # W1 = x^2 and W6 = y^2 feed off the base species; the rest chain.
    w_sources = [
        (x, x), (x, w(0)), (x, w(1)), (x, w(2)), (x, w(3)),
        (y, y), (y, w(5)), (y, w(6)), (y, w(7)), (y, w(8)),
        (x, w(5)), (y, w(0)),
    ]
    for l, src in enumerate(w_sources):
        rhs.append([mono(inv_delta, *src), mono(-inv_delta, w(l))])

    for i in range(K):
        z_sources = [(v(i), x), (v(i), y), (v(i), w(1)), (v(i), w(6)), (v(i), w(10)), (v(i), w(11))]
        for j, src in enumerate(z_sources):
            rhs.append([mono(inv_delta, *src), mono(-inv_delta, z(i, j))])

    return PolyOdeSystem(n, rhs, names=quadratized_names(K))


def quadratized_delta_bound(c: CenterSet, eps: float = 1.0) -> float:
    """A delta small enough for the quadratized system to stay stable.

    With the auxiliaries frozen, the x and v equations couple with positive
    gains d(dx/dt)/dv and d(dv/dt)/dx = (6 a^5 / eps) v, giving a transverse
    saddle rate lambda = sqrt of their product; the W/Z relaxation (rate
    1/delta) must beat it or trajectories blow up.  Returns 0.2 / lambda at
    the worst cycle anchor; for centers near 8 this is a few times 1e-6,
    far below naive guesses like delta = eps/100.
    """
    kt = rate_table(c, eps).k
    worst = 0.0
    for i, (a, b) in enumerate(c.pairs()):
        x, y = a + 1.0, b
        v = float(slow_manifold_v(c, x, y)[i])
        dx_dv = kt[i, 11] * x**3 + kt[i, 13] * x + a * x * y**2 + kt[i, 14] * x**2 * y
        dv_dx = kt[i, 1] * v
        worst = max(worst, math.sqrt(dx_dv * dv_dx))
    return 0.2 / worst


def quadratized_lift(c: CenterSet, x: float, y: float, v: Sequence[float]) -> np.ndarray:
    """Full quadratized state with W and Z at their slaved (delta -> 0) values."""
    v = np.asarray(v, dtype=float)
    if v.shape != (c.K,):
        raise ValueError(f"expected {c.K} v-components")
    w = [x**ex * y**ey for ex, ey in W_MONOMIALS]
    zz = [vi * x**ex * y**ey for vi in v for ex, ey in Z_MONOMIALS]
    return np.array([x, y, *v, *w, *zz])


def bimolecular_crn(
    K: int,
    eps: float,
    delta: float,
    centers: CenterSet | None = None,
) -> Crn:
    """CRN with 7K+14 species and 42K+24 reactions of order <= 2.

    Compiled per-term from :func:`quadratized_system` (no merged reactions:
    the shared x^2 y^2 sink is carried by separate Z_{i,5} / Z_{i,6} species
    here, so every monomial maps to its own bimolecular reaction).
    """
    return ode_to_crn(quadratized_system(K, eps, delta, centers), MergePolicy.PER_TERM)


# -- two-species construction ------------------------------------------------


def two_species_system(c: CenterSet) -> PolyOdeSystem:
    """Two-variable kinetic system of degree exactly 6K-2 with K cycles.

    Multiplying the planar field by h(x, y) = prod_k (1+(x-a_k)^6+(y-b_k)^6)
    cancels every denominator (a pure time rescale, so orbits are those of
    the planar field), and the x-factorable transform then makes both
    equations kinetic.
    """
    _warn_exactness(c)
    _warn_separation(c)
    K = c.K
    n = 2
    dens = []
    for a, b in c.pairs():
        dens.append(Poly.const(n, 1.0) + shifted_power(n, 0, a, 6) + shifted_power(n, 1, b, 6))
    # prefix[k] = D_0 ... D_{k-1}, suffix[k] = D_{k+1} ... D_{K-1}
    prefix = [Poly.const(n, 1.0)]
    for d in dens[:-1]:
        prefix.append(prefix[-1] * d)
    suffix = [Poly.const(n, 1.0)] * K
    for k in range(K - 2, -1, -1):
        suffix[k] = suffix[k + 1] * dens[k + 1]
    fx = Poly(n)
    fy = Poly(n)
    for k, (a, b) in enumerate(c.pairs()):
        bx, by = _center_brackets(n, a, b)
        others = prefix[k] * suffix[k]
        fx = fx + bx * others
        fy = fy + by * others
    fx = Poly.var(n, 0) * fx
    fy = Poly.var(n, 1) * fy
    return PolyOdeSystem(2, [fx.monomials(), fy.monomials()], names=("X", "Y"))
