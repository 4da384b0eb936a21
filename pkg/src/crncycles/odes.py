"""Sparse-monomial polynomial ODE systems.

A system of N autonomous ODEs with polynomial right-hand sides is stored as
one list of monomials per equation.  Systems are kept in a canonical form
(like monomials combined, zero coefficients dropped, graded-lexicographic
term order) so that structural equality is meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

#: Relative tolerance used when comparing coefficients that are not exactly
#: representable (rate constants like 3*a**2 + b**2 - 1 are computed in floats).
COEFF_RTOL = 1e-12


def coeff_close(a: float, b: float, rtol: float = COEFF_RTOL) -> bool:
    """Coefficient comparison: exact when equal, relative tolerance otherwise."""
    if a == b:
        return True
    return abs(a - b) <= rtol * max(abs(a), abs(b))


@dataclass(frozen=True)
class Monomial:
    """A single term ``coeff * x_0**e_0 * ... * x_{N-1}**e_{N-1}``."""

    coeff: float
    exps: tuple[int, ...]

    def __post_init__(self):
        if self.coeff == 0:
            raise ValueError("zero-coefficient monomial")
        if any(e < 0 for e in self.exps):
            raise ValueError(f"negative exponent in {self.exps}")
        object.__setattr__(self, "exps", tuple(int(e) for e in self.exps))

    @property
    def degree(self) -> int:
        return sum(self.exps)


def _grlex_key(exps: tuple[int, ...]) -> tuple:
    # graded lexicographic: total degree first, then the exponent vector
    return (sum(exps), exps)


class PolyOdeSystem:
    """N-dimensional polynomial vector field, canonical sparse-monomial form.

    ``rhs[i]`` holds the monomials of ``dx_i/dt``.  Construction combines like
    terms, drops exact zeros and sorts each equation in graded-lexicographic
    order, so two systems are structurally equal iff their stored forms match
    term by term (coefficients compared with :func:`coeff_close`).

    ``names`` is optional display metadata (CSV headers, exports); it takes no
    part in equality.
    """

    __slots__ = ("dim", "rhs", "names", "_packed")

    def __init__(
        self,
        dim: int,
        rhs: Sequence[Iterable[Monomial]],
        names: Sequence[str] | None = None,
    ):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        if len(rhs) != dim:
            raise ValueError(f"expected {dim} equations, got {len(rhs)}")
        canon = []
        for i, terms in enumerate(rhs):
            combined: dict[tuple[int, ...], float] = {}
            for m in terms:
                if len(m.exps) != dim:
                    raise ValueError(
                        f"equation {i}: monomial has {len(m.exps)} exponents, dim={dim}"
                    )
                combined[m.exps] = combined.get(m.exps, 0.0) + m.coeff
            canon.append(
                tuple(
                    Monomial(c, e)
                    for e, c in sorted(combined.items(), key=lambda kv: _grlex_key(kv[0]))
                    if c != 0.0
                )
            )
        self.dim = dim
        self.rhs = tuple(canon)
        if names is not None:
            names = tuple(names)
            if len(names) != dim:
                raise ValueError("names length must equal dim")
        self.names = names
        self._packed = None

    # -- structure ---------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyOdeSystem):
            return NotImplemented
        if self.dim != other.dim:
            return False
        for eq_a, eq_b in zip(self.rhs, other.rhs):
            if len(eq_a) != len(eq_b):
                return False
            for ma, mb in zip(eq_a, eq_b):
                if ma.exps != mb.exps or not coeff_close(ma.coeff, mb.coeff):
                    return False
        return True

    __hash__ = None  # tolerant equality is not hashable

    def __repr__(self) -> str:
        n_terms = sum(len(eq) for eq in self.rhs)
        return f"PolyOdeSystem(dim={self.dim}, terms={n_terms})"

    @property
    def term_count(self) -> int:
        return sum(len(eq) for eq in self.rhs)

    def max_degree(self) -> int:
        return max((m.degree for eq in self.rhs for m in eq), default=0)

    def canonicalized(self) -> "PolyOdeSystem":
        """Re-run canonicalization (a no-op on an already-canonical system)."""
        return PolyOdeSystem(self.dim, self.rhs, self.names)

    # -- evaluation --------------------------------------------------------

    def evaluate(self, state: Sequence[float]) -> np.ndarray:
        """Componentwise polynomial evaluation at ``state``."""
        x = np.asarray(state, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"state has shape {x.shape}, expected ({self.dim},)")
        out = np.zeros(self.dim)
        for i, eq in enumerate(self.rhs):
            acc = 0.0
            for m in eq:
                term = m.coeff
                for d, e in enumerate(m.exps):
                    if e:
                        term *= x[d] ** e
                acc += term
            out[i] = acc
        return out

    def packed(self) -> "PackedSystem":
        """Flat-array form consumed by the compiled integrator kernels."""
        if self._packed is None:
            self._packed = _pack(self)
        return self._packed


class KineticCheck(NamedTuple):
    """Result of the realizability test for mass-action kinetics."""

    ok: bool
    violations: tuple[tuple[int, Monomial], ...]

    def __bool__(self) -> bool:
        return self.ok


def is_kinetic(sys: PolyOdeSystem) -> KineticCheck:
    """Check that every negative term in equation i contains species i.

    A polynomial system is realizable as mass-action reaction rate equations
    exactly when no equation loses mass it does not own: a monomial with a
    negative coefficient in ``dx_i/dt`` must have ``exps[i] >= 1``.
    """
    bad = []
    for i, eq in enumerate(sys.rhs):
        for m in eq:
            if m.coeff < 0 and m.exps[i] == 0:
                bad.append((i, m))
    return KineticCheck(not bad, tuple(bad))


# -- packed form for the integrator ----------------------------------------


class PackedSystem(NamedTuple):
    """CSR-style arrays for fast evaluation inside jitted kernels.

    ``eq_ptr[i]:eq_ptr[i+1]`` indexes the monomials of equation i;
    ``m_ptr[m]:m_ptr[m+1]`` indexes the nonzero (dim, exp) pairs of monomial m.
    """

    dim: int
    eq_ptr: np.ndarray  # int64, len dim+1
    m_ptr: np.ndarray  # int64, len n_mono+1
    m_dim: np.ndarray  # int64, flattened dims with nonzero exponent
    m_exp: np.ndarray  # int64, matching exponents
    coeff: np.ndarray  # float64, len n_mono


def _pack(sys: PolyOdeSystem) -> PackedSystem:
    eq_ptr = [0]
    m_ptr = [0]
    m_dim: list[int] = []
    m_exp: list[int] = []
    coeff: list[float] = []
    for eq in sys.rhs:
        for m in eq:
            coeff.append(m.coeff)
            for d, e in enumerate(m.exps):
                if e:
                    m_dim.append(d)
                    m_exp.append(e)
            m_ptr.append(len(m_dim))
        eq_ptr.append(len(coeff))
    return PackedSystem(
        sys.dim,
        np.asarray(eq_ptr, dtype=np.int64),
        np.asarray(m_ptr, dtype=np.int64),
        np.asarray(m_dim, dtype=np.int64),
        np.asarray(m_exp, dtype=np.int64),
        np.asarray(coeff, dtype=np.float64),
    )


# -- small polynomial algebra used by the system generators ----------------


class Poly:
    """Minimal multivariate polynomial on exponent-tuple dicts.

    Only what the generators need: +, -, *, integer powers and shifts like
    (x - a).  Not exported; PolyOdeSystem is the public representation.
    """

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: dict[tuple[int, ...], float] | None = None):
        self.n = n
        self.terms = terms or {}

    @classmethod
    def const(cls, n: int, c: float) -> "Poly":
        if c == 0:
            return cls(n)
        return cls(n, {(0,) * n: float(c)})

    @classmethod
    def var(cls, n: int, d: int, c: float = 1.0) -> "Poly":
        e = [0] * n
        e[d] = 1
        return cls(n, {tuple(e): float(c)})

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = out.get(e, 0.0) + c
            if s == 0.0:
                out.pop(e, None)
            else:
                out[e] = s
        return Poly(self.n, out)

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (other * -1.0)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            if other == 0:
                return Poly(self.n)
            return Poly(self.n, {e: c * other for e, c in self.terms.items()})
        out: dict[tuple[int, ...], float] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                s = out.get(e, 0.0) + c1 * c2
                if s == 0.0:
                    out.pop(e, None)
                else:
                    out[e] = s
        return Poly(self.n, out)

    __rmul__ = __mul__

    def pow(self, k: int) -> "Poly":
        out = Poly.const(self.n, 1.0)
        for _ in range(k):
            out = out * self
        return out

    def monomials(self) -> list[Monomial]:
        return [Monomial(c, e) for e, c in self.terms.items() if c != 0.0]


def shifted_power(n: int, d: int, a: float, k: int) -> Poly:
    """Expand (x_d - a)**k via the binomial theorem."""
    out = Poly(n)
    for m in range(k + 1):
        c = math.comb(k, m) * (-a) ** (k - m)
        if c == 0.0:
            continue
        e = [0] * n
        e[d] = m
        out = out + Poly(n, {tuple(e): float(c)})
    return out
