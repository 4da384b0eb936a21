"""Numerical certification of the limit-cycle claims.

Per target cycle there is a trapping annulus 1/2 < r^2 < 2 around its center.
Certification checks, numerically, the three ingredients of the underlying
argument: the flow crosses both annulus boundaries inward (radial flux
sign), the annulus holds no equilibrium (field magnitude bounded away from
zero), and integrated trajectories actually close up into one distinct cycle
per annulus (Poincare section return map).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .integration import IntegratorSettings, Trajectory, batch_integrate
from .systems import (
    CenterField,
    CenterSet,
    Family,
    default_centers,
    denominator_product,
    quadratized_lift,
    quadratized_system,
    slow_manifold_v,
    two_species_system,
    _components,
)

#: Equilibrium-exclusion threshold: the proof bound sqrt(2)/9 less 10% slack
#: for the cross-center terms.
EQUILIBRIUM_THRESHOLD = 0.9 * math.sqrt(2.0) / 9.0


class TooShort(RuntimeError):
    """Trajectory has fewer than 3 Poincare-section crossings post-transient."""


@dataclass(frozen=True)
class Annulus:
    """Trapping ring 1/2 < (x-a)^2 + (y-b)^2 < 2 around one cycle center."""

    center: tuple[float, float]
    r_inner_sq: float = 0.5
    r_outer_sq: float = 2.0

    def __post_init__(self):
        if not self.r_inner_sq < self.r_outer_sq:
            raise ValueError("need r_inner_sq < r_outer_sq")

    def contains_loop(self, xy: np.ndarray) -> bool:
        r2 = (xy[:, 0] - self.center[0]) ** 2 + (xy[:, 1] - self.center[1]) ** 2
        return bool(np.all((r2 > self.r_inner_sq) & (r2 < self.r_outer_sq)))


@dataclass(frozen=True)
class FluxReport:
    """Signed radial flux over one annulus boundary circle.

    On the outer circle the flow must point inward (all fluxes negative); on
    the inner circle outward-from-center means into the ring (all positive).
    """

    boundary: str  # "outer" | "inner"
    n_samples: int
    min_signed_flux: float
    max_signed_flux: float

    @property
    def passed(self) -> bool:
        if self.boundary == "outer":
            return self.max_signed_flux < 0.0
        return self.min_signed_flux > 0.0

    @property
    def margin(self) -> float:
        """Distance of the worst sample from the sign boundary."""
        if self.boundary == "outer":
            return -self.max_signed_flux
        return self.min_signed_flux


def flux_check(field2d, ann: Annulus, n_samples: int = 720) -> tuple[FluxReport, FluxReport]:
    """Radial dot product of the field with (x-a, y-b) on both boundaries."""
    if n_samples < 360:
        raise ValueError("n_samples must be >= 360")
    a, b = ann.center
    theta = np.linspace(0.0, 2.0 * np.pi, n_samples, endpoint=False)
    reports = []
    for boundary, r2 in (("outer", ann.r_outer_sq), ("inner", ann.r_inner_sq)):
        r = math.sqrt(r2)
        zx = r * np.cos(theta)
        zy = r * np.sin(theta)
        fx, fy = field2d(a + zx, b + zy)
        flux = zx * fx + zy * fy
        reports.append(
            FluxReport(boundary, n_samples, float(np.min(flux)), float(np.max(flux)))
        )
    return reports[0], reports[1]


def equilibrium_scan(field2d, ann: Annulus, grid_n: int = 120) -> float:
    """Min over a polar grid of max(|f|, |g|); large values exclude equilibria.

    The grid is uniform in r^2 over [r_inner_sq, r_outer_sq] and in angle.
    """
    if grid_n < 100:
        raise ValueError("grid_n must be >= 100")
    a, b = ann.center
    r = np.sqrt(np.linspace(ann.r_inner_sq, ann.r_outer_sq, grid_n))
    theta = np.linspace(0.0, 2.0 * np.pi, grid_n, endpoint=False)
    rr, tt = np.meshgrid(r, theta, indexing="ij")
    fx, fy = field2d(a + rr * np.cos(tt), b + rr * np.sin(tt))
    return float(np.min(np.maximum(np.abs(fx), np.abs(fy))))


@dataclass(frozen=True)
class CycleReport:
    """One detected closed orbit.

    ``loop`` is a closed polyline in full state space (first and last rows
    agree to the return tolerance); geometric comparisons use its (x, y)
    projection.
    """

    loop: np.ndarray
    period: float
    containing_annulus: int | None = None
    basin_count: int = 1

    @property
    def loop_xy(self) -> np.ndarray:
        return self.loop[:, :2]


def _section_crossings(times, states, centroid):
    """Interpolated states/times where the winding angle gains full turns."""
    psi = np.unwrap(np.arctan2(states[:, 1] - centroid[1], states[:, 0] - centroid[0]))
    total = psi[-1] - psi[0]
    direction = 1.0 if total >= 0 else -1.0
    rel = direction * (psi - psi[0])
    crossing_states = []
    crossing_times = []
    crossing_index = []
    target = 2.0 * np.pi
    j = 1
    n = len(rel)
    while j < n:
        if rel[j] >= target and rel[j - 1] < target:
            alpha = (target - rel[j - 1]) / (rel[j] - rel[j - 1])
            crossing_times.append(times[j - 1] + alpha * (times[j] - times[j - 1]))
            crossing_states.append(states[j - 1] + alpha * (states[j] - states[j - 1]))
            crossing_index.append(j)
            target += 2.0 * np.pi
        else:
            j += 1
    return crossing_times, crossing_states, crossing_index


def detect_cycle(
    traj: Trajectory,
    transient_fraction: float = 0.5,
    return_tol: float = 1e-4,
) -> CycleReport | None:
    """Locate a closed orbit from the tail of a trajectory.

    The transient prefix is discarded; a Poincare section is taken as the ray
    from the centroid of the remaining (x, y) points through the first of
    them.  Successive crossings give return points; a cycle is reported once
    three consecutive return points agree within ``return_tol``, with the
    period estimated as the mean return time over the agreeing tail.  Returns
    None when return points keep drifting (spiral into a fixed point) and
    raises :class:`TooShort` when fewer than 3 crossings exist.
    """
    if not 0.0 <= transient_fraction < 1.0:
        raise ValueError("transient_fraction must be in [0, 1)")
    if traj.diverged:
        return None
    if traj.meta.dim < 2:
        raise ValueError("cycle detection needs at least 2 state dimensions")
    times = traj.times
    states = traj.states
    t_cut = times[0] + transient_fraction * (times[-1] - times[0])
    start = int(np.searchsorted(times, t_cut))
    if len(times) - start < 4:
        raise TooShort("not enough post-transient samples")
    times = times[start:]
    states = states[start:]
    centroid = states[:, :2].mean(axis=0)

    c_times, c_states, _ = _section_crossings(times, states, centroid)
    if len(c_times) < 3:
        raise TooShort(f"only {len(c_times)} section crossings post-transient")

    pts = np.array([s[:2] for s in c_states])
    gaps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    # first index where three consecutive return points agree
    ok = gaps <= return_tol
    run_start = None
    for m in range(len(ok) - 1):
        if ok[m] and ok[m + 1]:
            run_start = m
            break
    if run_start is None:
        return None
    run_end = run_start + 1
    while run_end + 1 < len(ok) and ok[run_end + 1]:
        run_end += 1
    # crossings run_start .. run_end+1 agree pairwise
    intervals = np.diff(np.array(c_times[run_start:run_end + 2]))
    period = float(np.mean(intervals))

    # assemble the loop between the final agreeing pair of crossings
    t_a = c_times[run_end]
    t_b = c_times[run_end + 1]
    inside = (times > t_a) & (times < t_b)
    loop = np.vstack([c_states[run_end], states[inside], c_states[run_end + 1]])
    return CycleReport(loop=loop, period=period)


def _points_to_polyline(points: np.ndarray, line: np.ndarray) -> np.ndarray:
    """Distance from each point to a polyline, with segment interpolation."""
    a = line[:-1]
    d = line[1:] - a
    seg_len2 = np.einsum("ij,ij->i", d, d)
    seg_len2[seg_len2 == 0.0] = 1.0
    # t[p, s] = clamp(((points[p]-a[s]) . d[s]) / |d[s]|^2)
    diff = points[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("psj,sj->ps", diff, d) / seg_len2[None, :], 0.0, 1.0)
    proj = a[None, :, :] + t[:, :, None] * d[None, :, :]
    dist = np.linalg.norm(points[:, None, :] - proj, axis=2)
    return dist.min(axis=1)


def dist_to_cycle(z, cycle: CycleReport) -> float:
    """Minimum Euclidean distance from a state to the cycle polyline.

    A 2-component query is matched against the (x, y) projection of the
    loop; otherwise dimensions must agree.
    """
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        raise ValueError("z must be a single state vector")
    if z.shape[0] == 2:
        loop = cycle.loop_xy
    elif z.shape[0] == cycle.loop.shape[1]:
        loop = cycle.loop
    else:
        raise ValueError(f"state has {z.shape[0]} components, loop has {cycle.loop.shape[1]}")
    return float(_points_to_polyline(z[None, :], loop)[0])


def _subsample(loop: np.ndarray, max_pts: int = 400) -> np.ndarray:
    if loop.shape[0] <= max_pts:
        return loop
    idx = np.linspace(0, loop.shape[0] - 1, max_pts).round().astype(int)
    return loop[idx]


def loop_hausdorff(a: CycleReport, b: CycleReport) -> float:
    """Symmetric Hausdorff distance between two loops' (x, y) projections.

    Loops are subsampled to a few hundred points; the induced chord error is
    O(segment^2 * curvature), far below the tolerances compared against.
    """
    pa = _subsample(a.loop_xy)
    pb = _subsample(b.loop_xy)
    d_ab = _points_to_polyline(pa, pb).max()
    d_ba = _points_to_polyline(pb, pa).max()
    return float(max(d_ab, d_ba))


def count_cycles(
    field,
    seeds,
    settings: IntegratorSettings | None = None,
    cluster_tol: float = 0.3,
    transient_fraction: float = 0.5,
    max_workers: int | None = None,
    annuli: list[Annulus] | None = None,
):
    """Detect cycles from every seed and cluster them into distinct orbits.

    Seeds that diverge, stall, or spiral into fixed points contribute
    nothing.  Cycles whose mutual Hausdorff distance (both ways, on the
    (x, y) projection) is below ``cluster_tol`` are one orbit; each cluster
    reports how many seeds it attracted.  Returns (count, reports).
    """
    results = batch_integrate(field, seeds, settings, max_workers=max_workers)
    found: list[CycleReport] = []
    for res in results:
        if not res.ok:
            continue
        try:
            rep = detect_cycle(res.trajectory, transient_fraction)
        except TooShort:
            continue
        if rep is not None:
            found.append(rep)
    return cluster_cycles(found, cluster_tol, annuli)


def cluster_cycles(
    found: list[CycleReport],
    cluster_tol: float = 0.3,
    annuli: list[Annulus] | None = None,
):
    """Group detected cycles into distinct orbits (union-find on Hausdorff)."""
    n = len(found)
    parent = list(range(n))

    def root(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    # bounding circles give a cheap lower bound on the Hausdorff distance
    cents = [c.loop_xy.mean(axis=0) for c in found]
    radii = [float(np.max(np.linalg.norm(c.loop_xy - cents[k], axis=1))) for k, c in enumerate(found)]
    for i in range(n):
        for j in range(i + 1, n):
            if root(i) == root(j):
                continue
            lower = np.linalg.norm(cents[i] - cents[j]) - radii[i] - radii[j]
            if lower >= cluster_tol:
                continue
            if loop_hausdorff(found[i], found[j]) < cluster_tol:
                parent[root(j)] = root(i)

    clusters: dict[int, list[CycleReport]] = {}
    for i in range(n):
        clusters.setdefault(root(i), []).append(found[i])

    reps: list[CycleReport] = []
    for members in clusters.values():
        # deterministic representative regardless of seed order: smallest
        # loop-centroid, then smallest period
        members = sorted(
            members,
            key=lambda c: (round(c.loop_xy[:, 0].mean(), 9), round(c.loop_xy[:, 1].mean(), 9), c.period),
        )
        rep = members[0]
        idx = None
        if annuli is not None:
            hits = [k for k, ann in enumerate(annuli) if ann.contains_loop(rep.loop_xy)]
            idx = hits[0] if len(hits) == 1 else None
        reps.append(replace(rep, basin_count=len(members), containing_annulus=idx))
    reps.sort(key=lambda c: (c.loop_xy[:, 0].mean(), c.loop_xy[:, 1].mean()))
    return len(reps), reps


# -- certification orchestration --------------------------------------------

#: system kinds accepted by certify / the CLI
KINDS = ("planar", "xfactored-planar", "fast-slow", "factored", "quadratized", "two-species")


@dataclass(frozen=True)
class AnnulusCheck:
    index: int
    outer_flux: float  # worst (max) signed flux on the outer boundary
    inner_flux: float  # worst (min) signed flux on the inner boundary
    min_field_mag: float
    passed: bool


@dataclass(frozen=True)
class CertificationReport:
    kind: str
    K: int
    params: dict
    annuli: tuple[AnnulusCheck, ...]
    cycles: tuple[CycleReport, ...]
    verdict: bool
    notes: tuple[str, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "K": self.K,
            "params": self.params,
            "annuli": [
                {
                    "index": a.index,
                    "outer_flux": a.outer_flux,
                    "inner_flux": a.inner_flux,
                    "min_field_mag": a.min_field_mag,
                    "pass": a.passed,
                }
                for a in self.annuli
            ],
            "cycles": [
                {
                    "period": c.period,
                    "annulus": c.containing_annulus,
                    "basin_count": c.basin_count,
                }
                for c in self.cycles
            ],
            "verdict": self.verdict,
            "notes": list(self.notes),
        }


def _reduced_field2d(kind: str, centers: CenterSet):
    """The planar field certified for each kind: the slow-manifold reduction
    for extended kinds, the field itself for planar ones."""
    def planar(x, y):
        return _components(centers, x, y)

    def xfactored(x, y):
        f, g = _components(centers, x, y)
        return x * f, y * g

    def rescaled(x, y):
        f, g = _components(centers, x, y)
        h = denominator_product(centers, x, y)
        return x * h * f, y * h * g

    if kind in ("planar", "fast-slow"):
        return planar
    if kind in ("xfactored-planar", "factored", "quadratized"):
        return xfactored
    return rescaled


def _integration_field(kind: str, centers: CenterSet, eps: float, delta: float):
    if kind == "planar":
        return CenterField(Family.PLANAR, centers)
    if kind == "xfactored-planar":
        return CenterField(Family.XFACTOR_PLANAR, centers)
    if kind == "fast-slow":
        return CenterField(Family.FAST_SLOW, centers, eps)
    if kind == "factored":
        return CenterField(Family.XFACTOR_FAST_SLOW, centers, eps)
    if kind == "quadratized":
        return quadratized_system(centers.K, eps, delta, centers)
    if kind == "two-species":
        return CenterField(Family.RESCALED_TWO_SPECIES, centers)
    raise ValueError(f"unknown system kind {kind!r}; expected one of {KINDS}")


def _lift_seed(kind: str, centers: CenterSet, x: float, y: float) -> np.ndarray:
    if kind in ("planar", "xfactored-planar", "two-species"):
        return np.array([x, y])
    v = slow_manifold_v(centers, x, y)
    if kind in ("fast-slow", "factored"):
        return np.array([x, y, *v])
    return quadratized_lift(centers, x, y, v)


def certification_seeds(kind: str, centers: CenterSet) -> list[np.ndarray]:
    """One seed on the target circle of each annulus plus a coarse outer grid."""
    seeds = [_lift_seed(kind, centers, a + 1.0, b) for a, b in centers.pairs()]
    lo_x, hi_x = min(centers.a) - 3.0, max(centers.a) + 3.0
    lo_y, hi_y = min(centers.b) - 3.0, max(centers.b) + 3.0
    if kind != "planar" and kind != "fast-slow":
        # axes are invariant for x-factored kinds; keep seeds strictly positive
        lo_x = max(lo_x, 0.5)
        lo_y = max(lo_y, 0.5)
    for gx in np.linspace(lo_x, hi_x, 4):
        for gy in np.linspace(lo_y, hi_y, 4):
            d2 = min((gx - a) ** 2 + (gy - b) ** 2 for a, b in centers.pairs())
            if d2 <= 2.0:  # already inside an annulus
                continue
            seeds.append(_lift_seed(kind, centers, float(gx), float(gy)))
    return seeds


def certify(
    kind: str,
    K: int,
    eps: float = 1.0,
    delta: float = 0.01,
    centers: CenterSet | None = None,
    settings: IntegratorSettings | None = None,
    cluster_tol: float = 0.3,
    n_flux_samples: int = 720,
    grid_n: int = 120,
    seeds=None,
    max_workers: int | None = None,
) -> CertificationReport:
    """Run the full certification for one system kind.

    Checks inward flux and equilibrium absence on every trapping annulus of
    the reduced planar field, then counts distinct cycles from an automatic
    seed grid.  The verdict is pass iff every annulus check passes, at least
    K distinct cycles are found, and each annulus contains exactly one.
    Sub-failures are collected into the report, never raised.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown system kind {kind!r}; expected one of {KINDS}")
    if centers is None:
        centers = default_centers(K)
    if centers.K != K:
        raise ValueError(f"centers have K={centers.K}, expected {K}")
    settings = settings or IntegratorSettings()
    notes: list[str] = []

    field2d = _reduced_field2d(kind, centers)
    annuli = [Annulus((a, b)) for a, b in centers.pairs()]
    checks = []
    for i, ann in enumerate(annuli):
        outer, inner = flux_check(field2d, ann, n_flux_samples)
        min_mag = equilibrium_scan(field2d, ann, grid_n)
        ok = outer.passed and inner.passed and min_mag > EQUILIBRIUM_THRESHOLD
        checks.append(
            AnnulusCheck(i, outer.max_signed_flux, inner.min_signed_flux, min_mag, ok)
        )

    if kind == "two-species":
        # time is rescaled by 1/h(x,y), so a fixed horizon would cover a
        # wildly varying number of orbits; size it from the orbit speed at
        # the first anchor point instead (radius-1 circle => period ~ 2*pi/v)
        fx, fy = field2d(np.array(centers.a[0] + 1.0), np.array(centers.b[0]))
        speed = float(np.hypot(fx, fy))
        period_est = 2.0 * math.pi / max(speed, 1e-12)
        t_end = 20.0 * period_est
        settings = settings.with_(
            t_end=t_end,
            dense_stride=t_end / 10_000.0,
            max_step=t_end / 1_000.0,
        )
        notes.append(f"two-species horizon set to {t_end:g} (~20 orbit periods)")

    if seeds is None:
        seeds = certification_seeds(kind, centers)
    field = _integration_field(kind, centers, eps, delta)
    try:
        count, reps = count_cycles(
            field,
            seeds,
            settings,
            cluster_tol=cluster_tol,
            max_workers=max_workers,
            annuli=annuli,
        )
    except Exception as exc:  # keep the report, record the failure
        notes.append(f"cycle counting failed: {type(exc).__name__}: {exc}")
        count, reps = 0, []

    per_annulus = [0] * K
    for c in reps:
        if c.containing_annulus is not None:
            per_annulus[c.containing_annulus] += 1
    verdict = (
        all(ch.passed for ch in checks)
        and count >= K
        and all(n == 1 for n in per_annulus)
    )
    params = {
        "eps": eps,
        "delta": delta,
        "centers": centers.pairs(),
        "cluster_tol": cluster_tol,
        "t_end": settings.t_end,
        "rel_tol": settings.rel_tol,
        "abs_tol": settings.abs_tol,
        "n_seeds": len(seeds),
    }
    return CertificationReport(
        kind=kind,
        K=K,
        params=params,
        annuli=tuple(checks),
        cycles=tuple(reps),
        verdict=verdict,
        notes=tuple(notes),
    )
