"""Reference demonstration configurations and their replication runner.

Six canned configurations exercise the system families on small center
layouts (these are demonstration layouts, deliberately closer together than
the guaranteed-separation defaults):

* ``1a``: planar field, 4 well-separated cycles.
* ``1b``: planar field with centers squeezed to distance 2; one large cycle
  survives and a stable equilibrium appears at (3, 3).
* ``2a``: the reciprocal extension with half-scaled u-init; outside-seeded
  trajectories stall instead of reaching cycles and every u_i decays.
* ``2b``: the fast-slow extension (eps=1), half-scaled v-init; 4 cycles.
* ``3a``: the x-factored system (eps=1), same layout; 4 cycles.
* ``3b``: the x-factored system with K=9 centers; 9 cycles.

Seed ensembles are not prescribed anywhere, so each figure documents its
own 20 seeds: one anchor seed on the target circle of every annulus (this
pins basin coverage) plus a deterministic grid fill over the plotted box.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cycles import TooShort, cluster_cycles, detect_cycle
from .integration import IntegratorSettings, batch_integrate, integrate
from .systems import CenterField, CenterSet, Family, slow_manifold_v

#: 4 well-separated demo centers.
CENTERS_FOUR = CenterSet.from_pairs([(2, 2), (2, 6), (6, 2), (6, 6)])
#: 4 centers squeezed to pairwise distance 2 (separation condition fails).
CENTERS_FOUR_TIGHT = CenterSet.from_pairs([(2, 2), (2, 4), (4, 2), (4, 4)])
#: 9 demo centers on the lattice {2, 6, 10}^2.
CENTERS_NINE = CenterSet.from_pairs(
    [(2, 2), (2, 6), (6, 2), (6, 6), (6, 10), (2, 10), (10, 2), (10, 6), (10, 10)]
)

FIGURE_IDS = ("1a", "1b", "2a", "2b", "3a", "3b")

#: Movement slower than this at the end of a run marks a stalled/fixed point.
_STALL_SPEED = 1e-5


def _grid(lo: float, hi: float, nx: int, ny: int, floor: float | None = None):
    pts = []
    for gx in np.linspace(lo, hi, nx):
        for gy in np.linspace(lo, hi, ny):
            x, y = float(gx), float(gy)
            if floor is not None:
                x = max(x, floor)
                y = max(y, floor)
            pts.append((x, y))
    return pts


def _anchors(centers: CenterSet, offset: float = 1.0):
    return [(a + offset, b) for a, b in centers.pairs()]


def _border_ring(lo: float, hi: float, n: int):
    """n points evenly spaced along the border of [lo, hi]^2."""
    side = hi - lo
    per = 4.0 * side
    pts = []
    for s in np.linspace(0.0, per, n, endpoint=False):
        s = float(s)
        if s < side:
            pts.append((lo + s, lo))
        elif s < 2 * side:
            pts.append((hi, lo + (s - side)))
        elif s < 3 * side:
            pts.append((hi - (s - 2 * side), hi))
        else:
            pts.append((lo, lo + (s - 3 * side)))
    return pts


@dataclass(frozen=True)
class FigureConfig:
    figure: str
    family: Family
    centers: CenterSet
    eps: float
    seeds_xy: tuple[tuple[float, float], ...]
    v_init: str  # "none" | "scaled" | "one"
    v_scale: float
    inside_seed_count: int  # the first N seeds are the per-annulus anchors

    def field(self) -> CenterField:
        return CenterField(self.family, self.centers, self.eps)

    def lift(self, xy) -> np.ndarray:
        x, y = xy
        if self.v_init == "none":
            return np.array([x, y])
        if self.v_init == "one":
            extra = np.ones(self.centers.K)
        else:
            extra = self.v_scale * slow_manifold_v(self.centers, x, y)
        return np.array([x, y, *extra])

    def seeds(self) -> list[np.ndarray]:
        return [self.lift(xy) for xy in self.seeds_xy]


def figure_config(figure_id: str) -> FigureConfig:
    if figure_id == "1a":
        c = CENTERS_FOUR
        return FigureConfig("1a", Family.PLANAR, c, 1.0,
                            tuple(_anchors(c) + _grid(0, 8, 4, 4)), "none", 1.0, 4)
    if figure_id == "1b":
        c = CENTERS_FOUR_TIGHT
        seeds = _anchors(c) + [(3.05, 3.05)] + _grid(0, 8, 4, 4)[:15]
        return FigureConfig("1b", Family.PLANAR, c, 1.0, tuple(seeds), "none", 1.0, 4)
    if figure_id == "2a":
        c = CENTERS_FOUR
        seeds = _anchors(c, offset=0.5) + _border_ring(-2.0, 10.0, 16)
        return FigureConfig("2a", Family.RECIPROCAL, c, 1.0, tuple(seeds), "scaled", 0.5, 4)
    if figure_id == "2b":
        c = CENTERS_FOUR
        return FigureConfig("2b", Family.FAST_SLOW, c, 1.0,
                            tuple(_anchors(c) + _grid(0, 8, 4, 4)), "scaled", 0.5, 4)
    if figure_id == "3a":
        c = CENTERS_FOUR
        seeds = _anchors(c) + _grid(0, 8, 4, 4, floor=0.5)
        return FigureConfig("3a", Family.XFACTOR_FAST_SLOW, c, 1.0, tuple(seeds), "scaled", 0.5, 4)
    if figure_id == "3b":
        c = CENTERS_NINE
        seeds = _anchors(c) + _grid(0, 12, 4, 3, floor=0.5)[:11]
        return FigureConfig("3b", Family.XFACTOR_FAST_SLOW, c, 1.0, tuple(seeds), "one", 1.0, 9)
    raise ValueError(f"unknown figure id {figure_id!r}; expected one of {FIGURE_IDS}")


@dataclass(frozen=True)
class FigureResult:
    config: FigureConfig
    results: list  # SeedResult per seed
    cycle_count: int
    cycles: list
    outside_cycle_count: int
    fixed_points: list[tuple[float, float]]
    max_tail_component: float  # largest |u_i(t_end)| over outside seeds (2a)
    refined_seeds: tuple[int, ...] = ()  # seeds whose cycle needed a second pass

    def summary_dict(self) -> dict:
        cfg = self.config
        return {
            "figure": cfg.figure,
            "family": cfg.family.name.lower(),
            "K": cfg.centers.K,
            "eps": cfg.eps,
            "centers": cfg.centers.pairs(),
            "v_init": cfg.v_init,
            "v_scale": cfg.v_scale,
            "seeds": [list(s) for s in cfg.seeds_xy],
            "inside_seed_count": cfg.inside_seed_count,
            "cycle_count": self.cycle_count,
            "cycle_periods": [c.period for c in self.cycles],
            "outside_cycle_count": self.outside_cycle_count,
            "fixed_points": [list(p) for p in self.fixed_points],
            "max_tail_component": self.max_tail_component,
            "refined_seeds": list(self.refined_seeds),
            "final_states": [
                list(r.trajectory.final_state) if r.ok else None for r in self.results
            ],
            "statuses": [
                (r.trajectory.meta.status if r.ok else f"error: {r.error}")
                for r in self.results
            ],
        }


def run_figure(
    figure_id: str,
    settings: IntegratorSettings | None = None,
    max_workers: int | None = None,
) -> FigureResult:
    """Integrate a figure's documented seed ensemble and count its cycles."""
    cfg = figure_config(figure_id)
    settings = settings or IntegratorSettings()
    field = cfg.field()
    results = batch_integrate(field, cfg.seeds(), settings, max_workers=max_workers)

    found = []
    found_outside = []
    fixed_points: list[tuple[float, float]] = []
    refined: list[int] = []
    for idx, res in enumerate(results):
        if not res.ok:
            continue
        traj = res.trajectory
        too_short = False
        try:
            rep = detect_cycle(traj, transient_fraction=0.5)
        except TooShort:
            rep = None
            too_short = True
        if rep is None and not traj.diverged:
            speed = np.linalg.norm(field.evaluate(traj.final_state)[:2])
            if speed < _STALL_SPEED:
                fixed_points.append((float(traj.final_state[0]), float(traj.final_state[1])))
                continue
            if too_short:
                # still moving but too few section crossings: a slow orbit;
                # continue from the endpoint over a fresh horizon to close it
                cont = integrate(field, traj.final_state, settings)
                refined.append(idx)
                try:
                    rep = detect_cycle(cont, transient_fraction=0.25)
                except TooShort:
                    rep = None
        if rep is not None:
            found.append(rep)
            if idx >= cfg.inside_seed_count:
                found_outside.append(rep)

    count, reps = cluster_cycles(found)
    outside_count, _ = cluster_cycles(found_outside)

    max_tail = 0.0
    if cfg.family is Family.RECIPROCAL:
        for res in results[cfg.inside_seed_count:]:
            if res.ok and not res.trajectory.diverged:
                tail = np.abs(res.trajectory.final_state[2:])
                max_tail = max(max_tail, float(tail.max()))

    return FigureResult(
        config=cfg,
        results=results,
        cycle_count=count,
        cycles=reps,
        outside_cycle_count=outside_count,
        fixed_points=fixed_points,
        max_tail_component=max_tail,
        refined_seeds=tuple(refined),
    )
