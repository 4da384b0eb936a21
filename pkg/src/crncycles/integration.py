"""Trajectory integration for polynomial systems and closed-form fields.

The integrator is an explicit adaptive Dormand-Prince 5(4) pair with cubic
Hermite dense output, compiled with numba (see ``_kernels``).  Fast-relaxing
parameter regimes are handled by step-size control alone; a genuinely
intractable step collapse surfaces as :class:`StepSizeUnderflow` instead of
being hidden by an implicit method.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .formats import trajectory_to_csv
from .odes import PolyOdeSystem
from .systems import CenterField

#: Any component beyond this magnitude terminates the run as diverged.
DIVERGENCE_LIMIT = 1e12
#: Steps below this length abort the run (stiffness/singularity guard).
MIN_STEP = 1e-14
#: An underflow with the state grown this far beyond its seed scale is a
#: finite-time blowup (the step collapses while chasing the singularity, long
#: before any component reaches DIVERGENCE_LIMIT) and is reported as
#: divergence rather than as a step-size failure.
BLOWUP_GROWTH = 100.0


class IntegrationError(RuntimeError):
    pass


class StepSizeUnderflow(IntegrationError):
    """The adaptive step fell below MIN_STEP with the state still bounded."""


@dataclass(frozen=True)
class IntegratorSettings:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-11
    max_step: float = 0.1
    t_end: float = 100.0
    dense_stride: float = 0.01

    def __post_init__(self):
        if self.rel_tol < 1e-14:
            raise ValueError("rel_tol must be >= 1e-14")
        for name in ("abs_tol", "max_step", "dense_stride"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")

    def with_(self, **kw) -> "IntegratorSettings":
        return replace(self, **kw)


@dataclass(frozen=True)
class TrajectoryMeta:
    dim: int
    seed_state: tuple[float, ...]
    settings: IntegratorSettings
    accepted_steps: int
    rejected_steps: int
    status: str  # "completed" | "diverged"
    names: tuple[str, ...]


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    meta: TrajectoryMeta

    @property
    def diverged(self) -> bool:
        return self.meta.status == "diverged"

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    def to_csv(self) -> str:
        return trajectory_to_csv(self.times, self.states, self.meta.names)


def _field_handles(field):
    """Map a field object onto (kind, K, fp, packed arrays, dim, names)."""
    empty_i = _kernels._EMPTY_I
    empty_f = _kernels._EMPTY_F
    if isinstance(field, CenterField):
        return (
            _kernels.KERNEL_CENTER_BASE + field.family.value,
            field.centers.K,
            field.kernel_floats(),
            empty_i,
            empty_i,
            empty_i,
            empty_i,
            empty_f,
            field.dim,
            field.names,
        )
    if isinstance(field, PolyOdeSystem):
        p = field.packed()
        names = field.names if field.names is not None else tuple(
            f"X{i+1}" for i in range(field.dim)
        )
        return (
            _kernels.KERNEL_POLY,
            0,
            empty_f,
            p.eq_ptr,
            p.m_ptr,
            p.m_dim,
            p.m_exp,
            p.coeff,
            field.dim,
            names,
        )
    raise TypeError(f"cannot integrate field of type {type(field).__name__}")


def _sample_times(settings: IntegratorSettings) -> np.ndarray:
    t_end = settings.t_end
    if t_end == 0.0:
        return np.zeros(1)
    n = int(np.floor(t_end / settings.dense_stride + 1e-9))
    times = np.arange(n + 1, dtype=float) * settings.dense_stride
    if times[-1] < t_end * (1.0 - 1e-12):
        times = np.append(times, t_end)
    else:
        times[-1] = t_end
    return times


def integrate(field, x0, settings: IntegratorSettings | None = None) -> Trajectory:
    """Integrate ``field`` from ``x0``; dense samples every ``dense_stride``.

    Divergence (any component beyond 1e12, or a finite-time blowup that
    collapses the step size) truncates the run and flags the trajectory;
    a step-size collapse with the state still bounded raises
    :class:`StepSizeUnderflow`.
    """
    settings = settings or IntegratorSettings()
    (kind, n_centers, fp, eq_ptr, m_ptr, m_dim, m_exp, coeff, dim, names) = _field_handles(field)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (dim,):
        raise ValueError(f"seed has shape {x0.shape}, expected ({dim},)")
    if not np.all(np.isfinite(x0)):
        raise ValueError("seed state must be finite")

    samples = _sample_times(settings)
    out = np.empty((samples.shape[0], dim))
    y_final = np.empty(dim)
    core = _kernels.CORE_BY_KIND[kind]
    n_filled, status, accepted, rejected, t_final = core(
        n_centers,
        fp,
        eq_ptr,
        m_ptr,
        m_dim,
        m_exp,
        coeff,
        x0,
        settings.t_end,
        settings.rel_tol,
        settings.abs_tol,
        settings.max_step,
        samples,
        out,
        y_final,
        DIVERGENCE_LIMIT,
        MIN_STEP,
    )

    if status == _kernels.STATUS_UNDERFLOW:
        finite = y_final[np.isfinite(y_final)]
        peak = np.max(np.abs(finite)) if finite.size else np.inf
        if peak <= BLOWUP_GROWTH * max(1.0, np.max(np.abs(x0))):
            raise StepSizeUnderflow(
                f"step size fell below {MIN_STEP:g} at t={t_final:.6g} "
                f"(accepted {accepted} steps)"
            )
        status = _kernels.STATUS_DIVERGED

    times = samples[:n_filled]
    states = out[:n_filled]
    if status == _kernels.STATUS_DIVERGED:
        if n_filled == 0:
            times = np.array([t_final])
            states = y_final.reshape(1, -1)
        elif t_final > times[-1]:
            times = np.append(times, t_final)
            states = np.vstack([states, y_final])

    meta = TrajectoryMeta(
        dim=dim,
        seed_state=tuple(float(v) for v in x0),
        settings=settings,
        accepted_steps=int(accepted),
        rejected_steps=int(rejected),
        status="diverged" if status == _kernels.STATUS_DIVERGED else "completed",
        names=tuple(names),
    )
    return Trajectory(times=times, states=states, meta=meta)


@dataclass(frozen=True)
class SeedResult:
    """Outcome of one seed in a batch: a trajectory or an error message."""

    seed: tuple[float, ...]
    trajectory: Trajectory | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.trajectory is not None


def batch_integrate(
    field,
    seeds,
    settings: IntegratorSettings | None = None,
    max_workers: int | None = None,
) -> list[SeedResult]:
    """Integrate every seed; output order matches seed order.

    Seeds run concurrently (the compiled stepper releases the GIL); a failure
    of one seed is recorded in its slot and never aborts the batch.
    """
    settings = settings or IntegratorSettings()
    seeds = [np.asarray(s, dtype=float) for s in seeds]
    if not seeds:
        return []

    def run(seed):
        try:
            return SeedResult(tuple(seed), integrate(field, seed, settings))
        except (IntegrationError, ValueError) as exc:
            return SeedResult(tuple(seed), None, f"{type(exc).__name__}: {exc}")

    if len(seeds) == 1:
        return [run(seeds[0])]
    workers = max_workers or min(len(seeds), os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, seeds))
