"""numba-compiled integration kernels.

One Dormand-Prince 5(4) adaptive stepper serves every right-hand-side kind:
``kind 0`` evaluates a packed sparse-monomial system (CSR arrays) and kinds
``1 + Family.value`` evaluate the closed-form center-family fields.  The
kind is passed as a compile-time literal (``numba.literally``), so each
compiled specialization of the stepper contains exactly one monomorphic RHS
with all dispatch branches folded away; this is worth ~4x on the hot stiff
runs, where the stepper is stability-limited and takes millions of steps.

Everything stays inside one nopython, nogil region so batch integration can
use real threads.
"""

from __future__ import annotations

import numpy as np
from numba import literally, njit

KERNEL_POLY = 0
KERNEL_CENTER_BASE = 1  # kind = KERNEL_CENTER_BASE + Family.value

# family ids, must match systems.Family values
FAM_PLANAR = 0
FAM_XFACTOR_PLANAR = 1
FAM_RECIPROCAL = 2
FAM_FAST_SLOW = 3
FAM_XFACTOR_FAST_SLOW = 4
FAM_RESCALED_TWO_SPECIES = 5

STATUS_OK = 0
STATUS_DIVERGED = 1
STATUS_UNDERFLOW = 2

# fastmath flags without nnan/ninf: keeps NaN/inf propagation intact (the
# divergence and step-rejection logic depends on it) while still allowing
# FMA, reassociated reductions and vectorization.
_FM = {"contract", "reassoc", "nsz", "arcp"}
_JIT = dict(cache=True, nogil=True, fastmath=_FM, error_model="numpy")
_INLINE = dict(inline="always", **_JIT)


@njit(**_INLINE)
def poly_rhs(eq_ptr, m_ptr, m_dim, m_exp, coeff, y, out):
    n = eq_ptr.shape[0] - 1
    for i in range(n):
        acc = 0.0
        for m in range(eq_ptr[i], eq_ptr[i + 1]):
            t = coeff[m]
            for p in range(m_ptr[m], m_ptr[m + 1]):
                v = y[m_dim[p]]
                e = m_exp[p]
                if e == 1:
                    t *= v
                elif e == 2:
                    t *= v * v
                else:
                    t *= v ** e
            acc += t
        out[i] = acc


@njit(**_INLINE)
def center_rhs(fam, K, fp, y, out):
    x = y[0]
    yy = y[1]
    if fam == FAM_PLANAR or fam == FAM_XFACTOR_PLANAR or fam == FAM_RESCALED_TWO_SPECIES:
        f = 0.0
        g = 0.0
        h = 1.0
        for k in range(K):
            zx = x - fp[k]
            zy = yy - fp[K + k]
            zx2 = zx * zx
            zy2 = zy * zy
            s = 1.0 - zx2 - zy2
            den = 1.0 + zx2 * zx2 * zx2 + zy2 * zy2 * zy2
            f += (zx * s - zy) / den
            g += (zy * s + zx) / den
            if fam == FAM_RESCALED_TWO_SPECIES:
                h *= den
        if fam == FAM_PLANAR:
            out[0] = f
            out[1] = g
        elif fam == FAM_XFACTOR_PLANAR:
            out[0] = x * f
            out[1] = yy * g
        else:
            out[0] = x * h * f
            out[1] = yy * h * g
    elif fam == FAM_FAST_SLOW or fam == FAM_XFACTOR_FAST_SLOW:
        inv_eps = 1.0 / fp[2 * K]
        F = 0.0
        G = 0.0
        for k in range(K):
            zx = x - fp[k]
            zy = yy - fp[K + k]
            zx2 = zx * zx
            zy2 = zy * zy
            s = 1.0 - zx2 - zy2
            den = 1.0 + zx2 * zx2 * zx2 + zy2 * zy2 * zy2
            vk = y[2 + k]
            F += vk * (zx * s - zy)
            G += vk * (zy * s + zx)
            out[2 + k] = (1.0 - vk * den) * inv_eps
        if fam == FAM_XFACTOR_FAST_SLOW:
            out[0] = x * F
            out[1] = yy * G
        else:
            out[0] = F
            out[1] = G
    else:  # FAM_RECIPROCAL
        F = 0.0
        G = 0.0
        for k in range(K):
            zx = x - fp[k]
            zy = yy - fp[K + k]
            s = 1.0 - zx * zx - zy * zy
            uk = y[2 + k]
            F += uk * (zx * s - zy)
            G += uk * (zy * s + zx)
        out[0] = F
        out[1] = G
        for k in range(K):
            zx = x - fp[k]
            zy = yy - fp[K + k]
            zx5 = zx * zx
            zx5 = zx5 * zx5 * zx
            zy5 = zy * zy
            zy5 = zy5 * zy5 * zy
            uk = y[2 + k]
            out[2 + k] = -6.0 * uk * uk * (zx5 * F + zy5 * G)


@njit(**_INLINE)
def _rhs(kind, K, fp, eq_ptr, m_ptr, m_dim, m_exp, coeff, y, out):
    if kind == KERNEL_POLY:
        poly_rhs(eq_ptr, m_ptr, m_dim, m_exp, coeff, y, out)
    else:
        center_rhs(kind - KERNEL_CENTER_BASE, K, fp, y, out)


# Dormand-Prince 5(4) tableau (FSAL: stage 7 is the next step's stage 1).
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0

# plain module-level ints so the per-kind wrappers see them as literals
_KIND_PLANAR = KERNEL_CENTER_BASE + FAM_PLANAR
_KIND_XFACTOR_PLANAR = KERNEL_CENTER_BASE + FAM_XFACTOR_PLANAR
_KIND_RECIPROCAL = KERNEL_CENTER_BASE + FAM_RECIPROCAL
_KIND_FAST_SLOW = KERNEL_CENTER_BASE + FAM_FAST_SLOW
_KIND_XFACTOR_FAST_SLOW = KERNEL_CENTER_BASE + FAM_XFACTOR_FAST_SLOW
_KIND_RESCALED = KERNEL_CENTER_BASE + FAM_RESCALED_TWO_SPECIES


@njit(**_INLINE)
def _scaled_rms(v, y0, y1, rtol, atol):
    n = v.shape[0]
    acc = 0.0
    for i in range(n):
        sy = abs(y0[i])
        sy1 = abs(y1[i])
        if sy1 > sy:
            sy = sy1
        e = v[i] / (atol + rtol * sy)
        acc += e * e
    return np.sqrt(acc / n)


@njit(**_JIT)
def integrate_core(
    kind,
    K,
    fp,
    eq_ptr,
    m_ptr,
    m_dim,
    m_exp,
    coeff,
    y0,
    t_end,
    rtol,
    atol,
    max_step,
    sample_times,
    out_states,
    y_final,
    big,
    h_min,
):
    """Adaptive DP5(4) run with cubic Hermite sampling at ``sample_times``.

    Returns (n_filled, status, accepted, rejected, t_final).  ``out_states``
    must have shape (len(sample_times), dim).
    """
    literally(kind)
    n = y0.shape[0]
    n_samp = sample_times.shape[0]
    y = y0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    ytmp = np.empty(n)
    ynew = np.empty(n)
    err = np.empty(n)

    t = 0.0
    s_idx = 0
    while s_idx < n_samp and sample_times[s_idx] <= t:
        for i in range(n):
            out_states[s_idx, i] = y[i]
        s_idx += 1
    if t_end <= 0.0:
        for i in range(n):
            y_final[i] = y[i]
        return s_idx, STATUS_OK, 0, 0, t

    _rhs(kind, K, fp, eq_ptr, m_ptr, m_dim, m_exp, coeff, y, k1)

    # initial step: match the scale of y against the scale of f
    d0 = _scaled_rms(y, y, y, rtol, atol)
    d1 = _scaled_rms(k1, y, y, rtol, atol)
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6
    else:
        h = 0.01 * d0 / d1
    if h > max_step:
        h = max_step
    if h > t_end - t:
        h = t_end - t

    accepted = 0
    rejected = 0
    status = STATUS_OK
    err_prev = 1e-4

    while t < t_end:
        if h < h_min:
            status = STATUS_UNDERFLOW
            break
        last = False
        if h >= t_end - t:
            h = t_end - t
            last = True

        for i in range(n):
            ytmp[i] = y[i] + h * _A21 * k1[i]
        _rhs(kind, K, fp, eq_ptr, m_ptr, m_dim, m_exp, coeff, ytmp, k2)
        for i in range(n):
            ytmp[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
        _rhs(kind, K, fp, eq_ptr, m_ptr, m_dim, m_exp, coeff, ytmp, k3)
        for i in range(n):
            ytmp[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        _rhs(kind, K, fp, eq_ptr, m_ptr, m_dim, m_exp, coeff, ytmp, k4)
        for i in range(n):
            ytmp[i] = y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
        _rhs(kind, K, fp, eq_ptr, m_ptr, m_dim, m_exp, coeff, ytmp, k5)
        for i in range(n):
            ytmp[i] = y[i] + h * (
                _A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i] + _A65 * k5[i]
            )
        _rhs(kind, K, fp, eq_ptr, m_ptr, m_dim, m_exp, coeff, ytmp, k6)
        for i in range(n):
            ynew[i] = y[i] + h * (
                _B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i]
            )
        _rhs(kind, K, fp, eq_ptr, m_ptr, m_dim, m_exp, coeff, ynew, k7)
        for i in range(n):
            err[i] = h * (
                _E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i] + _E6 * k6[i] + _E7 * k7[i]
            )
        e_norm = _scaled_rms(err, y, ynew, rtol, atol)

        if not (e_norm <= 1.0):  # also catches NaN
            rejected += 1
            if e_norm > 0 and e_norm == e_norm and e_norm != np.inf:
                fac = _SAFETY * e_norm ** -0.2
                if fac < _MIN_FACTOR:
                    fac = _MIN_FACTOR
            else:
                fac = _MIN_FACTOR
            h *= fac
            continue

        # accepted: dense Hermite output on (t, t+h]
        t_new = t + h if not last else t_end
        while s_idx < n_samp and sample_times[s_idx] <= t_new:
            th = (sample_times[s_idx] - t) / h
            if th < 0.0:
                th = 0.0
            elif th > 1.0:
                th = 1.0
            th2 = th * th
            th3 = th2 * th
            h00 = 2.0 * th3 - 3.0 * th2 + 1.0
            h10 = th3 - 2.0 * th2 + th
            h01 = -2.0 * th3 + 3.0 * th2
            h11 = th3 - th2
            for i in range(n):
                out_states[s_idx, i] = (
                    h00 * y[i] + h01 * ynew[i] + h * (h10 * k1[i] + h11 * k7[i])
                )
            s_idx += 1

        t = t_new
        bad = False
        for i in range(n):
            v = ynew[i]
            y[i] = v
            k1[i] = k7[i]
            if not (v == v) or v > big or v < -big:
                bad = True
        accepted += 1
        if bad:
            status = STATUS_DIVERGED
            break

        if e_norm == 0.0:
            fac = _MAX_FACTOR
        else:
            fac = _SAFETY * e_norm ** -0.14 * err_prev ** 0.08
            if fac > _MAX_FACTOR:
                fac = _MAX_FACTOR
            elif fac < _MIN_FACTOR:
                fac = _MIN_FACTOR
        err_prev = e_norm if e_norm > 1e-4 else 1e-4
        h *= fac
        if h > max_step:
            h = max_step

    if status == STATUS_OK:
        # float fuzz can leave the final sample (== t_end) unfilled
        while s_idx < n_samp and sample_times[s_idx] <= t + 1e-12 * max(1.0, abs(t)):
            for i in range(n):
                out_states[s_idx, i] = y[i]
            s_idx += 1
    for i in range(n):
        y_final[i] = y[i]
    return s_idx, status, accepted, rejected, t


# Thin per-kind entry points: the kind constant is literal at compile time,
# so each wrapper binds its monomorphic stepper specialization once.  Calling
# integrate_core directly from Python would re-run numba's literal-dispatch
# typing on every call, which costs seconds.


@njit(**_JIT)
def core_poly(K, fp, eq_ptr, m_ptr, m_dim, m_exp, coeff, y0, t_end, rtol, atol,
              max_step, sample_times, out_states, y_final, big, h_min):
    return integrate_core(KERNEL_POLY, K, fp, eq_ptr, m_ptr, m_dim, m_exp, coeff,
                          y0, t_end, rtol, atol, max_step, sample_times,
                          out_states, y_final, big, h_min)


@njit(**_JIT)
def core_planar(K, fp, eq_ptr, m_ptr, m_dim, m_exp, coeff, y0, t_end, rtol, atol,
                max_step, sample_times, out_states, y_final, big, h_min):
    return integrate_core(_KIND_PLANAR, K, fp, eq_ptr, m_ptr,
                          m_dim, m_exp, coeff, y0, t_end, rtol, atol, max_step,
                          sample_times, out_states, y_final, big, h_min)


@njit(**_JIT)
def core_xfactor_planar(K, fp, eq_ptr, m_ptr, m_dim, m_exp, coeff, y0, t_end,
                        rtol, atol, max_step, sample_times, out_states, y_final,
                        big, h_min):
    return integrate_core(_KIND_XFACTOR_PLANAR, K, fp, eq_ptr,
                          m_ptr, m_dim, m_exp, coeff, y0, t_end, rtol, atol,
                          max_step, sample_times, out_states, y_final, big, h_min)


@njit(**_JIT)
def core_reciprocal(K, fp, eq_ptr, m_ptr, m_dim, m_exp, coeff, y0, t_end, rtol,
                    atol, max_step, sample_times, out_states, y_final, big, h_min):
    return integrate_core(_KIND_RECIPROCAL, K, fp, eq_ptr,
                          m_ptr, m_dim, m_exp, coeff, y0, t_end, rtol, atol,
                          max_step, sample_times, out_states, y_final, big, h_min)


@njit(**_JIT)
def core_fast_slow(K, fp, eq_ptr, m_ptr, m_dim, m_exp, coeff, y0, t_end, rtol,
                   atol, max_step, sample_times, out_states, y_final, big, h_min):
    return integrate_core(_KIND_FAST_SLOW, K, fp, eq_ptr,
                          m_ptr, m_dim, m_exp, coeff, y0, t_end, rtol, atol,
                          max_step, sample_times, out_states, y_final, big, h_min)


@njit(**_JIT)
def core_xfactor_fast_slow(K, fp, eq_ptr, m_ptr, m_dim, m_exp, coeff, y0, t_end,
                           rtol, atol, max_step, sample_times, out_states,
                           y_final, big, h_min):
    return integrate_core(_KIND_XFACTOR_FAST_SLOW, K, fp,
                          eq_ptr, m_ptr, m_dim, m_exp, coeff, y0, t_end, rtol,
                          atol, max_step, sample_times, out_states, y_final,
                          big, h_min)


@njit(**_JIT)
def core_rescaled(K, fp, eq_ptr, m_ptr, m_dim, m_exp, coeff, y0, t_end, rtol,
                  atol, max_step, sample_times, out_states, y_final, big, h_min):
    return integrate_core(_KIND_RESCALED, K, fp,
                          eq_ptr, m_ptr, m_dim, m_exp, coeff, y0, t_end, rtol,
                          atol, max_step, sample_times, out_states, y_final,
                          big, h_min)


#: kind id -> jitted entry point
CORE_BY_KIND = {
    KERNEL_POLY: core_poly,
    KERNEL_CENTER_BASE + FAM_PLANAR: core_planar,
    KERNEL_CENTER_BASE + FAM_XFACTOR_PLANAR: core_xfactor_planar,
    KERNEL_CENTER_BASE + FAM_RECIPROCAL: core_reciprocal,
    KERNEL_CENTER_BASE + FAM_FAST_SLOW: core_fast_slow,
    KERNEL_CENTER_BASE + FAM_XFACTOR_FAST_SLOW: core_xfactor_fast_slow,
    KERNEL_CENTER_BASE + FAM_RESCALED_TWO_SPECIES: core_rescaled,
}

_EMPTY_I = np.empty(0, dtype=np.int64)
_EMPTY_F = np.empty(0, dtype=np.float64)


def warmup():
    """Compile (or load the cached) poly and planar stepper specializations."""
    y0 = np.array([1.0, 0.0])
    samples = np.array([0.0, 0.5])
    out = np.empty((2, 2))
    yf = np.empty(2)
    # poly kernel: dx=-y, dy=x
    eq_ptr = np.array([0, 1, 2], dtype=np.int64)
    m_ptr = np.array([0, 1, 2], dtype=np.int64)
    m_dim = np.array([1, 0], dtype=np.int64)
    m_exp = np.array([1, 1], dtype=np.int64)
    coeff = np.array([-1.0, 1.0])
    core_poly(
        0, _EMPTY_F, eq_ptr, m_ptr, m_dim, m_exp, coeff,
        y0, 0.5, 1e-6, 1e-9, 0.1, samples, out, yf, 1e12, 1e-14,
    )
    fp = np.array([8.0, 8.0, 1.0])
    y0 = np.array([8.5, 8.0])
    core_planar(
        1, fp, _EMPTY_I, _EMPTY_I, _EMPTY_I, _EMPTY_I, _EMPTY_F,
        y0, 0.5, 1e-6, 1e-9, 0.1, samples, out, yf, 1e12, 1e-14,
    )
