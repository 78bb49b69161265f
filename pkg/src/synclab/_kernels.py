"""Hot loops: event-driven integration and the per-period perturbation maps.

Every kernel exists twice. The numba versions are scalar loops specialised to
the integrate-and-fire potential; the numpy versions are vectorised per event
(or per presynaptic slot) and accept any :class:`PotentialFunction`. Set
``SYNCLAB_DISABLE_NUMBA=1`` to force the numpy path everywhere.

Both paths accumulate simultaneous inputs in the same order (spike FIFO order,
then ascending target), so they agree to rounding of ``exp``/``log``.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

# status codes shared by both integrators
OK = 0
MAX_BATCHES = 1
PHASE_FLOOR = 2
BAD_STATE = 3

TIE_TOL = 1e-12
PHASE_FLOOR_VALUE = -1e3


def numba_enabled() -> bool:
    flag = os.environ.get("SYNCLAB_DISABLE_NUMBA", "").strip().lower()
    return HAVE_NUMBA and flag not in ("1", "true", "yes", "on")


def resolve_backend(backend: str, U) -> str:
    """Pick ``"numba"`` or ``"numpy"``; numba only handles IF potentials."""
    from .potential import IFPotential

    if backend == "numpy":
        return "numpy"
    fast = numba_enabled() and isinstance(U, IFPotential)
    if backend == "numba":
        if not fast:
            raise ValueError("numba backend needs numba enabled and an IFPotential")
        return "numba"
    if backend != "auto":
        raise ValueError(f"unknown backend {backend!r}")
    return "numba" if fast else "numpy"


# --------------------------------------------------------------------------
# event-driven integration, numba path
# --------------------------------------------------------------------------

@njit(cache=True)
def _u_if(phi, drive, period):
    if phi <= 0.5:
        return -drive * math.expm1(-phi * period)
    return 1.0 - (drive - 1.0) * math.expm1((1.0 - phi) * period)


@njit(cache=True)
def _grow(a, size):
    out = np.empty(max(2 * a.size, size, 16), dtype=a.dtype)
    out[:a.size] = a
    return out


@njit(cache=True)
def _integrate_if(phi, t, t_end, tau, q_t, q_src, q_gain, q_head, q_tail,
                  post_ptr, post_idx, post_w, drive, period, max_batches,
                  tie_tol, phase_floor):
    n = phi.size
    sp_t = np.empty(1024)
    sp_n = np.empty(1024, dtype=np.int64)
    n_sp = 0
    inp = np.zeros(n)
    touched = np.zeros(n, dtype=np.bool_)
    batches = 0
    status = 0
    while True:
        if batches >= max_batches:
            status = 1
            break
        phimax = -np.inf
        for i in range(n):
            if phi[i] > phimax:
                phimax = phi[i]
        if not np.isfinite(phimax):
            status = 3
            break
        t_next = t + (1.0 - phimax)
        if q_head < q_tail and q_t[q_head] < t_next:
            t_next = q_t[q_head]
        if t_next >= t_end:
            h = t_end - t
            for i in range(n):
                phi[i] += h
            t = t_end
            break
        h = t_next - t
        t = t_next
        for i in range(n):
            phi[i] += h
        # threshold crossings
        for i in range(n):
            if phi[i] >= 1.0 - tie_tol:
                phi[i] = 0.0
                if n_sp >= sp_t.size:
                    sp_t = _grow(sp_t, n_sp + 1)
                    sp_n = _grow(sp_n, n_sp + 1)
                sp_t[n_sp] = t
                sp_n[n_sp] = i
                n_sp += 1
                if q_tail >= q_t.size:
                    if q_head > 0:
                        m = q_tail - q_head
                        q_t[:m] = q_t[q_head:q_tail].copy()
                        q_src[:m] = q_src[q_head:q_tail].copy()
                        q_gain[:m] = q_gain[q_head:q_tail].copy()
                        q_head = 0
                        q_tail = m
                    if q_tail >= q_t.size:
                        q_t = _grow(q_t, q_tail + 1)
                        q_src = _grow(q_src, q_tail + 1)
                        q_gain = _grow(q_gain, q_tail + 1)
                q_t[q_tail] = t + tau
                q_src[q_tail] = i
                q_gain[q_tail] = 1.0
                q_tail += 1
        # arrivals
        any_in = False
        while q_head < q_tail and q_t[q_head] <= t + tie_tol:
            src = q_src[q_head]
            g = q_gain[q_head]
            for k in range(post_ptr[src], post_ptr[src + 1]):
                tgt = post_idx[k]
                inp[tgt] += g * post_w[k]
                touched[tgt] = True
            q_head += 1
            any_in = True
        if any_in:
            for i in range(n):
                if not touched[i]:
                    continue
                u = _u_if(phi[i], drive, period) + inp[i]
                inp[i] = 0.0
                touched[i] = False
                if u >= 1.0:
                    phi[i] = 0.0
                    if n_sp >= sp_t.size:
                        sp_t = _grow(sp_t, n_sp + 1)
                        sp_n = _grow(sp_n, n_sp + 1)
                    sp_t[n_sp] = t
                    sp_n[n_sp] = i
                    n_sp += 1
                    if q_tail >= q_t.size:
                        if q_head > 0:
                            m = q_tail - q_head
                            q_t[:m] = q_t[q_head:q_tail].copy()
                            q_src[:m] = q_src[q_head:q_tail].copy()
                            q_gain[:m] = q_gain[q_head:q_tail].copy()
                            q_head = 0
                            q_tail = m
                        if q_tail >= q_t.size:
                            q_t = _grow(q_t, q_tail + 1)
                            q_src = _grow(q_src, q_tail + 1)
                            q_gain = _grow(q_gain, q_tail + 1)
                    q_t[q_tail] = t + tau
                    q_src[q_tail] = i
                    q_gain[q_tail] = 1.0
                    q_tail += 1
                else:
                    phi[i] = -math.log1p(-u / drive) / period
                    if phi[i] < phase_floor:
                        status = 2
        batches += 1
        if status != 0:
            break
    return (phi, t, q_t, q_src, q_gain, q_head, q_tail,
            sp_t[:n_sp].copy(), sp_n[:n_sp].copy(), batches, status)


# --------------------------------------------------------------------------
# event-driven integration, numpy path
# --------------------------------------------------------------------------

def _integrate_numpy(phi, t, t_end, tau, q_t, q_src, q_gain, post_ptr, post_idx,
                     post_w, U, max_batches, tie_tol, phase_floor):
    """Vectorised-per-event integrator for an arbitrary potential.

    The spike queue is kept as python lists; arrival times are appended in
    non-decreasing order so the queue is a FIFO.
    """
    q_t, q_src, q_gain = list(q_t), list(q_src), list(q_gain)
    head = 0
    sp_t: list[float] = []
    sp_n: list[np.ndarray] = []
    n = phi.size
    batches = 0
    status = OK
    counts = np.diff(post_ptr)

    def emit(idx):
        sp_t.append(np.full(idx.size, t))
        sp_n.append(idx)
        q_t.extend([t + tau] * idx.size)
        q_src.extend(idx.tolist())
        q_gain.extend([1.0] * idx.size)

    while True:
        if batches >= max_batches:
            status = MAX_BATCHES
            break
        phimax = phi.max()
        if not np.isfinite(phimax):
            status = BAD_STATE
            break
        t_next = t + (1.0 - phimax)
        if head < len(q_t) and q_t[head] < t_next:
            t_next = q_t[head]
        if t_next >= t_end:
            phi += t_end - t
            t = t_end
            break
        phi += t_next - t
        t = t_next
        fired = np.flatnonzero(phi >= 1.0 - tie_tol)
        if fired.size:
            phi[fired] = 0.0
            emit(fired)
        stop = head
        while stop < len(q_t) and q_t[stop] <= t + tie_tol:
            stop += 1
        if stop > head:
            src = np.asarray(q_src[head:stop], dtype=np.int64)
            gain = np.asarray(q_gain[head:stop])
            head = stop
            c = counts[src]
            starts = np.repeat(post_ptr[src] - np.concatenate([[0], np.cumsum(c)[:-1]]), c)
            flat = starts + np.arange(c.sum())
            targets = post_idx[flat]
            inp = np.bincount(targets, weights=np.repeat(gain, c) * post_w[flat], minlength=n)
            hit = np.flatnonzero(np.bincount(targets, minlength=n))
            u = U.eval(phi[hit]) + inp[hit]
            supra = u >= 1.0
            if np.any(~supra):
                phi[hit[~supra]] = U.inv(u[~supra])
            if np.any(supra):
                phi[hit[supra]] = 0.0
                emit(hit[supra])
            if np.any(phi[hit] < phase_floor):
                status = PHASE_FLOOR
        batches += 1
        if status != OK:
            break
        if head > 4096 and head > len(q_t) // 2:
            del q_t[:head], q_src[:head], q_gain[:head]
            head = 0
    spike_t = np.concatenate(sp_t) if sp_t else np.empty(0)
    spike_n = np.concatenate(sp_n).astype(np.int64) if sp_n else np.empty(0, dtype=np.int64)
    return (phi, t, np.asarray(q_t[head:], dtype=float), np.asarray(q_src[head:], dtype=np.int64),
            np.asarray(q_gain[head:], dtype=float), spike_t, spike_n, batches, status)


def integrate(phi, t, t_end, tau, q_t, q_src, q_gain, net, U, max_batches,
              backend="auto", tie_tol=TIE_TOL, phase_floor=PHASE_FLOOR_VALUE):
    """Advance the network until ``t_end`` or ``max_batches`` event batches.

    Returns ``(phi, t, q_t, q_src, q_gain, spike_times, spike_neurons,
    batches, status)``; ``phi`` is updated in place.
    """
    backend = resolve_backend(backend, U)
    if backend == "numba":
        cap = max(16, 2 * len(q_t))
        bt = np.empty(cap)
        bs = np.empty(cap, dtype=np.int64)
        bg = np.empty(cap)
        m = len(q_t)
        bt[:m], bs[:m], bg[:m] = q_t, q_src, q_gain
        out = _integrate_if(phi, float(t), float(t_end), float(tau), bt, bs, bg, 0, m,
                            net.post_ptr, net.post_idx, net.post_w, U.drive, U.period,
                            int(max_batches), tie_tol, phase_floor)
        phi, t, bt, bs, bg, head, tail, st, sn, batches, status = out
        return (phi, t, bt[head:tail].copy(), bs[head:tail].copy(), bg[head:tail].copy(),
                st, sn, batches, status)
    return _integrate_numpy(phi, float(t), float(t_end), float(tau), q_t, q_src, q_gain,
                            net.post_ptr, net.post_idx, net.post_w, U, int(max_batches),
                            tie_tol, phase_floor)


# --------------------------------------------------------------------------
# per-period perturbation maps
# --------------------------------------------------------------------------

@njit(cache=True)
def _row_order(delta, pre_idx, lo, hi):
    # descending delta; ties by ascending index (rows are stored ascending and
    # mergesort is stable)
    vals = np.empty(hi - lo)
    for k in range(lo, hi):
        vals[k - lo] = -delta[pre_idx[k]]
    return np.argsort(vals, kind="mergesort") + lo


@njit(cache=True)
def _exact_map_if(delta, pre_ptr, pre_idx, pre_w, tau, drive, period, alpha):
    n = delta.size
    out = np.empty(n)
    for i in range(n):
        lo, hi = pre_ptr[i], pre_ptr[i + 1]
        order = _row_order(delta, pre_idx, lo, hi)
        beta = tau
        prev = delta[i]
        for k in order:
            cur = delta[pre_idx[k]]
            x = beta + (prev - cur)
            u = _u_if(x, drive, period) + pre_w[k]
            if u >= 1.0:
                return out, i
            beta = -math.log1p(-u / drive) / period
            prev = cur
        out[i] = beta - alpha + prev
    return out, -1


@njit(cache=True)
def _linear_map_if(delta, pre_ptr, pre_idx, pre_w, tau, drive, period, alpha):
    n = delta.size
    out = np.empty(n)
    u_tau = _u_if(tau, drive, period)
    for i in range(n):
        lo, hi = pre_ptr[i], pre_ptr[i + 1]
        order = _row_order(delta, pre_idx, lo, hi)
        # p_n = U'(a_n) / U'(alpha) = exp(-T (a_n - alpha)) for the IF potential
        p_prev = math.exp(-period * (tau - alpha))
        acc = p_prev * delta[i]
        csum = 0.0
        last = order[order.size - 1]
        for k in order:
            csum += pre_w[k]
            if k == last:
                p = 1.0
            else:
                a_n = -math.log1p(-(u_tau + csum) / drive) / period
                p = math.exp(-period * (a_n - alpha))
            acc += (p - p_prev) * delta[pre_idx[k]]
            p_prev = p
        out[i] = acc
    return out


def sorted_rows(delta, idx_pad, w_pad):
    """Per-row presynaptic slots sorted by descending perturbation.

    Ties keep ascending neuron index; padding (index ``n``) sorts last.
    Returns sorted ``(index, weight, delta)`` arrays of shape ``(n, k_max)``.
    """
    n = delta.size
    ext = np.append(delta, -np.inf)
    vals = ext[idx_pad]
    order = np.lexsort((idx_pad, -vals), axis=-1)
    rows = np.arange(n)[:, None]
    return idx_pad[rows, order], w_pad[rows, order], vals[rows, order]


def exact_map_numpy(delta, idx_pad, w_pad, tau, U, alpha):
    """Exact one-period map for any potential, vectorised over rows.

    Returns ``(delta_T, bad_row)`` with ``bad_row = -1`` when every
    intermediate potential stayed sub-threshold.
    """
    _, w_s, d_s = sorted_rows(delta, idx_pad, w_pad)
    n, kmax = w_s.shape
    beta = np.full(n, float(tau))
    prev = delta.astype(float).copy()
    for col in range(kmax):
        live = w_s[:, col] != 0.0
        if not live.any():
            break
        cur = np.where(live, d_s[:, col], prev)
        x = beta[live] + (prev[live] - cur[live])
        u = U.eval(x) + w_s[live, col]
        if np.any(u >= 1.0):
            return np.full(n, np.nan), int(np.flatnonzero(live)[np.argmax(u >= 1.0)])
        beta[live] = U.inv(u)
        prev = cur
    return beta - alpha + prev, -1


def p_table_numpy(w_sorted, tau, U, alpha):
    """``p[i, n]`` for ``n = 0..k_max``; padded slots repeat the last value."""
    csum = np.concatenate([np.zeros((w_sorted.shape[0], 1)), np.cumsum(w_sorted, axis=1)], axis=1)
    a = U.inv(U.eval(tau) + csum)
    p = U.deriv(a) / U.deriv(alpha)
    # from the last real slot on the cumulative input is eps; pin p to exactly 1
    k = np.count_nonzero(w_sorted, axis=1)
    p[np.arange(p.shape[1])[None, :] >= k[:, None]] = 1.0
    return p


def linear_map_numpy(delta, idx_pad, w_pad, tau, U, alpha):
    _, w_s, d_s = sorted_rows(delta, idx_pad, w_pad)
    p = p_table_numpy(w_s, tau, U, alpha)
    d_s = np.where(w_s != 0.0, d_s, 0.0)
    return p[:, 0] * delta + np.sum(np.diff(p, axis=1) * d_s, axis=1)


def exact_map(delta, net, tau, U, alpha, backend="auto"):
    delta = np.ascontiguousarray(delta, dtype=float)
    if resolve_backend(backend, U) == "numba":
        return _exact_map_if(delta, net.pre_ptr, net.pre_idx, net.pre_w, float(tau),
                             U.drive, U.period, float(alpha))
    idx_pad, w_pad = net.padded()
    return exact_map_numpy(delta, idx_pad, w_pad, tau, U, alpha)


def linear_map(delta, net, tau, U, alpha, backend="auto"):
    delta = np.ascontiguousarray(delta, dtype=float)
    if resolve_backend(backend, U) == "numba":
        return _linear_map_if(delta, net.pre_ptr, net.pre_idx, net.pre_w, float(tau),
                              U.drive, U.period, float(alpha))
    idx_pad, w_pad = net.padded()
    return linear_map_numpy(delta, idx_pad, w_pad, tau, U, alpha)
