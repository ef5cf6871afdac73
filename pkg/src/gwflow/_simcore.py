"""Event-driven core of the growth dynamics (numba kernels).

State per row: sorted arrays of ballistic invariants.  A kink at position x
at time t stores kv = x - t (it moves at +1), an antikink stores av = x + t
(it moves at -1), so positions are kv + t / av - t and the sorted order is
invariant between events.  ``base`` is the height on the piece entering the
row at the left edge of the cell.

The event heap holds only collisions (adjacent kink/antikink pairs meeting),
keyed by (t, y, x, kind); Poisson creation candidates arrive from a sorted
stream.  Collision times are pure functions of the invariants,
t = 0.5*(av - kv) + M*j with the fp-minimal lap count j, so a run restarted
from a snapshot reproduces them bit-exactly.  Entries are validated at pop
time by exact invariant lookup; stale entries are discarded.

Seam crossings are reconciled lazily: before a row is read or written at
time t, every kink with kv + t >= M is renamed kv -> kv - 2M and every
antikink with av - t < -M renamed av -> av + 2M (each bumps the row base by
one: the seam point was swept), and their collision entries are re-pushed
under the new name.  The renamed values do not depend on when the
reconciliation runs, so replays reproduce them exactly.  Window mode instead
absorbs antikinks that fall off the left margin into the base.

A creation candidate at (x, y, t) is accepted iff h(x, y-1) - h(x, y) = 1,
h(x, y) - h(x, y+1) = 0 at t- and row y has no step within ``coinc_tol``
of x.
"""

import numpy as np
from numba import njit

K_COLLIDE = 0
K_CREATION = 9

ST_DONE = 0
ST_GROW_ROWS = 1
ST_GROW_HEAP = 2
ST_GROW_LOG = 3
ST_BAD_NEIGHBOR = 4

# meta slots
M_HEAP_N = 0
M_CURSOR = 1
M_LOG_N = 2


@njit(cache=True, nogil=True, inline="always")
def _bisect_left(a, n, v):
    lo = 0
    hi = n
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True, nogil=True, inline="always")
def _bisect_right(a, n, v):
    lo = 0
    hi = n
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] <= v:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True, nogil=True, inline="always")
def _find_exact(a, n, v):
    i = _bisect_left(a, n, v)
    if i < n and a[i] == v:
        return i
    return -1


@njit(cache=True, nogil=True, inline="always")
def _insert(a, n, v):
    i = _bisect_right(a, n, v)
    j = n
    while j > i:
        a[j] = a[j - 1]
        j -= 1
    a[i] = v
    return i


@njit(cache=True, nogil=True, inline="always")
def _remove_at(a, n, i):
    j = i
    while j < n - 1:
        a[j] = a[j + 1]
        j += 1


@njit(cache=True, nogil=True, inline="always")
def _wrap_cell(x, M):
    return x - 2.0 * M * np.floor((x + M) / (2.0 * M))


@njit(cache=True, nogil=True, inline="always")
def _row_height(kinv_r, nk_r, ainv_r, na_r, base_r, x, t, tol):
    """Upper semi-continuous height at (x, t): antikinks within tol of x count."""
    nkl = _bisect_left(kinv_r, nk_r, (x - t) - tol)
    nal = _bisect_right(ainv_r, na_r, (x + t) + tol)
    return base_r + nal - nkl


@njit(cache=True, nogil=True, inline="always")
def _has_step_near(kinv_r, nk_r, ainv_r, na_r, x, t, tol):
    xk = x - t
    i = _bisect_left(kinv_r, nk_r, xk - tol)
    if i < nk_r and kinv_r[i] <= xk + tol:
        return True
    xa = x + t
    j = _bisect_left(ainv_r, na_r, xa - tol)
    if j < na_r and ainv_r[j] <= xa + tol:
        return True
    return False


# ---------------------------------------------------------------------------
# heap keyed by (t, y, x, kind)
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True, inline="always")
def _h_less(ht, hy, hx, hk, i, j):
    if ht[i] != ht[j]:
        return ht[i] < ht[j]
    if hy[i] != hy[j]:
        return hy[i] < hy[j]
    if hx[i] != hx[j]:
        return hx[i] < hx[j]
    return hk[i] < hk[j]


@njit(cache=True, nogil=True, inline="always")
def _h_swap(ht, hy, hx, hk, hv1, hv2, i, j):
    ht[i], ht[j] = ht[j], ht[i]
    hy[i], hy[j] = hy[j], hy[i]
    hx[i], hx[j] = hx[j], hx[i]
    hk[i], hk[j] = hk[j], hk[i]
    hv1[i], hv1[j] = hv1[j], hv1[i]
    hv2[i], hv2[j] = hv2[j], hv2[i]


@njit(cache=True, nogil=True)
def _h_push(ht, hy, hx, hk, hv1, hv2, meta, t, y, x, kind, v1, v2):
    n = meta[M_HEAP_N]
    ht[n] = t
    hy[n] = y
    hx[n] = x
    hk[n] = kind
    hv1[n] = v1
    hv2[n] = v2
    meta[M_HEAP_N] = n + 1
    i = n
    while i > 0:
        p = (i - 1) >> 1
        if _h_less(ht, hy, hx, hk, i, p):
            _h_swap(ht, hy, hx, hk, hv1, hv2, i, p)
            i = p
        else:
            break


@njit(cache=True, nogil=True)
def _h_pop(ht, hy, hx, hk, hv1, hv2, meta):
    n = meta[M_HEAP_N] - 1
    _h_swap(ht, hy, hx, hk, hv1, hv2, 0, n)
    meta[M_HEAP_N] = n
    i = 0
    while True:
        l = 2 * i + 1
        if l >= n:
            break
        m = l
        r = l + 1
        if r < n and _h_less(ht, hy, hx, hk, r, l):
            m = r
        if _h_less(ht, hy, hx, hk, m, i):
            _h_swap(ht, hy, hx, hk, hv1, hv2, i, m)
            i = m
        else:
            break


# ---------------------------------------------------------------------------
# neighbors and pair scheduling
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _neighbor_left(kinv_r, nk_r, ainv_r, na_r, xk, xa, t, is_torus):
    """Step with the largest position < x, where xk = x - t and xa = x + t.

    Returns (found, is_kink, invariant).  On the torus the search wraps to
    the overall rightmost step when nothing lies to the left.
    """
    ik = _bisect_left(kinv_r, nk_r, xk) - 1
    ia = _bisect_left(ainv_r, na_r, xa) - 1
    if ik >= 0 and ia >= 0:
        if kinv_r[ik] + t >= ainv_r[ia] - t:
            return True, True, kinv_r[ik]
        return True, False, ainv_r[ia]
    if ik >= 0:
        return True, True, kinv_r[ik]
    if ia >= 0:
        return True, False, ainv_r[ia]
    if is_torus and (nk_r + na_r) > 0:
        if nk_r > 0 and na_r > 0:
            if kinv_r[nk_r - 1] + t >= ainv_r[na_r - 1] - t:
                return True, True, kinv_r[nk_r - 1]
            return True, False, ainv_r[na_r - 1]
        if nk_r > 0:
            return True, True, kinv_r[nk_r - 1]
        return True, False, ainv_r[na_r - 1]
    return False, False, 0.0


@njit(cache=True, nogil=True)
def _neighbor_right(kinv_r, nk_r, ainv_r, na_r, xk, xa, t, is_torus):
    """Step with the smallest position > x; mirror of _neighbor_left."""
    ik = _bisect_right(kinv_r, nk_r, xk)
    ia = _bisect_right(ainv_r, na_r, xa)
    kf = ik < nk_r
    af = ia < na_r
    if kf and af:
        if kinv_r[ik] + t <= ainv_r[ia] - t:
            return True, True, kinv_r[ik]
        return True, False, ainv_r[ia]
    if kf:
        return True, True, kinv_r[ik]
    if af:
        return True, False, ainv_r[ia]
    if is_torus and (nk_r + na_r) > 0:
        if nk_r > 0 and na_r > 0:
            if kinv_r[0] + t <= ainv_r[0] - t:
                return True, True, kinv_r[0]
            return True, False, ainv_r[0]
        if nk_r > 0:
            return True, True, kinv_r[0]
        return True, False, ainv_r[0]
    return False, False, 0.0


@njit(cache=True, nogil=True)
def _push_collide(ht, hy, hx, hk, hv1, hv2, meta, r, kv, av, t_now, M, is_torus):
    """Schedule the meeting of kink kv with antikink av, first lap >= t_now.

    The time is a function of invariants only (t_raw + M*j with the
    fp-minimal lap count j): a run restarted from a snapshot derives the
    identical float, since any smaller lap already fired before the snapshot.
    """
    t_raw = 0.5 * (av - kv)
    if is_torus:
        # meetings happen at t_raw + M*j for every integer j (negative laps
        # are pairs adjacent across the seam); take the fp-minimal one >= now
        j = int(np.ceil((t_now - t_raw) / M))
        while t_raw + M * (j - 1) >= t_now:
            j -= 1
        while t_raw + M * j < t_now:
            j += 1
        tc = t_raw + M * j
        x_col = _wrap_cell(kv + tc, M)
    else:
        if t_raw < t_now:
            return  # not an approaching pair (cannot happen for true adjacency)
        tc = t_raw
        x_col = kv + tc
    _h_push(ht, hy, hx, hk, hv1, hv2, meta, tc, r, x_col, K_COLLIDE, kv, av)


@njit(cache=True, nogil=True)
def _reconcile(kinv, nk, ainv, na, base, r, t, M, is_torus,
               has_absorb, x_absorb,
               ht, hy, hx, hk, hv1, hv2, meta, hcap):
    """Normalize row r at time t: rename seam crossers, absorb left leavers.

    Renamed values are kv - 2M / av + 2M regardless of when this runs, so
    sim and replay agree bitwise.  Returns False if the heap is full (caller
    grows and retries; partial work is idempotent).
    """
    if is_torus:
        while True:
            moved = 0
            # kinks with position >= M wrap to the left edge
            i0 = _bisect_left(kinv[r], nk[r], M - t)
            c = nk[r] - i0
            if c > 0:
                if meta[M_HEAP_N] + c > hcap:
                    return False
                for i in range(i0, nk[r]):
                    kinv[r, i] = kinv[r, i] - 2.0 * M
                    base[r] += 1
                # rotate the renamed block to the front
                tmp = kinv[r, i0:nk[r]].copy()
                j = nk[r] - 1
                while j >= c:
                    kinv[r, j] = kinv[r, j - c]
                    j -= 1
                for i in range(c):
                    kinv[r, i] = tmp[i]
                for i in range(c):
                    kv = kinv[r, i]
                    rf, rk, rinv = _neighbor_right(kinv[r], nk[r], ainv[r], na[r],
                                                   kv, kv + 2.0 * t, t, True)
                    if rf and not rk:
                        _push_collide(ht, hy, hx, hk, hv1, hv2, meta,
                                      r, kv, rinv, t, M, True)
                moved += c
            # antikinks with position < -M wrap to the right edge
            c2 = _bisect_left(ainv[r], na[r], t - M)
            if c2 > 0:
                if meta[M_HEAP_N] + c2 > hcap:
                    return False
                tmp = ainv[r, :c2].copy()
                for i in range(c2, na[r]):
                    ainv[r, i - c2] = ainv[r, i]
                for i in range(c2):
                    ainv[r, na[r] - c2 + i] = tmp[i] + 2.0 * M
                    base[r] += 1
                for i in range(na[r] - c2, na[r]):
                    av = ainv[r, i]
                    lf, lk, linv = _neighbor_left(kinv[r], nk[r], ainv[r], na[r],
                                                  av - 2.0 * t, av, t, True)
                    if lf and lk:
                        _push_collide(ht, hy, hx, hk, hv1, hv2, meta,
                                      r, linv, av, t, M, True)
                moved += c2
            if moved == 0:
                return True
    elif has_absorb:
        c = _bisect_left(ainv[r], na[r], x_absorb + t)  # av - t < x_absorb
        if c > 0:
            for i in range(c, na[r]):
                ainv[r, i - c] = ainv[r, i]
            na[r] -= c
            base[r] += c
        return True
    return True


# ---------------------------------------------------------------------------
# seeding and the main event loop
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def seed_events(kinv, nk, ainv, na, ht, hy, hx, hk, hv1, hv2, meta,
                t_start, M, is_torus):
    """Push one collision entry per initial kink-antikink adjacency."""
    R = nk.shape[0]
    for r in range(R):
        for i in range(nk[r]):
            kv = kinv[r, i]
            rf, rk, rinv = _neighbor_right(kinv[r], nk[r], ainv[r], na[r],
                                           kv, kv + 2.0 * t_start, t_start, is_torus)
            if rf and not rk:
                _push_collide(ht, hy, hx, hk, hv1, hv2, meta,
                              r, kv, rinv, t_start, M, is_torus)


@njit(cache=True, nogil=True)
def reconcile_all(kinv, nk, ainv, na, base, t, M, is_torus, has_absorb,
                  x_absorb, ht, hy, hx, hk, hv1, hv2, meta):
    hcap = ht.shape[0]
    R = nk.shape[0]
    for r in range(R):
        if not _reconcile(kinv, nk, ainv, na, base, r, t, M, is_torus,
                          has_absorb, x_absorb, ht, hy, hx, hk, hv1, hv2,
                          meta, hcap):
            return ST_GROW_HEAP
    return ST_DONE


@njit(cache=True, nogil=True)
def advance(kinv, nk, ainv, na, base,
            is_torus, M, q,
            has_absorb, x_absorb,
            ct, cy, cx, cflag,
            ht, hy, hx, hk, hv1, hv2,
            lt, ly, lx, meta,
            t_end, force_accept, coinc_tol):
    """Process all events with key <= (t_end, ...); returns a status code."""
    R = nk.shape[0]
    cap = kinv.shape[1]
    hcap = ht.shape[0]
    lcap = lt.shape[0]
    nc = ct.shape[0]

    while True:
        hn = meta[M_HEAP_N]
        ci = meta[M_CURSOR]
        have_h = hn > 0
        have_c = ci < nc
        if not have_h and not have_c:
            return ST_DONE
        # pick the smaller of heap top and next creation, key (t, y, x, kind)
        take_heap = False
        if have_h and have_c:
            if ht[0] != ct[ci]:
                take_heap = ht[0] < ct[ci]
            elif hy[0] != cy[ci]:
                take_heap = hy[0] < cy[ci]
            elif hx[0] != cx[ci]:
                take_heap = hx[0] < cx[ci]
            else:
                take_heap = True  # collisions rank before creations
        elif have_h:
            take_heap = True

        if take_heap:
            t = ht[0]
            if t > t_end:
                return ST_DONE
            r = hy[0]
            v1 = hv1[0]
            v2 = hv2[0]
            if meta[M_LOG_N] + 1 > lcap:
                return ST_GROW_LOG
            # reconcile BEFORE popping: on heap pressure the entry stays put,
            # and re-pushes may change the queue head, so re-pick afterwards
            if not _reconcile(kinv, nk, ainv, na, base, r, t, M, is_torus,
                              has_absorb, x_absorb, ht, hy, hx, hk, hv1, hv2,
                              meta, hcap):
                return ST_GROW_HEAP
            if meta[M_HEAP_N] != hn:
                continue
            if meta[M_HEAP_N] + 1 > hcap:
                return ST_GROW_HEAP
            _h_pop(ht, hy, hx, hk, hv1, hv2, meta)
            ik = _find_exact(kinv[r], nk[r], v1)
            ia = _find_exact(ainv[r], na[r], v2)
            if ik >= 0 and ia >= 0:
                xc = v1 + t
                if is_torus:
                    xc = _wrap_cell(xc, M)
                n = meta[M_LOG_N]
                lt[n] = t
                ly[n] = r
                lx[n] = xc
                meta[M_LOG_N] = n + 1
                _remove_at(kinv[r], nk[r], ik)
                nk[r] -= 1
                _remove_at(ainv[r], na[r], ia)
                na[r] -= 1
                lf, lk, linv = _neighbor_left(kinv[r], nk[r], ainv[r], na[r],
                                              v1, v2, t, is_torus)
                rf, rk, rinv = _neighbor_right(kinv[r], nk[r], ainv[r], na[r],
                                               v1, v2, t, is_torus)
                if lf and rf and lk and not rk:
                    _push_collide(ht, hy, hx, hk, hv1, hv2, meta,
                                  r, linv, rinv, t, M, is_torus)
        else:
            t = ct[ci]
            if t > t_end:
                return ST_DONE
            r = cy[ci]
            x = cx[ci]
            if nk[r] + 1 > cap or na[r] + 1 > cap:
                return ST_GROW_ROWS

            r_dn = r - 1
            shift_dn = 0
            r_up = r + 1
            shift_up = 0
            if not force_accept:
                if r_dn < 0:
                    if not is_torus:
                        return ST_BAD_NEIGHBOR
                    r_dn = R - 1
                    shift_dn = q
                if r_up >= R:
                    if not is_torus:
                        return ST_BAD_NEIGHBOR
                    r_up = 0
                    shift_up = -q
                rows_ok = True
                for rr in (r_dn, r, r_up):
                    if not _reconcile(kinv, nk, ainv, na, base, rr, t, M,
                                      is_torus, has_absorb, x_absorb,
                                      ht, hy, hx, hk, hv1, hv2, meta, hcap):
                        rows_ok = False
                        break
                if not rows_ok:
                    return ST_GROW_HEAP
            else:
                if not _reconcile(kinv, nk, ainv, na, base, r, t, M,
                                  is_torus, has_absorb, x_absorb,
                                  ht, hy, hx, hk, hv1, hv2, meta, hcap):
                    return ST_GROW_HEAP
            if meta[M_HEAP_N] + 2 > hcap:
                return ST_GROW_HEAP

            accept = True
            if not force_accept:
                if _has_step_near(kinv[r], nk[r], ainv[r], na[r], x, t, coinc_tol):
                    accept = False
                else:
                    h_mid = _row_height(kinv[r], nk[r], ainv[r], na[r], base[r],
                                        x, t, coinc_tol)
                    h_dn = _row_height(kinv[r_dn], nk[r_dn], ainv[r_dn], na[r_dn],
                                       base[r_dn], x, t, coinc_tol) + shift_dn
                    if h_dn - h_mid != 1:
                        accept = False
                    else:
                        h_up = _row_height(kinv[r_up], nk[r_up], ainv[r_up],
                                           na[r_up], base[r_up], x, t,
                                           coinc_tol) + shift_up
                        accept = h_mid - h_up == 0

            if accept:
                cflag[ci] = 1
                av = x + t
                kv = x - t
                lf, lk, linv = _neighbor_left(kinv[r], nk[r], ainv[r], na[r],
                                              kv, av, t, is_torus)
                rf, rk, rinv = _neighbor_right(kinv[r], nk[r], ainv[r], na[r],
                                               kv, av, t, is_torus)
                _insert(ainv[r], na[r], av)
                na[r] += 1
                _insert(kinv[r], nk[r], kv)
                nk[r] += 1
                if lf and lk:
                    _push_collide(ht, hy, hx, hk, hv1, hv2, meta,
                                  r, linv, av, t, M, is_torus)
                if rf and not rk:
                    _push_collide(ht, hy, hx, hk, hv1, hv2, meta,
                                  r, kv, rinv, t, M, is_torus)
            else:
                cflag[ci] = 2
            meta[M_CURSOR] = ci + 1


@njit(cache=True, nogil=True)
def height_now(kinv, nk, ainv, na, base, r, x, t):
    """Exact (tolerance-free) height of row r at (x, t); row must be reconciled."""
    return _row_height(kinv[r], nk[r], ainv[r], na[r], base[r], x, t, 0.0)
