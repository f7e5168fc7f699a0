"""Compiled inner loops (numba).  Pure functions of their array arguments."""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _above(xp, yp, xa, ya, xb, yb):
    # point a strictly above segment p->b, with xp < xa < xb
    return (ya - yp) * (xb - xa) > (yb - ya) * (xa - xp)


@njit(cache=True, nogil=True)
def max_slope(X, Y, out):
    """out[c] = max over a <= c < b of (Y[b]-Y[a]) / (X[b]-X[a]).

    X strictly increasing.  Lower hull of the prefix points is kept as a
    monotone chain; upper hulls of the suffixes are built right to left
    once and unwound with a rollback log.  The best pair is the separating
    common tangent, found by nested binary search: O(n log^2 n).
    """
    n = X.shape[0] - 1
    H = np.empty(n + 1, np.int64)
    save_pos = np.empty(n + 1, np.int64)
    save_val = np.empty(n + 1, np.int64)
    save_len = np.empty(n + 1, np.int64)
    hl = 0
    for b in range(n, 0, -1):
        if hl == 0:
            k = 0
        else:
            lo = 1
            hi = hl
            while lo < hi:
                mid = (lo + hi + 1) // 2
                a = H[mid - 1]
                q = H[mid - 2]
                if _above(X[b], Y[b], X[a], Y[a], X[q], Y[q]):
                    lo = mid
                else:
                    hi = mid - 1
            k = lo
        save_len[b] = hl
        save_pos[b] = k
        save_val[b] = H[k]
        H[k] = b
        hl = k + 1

    G = np.empty(n + 1, np.int64)
    gl = 0
    for c in range(n):
        while gl >= 2:
            a = G[gl - 2]
            q = G[gl - 1]
            # q must stay strictly below segment a->c
            if (Y[q] - Y[a]) * (X[c] - X[q]) < (Y[c] - Y[q]) * (X[q] - X[a]):
                break
            gl -= 1
        G[gl] = c
        gl += 1

        lo = 0
        hi = gl - 1
        best = -np.inf
        while True:
            mid = (lo + hi) // 2
            A = G[mid]
            t = _tangent(X, Y, A, H, hl)
            if lo == hi:
                best = t
                break
            B = G[mid + 1]
            # edge slope(A,B) >= t  <=>  (Y[B]-Y[A]) >= t (X[B]-X[A])
            if Y[B] - Y[A] >= t * (X[B] - X[A]):
                hi = mid
            else:
                lo = mid + 1
        out[c] = best

        b = c + 1
        H[save_pos[b]] = save_val[b]
        hl = save_len[b]


@njit(cache=True, nogil=True)
def _tangent(X, Y, A, H, hl):
    # max slope from point A to the upper hull stored right-to-left in H[:hl]
    lo = 0
    hi = hl - 1
    while lo < hi:
        mid = (lo + hi) // 2
        r = H[hl - 1 - mid]
        s = H[hl - 2 - mid]
        # next vertex no better: slope(r,s) <= slope(A,r)
        if (Y[s] - Y[r]) * (X[r] - X[A]) <= (Y[r] - Y[A]) * (X[s] - X[r]):
            hi = mid
        else:
            lo = mid + 1
    r = H[hl - 1 - lo]
    return (Y[r] - Y[A]) / (X[r] - X[A])


@njit(cache=True, nogil=True)
def fujii_wilson_windows(w, n, starts, out):
    """out[i] = sum over the window of M(w chi_I) / w(I), I = [starts[i], starts[i]+n)."""
    X = np.arange(n + 1).astype(np.float64)
    Y = np.empty(n + 1)
    M = np.empty(n)
    for i in range(starts.shape[0]):
        s = starts[i]
        Y[0] = 0.0
        for j in range(n):
            Y[j + 1] = Y[j] + w[s + j]
        max_slope(X, Y, M)
        acc = 0.0
        for j in range(n):
            acc += M[j]
        out[i] = acc / Y[n]


@njit(cache=True, nogil=True)
def truncation_sup(f, coef, out):
    """out[c] = max_K S_c(K) - min_K S_c(K), S_c(K) = sum_{k<=K} (f[c-k]-f[c+k]) coef[k]."""
    m = f.shape[0]
    for c in range(m):
        s = 0.0
        hi = 0.0
        lo = 0.0
        kmax = c if c > m - 1 - c else m - 1 - c
        for k in range(1, kmax + 1):
            a = f[c - k] if c - k >= 0 else 0.0
            b = f[c + k] if c + k < m else 0.0
            s += (a - b) * coef[k]
            if s > hi:
                hi = s
            elif s < lo:
                lo = s
        out[c] = hi - lo


@njit(cache=True, nogil=True)
def centered_sup(F, W, lebesgue, out):
    """Centered maximal averages over odd windows [c-k, c+k+1).

    F: mass per cell, W: measure per cell.  With ``lebesgue`` the measure
    of cells outside the root still counts (zero extension of f).
    """
    m = F.shape[0]
    for c in range(m):
        num = F[c]
        den = W[c]
        best = num / den
        kmax = c if c > m - 1 - c else m - 1 - c
        for k in range(1, kmax + 1):
            if c - k >= 0:
                num += F[c - k]
                den += W[c - k]
            elif lebesgue:
                den += W[c]
            if c + k < m:
                num += F[c + k]
                den += W[c + k]
            elif lebesgue:
                den += W[c]
            v = num / den
            if v > best:
                best = v
        out[c] = best
