"""Integer-order Bessel functions J_n and their positive zeros.

Values come from Miller's backward recurrence normalized by
J_0 + 2 sum_k J_2k = 1, which stays accurate for large arguments where the
ascending series cancels catastrophically. Zeros are bracketed by a sign scan
and polished with safeguarded Newton steps started from McMahon's expansion.
"""
import math

import numpy as np

from .errors import NumericError

_RESCALE = 1e200
_SCAN_STEP = 0.25  # zeros of J_n are more than 3 apart; 0.25 cannot straddle two


def _start_order(nmax, xmax):
    m = max(nmax, xmax) + 30 + 2 * math.sqrt(max(nmax, xmax) + 1) * 3
    m = int(m) + 1
    return m + (m % 2)


def bessel_j_table(nmax, x, orders=None):
    """J_n at positive points `x` for n in `orders` (default 0..nmax).

    Returns an array of shape (len(orders), len(x)).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x <= 0):
        raise ValueError("bessel_j_table needs strictly positive arguments")
    orders = list(range(int(nmax) + 1)) if orders is None else [int(n) for n in orders]
    row_of = {n: i for i, n in enumerate(orders)}
    m = _start_order(max(orders), float(x.max()))
    table = np.zeros((len(orders), x.size))
    j_next = np.zeros_like(x)
    j_cur = np.full_like(x, 1e-300)
    norm = np.zeros_like(x)
    two_over_x = 2.0 / x
    for k in range(m, 0, -1):
        # j_cur holds J_k (unnormalized); step down to J_{k-1}
        j_prev = k * two_over_x * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j_cur
        if k - 1 in row_of:
            table[row_of[k - 1]] = j_cur
        big = np.abs(j_cur) > _RESCALE
        if big.any():
            j_cur[big] /= _RESCALE
            j_next[big] /= _RESCALE
            norm[big] /= _RESCALE
            table[:, big] /= _RESCALE
    norm += j_cur  # J_0 term
    return table / norm


def bessel_j(n, x):
    """J_n(x) for integer n >= 0 and x > 0."""
    return bessel_j_table(n, x, orders=[n])[0]


def _j_pair(orders, x):
    """J_n(x_i) and J_{n-1}(x_i) with a per-element order n = orders[i] >= 1.

    One backward sweep serves every element; each captures its two values
    when the sweep passes its own order.
    """
    m = _start_order(int(orders.max()), float(x.max()))
    jn = np.zeros_like(x)
    jm = np.zeros_like(x)
    j_next = np.zeros_like(x)
    j_cur = np.full_like(x, 1e-300)
    norm = np.zeros_like(x)
    two_over_x = 2.0 / x
    for k in range(m, 0, -1):
        j_prev = k * two_over_x * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j_cur
        hit = orders == k - 1
        jn[hit] = j_cur[hit]
        hit = orders == k
        jm[hit] = j_cur[hit]
        big = np.abs(j_cur) > _RESCALE
        if big.any():
            j_cur[big] /= _RESCALE
            j_next[big] /= _RESCALE
            norm[big] /= _RESCALE
            jn[big] /= _RESCALE
            jm[big] /= _RESCALE
    norm += j_cur
    return jn / norm, jm / norm


def _j_and_derivative(orders, x):
    """J_n(x) and J_n'(x), elementwise in (orders, x).

    Uses J_n' = J_{n-1} - n J_n / x, and J_0' = -J_1.
    """
    zero = orders == 0
    eff = np.where(zero, 1, orders)
    jn, jm = _j_pair(eff, x)
    # for order 0 the pair is (J_1, J_0)
    val = np.where(zero, jm, jn)
    der = np.where(zero, -jn, jm - eff * jn / x)
    return val, der


def mcmahon_guess(n, s):
    """McMahon's large-zero expansion for j_{n,s}."""
    mu = 4.0 * n * n
    beta = (s + 0.5 * n - 0.25) * math.pi
    eb = 8.0 * beta
    return (
        beta
        - (mu - 1) / eb
        - 4 * (mu - 1) * (7 * mu - 31) / (3 * eb**3)
        - 32 * (mu - 1) * (83 * mu**2 - 982 * mu + 3779) / (15 * eb**5)
    )


def bessel_zeros_below(n, xmax, max_newton=50):
    """All positive zeros of J_n strictly below `xmax`, in increasing order."""
    return bessel_zero_table(xmax, max_newton=max_newton).get(int(n), np.empty(0))


def bessel_zero_table(xmax, max_newton=50):
    """Zeros below `xmax` for every order that has one, as {order: zeros}.

    Interlacing j_{n,1} < j_{n+1,1} makes the order sweep terminate at the
    first order without a zero below `xmax`; j_{n,1} > n bounds it by xmax.
    """
    xmax = float(xmax)
    if xmax <= 0:
        return {}
    nmax = int(math.floor(xmax))
    grid = np.append(np.arange(0.5, xmax, _SCAN_STEP), xmax)
    grid = grid[grid > 0]
    table = bessel_j_table(nmax, grid)
    orders, lo, hi, f_lo = [], [], [], []
    for n in range(nmax + 1):
        use = grid >= n
        g, v = grid[use], table[n, use]
        idx = np.nonzero(v[:-1] * v[1:] < 0)[0]
        if idx.size == 0:
            break
        orders.append(np.full(idx.size, n))
        lo.append(g[idx])
        hi.append(g[idx + 1])
        f_lo.append(v[idx])
    if not orders:
        return {}
    orders = np.concatenate(orders)
    a, b, fa = np.concatenate(lo), np.concatenate(hi), np.concatenate(f_lo)
    s_index = np.concatenate([np.arange(1, np.sum(orders == n) + 1) for n in np.unique(orders)])
    roots = _polish(orders, s_index, a, b, fa, max_newton)
    return {int(n): roots[orders == n] for n in np.unique(orders)}


def _polish(orders, s_index, a, b, fa, max_newton):
    guess = np.array([mcmahon_guess(n, s) for n, s in zip(orders, s_index)])
    x = np.where((guess > a) & (guess < b), guess, 0.5 * (a + b))
    for _ in range(max_newton):
        f, df = _j_and_derivative(orders, x)
        same = np.sign(f) == np.sign(fa)
        a = np.where(same, x, a)
        fa = np.where(same, f, fa)
        b = np.where(same, b, x)
        x_new = x - f / df
        outside = ~((x_new > a) & (x_new < b)) | ~np.isfinite(x_new)
        x_new = np.where(outside, 0.5 * (a + b), x_new)
        done = (np.abs(x_new - x) <= 4e-14 * x) | (f == 0)
        x = np.where(f == 0, x, x_new)
        if done.all():
            return x
    # Newton did not settle everywhere: fall back to bisection on the brackets
    for _ in range(200):
        if np.all(b - a <= 1e-15 * b):
            return 0.5 * (a + b)
        mid = 0.5 * (a + b)
        f, _ = _j_and_derivative(orders, mid)
        same = np.sign(f) == np.sign(fa)
        a = np.where(same, mid, a)
        fa = np.where(same, f, fa)
        b = np.where(same, b, mid)
    raise NumericError("Bessel zeros did not converge")
