"""Pure-Python/numpy versions of the hot loops in :mod:`xyzot._ckernels`.

Both modules must return identical results for identical inputs; the swap
gains are evaluated with the same factored expressions in the same order.
"""

import numpy as np


def sweep_product(x, y, z, pi, pj, max_swaps, tol):
    """Apply the first improving coordinate swap to each sampled pair.

    Pairs ``(pi[k], pj[k])`` are processed in order; ``x, y, z`` are
    modified in place.  Stops early once ``max_swaps`` swaps were made.

    Returns
    -------
    swaps : int
    consumed : int
        Number of pairs processed.
    """
    swaps = 0
    m = len(pi)
    xs, ys, zs = x, y, z
    for k in range(m):
        if swaps >= max_swaps:
            return swaps, k
        i = int(pi[k])
        j = int(pj[k])
        if i == j:
            continue
        xi, yi, zi = float(xs[i]), float(ys[i]), float(zs[i])
        xj, yj, zj = float(xs[j]), float(ys[j]), float(zs[j])
        if (xi - xj) * (yi * zi - yj * zj) > tol:
            xs[i], xs[j] = xj, xi
            swaps += 1
        elif (yi - yj) * (xi * zi - xj * zj) > tol:
            ys[i], ys[j] = yj, yi
            swaps += 1
        elif (zi - zj) * (xi * yi - xj * yj) > tol:
            zs[i], zs[j] = zj, zi
            swaps += 1
    return swaps, m


def witness_product(x, y, z, tol):
    """First pair ``i < j`` (lexicographic) and axis violating a swap inequality.

    Returns ``(-1, -1, -1)`` when none exists.
    """
    n = len(x)
    yz = y * z
    xz = x * z
    xy = x * y
    for i in range(n - 1):
        sl = slice(i + 1, n)
        vx = (x[i] - x[sl]) * (yz[i] - yz[sl]) > tol
        vy = (y[i] - y[sl]) * (xz[i] - xz[sl]) > tol
        vz = (z[i] - z[sl]) * (xy[i] - xy[sl]) > tol
        hit = vx | vy | vz
        if hit.any():
            off = int(np.argmax(hit))
            axis = 0 if vx[off] else (1 if vy[off] else 2)
            return i, i + 1 + off, axis
    return -1, -1, -1


def brute_force_range(perms, start, stop):
    """Minimize ``sum_i (i+1) sigma[i] tau[i]`` over ``sigma in perms[start:stop]``.

    ``tau`` ranges over all rows of ``perms``.  Ties keep the first pair in
    row order.  Returns ``(best_cost, sigma_row, tau_row)``.
    """
    n = perms.shape[1]
    w = np.arange(1, n + 1, dtype=np.int64)
    best = None
    best_s = best_t = -1
    for s in range(start, stop):
        vals = perms @ (w * perms[s])
        t = int(np.argmin(vals))
        v = int(vals[t])
        if best is None or v < best:
            best, best_s, best_t = v, s, t
    return best, best_s, best_t
