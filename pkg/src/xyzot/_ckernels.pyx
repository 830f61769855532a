# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Semantics mirror xyzot._kernels_py exactly."""

from libc.limits cimport LLONG_MAX


def sweep_product(double[::1] x, double[::1] y, double[::1] z,
                  const long long[::1] pi, const long long[::1] pj,
                  long long max_swaps, double tol):
    cdef Py_ssize_t k, m = pi.shape[0]
    cdef Py_ssize_t consumed = m
    cdef long long i, j, swaps = 0
    cdef double xi, yi, zi, xj, yj, zj
    with nogil:
        for k in range(m):
            if swaps >= max_swaps:
                consumed = k
                break
            i = pi[k]
            j = pj[k]
            if i == j:
                continue
            xi = x[i]; yi = y[i]; zi = z[i]
            xj = x[j]; yj = y[j]; zj = z[j]
            if (xi - xj) * (yi * zi - yj * zj) > tol:
                x[i] = xj; x[j] = xi
                swaps += 1
            elif (yi - yj) * (xi * zi - xj * zj) > tol:
                y[i] = yj; y[j] = yi
                swaps += 1
            elif (zi - zj) * (xi * yi - xj * yj) > tol:
                z[i] = zj; z[j] = zi
                swaps += 1
    return swaps, consumed


def witness_product(const double[::1] x, const double[::1] y, const double[::1] z,
                    double tol):
    cdef Py_ssize_t i, j, n = x.shape[0]
    cdef double xi, yi, zi, xj, yj, zj
    cdef long long ri = -1, rj = -1, axis = -1
    with nogil:
        for i in range(n - 1):
            xi = x[i]; yi = y[i]; zi = z[i]
            for j in range(i + 1, n):
                xj = x[j]; yj = y[j]; zj = z[j]
                if (xi - xj) * (yi * zi - yj * zj) > tol:
                    axis = 0
                elif (yi - yj) * (xi * zi - xj * zj) > tol:
                    axis = 1
                elif (zi - zj) * (xi * yi - xj * yj) > tol:
                    axis = 2
                if axis >= 0:
                    ri = i
                    rj = j
                    break
            if axis >= 0:
                break
    return ri, rj, axis


def brute_force_range(const long long[:, ::1] perms, Py_ssize_t start, Py_ssize_t stop):
    cdef Py_ssize_t s, t, i
    cdef Py_ssize_t rows = perms.shape[0], n = perms.shape[1]
    cdef long long v, best = LLONG_MAX
    cdef Py_ssize_t best_s = -1, best_t = -1
    with nogil:
        for s in range(start, stop):
            for t in range(rows):
                v = 0
                for i in range(n):
                    v += (i + 1) * perms[s, i] * perms[t, i]
                if v < best:
                    best = v
                    best_s = s
                    best_t = t
    if best_s < 0:
        return None, -1, -1
    return best, best_s, best_t
