# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Each function has a numpy twin in ``_fallback``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, pow, exp, log, INFINITY

cnp.import_array()


def value_iteration(double[:, :, ::1] P, double[:, ::1] R, double[::1] cont,
                    cnp.uint8_t[:, ::1] avail, double gamma, double tol, long max_iters):
    cdef Py_ssize_t S = P.shape[0], A = P.shape[1]
    cdef Py_ssize_t s, a, n, it = 0
    cdef double acc, best, change, delta, p
    Q_arr = np.zeros((S, A))
    Qn_arr = np.zeros((S, A))
    V_arr = np.zeros(S)
    cdef double[:, ::1] Q = Q_arr
    cdef double[:, ::1] Qn = Qn_arr
    cdef double[::1] V = V_arr
    while it < max_iters:
        it += 1
        for s in range(S):
            best = -INFINITY
            for a in range(A):
                if avail[s, a] and Q[s, a] > best:
                    best = Q[s, a]
            V[s] = cont[s] * best if best != -INFINITY else 0.0
        change = 0.0
        for s in range(S):
            for a in range(A):
                acc = 0.0
                for n in range(S):
                    p = P[s, a, n]
                    if p != 0.0:
                        acc += p * V[n]
                acc = R[s, a] + gamma * acc
                delta = fabs(acc - Q[s, a])
                if delta > change:
                    change = delta
                Qn[s, a] = acc
        Q[:, :] = Qn
        if change < tol:
            break
    return Q_arr, it


def jacobi_eigh(double[:, ::1] A_in, double tol, long max_sweeps):
    """Cyclic Jacobi rotations on a symmetric matrix."""
    cdef Py_ssize_t n = A_in.shape[0]
    cdef Py_ssize_t i, j, k, p, q, sweep = 0
    cdef double off, app, aqq, apq, theta, t, c, s, akp, akq, vkp, vkq, scale = 0.0
    a_arr = np.array(A_in, dtype=np.float64, copy=True)
    v_arr = np.eye(n)
    cdef double[:, ::1] a = a_arr
    cdef double[:, ::1] v = v_arr
    for i in range(n):
        for j in range(n):
            scale += a[i, j] * a[i, j]
    scale = sqrt(scale)
    while sweep < max_sweeps:
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += 2.0 * a[i, j] * a[i, j]
        off = sqrt(off)
        if off <= tol * (scale if scale > 1.0 else 1.0):
            break
        sweep += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                theta = (aqq - app) / (2.0 * apq)
                if theta >= 0:
                    t = 1.0 / (theta + sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + sqrt(theta * theta + 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    akp = a[p, k]
                    akq = a[q, k]
                    a[p, k] = c * akp - s * akq
                    a[q, k] = s * akp + c * akq
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    return np.diag(a_arr).copy(), v_arr, sweep


def sr_td_walk(double[:, :, ::1] psi, double[:, ::1] visits,
               long[::1] succ_ptr, long[::1] succ_next, double[::1] succ_cum,
               long[::1] act_ptr, long[::1] act_list,
               cnp.uint8_t[::1] terminal, long[::1] starts,
               long s, long a, long n_steps, double[::1] u,
               double gamma, double alpha0, double power, double alpha_min):
    """Uniform-random-policy TD-SR over ``n_steps`` transitions.

    Consumes uniforms from ``u`` in a fixed order: one per transition, then
    one for the next action, or two (start state, first action) after a
    terminal entry. Returns the walker state, uniforms used, finished
    episodes and the squared norm of all increments applied.
    """
    cdef Py_ssize_t S = psi.shape[2], A = psi.shape[1]
    cdef Py_ssize_t j, step, k = 0, lo, hi, m
    cdef long s2, a2, n_eps = 0, idx
    cdef double alpha, x, t, d, inc2 = 0.0, ui
    for step in range(n_steps):
        idx = s * A + a
        lo = succ_ptr[idx]
        hi = succ_ptr[idx + 1]
        ui = u[k]
        k += 1
        s2 = succ_next[hi - 1]
        for m in range(lo, hi):
            if ui < succ_cum[m]:
                s2 = succ_next[m]
                break
        visits[s, a] += 1.0
        alpha = alpha0 / pow(visits[s, a], power)
        if alpha < alpha_min:
            alpha = alpha_min
        if terminal[s2]:
            for j in range(S):
                t = 0.0
                if j == s2:
                    t = gamma
                if j == s:
                    t = 1.0 + t
                x = psi[s, a, j]
                d = alpha * (t - x)
                psi[s, a, j] = x + d
                inc2 += d * d
            n_eps += 1
            s = starts[<long>(u[k] * starts.shape[0])]
            k += 1
            lo = act_ptr[s]
            hi = act_ptr[s + 1]
            a = act_list[lo + <long>(u[k] * (hi - lo))]
            k += 1
        else:
            lo = act_ptr[s2]
            hi = act_ptr[s2 + 1]
            a2 = act_list[lo + <long>(u[k] * (hi - lo))]
            k += 1
            for j in range(S):
                t = gamma * psi[s2, a2, j]
                if j == s:
                    t = t + 1.0
                x = psi[s, a, j]
                d = alpha * (t - x)
                psi[s, a, j] = x + d
                inc2 += d * d
            s = s2
            a = a2
    return s, a, k, n_eps, inc2


def net_train(double[:, ::1] w1, double[::1] b1, double[:, ::1] w2, double[::1] b2,
              long[::1] inputs, long[::1] targets, double lr):
    """Plain SGD of the logistic-hidden / softmax-output net on index pairs."""
    cdef Py_ssize_t H = w1.shape[1], O = w2.shape[1]
    cdef Py_ssize_t n = inputs.shape[0], i, h, o
    cdef long x, y
    cdef double z, mx, tot, g
    losses_arr = np.empty(n)
    hid_arr = np.empty(H)
    out_arr = np.empty(O)
    dh_arr = np.empty(H)
    cdef double[::1] losses = losses_arr
    cdef double[::1] hid = hid_arr
    cdef double[::1] out = out_arr
    cdef double[::1] dh = dh_arr
    for i in range(n):
        x = inputs[i]
        y = targets[i]
        for h in range(H):
            z = w1[x, h] + b1[h]
            hid[h] = 1.0 / (1.0 + exp(-z))
        mx = -INFINITY
        for o in range(O):
            z = b2[o]
            for h in range(H):
                z += hid[h] * w2[h, o]
            out[o] = z
            if z > mx:
                mx = z
        tot = 0.0
        for o in range(O):
            out[o] = exp(out[o] - mx)
            tot += out[o]
        for o in range(O):
            out[o] = out[o] / tot
        losses[i] = -log(out[y])
        out[y] -= 1.0
        for h in range(H):
            g = 0.0
            for o in range(O):
                g += w2[h, o] * out[o]
            dh[h] = g * hid[h] * (1.0 - hid[h])
        for h in range(H):
            for o in range(O):
                w2[h, o] -= lr * hid[h] * out[o]
        for o in range(O):
            b2[o] -= lr * out[o]
        for h in range(H):
            w1[x, h] -= lr * dh[h]
            b1[h] -= lr * dh[h]
    return losses_arr
