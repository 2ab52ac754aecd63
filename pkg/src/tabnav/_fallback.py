"""Pure numpy versions of the compiled kernels, same signatures and results.

Arithmetic is ordered like the compiled code where it matters for exact
agreement (the TD-SR walk); the reductions in value iteration and the net
may differ from it in the last bits.
"""
from __future__ import annotations

import numpy as np


def value_iteration(P, R, cont, avail, gamma, tol, max_iters):
    S, A = R.shape
    avail = np.asarray(avail, dtype=bool)
    Q = np.zeros((S, A))
    masked = np.full((S, A), -np.inf)
    has_action = avail.any(axis=1)
    it = 0
    while it < max_iters:
        it += 1
        np.copyto(masked, Q, where=avail)
        best = np.where(has_action, masked.max(axis=1), 0.0)
        V = np.where(has_action, cont * best, 0.0)
        Qn = R + gamma * (P @ V)
        change = float(np.max(np.abs(Qn - Q))) if Q.size else 0.0
        Q = Qn
        if change < tol:
            break
    return Q, it


def jacobi_eigh(A_in, tol, max_sweeps):
    a = np.array(A_in, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    scale = float(np.sqrt(np.sum(a * a)))
    sweep = 0
    iu = np.triu_indices(n, 1)
    while sweep < max_sweeps:
        off = float(np.sqrt(2.0 * np.sum(a[iu] ** 2)))
        if off <= tol * max(scale, 1.0):
            break
        sweep += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta >= 0:
                    t = 1.0 / (theta + np.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return np.diag(a).copy(), v, sweep


def sr_td_walk(psi, visits, succ_ptr, succ_next, succ_cum, act_ptr, act_list,
               terminal, starts, s, a, n_steps, u, gamma, alpha0, power, alpha_min):
    A = psi.shape[1]
    k = 0
    n_eps = 0
    inc2 = 0.0
    for _ in range(n_steps):
        idx = s * A + a
        lo, hi = succ_ptr[idx], succ_ptr[idx + 1]
        ui = u[k]
        k += 1
        s2 = int(succ_next[hi - 1])
        for m in range(lo, hi):
            if ui < succ_cum[m]:
                s2 = int(succ_next[m])
                break
        visits[s, a] += 1.0
        alpha = max(alpha_min, alpha0 / visits[s, a] ** power)
        row = psi[s, a]
        if terminal[s2]:
            target = np.zeros_like(row)
            target[s2] = gamma
            target[s] += 1.0
            d = alpha * (target - row)
            row += d
            n_eps += 1
            s = int(starts[int(u[k] * len(starts))])
            k += 1
            lo, hi = act_ptr[s], act_ptr[s + 1]
            a = int(act_list[lo + int(u[k] * (hi - lo))])
            k += 1
        else:
            lo, hi = act_ptr[s2], act_ptr[s2 + 1]
            a2 = int(act_list[lo + int(u[k] * (hi - lo))])
            k += 1
            target = gamma * psi[s2, a2]
            target[s] += 1.0
            d = alpha * (target - row)
            row += d
            s, a = s2, a2
        inc2 += float(d @ d)
    return s, a, k, n_eps, inc2


def net_train(w1, b1, w2, b2, inputs, targets, lr):
    losses = np.empty(len(inputs))
    for i, (x, y) in enumerate(zip(inputs, targets)):
        hid = 1.0 / (1.0 + np.exp(-(w1[x] + b1)))
        z = hid @ w2 + b2
        p = np.exp(z - z.max())
        p /= p.sum()
        losses[i] = -np.log(p[y])
        p[y] -= 1.0
        dh = (w2 @ p) * hid * (1.0 - hid)
        w2 -= np.outer(lr * hid, p)
        b2 -= lr * p
        w1[x] -= lr * dh
        b1 -= lr * dh
    return losses
