"""Pure NumPy kernels: batched clearing solves over many asset draws.

These are the fallback twins of the Cython routines in ``_kernels.pyx`` and
share their signatures exactly. Both operate on a batch of asset vectors
(one row per Monte-Carlo path) so the per-path Python overhead disappears.
"""
from __future__ import annotations

import numpy as np

# region codes: bit 0 = firm 1 solvent, bit 1 = firm 2 solvent
SS, SD, DS, DD = 3, 1, 2, 0


def picard_batch(assets, eq_hold, debt_hold, debt, tol, max_iter, x0=None):
    """Run ``x <- g(a, x)`` independently for every row of ``assets``.

    Returns ``(X, iters, converged)`` with ``X`` of shape ``(N, 2n)``. A row
    stops as soon as its sup-norm step drops to ``tol``; rows that never get
    there keep their last iterate and ``converged[k] = False``.
    """
    A = np.ascontiguousarray(assets, dtype=float)
    N, n = A.shape
    ms_t = np.asarray(eq_hold, dtype=float).T
    md_t = np.asarray(debt_hold, dtype=float).T
    d = np.asarray(debt, dtype=float)
    if x0 is None:
        X = np.zeros((N, 2 * n))
    else:
        X = np.array(np.broadcast_to(x0, (N, 2 * n)), dtype=float)
    iters = np.zeros(N, dtype=np.int64)
    converged = np.zeros(N, dtype=bool)
    active = np.arange(N)
    for k in range(1, int(max_iter) + 1):
        xa = X[active]
        v = A[active] + xa[:, :n] @ ms_t + xa[:, n:] @ md_t
        new = np.concatenate([np.maximum(v - d, 0.0), np.minimum(v, d)], axis=1)
        step = np.max(np.abs(new - xa), axis=1)
        X[active] = new
        iters[active] = k
        done = step <= tol
        converged[active[done]] = True
        active = active[~done]
        if active.size == 0:
            break
    return X, iters, converged


def closed_form2_batch(assets, m12s, m21s, m12d, m21d, d1, d2):
    """Two-firm clearing values from the region-conditional closed forms.

    The region of each row is the one whose candidate solution satisfies its
    own solvency conditions, tried in the order SS, SD, DS, DD so that
    boundary points (v_i = d_i) resolve to the solvent side. Returns
    ``(X, region)`` with ``X`` columns ``(s1, s2, r1, r2)``.
    """
    A = np.asarray(assets, dtype=float)
    a1 = A[:, 0]
    a2 = A[:, 1]
    N = A.shape[0]

    den = 1.0 - m12s * m21s
    ss_s1 = (a1 - d1 + m12d * d2 + m12s * (a2 - d2 + m21d * d1)) / den
    ss_s2 = (a2 - d2 + m21d * d1 + m21s * (a1 - d1 + m12d * d2)) / den

    den = 1.0 - m12d * m21s
    sd_s1 = (a1 - d1 + m12d * a2 + m12d * m21d * d1) / den
    sd_r2 = (a2 + m21d * d1 + m21s * (a1 - d1)) / den

    den = 1.0 - m12s * m21d
    ds_s2 = (a2 - d2 + m21d * a1 + m21d * m12d * d2) / den
    ds_r1 = (a1 + m12d * d2 + m12s * (a2 - d2)) / den

    den = 1.0 - m12d * m21d
    dd_r1 = (a1 + m12d * a2) / den
    dd_r2 = (a2 + m21d * a1) / den

    pos = np.maximum
    # total violation of each candidate's own solvency conditions
    viol = np.stack(
        [
            pos(-ss_s1, 0.0) + pos(-ss_s2, 0.0),
            pos(-sd_s1, 0.0) + pos(sd_r2 - d2, 0.0) + (sd_r2 >= d2),
            pos(ds_r1 - d1, 0.0) + (ds_r1 >= d1) + pos(-ds_s2, 0.0),
            pos(dd_r1 - d1, 0.0) + (dd_r1 >= d1) + pos(dd_r2 - d2, 0.0) + (dd_r2 >= d2),
        ],
        axis=1,
    )
    choice = np.argmin(viol, axis=1)  # first zero wins, i.e. SS, SD, DS, DD order
    codes = np.array([SS, SD, DS, DD], dtype=np.int8)
    region = codes[choice]

    X = np.empty((N, 4))
    X[:, 0] = np.select([choice == 0, choice == 1], [ss_s1, sd_s1], 0.0)
    X[:, 1] = np.select([choice == 0, choice == 2], [ss_s2, ds_s2], 0.0)
    X[:, 2] = np.select([choice == 2, choice == 3], [ds_r1, dd_r1], d1)
    X[:, 3] = np.select([choice == 1, choice == 3], [sd_r2, dd_r2], d2)
    return X, region
