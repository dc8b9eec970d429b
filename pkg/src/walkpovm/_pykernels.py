"""Reference (numpy) implementations of the hot kernels.

Signatures and results match ``_ckernels.pyx`` exactly; tests run both.
"""

import numpy as np

CONVERGED, MAX_ITER, STALLED = 0, 1, 2

_MAX_DILUTIONS = 40


def _loglik(counts, effects, rho):
    p = np.einsum("kab,ba->k", effects, rho).real
    mask = counts > 0
    if np.any(p[mask] <= 0):
        return -np.inf, p
    return float(np.dot(counts[mask], np.log(p[mask]))), p


def mle_rrr(counts, effects, rho0, tol, max_iter):
    """
    Fixed-point maximum likelihood with R rho R updates.

    A full update that would lower the likelihood is replaced by a diluted one,
    ``(I + eps R) rho (I + eps R)``, halving ``eps`` until the likelihood does
    not decrease; if no dilution helps the iteration stops as STALLED.

    Returns ``(rho, iterations, loglik_history, status)``.
    """
    counts = np.ascontiguousarray(counts, dtype=np.float64)
    effects = np.ascontiguousarray(effects, dtype=np.complex128)
    rho = np.array(rho0, dtype=np.complex128)
    n = counts.sum()
    freqs = counts / n
    eye = np.eye(2, dtype=np.complex128)
    ll, p = _loglik(counts, effects, rho)
    history = [ll]
    status = MAX_ITER
    it = 0
    while it < max_iter:
        w = np.where(counts > 0, freqs / np.where(p > 0, p, 1.0), 0.0)
        r = np.einsum("k,kab->ab", w, effects)
        new = None
        eps = np.inf
        for _ in range(_MAX_DILUTIONS):
            a = r if eps == np.inf else eye + eps * r
            cand = a @ rho @ a.conj().T
            cand = cand / np.trace(cand).real
            cand = 0.5 * (cand + cand.conj().T)
            cll, cp = _loglik(counts, effects, cand)
            if cll >= ll:
                new = cand
                break
            eps = 1.0 if eps == np.inf else 0.5 * eps
        if new is None:
            status = STALLED
            break
        it += 1
        diff = np.linalg.norm(new - rho)
        rho, ll, p = new, cll, cp
        history.append(ll)
        if diff < tol:
            status = CONVERGED
            break
    return rho, it, np.array(history), status


def density_substep(rho, coins):
    """
    Conjugate every site block of ``rho`` by its coin, then shift.

    ``rho`` has shape ``(L, 2, L, 2)`` over a window of L sites and ``coins``
    shape ``(L, 2, 2)``. ``|H>`` moves to the next index, ``|V>`` to the
    previous one; amplitude pushed outside the window is dropped, so callers pad.
    """
    t = np.einsum("iab,ibjc,jdc->iajd", coins, rho, coins.conj())
    out = np.zeros_like(t)
    # (row coin, col coin) -> (row offset, col offset)
    for a, da in ((0, 1), (1, -1)):
        for c, dc in ((0, 1), (1, -1)):
            src_r = slice(max(0, -da), t.shape[0] - max(0, da))
            dst_r = slice(max(0, da), t.shape[0] - max(0, -da))
            src_c = slice(max(0, -dc), t.shape[2] - max(0, dc))
            dst_c = slice(max(0, dc), t.shape[2] - max(0, -dc))
            out[dst_r, a, dst_c, c] = t[src_r, a, src_c, c]
    return out


def damp_offdiagonal(rho, visibility):
    """Scale every block with distinct row and column site by ``visibility``."""
    L = rho.shape[0]
    mask = np.full((L, L), visibility)
    np.fill_diagonal(mask, 1.0)
    return rho * mask[:, None, :, None]
