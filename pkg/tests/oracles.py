"""Dense-matrix reference for the walk, built independently of the sparse engine.

The lattice is a finite window; the basis index of (site x, coin a) is
2 * (x - lo) + a.
"""

import numpy as np


def dense_shift(lo, hi):
    n = hi - lo + 1
    t = np.zeros((2 * n, 2 * n), dtype=complex)
    for i in range(n):
        if i + 1 < n:
            t[2 * (i + 1), 2 * i] = 1.0  # H moves right
        if i - 1 >= 0:
            t[2 * (i - 1) + 1, 2 * i + 1] = 1.0  # V moves left
    return t


def dense_coin_layer(coins, lo, hi):
    n = hi - lo + 1
    blocks = [np.asarray(coins.get(lo + i, np.eye(2)), dtype=complex) for i in range(n)]
    out = np.zeros((2 * n, 2 * n), dtype=complex)
    for i, b in enumerate(blocks):
        out[2 * i:2 * i + 2, 2 * i:2 * i + 2] = b
    return out


def dense_walk_unitary(coin_layers, lo, hi):
    """Product T C_k ... T C_1 for a flat list of coin-layer dicts."""
    n = hi - lo + 1
    u = np.eye(2 * n, dtype=complex)
    t = dense_shift(lo, hi)
    for coins in coin_layers:
        u = t @ dense_coin_layer(coins, lo, hi) @ u
    return u


def dense_vector(amps, lo, hi):
    v = np.zeros(2 * (hi - lo + 1), dtype=complex)
    for x, c in amps.items():
        v[2 * (x - lo):2 * (x - lo) + 2] = c
    return v


def sic_coin_layers():
    s2, s3 = np.sqrt(2), np.sqrt(3)
    x = np.array([[0, 1], [1, 0]])
    c12 = np.array([[1, -1], [-1, -1]]) / s2
    c21 = np.array([[-1, 1], [1, 1]]) / s2
    c22 = np.array([[s2, 1], [1, -s2]]) / s3
    c31 = np.array([[np.exp(-1j * np.pi / 3), np.exp(1j * np.pi / 6)],
                    [np.exp(1j * np.pi / 3), np.exp(-1j * np.pi / 6)]]) / s2
    return [{}, {1: c12, -1: x}, {0: c21}, {1: c22, -1: x}, {0: c31}, {-1: x}]
