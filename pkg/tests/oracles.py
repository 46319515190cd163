"""Independent reference implementations used only by the tests.

Each oracle takes a different computational route from the library code it
checks (explicit loops, Taylor series, linear solves), so agreement is
evidence rather than tautology.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def kron_loop(A, B):
    A, B = np.asarray(A, dtype=complex), np.asarray(B, dtype=complex)
    (a, b), (c, d) = A.shape, B.shape
    out = np.zeros((a * c, b * d), dtype=complex)
    for i, j, k, l in itertools.product(range(a), range(b), range(c), range(d)):
        out[i * c + k, j * d + l] = A[i, j] * B[k, l]
    return out


def trace_out_system(rho, d_S, d_E):
    out = np.zeros((d_E, d_E), dtype=complex)
    for k in range(d_E):
        for l in range(d_E):
            out[k, l] = sum(rho[n * d_E + k, n * d_E + l] for n in range(d_S))
    return out


def trace_out_environment(rho, d_S, d_E):
    out = np.zeros((d_S, d_S), dtype=complex)
    for n in range(d_S):
        for m in range(d_S):
            out[n, m] = sum(rho[n * d_E + k, m * d_E + k] for k in range(d_E))
    return out


def expm_taylor(A, terms: int = 30):
    """Scaling-and-squaring exponential with a truncated Taylor series."""
    A = np.asarray(A, dtype=complex)
    norm = np.linalg.norm(A, 1)
    squarings = max(0, int(math.ceil(math.log2(norm))) + 1) if norm > 0.5 else 0
    X = A / 2**squarings
    out = np.eye(A.shape[0], dtype=complex)
    term = np.eye(A.shape[0], dtype=complex)
    for k in range(1, terms + 1):
        term = term @ X / k
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


def gibbs_taylor(H, beta):
    E = expm_taylor(-beta * np.asarray(H, dtype=complex))
    return E / np.trace(E).real


def moment(rho, G, k: int) -> float:
    return float(np.real(np.trace(np.asarray(rho) @ np.linalg.matrix_power(np.asarray(G), k))))


def kl(p, q) -> float:
    p, q = np.asarray(p, float), np.asarray(q, float)
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def embed_two_site(U, d_S: int, n: int, N: int):
    """Dense operator of ``U`` on ``S (x) A_n`` inside ``S (x) A_1 ... A_N``."""
    U = np.asarray(U, dtype=complex)
    D = d_S * 2**N
    out = np.zeros((D, D), dtype=complex)
    for col in range(D):
        s, rest = divmod(col, 2**N)
        bits = [(rest >> (N - 1 - j)) & 1 for j in range(N)]
        a = bits[n - 1]
        for s2 in range(d_S):
            for a2 in range(2):
                amp = U[s2 * 2 + a2, s * 2 + a]
                if amp == 0:
                    continue
                nb = list(bits)
                nb[n - 1] = a2
                row = s2 * 2**N + int("".join(map(str, nb)), 2)
                out[row, col] += amp
    return out


def stationary_lstsq(W):
    """Stationary distribution from the generator plus a normalization row."""
    W = np.array(W, dtype=float)
    np.fill_diagonal(W, 0.0)
    L = W - np.diag(W.sum(axis=0))
    n = L.shape[0]
    A = np.vstack([L, np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    return np.linalg.lstsq(A, b, rcond=None)[0]


def sigma_activity_loop(W, P):
    """Entropy production and activity rates by an explicit pair loop over ordered pairs."""
    n = len(P)
    sigma = activity = 0.0
    for a in range(n):
        for b in range(n):
            if a == b or W[a, b] == 0:
                continue
            j_ab = P[b] * W[a, b]
            j_ba = P[a] * W[b, a]
            sigma += 0.5 * (j_ab - j_ba) * math.log(j_ab / j_ba)
            activity += 0.5 * (j_ab + j_ba)
    return sigma, activity
