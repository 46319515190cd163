"""Dense complex linear algebra for small Hermitian problems.

Composite spaces are ordered system-major: an operator on ``S (x) E`` is
``kron(A_S, B_E)`` and the row index of ``|n>|k>`` is ``n * d_E + k``.
"""

from __future__ import annotations

from functools import cached_property
from typing import Callable

import numpy as np

from .errors import DimensionMismatch, NoConvergence, NotHermitian

HERMITIAN_RTOL = 1e-12
JACOBI_OFF_RTOL = 1e-14
JACOBI_MAX_SWEEPS = 50
DEFAULT_EIG_METHOD = "lapack"


def as_matrix(A) -> np.ndarray:
    """Coerce ``A`` to a finite 2-D complex array."""
    if isinstance(A, HermitianMatrix):
        return A.data
    M = np.asarray(A, dtype=complex)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def frobenius_norm(A) -> float:
    M = as_matrix(A)
    return float(np.sqrt(np.sum(M.real**2 + M.imag**2)))


def hermitian_part(A) -> np.ndarray:
    """Return ``(A + A^dagger)/2`` after checking ``A`` is Hermitian to 1e-12 relative."""
    M = as_matrix(A)
    if M.shape[0] != M.shape[1]:
        raise NotHermitian(f"matrix is not square: {M.shape}")
    defect = frobenius_norm(M - M.conj().T)
    if defect > HERMITIAN_RTOL * max(1.0, frobenius_norm(M)):
        raise NotHermitian(f"||A - A^dagger||_F = {defect:.3e} exceeds tolerance")
    return (M + M.conj().T) / 2


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    # Circle-method tournament: every index pair meets exactly once per sweep,
    # and pairs within a round are disjoint so their rotations commute.
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n]
        if pairs:
            P, Q = zip(*pairs)
            rounds.append((np.array(P), np.array(Q)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(
    A,
    *,
    tol: float = JACOBI_OFF_RTOL,
    max_sweeps: int = JACOBI_MAX_SWEEPS,
) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic complex Jacobi eigensolver.

    Each sweep visits every off-diagonal pair once, in ``d - 1`` rounds of
    disjoint rotations applied together. Iteration stops once the
    off-diagonal Frobenius mass is at most ``tol * ||A||_F``.

    Returns ``(w, V)`` with ``w`` ascending and ``A = V diag(w) V^dagger``.
    """
    A = hermitian_part(A).copy()
    d = A.shape[0]
    V = np.eye(d, dtype=complex)
    scale = frobenius_norm(A)
    if d == 1 or scale == 0.0:
        return np.real(np.diag(A)).copy(), V

    rounds = _round_robin(d)
    for _ in range(max_sweeps):
        off = frobenius_norm(A - np.diag(np.diag(A)))
        if off <= tol * scale:
            break
        for P, Q in rounds:
            apq = A[P, Q]
            mag = np.abs(apq)
            active = mag > 0.0
            safe = np.where(active, mag, 1.0)
            phase = np.where(active, apq / safe, 1.0)
            app = A[P, P].real
            aqq = A[Q, Q].real
            theta = (aqq - app) / (2.0 * safe)
            t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(1.0 + theta**2))
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t**2)
            s = t * c
            ph = phase.conj()

            cp, cq = A[:, P].copy(), A[:, Q].copy()
            A[:, P] = cp * c - cq * (s * ph)
            A[:, Q] = cp * s + cq * (c * ph)
            rp, rq = A[P, :].copy(), A[Q, :].copy()
            A[P, :] = rp * c[:, None] - rq * (s * phase)[:, None]
            A[Q, :] = rp * s[:, None] + rq * (c * phase)[:, None]
            vp, vq = V[:, P].copy(), V[:, Q].copy()
            V[:, P] = vp * c - vq * (s * ph)
            V[:, Q] = vp * s + vq * (c * ph)

            A[P, Q] = 0.0
            A[Q, P] = 0.0
            idx = np.concatenate([P, Q])
            A[idx, idx] = A[idx, idx].real
    else:
        off = frobenius_norm(A - np.diag(np.diag(A)))
        if off > tol * scale:
            raise NoConvergence(
                f"Jacobi did not converge in {max_sweeps} sweeps (off = {off:.3e})"
            )

    w = np.real(np.diag(A))
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def eig_hermitian(A, method: str = DEFAULT_EIG_METHOD) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition ``(w, V)`` of a Hermitian matrix, ``w`` ascending.

    ``method`` is ``"lapack"`` (numpy's ``eigh``) or ``"jacobi"``.
    Inputs within the Hermiticity tolerance are symmetrized first; anything
    further from Hermitian raises :class:`NotHermitian`.
    """
    if method == "jacobi":
        return jacobi_eigh(A)
    if method != "lapack":
        raise ValueError(f"unknown eigensolver {method!r}")
    M = hermitian_part(A)
    try:
        w, V = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NoConvergence(str(exc)) from exc
    return w, V


class HermitianMatrix:
    """Immutable Hermitian matrix with a lazily cached spectrum.

    Eigenvalues are stored ascending. Within a degenerate cluster the
    eigenvector basis is arbitrary.
    """

    __array_priority__ = 10

    def __init__(self, data, *, spectrum: tuple[np.ndarray, np.ndarray] | None = None):
        if isinstance(data, HermitianMatrix):
            M = data.data
            spectrum = spectrum or data.__dict__.get("spectrum")
        else:
            M = hermitian_part(data)
        M = np.array(M, dtype=complex)
        M.setflags(write=False)
        self.data = M
        if spectrum is not None:
            w, V = (np.array(x) for x in spectrum)
            w.setflags(write=False)
            V.setflags(write=False)
            self.__dict__["spectrum"] = (w, V)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @cached_property
    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        w, V = eig_hermitian(self.data)
        w.setflags(write=False)
        V.setflags(write=False)
        return w, V

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.spectrum[0]

    @property
    def eigenvectors(self) -> np.ndarray:
        return self.spectrum[1]

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def bandwidth(self) -> float:
        return self.lambda_max - self.lambda_min

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.data, dtype=dtype)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.dim})"


def kron(A, B) -> np.ndarray:
    """Kronecker product, ``out[i*dB + k, j*dB + l] = A[i, j] * B[k, l]``."""
    return np.kron(as_matrix(A), as_matrix(B))


def partial_trace_system(rho, d_S: int, d_E: int) -> np.ndarray:
    """Trace out the first (system) factor of a ``d_S * d_E`` operator."""
    M = as_matrix(rho)
    if M.shape != (d_S * d_E, d_S * d_E):
        raise DimensionMismatch(f"shape {M.shape} incompatible with d_S={d_S}, d_E={d_E}")
    return np.einsum("nknl->kl", M.reshape(d_S, d_E, d_S, d_E))


def partial_trace_environment(rho, d_S: int, d_E: int) -> np.ndarray:
    """Trace out the second (environment) factor of a ``d_S * d_E`` operator."""
    M = as_matrix(rho)
    if M.shape != (d_S * d_E, d_S * d_E):
        raise DimensionMismatch(f"shape {M.shape} incompatible with d_S={d_S}, d_E={d_E}")
    return np.einsum("nkmk->nm", M.reshape(d_S, d_E, d_S, d_E))


def operator_norm(A) -> float:
    """Largest absolute eigenvalue of a Hermitian matrix."""
    w = A.eigenvalues if isinstance(A, HermitianMatrix) else eig_hermitian(A)[0]
    return float(np.max(np.abs(w)))


def spectral_function(A, f: Callable) -> HermitianMatrix:
    """``V f(Lambda) V^dagger`` for real-valued ``f`` finite on the spectrum of ``A``."""
    H = A if isinstance(A, HermitianMatrix) else HermitianMatrix(A)
    w, V = H.spectrum
    try:
        with np.errstate(all="ignore"):
            fw = np.asarray(f(w), dtype=float)
        if fw.shape != w.shape:
            raise ValueError
    except (TypeError, ValueError):
        fw = np.array([f(x) for x in w], dtype=float)
    if not np.all(np.isfinite(fw)):
        raise ValueError("f is not finite on the spectrum")
    out = (V * fw) @ V.conj().T
    return HermitianMatrix((out + out.conj().T) / 2, spectrum=(fw, V) if np.all(np.diff(fw) >= 0) else None)
