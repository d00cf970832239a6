"""Complex linear algebra, seeded sampling, and quadrature substrate.

Complex matrices are plain ``numpy.ndarray`` of dtype complex128. Every
operation here is deterministic for a fixed seed within one installation,
which is what makes whole experiment sweeps bit-reproducible.
"""
from __future__ import annotations

import numpy as np

__all__ = ["RngStream", "gaussian_matrix", "herm_eig", "svd_dominant", "quadrature"]


class RngStream:
    """Seeded random stream with a draw counter.

    Wraps numpy's PCG64 generator: a given seed always reproduces the same
    draw sequence. A stream is single-owner; parallel code must derive
    independent child streams with :meth:`child` instead of sharing one.

    Parameters
    ----------
    seed : int
        Nonnegative seed. Streams with equal seeds are identical.
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if seed < 0:
            raise ValueError(f"seed must be nonnegative, got {seed}")
        self.seed = seed
        self.position = 0  # scalar draws consumed so far
        self._gen = np.random.Generator(np.random.PCG64(seed))

    def standard_normal(self, shape) -> np.ndarray:
        """Draw real standard-normal values and advance the counter."""
        out = self._gen.standard_normal(size=shape)
        self.position += out.size
        return out

    def integers(self, low, high) -> int:
        """Draw one integer in [low, high)."""
        self.position += 1
        return int(self._gen.integers(low, high))

    def uniform(self, low, high, shape=None):
        out = self._gen.uniform(low, high, size=shape)
        self.position += np.size(out)
        return out

    def child(self, *keys: int) -> "RngStream":
        """Derive an independent stream from this stream's seed and integer keys.

        Pure function of (seed, keys): re-deriving with the same keys gives
        the same stream regardless of how much this stream has been used.
        """
        derived = np.random.SeedSequence([self.seed, *[int(k) for k in keys]])
        return RngStream(int(derived.generate_state(1, np.uint64)[0]))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, position={self.position})"


def gaussian_matrix(rng: RngStream, rows: int, cols: int, variance: float) -> np.ndarray:
    """Draw a rows x cols matrix of i.i.d. circular complex Gaussians.

    Each entry has total variance ``variance``, split evenly between the
    real and imaginary parts. The real block is drawn before the imaginary
    block, so the draw order is part of the reproducibility contract.
    """
    if variance < 0:
        raise ValueError(f"variance must be nonnegative, got {variance}")
    scale = np.sqrt(variance / 2.0)
    re = rng.standard_normal((rows, cols))
    im = rng.standard_normal((rows, cols))
    return scale * (re + 1j * im)


def herm_eig(a: np.ndarray, herm_tol: float = 1e-9):
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Returns ``(w, v)`` with ``a ~= v @ diag(w) @ v.conj().T`` and ``w``
    sorted in descending order. Rejects inputs whose Hermitian defect
    ``max|a - a^H|`` exceeds ``herm_tol``.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"herm_eig needs a square matrix, got shape {a.shape}")
    defect = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    if defect > herm_tol:
        raise ValueError(f"matrix is not Hermitian: max|a - a^H| = {defect:.3e}")
    # symmetrize so eigh sees an exactly Hermitian operand
    w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    return w[::-1].copy(), v[:, ::-1].copy()


def svd_dominant(a: np.ndarray) -> np.ndarray:
    """Left singular vector of the largest singular value, unit norm."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"svd_dominant needs a matrix, got shape {a.shape}")
    if not np.any(a):
        raise ValueError("svd_dominant is undefined for the zero matrix")
    u, _, _ = np.linalg.svd(a, full_matrices=False)
    return u[:, 0].copy()


def quadrature(f, lo: float, hi: float, nodes: int = 513) -> complex:
    """Composite Simpson integration of a complex-valued integrand.

    ``f`` must accept a float ndarray of abscissae and return the integrand
    values elementwise. ``nodes`` must be odd and at least 3 (an even
    interval count). Error is O(((hi-lo)/nodes)^4) for smooth integrands.
    """
    nodes = int(nodes)
    if nodes < 3 or nodes % 2 == 0:
        raise ValueError(f"nodes must be odd and >= 3, got {nodes}")
    if lo > hi:
        raise ValueError(f"need lo <= hi, got lo={lo}, hi={hi}")
    if lo == hi:
        return 0.0 + 0.0j
    x = np.linspace(lo, hi, nodes)
    y = np.asarray(f(x), dtype=complex)
    if y.shape != x.shape:
        raise ValueError("integrand must map an (n,) array to an (n,) array")
    w = np.ones(nodes)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    h = (hi - lo) / (nodes - 1)
    return complex((h / 3.0) * np.dot(w, y))
