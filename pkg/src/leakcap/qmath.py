"""Dense complex linear algebra and quantum-information primitives.

Matrices are plain ``numpy`` arrays. :class:`DensityOperator` pairs a matrix
with the dimensions of its tensor factors so that partial traces and partial
transposes know which indices to contract.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import mpmath as mp
import numpy as np
from scipy.sparse.csgraph import connected_components

DEFAULT_TOL = 1e-10
STATE_TOL = 1e-12
ZERO_CLAMP = 1e-12


class NotHermitianError(ValueError):
    """Raised when a matrix that must be Hermitian is not."""

    def __init__(self, asymmetry: float, tol: float):
        self.asymmetry = asymmetry
        self.tol = tol
        super().__init__(
            f"matrix is not Hermitian: max |M - M^dag| = {asymmetry:.3e} exceeds tol {tol:.1e}"
        )


class InvalidStateError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenvalues sorted descending, with eigenvectors as matching columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.transpose(m))


def max_asymmetry(m: np.ndarray) -> float:
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(m - dagger(m))))


def matrices_close(a: np.ndarray, b: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    """Entrywise comparison; shapes must match."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        return False
    return bool(np.all(np.abs(a - b) <= tol))


def hermitian_eig(m: np.ndarray, tol: float = DEFAULT_TOL) -> Spectrum:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Raises :class:`NotHermitianError` when ``m`` deviates from its adjoint by
    more than ``tol`` in any entry.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    asym = max_asymmetry(m)
    if asym > tol:
        raise NotHermitianError(asym, tol)
    w, v = np.linalg.eigh(0.5 * (m + dagger(m)))
    order = np.argsort(w)[::-1]
    return Spectrum(eigenvalues=w[order], eigenvectors=v[:, order])


def tensor(*mats: np.ndarray) -> np.ndarray:
    """Kronecker product of the arguments, left to right."""
    if not mats:
        raise ValueError("tensor() needs at least one factor")
    return reduce(np.kron, (np.asarray(m) for m in mats))


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex).reshape(-1)
    return np.outer(vec, vec.conj())


def _check_dims(mat: np.ndarray, dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if any(d <= 0 for d in dims):
        raise ValueError(f"factor dimensions must be positive, got {dims}")
    total = int(np.prod(dims))
    if mat.shape != (total, total):
        raise ValueError(f"matrix shape {mat.shape} does not match factor dims {dims}")
    return dims


def ptrace(mat: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Partial trace of ``mat`` keeping the factors listed in ``keep``.

    Kept factors appear in their original order regardless of how ``keep``
    is ordered.
    """
    mat = np.asarray(mat)
    dims = _check_dims(mat, dims)
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep must name at least one factor")
    if keep[0] < 0 or keep[-1] >= len(dims):
        raise ValueError(f"keep indices {keep} out of range for {len(dims)} factors")
    nf = len(dims)
    t = mat.reshape(dims + dims)
    traced = [i for i in range(nf) if i not in keep]
    row = list(range(nf))
    col = [nf + i for i in range(nf)]
    for i in traced:
        col[i] = row[i]
    out = [row[i] for i in keep] + [col[i] for i in keep]
    dk = int(np.prod([dims[i] for i in keep]))
    return np.einsum(t, row + col, out).reshape(dk, dk)


def ptranspose(mat: np.ndarray, dims: Sequence[int], factor: int) -> np.ndarray:
    """Transpose of the indices belonging to one tensor factor."""
    mat = np.asarray(mat)
    dims = _check_dims(mat, dims)
    nf = len(dims)
    if not 0 <= factor < nf:
        raise ValueError(f"factor index {factor} out of range for {nf} factors")
    t = mat.reshape(dims + dims)
    axes = list(range(2 * nf))
    axes[factor], axes[nf + factor] = axes[nf + factor], axes[factor]
    return t.transpose(axes).reshape(mat.shape)


def entropy_of_eigenvalues(w: np.ndarray) -> float:
    w = np.asarray(w, dtype=float)
    w = w[w >= ZERO_CLAMP]
    return float(-np.sum(w * np.log2(w)))


def entropy(mat: np.ndarray) -> float:
    """Von Neumann entropy in bits of a Hermitian matrix (no validation)."""
    return entropy_of_eigenvalues(np.linalg.eigvalsh(mat))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """A validated density matrix together with its tensor-factor dimensions."""

    matrix: np.ndarray
    dims: tuple[int, ...]

    def __init__(self, matrix, dims: Sequence[int] | None = None, tol: float = STATE_TOL):
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidStateError(f"density operator must be square, got shape {m.shape}")
        if dims is None:
            dims = (m.shape[0],)
        dims = _check_dims(m, dims)
        asym = max_asymmetry(m)
        if asym > tol:
            raise InvalidStateError(f"not Hermitian (max asymmetry {asym:.3e})")
        tr = np.trace(m).real
        if abs(tr - 1.0) > tol:
            raise InvalidStateError(f"trace {tr!r} differs from 1")
        wmin = np.linalg.eigvalsh(0.5 * (m + dagger(m)))[0]
        if wmin < -tol:
            raise InvalidStateError(f"negative eigenvalue {wmin:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_ket(cls, vec, dims: Sequence[int] | None = None) -> "DensityOperator":
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        vec = vec / np.linalg.norm(vec)
        return cls(projector(vec), dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def ptrace(self, keep: Iterable[int]) -> "DensityOperator":
        return partial_trace(self, keep)

    def entropy(self) -> float:
        return von_neumann_entropy(self)


def partial_trace(rho: DensityOperator, keep: Iterable[int]) -> DensityOperator:
    keep = sorted(set(int(k) for k in keep))
    out = ptrace(rho.matrix, rho.dims, keep)
    return DensityOperator(out, [rho.dims[i] for i in keep])


def partial_transpose(rho: DensityOperator, factor: int) -> np.ndarray:
    return ptranspose(rho.matrix, rho.dims, factor)


def von_neumann_entropy(rho: DensityOperator | np.ndarray) -> float:
    """Entropy in bits; eigenvalues below ``ZERO_CLAMP`` count as zero."""
    mat = rho.matrix if isinstance(rho, DensityOperator) else rho
    return entropy(mat)


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix from a complex Ginibre matrix of the given rank."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


# --- extended precision ---------------------------------------------------


def mp_entropy(mat: "mp.matrix", clamp=None) -> "mp.mpf":
    """Von Neumann entropy in bits of an mpmath Hermitian matrix.

    The matrix is split into the connected blocks of its sparsity pattern and
    each block is diagonalised separately at the working precision, which
    keeps very high precision affordable for the structured states used here.
    Eigenvalues not above ``clamp`` (default ``10**-(dps-10)``) count as zero.
    """
    n = mat.rows
    if clamp is None:
        clamp = mp.mpf(10) ** (-(mp.mp.dps - 10))
    pattern = np.array([[mat[i, j] != 0 for j in range(n)] for i in range(n)])
    ncomp, labels = connected_components(pattern, directed=False)
    total = mp.mpf(0)
    for c in range(ncomp):
        idx = [i for i in range(n) if labels[i] == c]
        if len(idx) == 1:
            evals = [mp.re(mat[idx[0], idx[0]])]
        else:
            block = mp.matrix([[mat[i, j] for j in idx] for i in idx])
            if any(mp.im(x) != 0 for x in block):
                evals = mp.eighe(block, eigvals_only=True)
            else:
                evals = mp.eigsy(block, eigvals_only=True)
        for e in evals:
            e = mp.re(e)
            if e > clamp:
                total -= e * mp.log(e)
    return total / mp.log(2)
