"""Dense complex linear algebra on operators over tensor-product factors.

A matrix here acts on a tensor product of finite-dimensional factors.  The
composite index is row-major with the *first* factor most significant, the
same ordering ``numpy.kron`` produces: for ``dims == (d1, d2)`` the basis
vector ``|i1, i2>`` lives at row ``i1 * d2 + i2``.

All operations are pure functions; inputs are never mutated.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

# Relative tolerance for declaring a matrix Hermitian.
HERM_RTOL = 1e-12


def _as_complex(mat: np.ndarray) -> np.ndarray:
    out = np.array(mat, dtype=np.complex128, order="C")
    if out.ndim != 2 or out.shape[0] != out.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {out.shape}")
    return out


def hermiticity_defect(mat: np.ndarray) -> float:
    """Max-entry deviation of ``mat`` from its conjugate transpose."""
    return float(np.max(np.abs(mat - mat.conj().T), initial=0.0))


@dataclass(frozen=True)
class HermMat:
    """Square complex matrix with explicit tensor-factor dimensions.

    Parameters
    ----------
    data : ndarray
        The matrix entries, coerced to complex128.
    dims : tuple of int
        Factor dimensions; their product must equal the matrix side.
    hermitian : bool
        If set (the default), the entries must satisfy
        ``max|M - M^dag| <= 1e-12 * max|M|``.
    """

    data: np.ndarray
    dims: tuple[int, ...]
    hermitian: bool = True

    def __post_init__(self) -> None:
        data = _as_complex(self.data)
        dims = tuple(int(d) for d in self.dims)
        if any(d < 1 for d in dims):
            raise ValueError(f"factor dimensions must be positive, got {dims}")
        if int(np.prod(dims)) != data.shape[0]:
            raise ValueError(
                f"dims {dims} do not multiply out to matrix side {data.shape[0]}"
            )
        if self.hermitian:
            scale = float(np.max(np.abs(data), initial=0.0))
            if hermiticity_defect(data) > HERM_RTOL * max(scale, 1e-300):
                raise ValueError("matrix marked hermitian fails the symmetry check")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "dims", dims)

    @property
    def side(self) -> int:
        return self.data.shape[0]


def herm(data: np.ndarray, dims: Sequence[int] | None = None, hermitian: bool = True) -> HermMat:
    """Wrap ``data`` as a :class:`HermMat`, defaulting to a single factor."""
    data = _as_complex(data)
    if dims is None:
        dims = (data.shape[0],)
    return HermMat(data, tuple(dims), hermitian)


def _check_factor(m: HermMat, factor: int) -> int:
    if not 0 <= factor < len(m.dims):
        raise IndexError(f"factor {factor} out of range for dims {m.dims}")
    return factor


def kron(a: HermMat, b: HermMat) -> HermMat:
    """Tensor product; the factor list is the concatenation of the inputs'."""
    return HermMat(np.kron(a.data, b.data), a.dims + b.dims, a.hermitian and b.hermitian)


def _ptrace_array(mat: np.ndarray, dims: Sequence[int], factor: int) -> np.ndarray:
    n = len(dims)
    t = mat.reshape(tuple(dims) * 2)
    t = np.trace(t, axis1=factor, axis2=factor + n)
    rest = int(np.prod([d for i, d in enumerate(dims) if i != factor], initial=1))
    return np.ascontiguousarray(t.reshape(rest, rest))


def _ptranspose_array(mat: np.ndarray, dims: Sequence[int], factor: int) -> np.ndarray:
    n = len(dims)
    axes = list(range(2 * n))
    axes[factor], axes[factor + n] = axes[factor + n], axes[factor]
    side = mat.shape[0]
    t = mat.reshape(tuple(dims) * 2).transpose(axes)
    return np.ascontiguousarray(t.reshape(side, side))


def partial_trace(m: HermMat, factor: int) -> HermMat:
    """Trace out one factor, keeping the remaining factor order."""
    _check_factor(m, factor)
    if len(m.dims) == 1:
        raise ValueError("cannot partial-trace a single-factor matrix; use trace")
    out = _ptrace_array(m.data, m.dims, factor)
    dims = tuple(d for i, d in enumerate(m.dims) if i != factor)
    return HermMat(out, dims, m.hermitian)


def partial_transpose(m: HermMat, factor: int) -> HermMat:
    """Transpose one factor in place; an involution, and trace preserving."""
    _check_factor(m, factor)
    return HermMat(_ptranspose_array(m.data, m.dims, factor), m.dims, m.hermitian)


def permute_factors(m: HermMat, order: Sequence[int]) -> HermMat:
    """Reorder tensor factors by an index permutation (no matrix products)."""
    n = len(m.dims)
    order = list(order)
    if sorted(order) != list(range(n)):
        raise ValueError(f"order {order} is not a permutation of range({n})")
    axes = order + [n + k for k in order]
    side = m.side
    out = m.data.reshape(m.dims * 2).transpose(axes).reshape(side, side)
    return HermMat(np.ascontiguousarray(out), tuple(m.dims[k] for k in order), m.hermitian)


def trace_norm(m: HermMat) -> float:
    """Sum of singular values; for Hermitian input, sum of |eigenvalues|."""
    if m.hermitian:
        return float(np.abs(np.linalg.eigvalsh(m.data)).sum())
    return float(np.linalg.svd(m.data, compute_uv=False).sum())


def eig_hermitian(m: HermMat) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.

    Raises ``ValueError`` if the input is not flagged Hermitian.
    """
    if not m.hermitian:
        raise ValueError("eig_hermitian requires a Hermitian-flagged matrix")
    w, v = np.linalg.eigh(m.data)
    return w, v


def hermitian_basis(side: int) -> Iterator[np.ndarray]:
    """Yield an orthonormal basis of the side x side Hermitian matrices.

    Frobenius-orthonormal: diagonal units, then symmetric and antisymmetric
    off-diagonal combinations scaled by 1/sqrt(2).  ``side**2`` elements.
    """
    for i in range(side):
        e = np.zeros((side, side), dtype=np.complex128)
        e[i, i] = 1.0
        yield e
    rt2 = 1.0 / np.sqrt(2.0)
    for i in range(side):
        for j in range(i + 1, side):
            e = np.zeros((side, side), dtype=np.complex128)
            e[i, j] = rt2
            e[j, i] = rt2
            yield e
            e = np.zeros((side, side), dtype=np.complex128)
            e[i, j] = -1j * rt2
            e[j, i] = 1j * rt2
            yield e
