"""Dense complex tensors and the pairwise contraction primitive.

A :class:`DenseTensor` is an immutable wrapper around a C-contiguous
``complex128`` array.  All higher layers (networks, circuits, matrix product
states) reduce their work to :func:`contract_pair`, which itself lowers to a
permute-and-matmul via ``np.tensordot``, so BLAS does the heavy lifting.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .errors import (
    AxisMismatch,
    AxisOutOfRange,
    DuplicateAxis,
    InvalidExtent,
    NotFinite,
    ShapeError,
    ShapeMismatch,
)


class DenseTensor:
    """Immutable dense tensor of complex128 entries in row-major order.

    Parameters
    ----------
    array:
        Anything ``np.asarray`` accepts.  The data is converted to
        ``complex128``, made C-contiguous, and frozen (the underlying buffer
        is marked read-only).

    Raises
    ------
    InvalidExtent
        If any axis has extent < 1.
    NotFinite
        If any entry is NaN or Inf.
    """

    __slots__ = ("array",)

    def __init__(self, array) -> None:
        # np.ascontiguousarray would promote rank-0 to rank-1, so keep asarray.
        arr = np.asarray(array, dtype=np.complex128)
        if not arr.flags.c_contiguous:
            arr = np.copy(arr, order="C")
        if any(int(e) < 1 for e in arr.shape):
            raise InvalidExtent(f"axis extents must be >= 1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
            raise NotFinite("tensor entries must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "array", arr)

    def __setattr__(self, name, value):
        raise AttributeError("DenseTensor is immutable")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.array.shape

    @property
    def ndim(self) -> int:
        return self.array.ndim

    @property
    def size(self) -> int:
        return self.array.size

    def item(self) -> complex:
        """Return the single entry of a scalar (rank-0 or size-1) tensor."""
        if self.size != 1:
            raise ShapeError(f"item() on tensor of shape {self.shape}")
        return complex(self.array.reshape(()))

    def reshape(self, shape: Sequence[int]) -> "DenseTensor":
        return DenseTensor(self.array.reshape(tuple(shape)))

    def __repr__(self) -> str:
        return f"DenseTensor(shape={self.shape})"


def make_tensor(shape: Sequence[int], data: Sequence[complex]) -> DenseTensor:
    """Build a tensor from ``shape`` and flat row-major ``data``.

    ``shape`` may be empty, which denotes a scalar holding exactly one entry.

    Raises
    ------
    InvalidExtent
        If an extent is not a positive integer.
    ShapeMismatch
        If ``len(data)`` differs from the product of the extents.
    """
    dims = []
    for e in shape:
        if not isinstance(e, (int, np.integer)) or isinstance(e, bool) or int(e) < 1:
            raise InvalidExtent(f"extent {e!r} is not a positive integer")
        dims.append(int(e))
    flat = np.asarray(list(data), dtype=np.complex128)
    expected = int(np.prod(dims, dtype=np.int64)) if dims else 1
    if flat.ndim != 1 or flat.size != expected:
        raise ShapeMismatch(f"shape {tuple(dims)} needs {expected} entries, got {flat.size}")
    return DenseTensor(flat.reshape(tuple(dims)))


def _check_axes(t: DenseTensor, axes: Sequence[int], which: str) -> tuple[int, ...]:
    out = []
    for ax in axes:
        ax = int(ax)
        if not -1 < ax < t.ndim:
            raise AxisOutOfRange(f"axis {ax} out of range for {which} operand of rank {t.ndim}")
        out.append(ax)
    if len(set(out)) != len(out):
        raise DuplicateAxis(f"repeated axis in {which} operand axes {tuple(out)}")
    return tuple(out)


def contract_pair(
    a: DenseTensor,
    a_axes: Sequence[int],
    b: DenseTensor,
    b_axes: Sequence[int],
) -> DenseTensor:
    """Contract ``a`` and ``b`` over the paired axes.

    The i-th entry of ``a_axes`` is summed against the i-th entry of
    ``b_axes``.  Result axes are the free axes of ``a`` (in their original
    order) followed by the free axes of ``b``.  Passing empty axis lists is
    allowed and yields the outer product.

    Raises
    ------
    AxisMismatch
        If the axis lists differ in length or paired extents disagree.
    AxisOutOfRange, DuplicateAxis
        If an axis list is malformed.
    """
    ax_a = _check_axes(a, a_axes, "left")
    ax_b = _check_axes(b, b_axes, "right")
    if len(ax_a) != len(ax_b):
        raise AxisMismatch(f"{len(ax_a)} axes on the left vs {len(ax_b)} on the right")
    for i, j in zip(ax_a, ax_b):
        if a.shape[i] != b.shape[j]:
            raise AxisMismatch(
                f"axis {i} (extent {a.shape[i]}) does not match axis {j} (extent {b.shape[j]})"
            )
    return DenseTensor(np.tensordot(a.array, b.array, axes=(ax_a, ax_b)))


def adjoint(a: DenseTensor, split: int | None = None) -> DenseTensor:
    """Conjugate transpose with respect to a row/column axis split.

    The first ``split`` axes are rows and the rest are columns; the default
    splits the rank evenly, so a matrix maps to its ordinary conjugate
    transpose.  Rank-0 tensors are conjugated.

    Raises
    ------
    ShapeError
        If the rank is odd and no explicit ``split`` is given, or ``split``
        is out of range.
    """
    if split is None:
        if a.ndim % 2 != 0:
            raise ShapeError(f"rank {a.ndim} has no even row/column split")
        split = a.ndim // 2
    if not 0 <= split <= a.ndim:
        raise ShapeError(f"split {split} out of range for rank {a.ndim}")
    perm = tuple(range(split, a.ndim)) + tuple(range(split))
    return DenseTensor(np.conj(np.transpose(a.array, perm)))


def frobenius_norm(a: DenseTensor) -> float:
    """Square root of the sum of squared entry magnitudes."""
    return float(np.linalg.norm(a.array.ravel()))
