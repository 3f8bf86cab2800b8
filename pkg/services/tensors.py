"""Index conventions and dense small-tensor storage.

Indices are stored 0-based inside each class: a in [0, l), p in [0, r),
alpha in [0, bigN - n) and the point-augmented index i in [0, l + 1) with
i = 0 standing for the base point.
"""

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, Iterable, Sequence

import numpy as np

from services.errors import AxisMismatch, InvalidRanges, ShapeMismatch, SingularMetric


class AxisClass(str, Enum):
    NORMAL = "a"
    TANGENT = "p"
    HYPERPLANE = "alpha"
    POINT = "i"


class ScalarKind(str, Enum):
    EXACT = "exact"
    FLOAT = "float"


@dataclass(frozen=True)
class IndexRanges:
    """Dimensions of a normalized variety (and of its ambient space)."""

    n: int
    r: int
    big_n: int | None = None

    def __post_init__(self):
        if not 1 <= self.r < self.n:
            raise InvalidRanges(f"need 1 <= r < n, got n={self.n}, r={self.r}")
        if self.big_n is not None and self.big_n <= self.n:
            raise InvalidRanges(f"need bigN > n, got bigN={self.big_n}, n={self.n}")

    @property
    def l(self) -> int:  # noqa: E743
        return self.n - self.r

    @property
    def hyperplanes(self) -> int:
        if self.big_n is None:
            raise InvalidRanges("hyperplane index needs bigN")
        return self.big_n - self.n

    def extent(self, axis: AxisClass) -> int:
        if axis is AxisClass.NORMAL:
            return self.l
        if axis is AxisClass.TANGENT:
            return self.r
        if axis is AxisClass.POINT:
            return self.l + 1
        return self.hyperplanes


def to_exact(value: Any) -> Fraction:
    """Convert an int, Fraction, float or "p/q" string to a Fraction.

    Floats are read through their shortest decimal representation, so 0.1
    becomes 1/10 rather than the nearest binary fraction.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(float(value)))
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, np.integer):
        return Fraction(int(value))
    if isinstance(value, np.floating):
        return Fraction(repr(float(value)))
    raise TypeError(f"cannot read {value!r} as a rational number")


def as_array(values: Any, kind: ScalarKind) -> np.ndarray:
    """Build a fresh dense array of the requested scalar kind."""
    if kind is ScalarKind.FLOAT:
        if isinstance(values, np.ndarray) and values.dtype == object:
            return np.vectorize(float, otypes=[float])(values)
        return np.array(values, dtype=float)
    raw = np.array(values, dtype=object)
    if raw.size == 0:
        return raw
    return np.vectorize(to_exact, otypes=[object])(raw)


def max_abs(array: np.ndarray) -> float:
    if array.size == 0:
        return 0.0
    return float(np.max(np.abs(array)))


def is_zero_array(array: np.ndarray, kind: ScalarKind, tolerance: float) -> bool:
    if kind is ScalarKind.EXACT:
        return bool(np.all(array == 0))
    return max_abs(array) < tolerance


def zeros(shape: Sequence[int], kind: ScalarKind) -> np.ndarray:
    if kind is ScalarKind.FLOAT:
        return np.zeros(tuple(shape))
    return np.full(tuple(shape), Fraction(0), dtype=object)


def identity(size: int, kind: ScalarKind) -> np.ndarray:
    if kind is ScalarKind.FLOAT:
        return np.eye(size)
    matrix = zeros((size, size), kind)
    for i in range(size):
        matrix[i, i] = Fraction(1)
    return matrix


def exact_inverse(matrix: np.ndarray) -> np.ndarray:
    """Gauss-Jordan inverse of a square rational matrix."""
    size = matrix.shape[0]
    work = [[to_exact(x) for x in row] + [Fraction(int(i == j)) for j in range(size)]
            for i, row in enumerate(matrix.tolist())]
    for col in range(size):
        pivot = next((row for row in range(col, size) if work[row][col] != 0), None)
        if pivot is None:
            raise SingularMetric("matrix is singular")
        work[col], work[pivot] = work[pivot], work[col]
        head = work[col][col]
        work[col] = [x / head for x in work[col]]
        for row in range(size):
            factor = work[row][col]
            if row != col and factor != 0:
                work[row] = [x - factor * y for x, y in zip(work[row], work[col])]
    return np.array([row[size:] for row in work], dtype=object)


def exact_determinant(matrix: np.ndarray) -> Fraction:
    size = matrix.shape[0]
    work = [[to_exact(x) for x in row] for row in matrix.tolist()]
    det = Fraction(1)
    for col in range(size):
        pivot = next((row for row in range(col, size) if work[row][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            work[col], work[pivot] = work[pivot], work[col]
            det = -det
        head = work[col][col]
        det *= head
        for row in range(col + 1, size):
            factor = work[row][col] / head
            if factor != 0:
                work[row] = [x - factor * y for x, y in zip(work[row], work[col])]
    return det


def inverse(matrix: np.ndarray, kind: ScalarKind) -> np.ndarray:
    if kind is ScalarKind.EXACT:
        return exact_inverse(matrix)
    if np.linalg.cond(matrix) > 1e12:
        raise SingularMetric("matrix is numerically singular")
    return np.linalg.inv(matrix)


@dataclass(frozen=True, eq=False)
class SmallTensor:
    """Dense coefficient array whose axes are tagged with index classes."""

    axes: tuple[AxisClass, ...]
    data: np.ndarray
    kind: ScalarKind
    symmetries: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        data = as_array(self.data, self.kind)
        if data.ndim != len(self.axes):
            raise ShapeMismatch(
                f"{len(self.axes)} axes declared but array has {data.ndim} dimensions"
            )
        data.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "axes", tuple(AxisClass(a) for a in self.axes))

    @classmethod
    def build(
        cls,
        values: Any,
        axes: Iterable[AxisClass | str],
        kind: ScalarKind = ScalarKind.EXACT,
        symmetries: Iterable[tuple[int, int]] = (),
    ) -> "SmallTensor":
        return cls(tuple(AxisClass(a) for a in axes), values, kind, tuple(symmetries))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def __getitem__(self, index):
        return self.data[index]

    def check_extents(self, ranges: IndexRanges, name: str = "tensor") -> None:
        expected = tuple(ranges.extent(axis) for axis in self.axes)
        if self.shape != expected:
            raise ShapeMismatch(f"{name} has shape {self.shape}, expected {expected}")

    def symmetry_defect(self, first: int, second: int) -> float:
        """Largest |T[.., i, .., j, ..] - T[.., j, .., i, ..]| over all entries."""
        return max_abs(self.data - np.swapaxes(self.data, first, second))

    def declared_symmetries_hold(self, tolerance: float) -> bool:
        if self.kind is ScalarKind.EXACT:
            return all(
                self.symmetry_defect(i, j) == 0 for i, j in self.symmetries
            )
        return all(self.symmetry_defect(i, j) < tolerance for i, j in self.symmetries)

    def is_zero(self, tolerance: float = 0.0) -> bool:
        return is_zero_array(self.data, self.kind, tolerance)

    def max_abs(self) -> float:
        return max_abs(self.data)

    def replace(self, values: Any) -> "SmallTensor":
        return SmallTensor(self.axes, values, self.kind, self.symmetries)

    def to_nested(self) -> list:
        return self.data.tolist()


def contract(
    first: SmallTensor,
    second: SmallTensor,
    pairs: Sequence[tuple[int, int]],
) -> SmallTensor:
    """Sum over each (axis of first, axis of second) pair.

    The result carries the free axes of ``first`` followed by the free axes
    of ``second``.
    """
    if first.kind is not second.kind:
        raise AxisMismatch("cannot contract an exact tensor with a float tensor")
    for i, j in pairs:
        if first.axes[i] is not second.axes[j]:
            raise AxisMismatch(
                f"axis {i} ({first.axes[i].value}) does not pair with "
                f"axis {j} ({second.axes[j].value})"
            )
        if first.shape[i] != second.shape[j]:
            raise AxisMismatch(
                f"axis {i} has extent {first.shape[i]} but axis {j} has {second.shape[j]}"
            )
    left = [i for i, _ in pairs]
    right = [j for _, j in pairs]
    data = np.tensordot(first.data, second.data, axes=(left, right))
    axes = tuple(a for k, a in enumerate(first.axes) if k not in left) + tuple(
        a for k, a in enumerate(second.axes) if k not in right
    )
    return SmallTensor(axes, data, first.kind)
