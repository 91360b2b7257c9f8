"""Finite-alphabet probability algebra.

A :class:`Pmf` is a dense joint distribution whose axes carry names, so
information quantities can be requested by variable name instead of by
array position.  Every quantity is reported in bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

SUM_TOL = 1e-9
CMI_CLAMP_TOL = 1e-12
MAX_CELLS = 10**7


class PmfError(ValueError):
    """Raised for malformed distributions and bad axis requests."""


def _as_names(axes: str | Iterable[str]) -> tuple[str, ...]:
    if isinstance(axes, str):
        return (axes,)
    return tuple(axes)


def xlog2x(values: np.ndarray) -> np.ndarray:
    """Elementwise ``v * log2(v)`` with the convention ``0 log 0 = 0``."""
    values = np.asarray(values, dtype=float)
    out = np.zeros_like(values)
    pos = values > 0
    out[pos] = values[pos] * np.log2(values[pos])
    return out


def shannon_entropy(probs: np.ndarray) -> float:
    """Entropy in bits of a flat or shaped probability array."""
    return float(-xlog2x(probs).sum())


@dataclass(frozen=True, eq=False)
class Pmf:
    """Joint pmf over named discrete axes.

    Parameters
    ----------
    axes : sequence of str
        Axis names, one per array dimension.
    values : array_like
        Nonnegative probabilities summing to one.
    """

    axes: tuple[str, ...]
    values: np.ndarray

    def __init__(self, axes: Sequence[str], values, *, max_cells: int = MAX_CELLS):
        axes = _as_names(axes)
        arr = np.array(values, dtype=float)
        if arr.ndim != len(axes):
            raise PmfError(f"{len(axes)} axis names for an array with {arr.ndim} dimensions")
        if len(set(axes)) != len(axes):
            raise PmfError(f"axis names must be unique, got {axes}")
        if arr.size > max_cells:
            raise PmfError(f"pmf has {arr.size} cells, cap is {max_cells}")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise PmfError("pmf entries must be finite and nonnegative")
        total = arr.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise PmfError(f"pmf sums to {total!r}, expected 1 within {SUM_TOL}")
        arr.setflags(write=False)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", arr)

    @property
    def sizes(self) -> dict[str, int]:
        return dict(zip(self.axes, self.values.shape))

    def size_of(self, axis: str) -> int:
        return self.values.shape[self._index(axis)]

    def _index(self, axis: str) -> int:
        try:
            return self.axes.index(axis)
        except ValueError:
            raise PmfError(f"unknown axis {axis!r}; pmf has {self.axes}") from None

    def __eq__(self, other):
        if not isinstance(other, Pmf):
            return NotImplemented
        return self.axes == other.axes and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.axes, self.values.tobytes()))

    def allclose(self, other: "Pmf", atol: float = 1e-12) -> bool:
        return (
            self.axes == other.axes
            and self.values.shape == other.values.shape
            and np.allclose(self.values, other.values, rtol=0.0, atol=atol)
        )

    def array(self, axes: Sequence[str]) -> np.ndarray:
        """Marginal probabilities as a plain array ordered like ``axes``."""
        axes = _as_names(axes)
        idx = [self._index(a) for a in axes]
        if len(set(idx)) != len(idx):
            raise PmfError(f"repeated axis in {axes}")
        drop = tuple(i for i in range(len(self.axes)) if i not in idx)
        marg = self.values.sum(axis=drop) if drop else self.values
        kept = [i for i in range(len(self.axes)) if i in idx]
        return np.transpose(marg, [kept.index(i) for i in idx])


@dataclass(frozen=True, eq=False)
class ConditionalChannel:
    """Row-stochastic matrix ``matrix[i, o] = P(output=o | input=i)``."""

    input_axis: str
    output_axis: str
    matrix: np.ndarray

    def __init__(self, input_axis: str, output_axis: str, matrix):
        mat = np.array(matrix, dtype=float)
        if mat.ndim != 2 or 0 in mat.shape:
            raise PmfError(f"channel matrix must be a nonempty 2-d array, got shape {mat.shape}")
        if input_axis == output_axis:
            raise PmfError("channel input and output axes must differ")
        if not np.all(np.isfinite(mat)) or np.any(mat < 0):
            raise PmfError("channel entries must be finite and nonnegative")
        rows = mat.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > SUM_TOL):
            bad = int(np.argmax(np.abs(rows - 1.0)))
            raise PmfError(f"channel row {bad} sums to {rows[bad]!r}")
        mat.setflags(write=False)
        object.__setattr__(self, "input_axis", input_axis)
        object.__setattr__(self, "output_axis", output_axis)
        object.__setattr__(self, "matrix", mat)

    @property
    def n_inputs(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.matrix.shape[1]

    def __eq__(self, other):
        if not isinstance(other, ConditionalChannel):
            return NotImplemented
        return (
            self.input_axis == other.input_axis
            and self.output_axis == other.output_axis
            and np.array_equal(self.matrix, other.matrix)
        )

    def __hash__(self):
        return hash((self.input_axis, self.output_axis, self.matrix.tobytes()))

    @classmethod
    def identity(cls, input_axis: str, output_axis: str, size: int) -> "ConditionalChannel":
        return cls(input_axis, output_axis, np.eye(size))

    @classmethod
    def constant(cls, input_axis: str, output_axis: str, n_inputs: int, n_outputs: int = 1,
                 letter: int = 0) -> "ConditionalChannel":
        mat = np.zeros((n_inputs, n_outputs))
        mat[:, letter] = 1.0
        return cls(input_axis, output_axis, mat)

    @classmethod
    def bsc(cls, input_axis: str, output_axis: str, crossover: float) -> "ConditionalChannel":
        p = float(crossover)
        return cls(input_axis, output_axis, [[1 - p, p], [p, 1 - p]])


def renormalize(values, axes: Sequence[str]) -> Pmf:
    """Build a Pmf after scaling ``values`` to unit mass.

    Never applied implicitly; callers opt in when their input is known to be
    a positive measure rather than an exact pmf.
    """
    arr = np.asarray(values, dtype=float)
    total = arr.sum()
    if not np.isfinite(total) or total <= 0:
        raise PmfError("cannot renormalize an array with nonpositive mass")
    return Pmf(axes, arr / total)


def _check_subset(p: Pmf, axes: tuple[str, ...]) -> None:
    for a in axes:
        p._index(a)
    if len(set(axes)) != len(axes):
        raise PmfError(f"repeated axis in {axes}")


def entropy(p: Pmf, axes: str | Iterable[str] | None = None) -> float:
    """Entropy in bits of the marginal of ``p`` on ``axes`` (all axes by default)."""
    names = p.axes if axes is None else _as_names(axes)
    _check_subset(p, names)
    if not names:
        return 0.0
    return shannon_entropy(p.array(names))


def conditional_entropy(p: Pmf, a, c=()) -> float:
    a, c = _as_names(a), _as_names(c)
    return entropy(p, a + c) - entropy(p, c)


def conditional_mutual_information(p: Pmf, a, b, c=()) -> float:
    """I(A;B|C) in bits, clamped to zero when negative by at most 1e-12.

    ``a``, ``b`` and ``c`` are axis names or collections of names and must be
    pairwise disjoint; ``c`` may be empty.
    """
    a, b, c = _as_names(a), _as_names(b), _as_names(c)
    if not a or not b:
        raise PmfError("mutual information needs nonempty a and b")
    sa, sb, sc = set(a), set(b), set(c)
    if sa & sb or sa & sc or sb & sc:
        raise PmfError(f"axis sets overlap: a={a}, b={b}, c={c}")
    _check_subset(p, a + b + c)
    value = entropy(p, a + c) + entropy(p, b + c) - entropy(p, a + b + c) - entropy(p, c)
    if value < 0:
        if value < -CMI_CLAMP_TOL:
            raise ArithmeticError(f"conditional mutual information {value} below tolerance")
        return 0.0
    return value


def mutual_information(p: Pmf, a, b) -> float:
    return conditional_mutual_information(p, a, b)


def marginalize(p: Pmf, keep) -> Pmf:
    """Sum out every axis not in ``keep``; kept axes retain their original order."""
    keep = _as_names(keep)
    _check_subset(p, keep)
    ordered = tuple(a for a in p.axes if a in keep)
    return Pmf(ordered, p.array(ordered))


def extend(p: Pmf, ch: ConditionalChannel) -> Pmf:
    """Append ``ch.output_axis`` to ``p`` through the channel ``ch``.

    The new variable depends on the rest of the joint only through
    ``ch.input_axis``.
    """
    i = p._index(ch.input_axis)
    if ch.output_axis in p.axes:
        raise PmfError(f"axis {ch.output_axis!r} already present")
    if p.values.shape[i] != ch.n_inputs:
        raise PmfError(
            f"channel expects {ch.n_inputs} input letters, axis {ch.input_axis!r} has {p.values.shape[i]}"
        )
    shape = [1] * p.values.ndim + [ch.n_outputs]
    shape[i] = ch.n_inputs
    grown = p.values[..., None] * ch.matrix.reshape(shape)
    return Pmf(p.axes + (ch.output_axis,), grown)


def product(*factors: Pmf) -> Pmf:
    """Joint of independent pmfs on disjoint axes."""
    axes: tuple[str, ...] = ()
    arr = np.ones(())
    for f in factors:
        if set(axes) & set(f.axes):
            raise PmfError("product factors must have disjoint axes")
        arr = np.multiply.outer(arr, f.values)
        axes += f.axes
    return Pmf(axes, arr)


def key_identity_residual(p: Pmf, v, b: Sequence[str], c: Sequence[str]) -> float:
    """Absolute residual of the telescoping key identity.

    For ``n = len(b) = len(c)`` returns::

        | I(V;B^n) - I(V;C^n)
          - sum_i [I(V;B_i|B^{i-1},C_{i+1}^n) - I(V;C_i|B^{i-1},C_{i+1}^n)] |

    which vanishes for every joint distribution.
    """
    v = _as_names(v)
    b, c = tuple(b), tuple(c)
    if not v or not b or len(b) != len(c):
        raise PmfError("need a nonempty V block and equally many B and C axes (n >= 1)")
    names = v + b + c
    if len(set(names)) != len(names):
        raise PmfError(f"axis groups overlap: V={v}, B={b}, C={c}")
    _check_subset(p, names)
    n = len(b)
    lhs = conditional_mutual_information(p, v, b) - conditional_mutual_information(p, v, c)
    rhs = 0.0
    for i in range(n):
        cond = b[:i] + c[i + 1:]
        rhs += conditional_mutual_information(p, v, b[i], cond)
        rhs -= conditional_mutual_information(p, v, c[i], cond)
    return abs(lhs - rhs)


def binary_entropy(q: float) -> float:
    return shannon_entropy(np.array([q, 1.0 - q]))
