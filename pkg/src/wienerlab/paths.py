"""Grid-valued data shared by every module.

A :class:`SamplePath` is a pair of equally long vectors (times, values) on a
strictly increasing grid. :class:`GridFunction` is the same container without
a meaningful seed tag; the two are interchangeable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameter


@dataclass(frozen=True, eq=False)
class SamplePath:
    """One trajectory on a time grid.

    Parameters
    ----------
    times : array_like
        Strictly increasing grid.
    values : array_like
        Finite process values, same length as ``times``.
    seed_id : int
        Provenance tag, usually the path index in its batch.
    """

    times: np.ndarray
    values: np.ndarray
    seed_id: int = field(default=-1)

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        v = np.array(self.values, dtype=float)
        if t.ndim != 1 or v.ndim != 1 or t.shape != v.shape:
            raise InvalidParameter("times and values must be 1-d and of equal length")
        if t.size == 0:
            raise InvalidParameter("empty path")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise InvalidParameter("times must be strictly increasing")
        if not np.all(np.isfinite(v)) or not np.all(np.isfinite(t)):
            raise InvalidParameter("non-finite entries in path")
        t.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "seed_id", int(self.seed_id))

    def __len__(self):
        return self.times.size

    @property
    def step(self) -> float:
        """Grid spacing of a uniform grid (checked)."""
        return uniform_step(self.times)

    def with_values(self, values) -> "SamplePath":
        return type(self)(self.times, values, self.seed_id)

    def __eq__(self, other):
        if not isinstance(other, SamplePath):
            return NotImplemented
        return (
            self.seed_id == other.seed_id
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


GridFunction = SamplePath


def uniform_step(times, rtol=1e-9) -> float:
    """Return the spacing of a uniform grid or raise."""
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        raise InvalidParameter("need at least two grid points")
    d = np.diff(times)
    h = (times[-1] - times[0]) / (times.size - 1)
    if np.max(np.abs(d - h)) > rtol * max(1.0, abs(times[-1])):
        raise InvalidParameter("grid is not uniform")
    return float(h)


def uniform_grid(T: float, n_steps: int) -> np.ndarray:
    """t_k = k T / n_steps for k = 0..n_steps."""
    if n_steps < 1:
        raise InvalidParameter("n_steps must be >= 1")
    if not T > 0:
        raise InvalidParameter("horizon must be positive")
    return np.arange(n_steps + 1) * (T / n_steps)


def as_array(paths) -> tuple[np.ndarray, np.ndarray]:
    """Stack a list of paths on a common grid into ``(times, values)``."""
    if isinstance(paths, SamplePath):
        paths = [paths]
    paths = list(paths)
    if not paths:
        raise InvalidParameter("no paths given")
    t = paths[0].times
    for p in paths[1:]:
        if p.times.shape != t.shape or not np.array_equal(p.times, t):
            raise InvalidParameter("paths are not on a common grid")
    return t, np.vstack([p.values for p in paths])


def from_array(times, values, first_id: int = 0) -> list[SamplePath]:
    values = np.atleast_2d(values)
    return [SamplePath(times, row, first_id + i) for i, row in enumerate(values)]
