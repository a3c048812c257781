"""Paths, finite path collections, the path metric and its Hausdorff lift.

A :class:`Path` is a piecewise-linear function given by breakpoints, held
constant before its first and after its last breakpoint.  The hold before
the start is exactly the extension used by the path metric; the hold after
the last breakpoint replaces the unsimulated tail.

The supremum over time in the path metric is taken on the union of both
breakpoint grids, the time origin, and the preimages of a uniform grid in
``psi = tanh(t)``.  The value returned is therefore a lower bound on the
supremum; the accompanying refinement error bounds the gap from above.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence, TextIO

import numpy as np

from . import kernels
from .spacetime import phi_array, psi

DEFAULT_PSI_STEP = 1e-3
PROVENANCES = ("discrete-web", "continuous-web", "skeleton", "dual-web", "manual")

# max |d^2/dy^2 tanh(y)| = 4 / (3 sqrt 3)
_TANH2_MAX = 4.0 / (3.0 * math.sqrt(3.0))


class EmptyPathSetError(ValueError):
    """Hausdorff distance is undefined for an empty collection."""


@dataclass(frozen=True, eq=False)
class Path:
    """A path starting at ``(xs[0], t0)``.

    ``times`` must be strictly increasing and start at ``t0`` when ``t0`` is
    finite.  Infinite positions are only allowed for constant paths.
    """

    t0: float
    times: np.ndarray
    xs: np.ndarray

    def __post_init__(self):
        times = np.array(self.times, dtype=float).reshape(-1)
        xs = np.array(self.xs, dtype=float).reshape(-1)
        if times.size == 0 or times.size != xs.size:
            raise ValueError("a path needs matching, nonempty times and positions")
        if np.isnan(times).any() or np.isnan(xs).any() or math.isnan(self.t0):
            raise ValueError("NaN in path")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("breakpoint times must be strictly increasing")
        if math.isfinite(self.t0):
            if times[0] != self.t0:
                raise ValueError("first breakpoint must sit at the start time")
            if not np.isfinite(times).all():
                raise ValueError("path with finite start needs finite breakpoint times")
        elif self.t0 == math.inf:
            if times.size != 1:
                raise ValueError("a path started at t=+inf is a single point")
        elif not np.isfinite(times).all():
            raise ValueError("breakpoint times must be finite")
        if not np.isfinite(xs).all() and not np.all(xs == xs[0]):
            raise ValueError("infinite positions are only allowed on constant paths")
        times.setflags(write=False)
        xs.setflags(write=False)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "xs", xs)

    @classmethod
    def constant(cls, x: float, t0: float, horizon: float | None = None) -> "Path":
        # held after its last breakpoint, a single point is already constant forever
        if horizon is None or horizon == t0 or horizon == math.inf:
            return cls(t0, [t0], [x])
        return cls(t0, [t0, horizon], [x, x])

    @classmethod
    def from_breakpoints(cls, pts: Iterable[tuple[float, float]], t0: float | None = None) -> "Path":
        pts = list(pts)
        times = [p[0] for p in pts]
        return cls(times[0] if t0 is None else t0, times, [p[1] for p in pts])

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def start(self) -> tuple[float, float]:
        return float(self.xs[0]), self.t0

    def breakpoints(self) -> list[tuple[float, float]]:
        return list(zip(self.times.tolist(), self.xs.tolist()))

    def __call__(self, t):
        return eval_path(self, t)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Path):
            return NotImplemented
        return (
            self.t0 == other.t0
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.xs, other.xs)
        )

    def __hash__(self) -> int:
        return hash((self.t0, self.times.tobytes(), self.xs.tobytes()))

    def rescaled(self, delta: float) -> "Path":
        return Path(self.t0 * (delta * delta), self.times * (delta * delta), self.xs * delta)

    def time_reversed(self) -> "Path":
        """The same graph read with time running backwards (``t -> -t``)."""
        return Path(-self.times[-1], -self.times[::-1], self.xs[::-1])

    def __repr__(self) -> str:
        return f"Path(t0={self.t0!r}, n={self.times.size}, horizon={self.horizon!r})"


def eval_path(p: Path, t):
    """Extended path value at ``t`` (scalar or array)."""
    scalar = np.ndim(t) == 0
    tt = np.asarray(t, dtype=float)
    if not np.isfinite(p.xs[0]):
        out = np.full(tt.shape, p.xs[0])
    else:
        out = np.interp(tt, p.times, p.xs, left=p.xs[0], right=p.xs[-1])
    return float(out) if scalar else out


@dataclass(frozen=True)
class PathSet:
    """A finite, immutable collection of paths standing for a compact set."""

    paths: tuple[Path, ...] = ()
    provenance: str = "manual"
    delta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if not 0.0 < self.delta <= 1.0:
            raise ValueError("rescale factor must lie in (0, 1]")

    def __len__(self) -> int:
        return len(self.paths)

    def __iter__(self):
        return iter(self.paths)

    def __getitem__(self, k):
        return self.paths[k]

    def with_paths(self, paths: Iterable[Path]) -> "PathSet":
        return PathSet(tuple(paths), self.provenance, self.delta)


class Distance(NamedTuple):
    value: float
    refinement_error: float
    truncation_bound: float


# --- evaluation grids -------------------------------------------------------


def _grid(paths: Sequence[Path], step: float) -> np.ndarray:
    pts = [p.times[np.isfinite(p.times)] for p in paths]
    pts.append(np.array([0.0]))
    finite = np.concatenate(pts)
    lo, hi = finite.min(), finite.max()
    if hi > lo and step > 0:
        n = int(math.ceil(1.0 / step))
        u = np.linspace(-1.0, 1.0, 2 * n + 1)[1:-1]
        tg = np.arctanh(u)
        finite = np.concatenate([finite, tg[(tg > lo) & (tg < hi)]])
    return np.unique(finite)


def _profile(paths: Sequence[Path], grid: np.ndarray):
    """Phi values on ``grid`` plus per-interval curvature bounds."""
    vals = np.empty((len(paths), grid.size))
    for k, p in enumerate(paths):
        vals[k] = eval_path(p, grid)
    ph = phi_array(vals, grid[None, :])
    if grid.size < 2:
        return ph, np.zeros((len(paths), 0)), np.zeros((len(paths), 0), dtype=bool), np.zeros(0)
    dt = np.diff(grid)
    with np.errstate(invalid="ignore"):
        slope = np.diff(vals, axis=1) / dt
    slope = np.where(np.isfinite(slope), slope, 0.0)
    moving = slope != 0.0
    # smallest 1 + |t| on each interval (0 is always a grid point)
    s = 1.0 + np.minimum(np.abs(grid[:-1]), np.abs(grid[1:]))
    b = np.abs(slope)
    curv = _TANH2_MAX * b * b / s + 2.0 * b / s**2 + 2.0 / s**3
    return ph, curv, moving, dt * dt / 8.0


def _sup_matrix(A: Sequence[Path], B: Sequence[Path], step: float):
    grid = _grid(list(A) + list(B), step)
    pa, ca, ma, d2 = _profile(A, grid)
    pb, cb, mb, _ = _profile(B, grid)
    return kernels.pairwise_sup(pa, pb, ca, cb, ma, mb, d2)


def _psi_matrix(A: Sequence[Path], B: Sequence[Path]) -> np.ndarray:
    sa = np.array([psi(p.t0) for p in A])
    sb = np.array([psi(p.t0) for p in B])
    return np.abs(sa[:, None] - sb[None, :])


def _truncation(p: Path) -> float:
    h = p.horizon
    if h == math.inf:
        return 0.0
    return 2.0 / (1.0 + max(h, 0.0))


def path_dist_with_error(p1: Path, p2: Path, step: float = DEFAULT_PSI_STEP) -> Distance:
    sup, err = _sup_matrix([p1], [p2], step)
    value = max(float(sup[0, 0]), abs(psi(p1.t0) - psi(p2.t0)))
    return Distance(value, float(err[0, 0]), max(_truncation(p1), _truncation(p2)))


def path_dist(p1: Path, p2: Path, step: float = DEFAULT_PSI_STEP) -> float:
    return path_dist_with_error(p1, p2, step).value


def distance_matrix(A: Sequence[Path], B: Sequence[Path], step: float = DEFAULT_PSI_STEP):
    """Matrix of path distances and the largest refinement error."""
    sup, err = _sup_matrix(A, B, step)
    d = np.maximum(sup, _psi_matrix(A, B))
    return d, float(err.max()) if err.size else 0.0


def directed_hausdorff(K1: PathSet, K2: PathSet, step: float = DEFAULT_PSI_STEP) -> float:
    """``sup_{g1 in K1} inf_{g2 in K2} d(g1, g2)``."""
    if len(K1) == 0 or len(K2) == 0:
        raise EmptyPathSetError("directed Hausdorff distance needs nonempty sets")
    d, _ = distance_matrix(K1.paths, K2.paths, step)
    return float(d.min(axis=1).max())


def hausdorff_dist_with_error(K1: PathSet, K2: PathSet, step: float = DEFAULT_PSI_STEP):
    if len(K1) == 0 or len(K2) == 0:
        raise EmptyPathSetError("Hausdorff distance needs nonempty sets")
    d, err = distance_matrix(K1.paths, K2.paths, step)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max())), err


def hausdorff_dist(K1: PathSet, K2: PathSet, step: float = DEFAULT_PSI_STEP) -> float:
    return hausdorff_dist_with_error(K1, K2, step)[0]


def rescale_pathset(K: PathSet, delta: float) -> PathSet:
    if not 0.0 < delta <= 1.0:
        raise ValueError("rescale factor must lie in (0, 1]")
    if delta == 1.0:
        return K
    return PathSet(tuple(p.rescaled(delta) for p in K), K.provenance, K.delta * delta)


# --- text serialisation -----------------------------------------------------


def _fmt(v: float) -> str:
    return repr(float(v))


def dump_pathset(K: PathSet, fh: TextIO) -> None:
    fh.write(f"# provenance={K.provenance} delta={_fmt(K.delta)}\n")
    for p in K:
        body = ";".join(f"{_fmt(t)}:{_fmt(x)}" for t, x in zip(p.times, p.xs))
        fh.write(f"{_fmt(p.t0)}\t{body}\n")


def dumps_pathset(K: PathSet) -> str:
    buf = io.StringIO()
    dump_pathset(K, buf)
    return buf.getvalue()


def load_pathset(fh: TextIO) -> PathSet:
    provenance, delta, paths = "manual", 1.0, []
    for lineno, line in enumerate(fh, 1):
        line = line.rstrip("\n")
        if not line.strip():
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                key, _, val = tok.partition("=")
                if key == "provenance":
                    provenance = val
                elif key == "delta":
                    delta = float(val)
            continue
        try:
            t0s, body = line.split("\t")
            pairs = [rec.split(":") for rec in body.split(";")]
            times = [float(a) for a, _ in pairs]
            xs = [float(b) for _, b in pairs]
            paths.append(Path(float(t0s), times, xs))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: malformed path record ({exc})") from exc
    return PathSet(tuple(paths), provenance, delta)


def loads_pathset(text: str) -> PathSet:
    return load_pathset(io.StringIO(text))
