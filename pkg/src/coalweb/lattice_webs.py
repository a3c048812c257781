"""Coalescing random walk webs on the diagonal lattice.

Discrete time: a walker at ``(i, j)`` with ``i + j`` even moves to
``(i + A[i, j], j + 1)`` where ``A`` is a field of fair +-1 arrows.  Walkers
obeying the same arrows coalesce automatically.

Continuous time: each site carries a rate-one Poisson clock with a fair
direction mark per event.  Paths are drawn as polygons between event
vertices, so only the first segment of a path can be constant.

Arrow fields are lazy: an arrow is a hash of the field seed and the lattice
point (see :mod:`coalweb.rng`), so windows only bound where queries may go.
The dual (backward) field lives on the odd points and is forced by the
forward arrows: the backward step from ``(i, j)`` is ``-A[i, j - 1]``.
Dual paths are returned in reversed time (``t -> -t``) so they are ordinary
forward paths of the path space.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from . import kernels
from .pathspace import Path, PathSet, rescale_pathset
from .rng import MASK64, generator

DEFAULT_MAX_CELLS = 50_000_000
MAX_EXTENT = 1 << 32  # the arrow hash keys on 32-bit coordinates


class TruncationError(RuntimeError):
    """A walker left an open window."""


class ResourceError(RuntimeError):
    """A window exceeds the configured size budget."""


class ParityError(ValueError):
    """A start point is not a lattice point of the field."""


@dataclass(frozen=True)
class Window:
    """Space-time window in lattice units.

    Open windows contain sites ``i_min..i_max``.  Periodic windows contain
    ``i_min..i_max - 1`` and wrap with period ``i_max - i_min`` (even).
    """

    i_min: int
    i_max: int
    j_min: float
    j_max: float
    boundary: str = "open"

    def __post_init__(self):
        if not self.i_min < self.i_max:
            raise ValueError("window needs i_min < i_max")
        if not self.j_min < self.j_max:
            raise ValueError("window needs j_min < j_max")
        if self.boundary not in ("open", "periodic"):
            raise ValueError(f"unknown boundary mode {self.boundary!r}")
        if self.boundary == "periodic" and (self.i_max - self.i_min) % 2:
            raise ValueError("periodic windows need an even spatial extent")

    @classmethod
    def with_buffer(cls, i_lo: int, i_hi: int, j_min, j_max, buffer: int | None = None) -> "Window":
        """Open window around ``[i_lo, i_hi]`` padded by ``buffer`` sites.

        The default buffer equals the time extent, which a discrete walker
        can never cross.
        """
        if buffer is None:
            buffer = int(math.ceil(j_max - j_min))
        return cls(i_lo - buffer, i_hi + buffer, j_min, j_max, "open")

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    @property
    def period(self) -> int:
        return self.i_max - self.i_min if self.periodic else 0

    @property
    def sites(self) -> np.ndarray:
        top = self.i_max if self.periodic else self.i_max + 1
        return np.arange(self.i_min, top)

    @property
    def rows(self) -> np.ndarray:
        return np.arange(int(math.ceil(self.j_min)), int(math.floor(self.j_max)) + 1)

    @property
    def cells(self) -> int:
        n_sites = self.i_max - self.i_min + (0 if self.periodic else 1)
        n_rows = max(0, int(math.floor(self.j_max)) - int(math.ceil(self.j_min)) + 1)
        return n_sites * n_rows

    def wrap(self, i):
        if self.periodic:
            return self.i_min + np.mod(np.asarray(i) - self.i_min, self.period)
        return i

    def contains_site(self, i) -> bool:
        i = np.asarray(i)
        if self.periodic:
            return True
        return bool(np.all((i >= self.i_min) & (i <= self.i_max)))


# --- arrow fields -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ArrowField:
    """Fair +-1 arrows on the lattice points of a window.

    The arrow at ``(i, j)`` is ``sign * base(i, j + row_offset)`` where
    ``base`` is either the seeded hash or an explicit table.  Valid points
    satisfy ``i + j + row_offset`` even.  Forward fields have
    ``row_offset = 0``; their duals are backward with ``row_offset = -1``.
    """

    window: Window
    seed: int
    backward: bool = False
    sign: int = 1
    row_offset: int = 0
    table: np.ndarray | None = field(default=None, repr=False)
    table_origin: tuple[int, int] = (0, 0)

    @property
    def hashed(self) -> bool:
        return self.table is None

    def is_point(self, i, j) -> np.ndarray:
        return (np.asarray(i) + np.asarray(j) + self.row_offset) % 2 == 0

    def _base(self, i, j):
        i = np.asarray(self.window.wrap(i), dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        if self.table is None:
            return kernels.arrows(self.seed & MASK64, *np.broadcast_arrays(i, j))
        i0, j0 = self.table_origin
        ii, jj = np.broadcast_arrays(i - i0, j - j0)
        nj, ni = self.table.shape
        inside = (ii >= 0) & (ii < ni) & (jj >= 0) & (jj < nj)
        if not np.all(inside):
            raise TruncationError("arrow queried outside the tabulated window")
        v = self.table[jj, ii].astype(np.int64)
        if np.any(v == 0):
            raise TruncationError("arrow queried at a point without a tabulated value")
        return v

    def arrow(self, i, j):
        """Arrow(s) at lattice point(s) ``(i, j)``."""
        if not np.all(self.is_point(i, j)):
            raise ParityError("not a lattice point of this field")
        out = self.sign * self._base(i, np.asarray(j) + self.row_offset)
        return int(out) if np.ndim(out) == 0 else out

    def to_table(self, max_cells: int = DEFAULT_MAX_CELLS) -> np.ndarray:
        """Dense int8 array indexed ``[j - j_min, i - i_min]``; 0 off-lattice."""
        w = self.window
        if w.cells > max_cells:
            raise ResourceError(f"window of {w.cells} cells exceeds budget {max_cells}")
        ii, jj = np.meshgrid(w.sites, w.rows)
        out = np.zeros(ii.shape, dtype=np.int8)
        m = self.is_point(ii, jj)
        if m.any():
            out[m] = self.arrow(ii[m], jj[m])
        return out

    @classmethod
    def from_table(cls, window: Window, table, *, backward: bool = False, seed: int = 0) -> "ArrowField":
        """Hand-built field; ``table[j - j_min, i - i_min]`` holds +-1 (0 elsewhere)."""
        table = np.asarray(table, dtype=np.int8)
        if table.shape != (len(window.rows), len(window.sites)):
            raise ValueError("table shape must match the window")
        j0 = int(window.rows[0])
        off = -1 if backward else 0
        # the table stores arrows directly, so base(i, j + off) = table[j]
        return cls(window, seed, backward, 1, off, table, (window.i_min, j0 + off))

    @classmethod
    def from_dict(cls, window: Window, arrows: dict, *, backward: bool = False) -> "ArrowField":
        table = np.zeros((len(window.rows), len(window.sites)), dtype=np.int8)
        for (i, j), v in arrows.items():
            if (i + j + (1 if backward else 0)) % 2:
                raise ParityError(f"({i}, {j}) is not a lattice point")
            table[int(j - window.rows[0]), int(i - window.i_min)] = v
        return cls.from_table(window, table, backward=backward)


def sample_arrow_field(
    window: Window, seed: int, *, dense: bool = False, max_cells: int = DEFAULT_MAX_CELLS
) -> ArrowField:
    """Arrow field of ``window`` determined by ``seed``.

    The field is lazy unless ``dense``; dense fields are tabulated and
    subject to ``max_cells``.
    """
    span_i = window.i_max - window.i_min
    span_j = window.j_max - window.j_min
    if span_i >= MAX_EXTENT or span_j >= MAX_EXTENT:
        raise ResourceError(f"window extent {span_i} x {span_j} exceeds the 32-bit lattice keys")
    f = ArrowField(window, int(seed) & MASK64)
    if dense:
        table = f.to_table(max_cells)
        return ArrowField.from_table(window, table, seed=f.seed)
    return f


def dual_field(f: ArrowField) -> ArrowField:
    """The non-crossing dual field (backward for a forward field and vice versa)."""
    off = f.row_offset - 1 if not f.backward else f.row_offset + 1
    return ArrowField(f.window, f.seed, not f.backward, -f.sign, off, f.table, f.table_origin)


# --- discrete tracks --------------------------------------------------------


def _tracks(f: ArrowField, x0, s0, j_end: int | None = None) -> tuple[np.ndarray, int, int]:
    """Walker tracks, shape (n, rows), with the first row index and last row index.

    Forward fields run from ``min(s0)`` to ``j_end`` (default ``j_max``);
    backward fields from ``max(s0)`` down to ``j_end`` (default ``j_min``).
    Tracks hold the start value outside the walker's lifetime.
    """
    x0 = np.asarray(x0, dtype=np.int64).reshape(-1)
    s0 = np.asarray(s0, dtype=np.int64).reshape(-1)
    w = f.window
    jmin, jmax = int(math.ceil(w.j_min)), int(math.floor(w.j_max))
    if x0.size == 0:
        return np.zeros((0, 1), dtype=np.int64), jmin, jmin
    if np.any(s0 < jmin) or np.any(s0 > jmax):
        raise ValueError("start row outside the window")
    if not w.contains_site(x0):
        raise ValueError("start site outside the window")
    if not np.all(f.is_point(x0, s0)):
        raise ParityError("start points must be lattice points of the field")
    if j_end is not None:
        if not jmin <= j_end <= jmax:
            raise ValueError("end row outside the window")
        if (f.backward and np.any(s0 < j_end)) or (not f.backward and np.any(s0 > j_end)):
            raise ValueError("walker starts beyond the end row")
    if f.backward:
        j_lo, j_hi = jmin if j_end is None else int(j_end), int(s0.max())
    else:
        j_lo, j_hi = int(s0.min()), jmax if j_end is None else int(j_end)
    if f.hashed:
        tr = kernels.walk_tracks(
            f.seed, x0, s0, j_lo, j_hi, f.sign, f.row_offset, w.i_min, w.period, f.backward
        )
    else:
        tr = _table_tracks(f, x0, s0, j_lo, j_hi)
    if not w.periodic and (tr.min() < w.i_min or tr.max() > w.i_max):
        bad = int(np.argmax((tr < w.i_min).any(axis=1) | (tr > w.i_max).any(axis=1)))
        raise TruncationError(
            f"walker from ({x0[bad]}, {s0[bad]}) leaves the open window [{w.i_min}, {w.i_max}]"
        )
    return tr, j_lo, j_hi


def _table_tracks(f: ArrowField, x0, s0, j_lo, j_hi):
    n_rows = j_hi - j_lo + 1
    out = np.repeat(x0[:, None], n_rows, axis=1)
    pos = x0.copy()
    w = f.window
    if not f.backward:
        for j in range(j_lo, j_hi):
            act = s0 <= j
            if act.any():
                if not w.periodic and (pos[act].min() < w.i_min or pos[act].max() > w.i_max):
                    raise TruncationError("walker leaves the open window")
                pos[act] = pos[act] + f.arrow(pos[act], j)
            out[:, j + 1 - j_lo] = pos
    else:
        for j in range(j_hi, j_lo, -1):
            act = s0 >= j
            if act.any():
                if not w.periodic and (pos[act].min() < w.i_min or pos[act].max() > w.i_max):
                    raise TruncationError("walker leaves the open window")
                pos[act] = pos[act] + f.arrow(pos[act], j)
            out[:, j - 1 - j_lo] = pos
    return out


def _track_to_path(track: np.ndarray, j_lo: int, s: int, backward: bool) -> Path:
    if not backward:
        k = s - j_lo
        times = np.arange(s, j_lo + track.size, dtype=float)
        return Path(float(s), times, track[k:].astype(float))
    # reversed time: t' = -t, runs from -s up to -j_lo
    k = s - j_lo
    seg = track[: k + 1][::-1]
    times = -np.arange(s, j_lo - 1, -1, dtype=float)
    return Path(float(-s), times, seg.astype(float))


def discrete_path(f: ArrowField, y0: int, s0: int) -> Path:
    """Path of the walker started at ``(y0, s0)``; backward fields give dual paths."""
    tr, j_lo, _ = _tracks(f, [y0], [s0])
    return _track_to_path(tr[0], j_lo, int(s0), f.backward)


def all_starts(f: ArrowField) -> list[tuple[int, int]]:
    """Every lattice point of the window from which a walker can run to the end.

    In open windows a start is kept only if its light cone stays inside.
    """
    w = f.window
    rows = w.rows
    out = []
    for j in rows[:-1] if not f.backward else rows[1:]:
        remaining = (rows[-1] - j) if not f.backward else (j - rows[0])
        for i in w.sites:
            if not f.is_point(i, j):
                continue
            if not w.periodic and (i - remaining < w.i_min or i + remaining > w.i_max):
                continue
            out.append((int(i), int(j)))
    return out


def build_discrete_web(f: ArrowField, starts: Sequence[tuple[int, int]] | str = "all") -> PathSet:
    """One path per start; ``"all"`` uses :func:`all_starts`."""
    if isinstance(starts, str):
        if starts != "all":
            raise ValueError("starts must be a sequence or 'all'")
        starts = all_starts(f)
    prov = "dual-web" if f.backward else "discrete-web"
    if len(starts) == 0:
        return PathSet((), prov)
    x0 = np.array([s[0] for s in starts], dtype=np.int64)
    s0 = np.array([s[1] for s in starts], dtype=np.int64)
    tr, j_lo, _ = _tracks(f, x0, s0)
    paths = tuple(_track_to_path(tr[k], j_lo, int(s0[k]), f.backward) for k in range(len(x0)))
    return PathSet(paths, prov)


def build_dual_web(f: ArrowField, starts: Sequence[tuple[int, int]] | str = "all") -> PathSet:
    """Dual paths of the forward field ``f`` (given in reversed time)."""
    if f.backward:
        raise ValueError("build_dual_web expects a forward field")
    return build_discrete_web(dual_field(f), starts)


def dual_row_starts(f: ArrowField, row: int, i_lo: int, i_hi: int) -> list[tuple[int, int]]:
    """Odd lattice points of ``row`` in ``[i_lo, i_hi]``, as dual start points."""
    d = dual_field(f) if not f.backward else f
    return [(i, row) for i in range(i_lo, i_hi + 1) if d.is_point(i, row)]


def rescale_web(K: PathSet, delta: float) -> PathSet:
    """Diffusive rescaling ``(t, x) -> (delta**2 t, delta x)``."""
    return rescale_pathset(K, delta)


# --- Poisson clocks ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ClockField:
    """Rate-one Poisson clocks with fair jump marks, one stream per site.

    ``events(i)`` returns the event times in ``[j_min, j_max]`` and marks;
    ``overflow(i)`` gives the first event after ``j_max`` so that the last
    polygon segment of a path is always defined.
    """

    window: Window
    seed: int
    _cache: dict = field(default_factory=dict, repr=False)
    _tables: dict | None = field(default=None, repr=False)

    @classmethod
    def from_events(cls, window: Window, events: dict) -> "ClockField":
        """Hand-built clocks: ``{site: (times, signs, (overflow_time, overflow_sign))}``."""
        tab = {}
        for i, (ts, ss, ov) in events.items():
            ts = np.asarray(ts, dtype=float)
            if ts.size and not np.all(np.diff(ts) > 0):
                raise ValueError("event times must increase")
            tab[int(i)] = (ts, np.asarray(ss, dtype=np.int64), (float(ov[0]), int(ov[1])))
        return cls(window, 0, {}, tab)

    def _raw(self, i: int):
        g = generator(self.seed, i & MASK64)
        T = self.window.j_max - self.window.j_min
        n = g.poisson(T)
        ts = self.window.j_min + np.sort(g.random(n)) * T
        ss = g.integers(0, 2, size=n) * 2 - 1
        ov = (self.window.j_max + g.exponential(), int(g.integers(0, 2) * 2 - 1))
        for k in range(1, ts.size):
            if ts[k] <= ts[k - 1]:
                ts[k] = np.nextafter(ts[k - 1], np.inf)
        return ts, ss.astype(np.int64), ov

    def _site(self, i: int):
        i = int(self.window.wrap(i))
        if self._tables is not None:
            if i not in self._tables:
                return np.zeros(0), np.zeros(0, dtype=np.int64), (math.inf, 1)
            return self._tables[i]
        hit = self._cache.get(i)
        if hit is not None:
            return hit
        ts, ss, ov = self._raw(i)
        if i % 2:
            # odd sites yield to their (never perturbed) even neighbours
            for nb in (i - 1, i + 1):
                other = self._raw(int(self.window.wrap(nb)))[0]
                clash = np.isin(ts, other)
                while clash.any():
                    ts[clash] = np.nextafter(ts[clash], np.inf)
                    clash = np.isin(ts, other)
        self._cache[i] = (ts, ss, ov)
        return ts, ss, ov

    def events(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        ts, ss, _ = self._site(i)
        return ts, ss

    def overflow(self, i: int) -> tuple[float, int]:
        return self._site(i)[2]

    def next_event(self, i: int, t: float, strict: bool = True) -> tuple[float, int]:
        """First event at site ``i`` after ``t`` (at or after if not ``strict``)."""
        ts, ss, ov = self._site(i)
        k = int(np.searchsorted(ts, t, side="right" if strict else "left"))
        if k < ts.size:
            return float(ts[k]), int(ss[k])
        return ov

    def is_event(self, i: int, t: float) -> bool:
        ts, _, _ = self._site(i)
        k = int(np.searchsorted(ts, t))
        return k < ts.size and ts[k] == t


def sample_poisson_clocks(window: Window, seed: int, *, max_sites: int = 1 << 32) -> ClockField:
    span = window.i_max - window.i_min
    if span >= max_sites:
        raise ResourceError(f"window of {span} sites exceeds budget {max_sites}")
    return ClockField(window, int(seed) & MASK64)


def _trace(c: ClockField, site: int, s0: float, jump_now: bool) -> Path:
    w = c.window
    horizon = w.j_max
    times, xs = [s0], [float(site)]
    cur = site
    if jump_now:
        T, sig = s0, None
        ts, ss = c.events(site)
        sig = int(ss[int(np.searchsorted(ts, s0))])
    else:
        T, sig = c.next_event(site, s0)
    if T > horizon:
        if horizon > s0:
            times.append(horizon)
            xs.append(float(site))
        return Path(s0, times, xs)
    if T > s0:
        times.append(T)
        xs.append(float(cur))
    while True:
        target = cur + sig
        if not w.periodic and not (w.i_min <= target <= w.i_max):
            raise TruncationError(f"walker from ({site}, {s0}) leaves the open window")
        T2, sig2 = c.next_event(target, T)
        if T2 > horizon:
            times.append(horizon)
            xs.append(cur + sig * (horizon - T) / (T2 - T))
            break
        times.append(T2)
        xs.append(float(target))
        cur, T, sig = target, T2, sig2
    return Path(s0, times, xs)


def continuous_path(c: ClockField, y0: int, s0: float, *, two_paths: bool = False) -> tuple[Path, ...]:
    """Polygonal walk(s) from ``(y0, s0)``.

    If ``s0`` is an event time at ``y0`` the path jumps immediately; with
    ``two_paths`` the path that first waits for the next event is returned
    as well.
    """
    w = c.window
    if not (w.j_min <= s0 <= w.j_max) or not w.contains_site(y0):
        raise ValueError("start outside the window")
    if c.is_event(y0, s0):
        first = _trace(c, y0, s0, jump_now=True)
        if two_paths:
            return first, _trace(c, y0, s0, jump_now=False)
        return (first,)
    return (_trace(c, y0, s0, jump_now=False),)


def build_continuous_web(
    c: ClockField, starts: Iterable[tuple[int, float]], *, two_paths: bool = False
) -> PathSet:
    paths = []
    for y0, s0 in starts:
        paths.extend(continuous_path(c, int(y0), float(s0), two_paths=two_paths))
    return PathSet(tuple(paths), "continuous-web")


# --- field serialisation ----------------------------------------------------


def dump_arrow_field(f: ArrowField, fh: TextIO, max_cells: int = DEFAULT_MAX_CELLS) -> None:
    """Text dump: header lines then one row of ``+``, ``-`` or ``.`` per time."""
    w = f.window
    fh.write("# coalweb arrow-field\n")
    fh.write(f"window {w.i_min} {w.i_max} {w.j_min!r} {w.j_max!r} {w.boundary}\n")
    fh.write(f"seed {f.seed}\n")
    fh.write(f"mode {'backward' if f.backward else 'forward'}\n")
    tab = f.to_table(max_cells)
    for j, row in zip(w.rows, tab):
        chars = "".join("+" if v > 0 else "-" if v < 0 else "." for v in row)
        fh.write(f"{j}: {chars}\n")


def load_arrow_field(fh: TextIO) -> ArrowField:
    header, rows = {}, []
    for line in fh:
        line = line.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        key, _, rest = line.partition(" ")
        if key in ("window", "seed", "mode"):
            header[key] = rest.split()
        else:
            rows.append(rest.strip())
    i_min, i_max, j_min, j_max, boundary = header["window"]
    w = Window(int(i_min), int(i_max), float(j_min), float(j_max), boundary)
    table = np.array([[1 if ch == "+" else -1 if ch == "-" else 0 for ch in r] for r in rows], dtype=np.int8)
    return ArrowField.from_table(
        w, table, backward=header["mode"][0] == "backward", seed=int(header["seed"][0])
    )


def dumps_arrow_field(f: ArrowField) -> str:
    buf = io.StringIO()
    dump_arrow_field(f, buf)
    return buf.getvalue()


def loads_arrow_field(text: str) -> ArrowField:
    return load_arrow_field(io.StringIO(text))


def dump_clock_field(c: ClockField, fh: TextIO) -> None:
    """Text dump: one line per site, ``i: t,s;t,s;...|t_over,s_over``."""
    w = c.window
    fh.write("# coalweb clock-field\n")
    fh.write(f"window {w.i_min} {w.i_max} {w.j_min!r} {w.j_max!r} {w.boundary}\n")
    fh.write(f"seed {c.seed}\n")
    fh.write("mode continuous\n")
    for i in w.sites:
        ts, ss = c.events(int(i))
        ov = c.overflow(int(i))
        body = ";".join(f"{t!r},{s}" for t, s in zip(ts.tolist(), ss.tolist()))
        fh.write(f"{int(i)}: {body}|{ov[0]!r},{ov[1]}\n")


def load_clock_field(fh: TextIO) -> ClockField:
    header, events = {}, {}
    for line in fh:
        line = line.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        key, _, rest = line.partition(" ")
        if key in ("window", "seed", "mode"):
            header[key] = rest.split()
            continue
        site = int(key.rstrip(":"))
        body, _, ov = rest.partition("|")
        pairs = [p.split(",") for p in body.split(";") if p]
        t_over, s_over = ov.split(",")
        events[site] = ([float(a) for a, _ in pairs], [int(b) for _, b in pairs], (float(t_over), int(s_over)))
    i_min, i_max, j_min, j_max, boundary = header["window"]
    w = Window(int(i_min), int(i_max), float(j_min), float(j_max), boundary)
    c = ClockField.from_events(w, events)
    object.__setattr__(c, "seed", int(header["seed"][0]))
    return c
