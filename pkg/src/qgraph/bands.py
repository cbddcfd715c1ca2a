"""Band structures shared by the quantum and discrete Floquet code."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np


def torus_grid(rank: int, n: int) -> list[tuple]:
    """Uniform grid ``2 pi j / n`` per dimension (contains 0 and, for even n, pi)."""
    ks = [2 * math.pi * j / n for j in range(n)]
    return [tuple(p) for p in itertools.product(ks, repeat=rank)]


@dataclass
class BandStructure:
    """Per-k sorted roots in a window, the bands they form and the gaps between.

    ``bands[j]`` holds the ``j``-th root at each ``k`` (``-inf`` / ``+inf`` where
    that band lies below / above the window).  Bands are connected by sorted order only.
    """

    ks: list
    roots: list
    window: tuple
    bands: np.ndarray
    gaps: list = field(default_factory=list)
    flat: list = field(default_factory=list)

    @property
    def band_intervals(self) -> list[tuple[float, float]]:
        out = []
        lo, hi = self.window
        for row in self.bands:
            vals = row[np.isfinite(row)]
            if not vals.size:
                continue
            a = lo if np.any(row == -np.inf) else float(vals.min())
            b = hi if np.any(row == np.inf) else float(vals.max())
            out.append((float(a), float(b)))
        return out

    def spectrum_points(self) -> np.ndarray:
        return np.sort(np.concatenate([np.asarray(r, dtype=float) for r in self.roots])) if self.roots else np.zeros(0)

    def max_gap(self) -> float:
        return max((b - a for a, b in self.gaps), default=0.0)


def align_bands(roots: list, offsets: list[int]) -> np.ndarray:
    """Stack per-k root lists so that row ``j`` is one band.

    ``offsets[i]`` is the number of roots below the window at ``k_i`` up to a
    k-independent constant; it shifts each list into a common band index.
    """
    base = min(offsets) if offsets else 0
    shift = [o - base for o in offsets]
    n = max((s + len(r) for s, r in zip(shift, roots)), default=0)
    out = np.full((n, len(roots)), np.inf)
    for i, (s, r) in enumerate(zip(shift, roots)):
        out[:s, i] = -np.inf
        out[s:s + len(r), i] = r
    return out


def gaps_from_bands(intervals: list[tuple[float, float]], lo: float, hi: float, min_width: float = 0.0):
    """Open sub-intervals of ``(lo, hi)`` not covered by any band interval."""
    spans = sorted(intervals)
    gaps = []
    a = lo
    for x, y in spans:
        if x > a + min_width:
            gaps.append((a, x))
        a = max(a, y)
    if hi > a + min_width:
        gaps.append((a, hi))
    return [(float(x), float(y)) for x, y in gaps if y - x > min_width]
