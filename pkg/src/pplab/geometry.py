"""Windows, distances, and the multi-scale annulus boxing construction."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_SUBBOX_GUARD = 2_000_000  # refuse to enumerate more grid cells than this


@dataclass(frozen=True)
class Window:
    """Axis-aligned cube [-side/2, side/2]^d with hard or torus boundary."""

    d: int
    side: float
    boundary: str = "hard"

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if not self.side > 0:
            raise ValueError("side must be positive")
        if self.boundary not in ("hard", "torus"):
            raise ValueError("boundary must be 'hard' or 'torus'")

    @property
    def volume(self) -> float:
        return self.side**self.d

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=np.float64)
        h = self.side / 2.0
        return bool(np.all(np.abs(x) <= h))


def min_image(dx: np.ndarray, side: float) -> np.ndarray:
    """Wrap coordinate differences into (-side/2, side/2] (torus metric)."""
    return dx - side * np.round(dx / side)


def pair_distance(window: Window, x, y) -> float:
    """Euclidean distance between two points of the window."""
    dx = np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    if window.boundary == "torus":
        dx = min_image(dx, window.side)
    return float(np.sqrt(np.sum(dx * dx)))


# ---------------------------------------------------------------------------
# boxing


@dataclass(frozen=True)
class Annulus:
    """One scale of the boxing: ring Gamma_k packed with grid sub-boxes.

    anchors[i] is the lower corner of sub-box i; all sub-boxes share side
    length subbox_side and are half-open [lo, lo + side) along each axis.
    """

    k: int
    outer_half: float          # half side of Box_k
    inner_half: float | None   # half side of Box_{k-1} (None for k=0)
    subbox_side: float
    cells_per_axis: int
    anchors: np.ndarray        # (b_k, d) lower corners
    cell_index: dict = field(repr=False)  # axis-index tuple -> row in anchors

    @property
    def count(self) -> int:
        return len(self.anchors)


@dataclass(frozen=True)
class BoxingSystem:
    """Nested boxes Box_k of side e^{M D C^k / d} around a center point.

    Annulus Gamma_k = Box_k minus Box_{k-1} (Gamma_0 = Box_0) is packed
    with full sub-boxes of side e^{M C^k / d} on a grid anchored at the
    lexicographically smallest corner of Box_k; cells protruding from the
    window or overlapping Box_{k-1} are dropped.
    """

    window: Window
    center: np.ndarray
    M: float
    C: float
    D: float
    delta: float
    k_star: int
    annuli: tuple

    def box_half(self, k: int) -> float:
        return math.exp(self.M * self.D * self.C**k / self.window.d) / 2.0

    def subbox_side(self, k: int) -> float:
        return math.exp(self.M * self.C**k / self.window.d)

    def volume_ratio(self, k: int) -> float:
        """vol(Box_k) / vol(sub-box of Gamma_k) = e^{M (D-1) C^k}."""
        return math.exp(self.M * (self.D - 1.0) * self.C**k)

    def counts(self) -> list:
        return [a.count for a in self.annuli]

    def leader_weight_interval(self, k: int, tau: float) -> tuple:
        """Half-open weight interval (lo, hi] that makes a leader delta-good."""
        e = self.M * self.C**k / (tau - 1.0)
        return (math.exp((1.0 - self.delta) * e), math.exp((1.0 + self.delta) * e))

    def leader_count_threshold(self, k_next: int, eps: float) -> float:
        """Required number of next-annulus good neighbours, e^{(1-eps) M C^{k+1} (D-1)}."""
        return math.exp((1.0 - eps) * self.M * self.C**k_next * (self.D - 1.0))


def _enumerate_annulus(window: Window, center: np.ndarray, k: int,
                       outer_half: float, inner_half, subbox_side: float) -> Annulus:
    d = window.d
    cells = int(math.floor(2.0 * outer_half / subbox_side))
    if cells < 1:
        cells = 0
    if cells**d > _SUBBOX_GUARD:
        raise ValueError(
            f"annulus {k} would hold {cells}^{d} grid cells; "
            f"guard is {_SUBBOX_GUARD}"
        )
    corner = center - outer_half
    hw = window.side / 2.0
    tol = 1e-12 * max(window.side, 1.0)

    kept_anchors = []
    cell_index = {}
    if cells > 0:
        # grid of candidate cells (full cells only)
        axes = [np.arange(cells, dtype=np.int64)] * d
        mesh = np.meshgrid(*axes, indexing="ij")
        idx = np.stack([m.ravel() for m in mesh], axis=1)  # (cells^d, d)
        lo = corner[None, :] + idx * subbox_side
        hi = lo + subbox_side
        keep = np.all(lo >= -hw - tol, axis=1) & np.all(hi <= hw + tol, axis=1)
        if inner_half is not None:
            # drop cells whose interior meets the interior of Box_{k-1}
            ilo = center - inner_half
            ihi = center + inner_half
            overlap = np.all((lo < ihi[None, :]) & (hi > ilo[None, :]), axis=1)
            keep &= ~overlap
        rows = np.nonzero(keep)[0]
        kept_anchors = lo[rows]
        for r, row in enumerate(rows):
            cell_index[tuple(int(v) for v in idx[row])] = r
    anchors = (np.asarray(kept_anchors, dtype=np.float64).reshape(-1, d)
               if len(kept_anchors) else np.empty((0, d)))
    return Annulus(
        k=k,
        outer_half=outer_half,
        inner_half=inner_half,
        subbox_side=subbox_side,
        cells_per_axis=cells,
        anchors=anchors,
        cell_index=cell_index,
    )


def build_boxing(window: Window, center, M: float, C: float, D: float,
                 delta: float) -> BoxingSystem:
    """Construct the boxing system; fails if even Box_0 exceeds the window.

    k_star is the largest k with e^{M D C^k / d} <= side, found by direct
    integer enumeration of the inequality.
    """
    if M <= 0 or C <= 1 or D <= 1:
        raise ValueError("require M > 0, C > 1, D > 1")
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0,1)")
    center = np.asarray(center, dtype=np.float64).reshape(window.d)
    d = window.d

    if math.exp(M * D / d) > window.side:
        raise ValueError("window smaller than Box_0: no boxing exists (k_star < 0)")
    k_star = 0
    while math.exp(M * D * C ** (k_star + 1) / d) <= window.side:
        k_star += 1

    annuli = []
    for k in range(k_star + 1):
        outer = math.exp(M * D * C**k / d) / 2.0
        inner = None if k == 0 else math.exp(M * D * C ** (k - 1) / d) / 2.0
        s = math.exp(M * C**k / d)
        annuli.append(_enumerate_annulus(window, center, k, outer, inner, s))
    return BoxingSystem(
        window=window, center=center, M=M, C=C, D=D, delta=delta,
        k_star=k_star, annuli=tuple(annuli),
    )


def locate_subbox(b: BoxingSystem, x):
    """Return (k, i) for the sub-box containing x, or None if x falls in
    no kept sub-box (outside the boxing or in leftover space).

    Sub-boxes are half-open [lo, lo+side) per axis; a point exactly on
    the closed boundary of Box_k may belong to the first cell of the next
    annulus, so both candidate annuli are checked.
    """
    x = np.asarray(x, dtype=np.float64).reshape(b.window.d)
    m = float(np.max(np.abs(x - b.center)))
    k_cand = None
    for k in range(b.k_star + 1):
        if m <= b.annuli[k].outer_half:
            k_cand = k
            break
    if k_cand is None:
        return None
    for k in (k_cand, k_cand + 1):
        if k > b.k_star:
            continue
        ann = b.annuli[k]
        if ann.cells_per_axis == 0:
            continue
        corner = b.center - ann.outer_half
        idx = np.floor((x - corner) / ann.subbox_side).astype(np.int64)
        if np.any(idx < 0) or np.any(idx >= ann.cells_per_axis):
            continue
        row = ann.cell_index.get(tuple(int(v) for v in idx))
        if row is None:
            continue
        lo = ann.anchors[row]
        if np.all(x >= lo) and np.all(x < lo + ann.subbox_side):
            return (k, row)
    return None
