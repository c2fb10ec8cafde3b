"""Gradient-ascent (FellWalker-style) clump segmentation.

Every voxel at or above the intensity threshold walks to its steepest
strictly-higher neighbor until it reaches a local maximum; the set of voxels
draining into one maximum is one provisional clump.  Adjacent clumps whose
shared boundary rises close to the lower of the two peaks (a shallow dip)
are merged, smallest dip first, until no qualifying pair remains.  Clumps
smaller than min_pix dissolve into the background, and surviving labels are
renumbered densely by decreasing peak intensity.

Everything is deterministic: ascent ties break toward the neighbor with the
lowest linear (C-order, axis2 fastest) index, provisional clump ids follow
the scan order of each basin's first member, and merge ties break on (dip,
label, label).  The implementation is vectorized but specified to equal the
sequential fixed-scan-order walk exactly.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .cube_io import Cube, CubeFormatError


@dataclass(frozen=True)
class ClumpParams:
    """Segmentation parameters; thresholds scale with the supplied rms."""

    rms: float
    noise_mult: float = 2.0
    min_dip_mult: float = 3.0
    min_pix: int = 16
    neighborhood: int = 26

    def __post_init__(self) -> None:
        if not np.isfinite(self.rms) or self.rms <= 0:
            raise ValueError(f"rms must be positive and finite, got {self.rms}")
        if self.noise_mult < 0 or not np.isfinite(self.noise_mult):
            raise ValueError(f"noise_mult must be finite and >= 0, got {self.noise_mult}")
        if self.min_dip_mult < 0 or not np.isfinite(self.min_dip_mult):
            raise ValueError(f"min_dip_mult must be finite and >= 0, got {self.min_dip_mult}")
        if self.min_pix < 1:
            raise ValueError(f"min_pix must be >= 1, got {self.min_pix}")
        if self.neighborhood not in (6, 26):
            raise ValueError(f"neighborhood must be 6 or 26, got {self.neighborhood}")


@dataclass(frozen=True, eq=False)
class CAA:
    """Clump assignment array: one label per voxel, 0 = background."""

    labels: np.ndarray
    n_clumps: int

    def __post_init__(self) -> None:
        labels = np.ascontiguousarray(self.labels, dtype=np.int32)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)


@dataclass(frozen=True, eq=False)
class Clump:
    """One detected clump with its member voxels and summary quantities."""

    id: int
    voxel_indexes: np.ndarray  # (n_pix, 3) int coordinates
    peak_pos: tuple[int, int, int]
    peak_val: float
    total_intensity: float
    centroid: np.ndarray  # intensity-weighted mean position, float 3-vector
    level: int = 0

    @property
    def n_pix(self) -> int:
        return len(self.voxel_indexes)

    @property
    def node_id(self) -> str:
        return f"L{self.level}C{self.id}"


def _neighbor_offsets(neighborhood: int) -> list[tuple[int, int, int]]:
    if neighborhood == 6:
        return [(-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1)]
    return [
        (da, db, dc)
        for da in (-1, 0, 1)
        for db in (-1, 0, 1)
        for dc in (-1, 0, 1)
        if (da, db, dc) != (0, 0, 0)
    ]


def _steepest_successors(
    data: np.ndarray, walkable: np.ndarray, neighborhood: int
) -> np.ndarray:
    """Flat index of each voxel's ascent target (itself if local max).

    Non-walkable voxels (blanks) are treated as -inf walls.  Ties between
    equally-high strictly-greater neighbors resolve to the lowest linear
    index, implemented by scanning offsets in ascending flat-delta order and
    replacing only on strict improvement.
    """
    n0, n1, n2 = data.shape
    padded = np.full((n0 + 2, n1 + 2, n2 + 2), -np.inf)
    padded[1:-1, 1:-1, 1:-1] = np.where(walkable, data, -np.inf)

    offsets = _neighbor_offsets(neighborhood)
    offsets.sort(key=lambda off: off[0] * n1 * n2 + off[1] * n2 + off[2])

    best_val = np.where(walkable, data, -np.inf)
    best_delta = np.zeros(data.shape, dtype=np.int64)
    for da, db, dc in offsets:
        delta = da * n1 * n2 + db * n2 + dc
        nb = padded[1 + da : 1 + da + n0, 1 + db : 1 + db + n1, 1 + dc : 1 + dc + n2]
        better = nb > best_val
        best_val = np.where(better, nb, best_val)
        best_delta[better] = delta

    succ = np.arange(data.size, dtype=np.int64) + best_delta.reshape(-1)
    return succ


def _resolve_roots(succ: np.ndarray) -> np.ndarray:
    roots = succ
    while True:
        hopped = roots[roots]
        if np.array_equal(hopped, roots):
            return roots
        roots = hopped


def _boundary_cols(
    labels3: np.ndarray, data: np.ndarray, neighborhood: int, n_labels: int
) -> dict[tuple[int, int], float]:
    """Highest shared-boundary value (saddle col) per adjacent label pair.

    The col of a voxel pair (a, b) straddling two clumps is min(value_a,
    value_b); the pair col is the maximum over the shared boundary.
    """
    dims = labels3.shape
    keys_parts = []
    vals_parts = []
    positive = [off for off in _neighbor_offsets(neighborhood)
                if off > (0, 0, 0)]
    for off in positive:
        sl_a = tuple(slice(max(0, -d), n - max(0, d)) for d, n in zip(off, dims))
        sl_b = tuple(slice(max(0, d), n - max(0, -d)) for d, n in zip(off, dims))
        la = labels3[sl_a]
        lb = labels3[sl_b]
        valid = (la > 0) & (lb > 0) & (la != lb)
        if not valid.any():
            continue
        la = la[valid].astype(np.int64)
        lb = lb[valid].astype(np.int64)
        col = np.minimum(data[sl_a][valid], data[sl_b][valid])
        lo = np.minimum(la, lb)
        hi = np.maximum(la, lb)
        keys_parts.append(lo * (n_labels + 1) + hi)
        vals_parts.append(col)
    if not keys_parts:
        return {}
    keys = np.concatenate(keys_parts)
    vals = np.concatenate(vals_parts)
    uniq, inverse = np.unique(keys, return_inverse=True)
    best = np.full(len(uniq), -np.inf)
    np.maximum.at(best, inverse, vals)
    out: dict[tuple[int, int], float] = {}
    for key, col in zip(uniq.tolist(), best.tolist()):
        out[(key // (n_labels + 1), key % (n_labels + 1))] = col
    return out


def _merge_shallow_dips(
    cols: dict[tuple[int, int], float],
    peak_val: np.ndarray,
    dip_threshold: float,
) -> np.ndarray:
    """Union clump pairs whose dip is below the threshold, smallest dip first.

    Returns the union-find parent array over provisional labels (index 0
    unused).  Cols fold by max when clumps merge, so the final merge set is
    a fixed point independent of intermediate bookkeeping order.  `cols` and
    the live col table are always keyed by current-root pairs (lo, hi).
    """
    n = len(peak_val) - 1
    parent = np.arange(n + 1, dtype=np.int64)
    neighbors: dict[int, set[int]] = {}
    heap: list[tuple[float, int, int, float]] = []
    for (a, b), col in cols.items():
        dip = float(min(peak_val[a], peak_val[b]) - col)
        heap.append((dip, a, b, col))
        neighbors.setdefault(a, set()).add(b)
        neighbors.setdefault(b, set()).add(a)
    heapq.heapify(heap)

    live = dict(cols)
    while heap:
        dip, a, b, col = heapq.heappop(heap)
        if parent[a] != a or parent[b] != b:
            continue
        if live.get((a, b)) != col:
            continue  # superseded by a fold
        if dip >= dip_threshold:
            break
        survivor, loser = (a, b) if (peak_val[a], -a) >= (peak_val[b], -b) else (b, a)
        parent[loser] = survivor
        del live[(a, b)]
        neighbors[survivor].discard(loser)
        for other in sorted(neighbors.pop(loser)):
            if other == survivor:
                continue
            old_col = live.pop((min(loser, other), max(loser, other)))
            neighbors[other].discard(loser)
            new_key = (min(survivor, other), max(survivor, other))
            merged_col = max(old_col, live.get(new_key, -np.inf))
            live[new_key] = merged_col
            neighbors[survivor].add(other)
            neighbors[other].add(survivor)
            new_dip = float(min(peak_val[survivor], peak_val[other]) - merged_col)
            heapq.heappush(heap, (new_dip, new_key[0], new_key[1], merged_col))
    return parent


def fellwalker(cube: Cube, params: ClumpParams, level: int = 0) -> tuple[CAA, list[Clump]]:
    """Segment a cube into disjoint clumps, one per significant peak.

    Stages: (1) voxels below noise_mult*rms or blank become background;
    (2) every usable voxel is assigned to the local maximum its steepest
    ascent path reaches; (3) clump pairs separated by a dip shallower than
    min_dip_mult*rms merge; (4) clumps below min_pix voxels dissolve;
    (5) labels are renumbered by decreasing peak value.
    """
    data = cube.data
    dims = cube.dims
    threshold = params.noise_mult * params.rms
    usable = (~cube.blank_mask) & (data >= threshold)
    empty = CAA(np.zeros(dims, dtype=np.int32), 0)
    if not usable.any():
        return empty, []

    walkable = ~cube.blank_mask
    succ = _steepest_successors(data, walkable, params.neighborhood)
    roots = _resolve_roots(succ)

    usable_flat = np.flatnonzero(usable.reshape(-1))
    usable_roots = roots[usable_flat]
    uniq_roots, inverse = np.unique(usable_roots, return_inverse=True)

    # provisional ids in discovery order: rank of each basin's first member
    first_member = np.full(len(uniq_roots), data.size, dtype=np.int64)
    np.minimum.at(first_member, inverse, usable_flat)
    discovery = np.argsort(first_member, kind="stable")
    prov_of_uniq = np.empty(len(uniq_roots), dtype=np.int64)
    prov_of_uniq[discovery] = np.arange(1, len(uniq_roots) + 1)

    n_prov = len(uniq_roots)
    labels_flat = np.zeros(data.size, dtype=np.int64)
    labels_flat[usable_flat] = prov_of_uniq[inverse]

    peak_flat = np.zeros(n_prov + 1, dtype=np.int64)
    peak_flat[prov_of_uniq] = uniq_roots
    peak_val = np.full(n_prov + 1, -np.inf)
    peak_val[1:] = data.reshape(-1)[peak_flat[1:]]

    dip_threshold = params.min_dip_mult * params.rms
    if dip_threshold > 0 and n_prov > 1:
        cols = _boundary_cols(labels_flat.reshape(dims), data, params.neighborhood, n_prov)
        parent = _merge_shallow_dips(cols, peak_val, dip_threshold)
        remap = np.zeros(n_prov + 1, dtype=np.int64)
        for lab in range(1, n_prov + 1):
            root = lab
            while parent[root] != root:
                root = int(parent[root])
            remap[lab] = root
        labels_flat = remap[labels_flat]

    sizes = np.bincount(labels_flat, minlength=n_prov + 1)
    survivors = np.flatnonzero(sizes[1:] >= params.min_pix) + 1
    if len(survivors) == 0:
        return empty, []

    # dense renumbering by decreasing peak value (ties: lower peak index)
    order = sorted(survivors.tolist(), key=lambda lab: (-peak_val[lab], peak_flat[lab]))
    final_of_prov = np.zeros(n_prov + 1, dtype=np.int64)
    for new_id, lab in enumerate(order, start=1):
        final_of_prov[lab] = new_id
    labels_flat = final_of_prov[labels_flat]
    n_clumps = len(order)

    caa = CAA(labels_flat.reshape(dims).astype(np.int32), n_clumps)

    member_flat = np.flatnonzero(labels_flat)
    member_labels = labels_flat[member_flat]
    member_order = np.argsort(member_labels, kind="stable")
    sorted_flat = member_flat[member_order]
    sorted_labels = member_labels[member_order]
    bounds = np.searchsorted(sorted_labels, np.arange(1, n_clumps + 2))
    starts = np.concatenate(([0], bounds[:-1]))

    coords = np.column_stack(np.unravel_index(sorted_flat, dims)).astype(np.int64)
    weights = data.reshape(-1)[sorted_flat]

    clumps: list[Clump] = []
    for new_id, lab in enumerate(order, start=1):
        lo, hi = starts[new_id - 1], bounds[new_id - 1]
        members = coords[lo:hi]
        w = weights[lo:hi]
        total = float(w.sum())
        if total != 0.0:
            center = (members * w[:, None]).sum(axis=0) / total
        else:
            center = members.mean(axis=0)
        peak_pos = tuple(int(v) for v in np.unravel_index(peak_flat[lab], dims))
        clumps.append(
            Clump(
                id=new_id,
                voxel_indexes=members,
                peak_pos=peak_pos,  # type: ignore[arg-type]
                peak_val=float(peak_val[lab]),
                total_intensity=total,
                centroid=center.astype(np.float64),
                level=level,
            )
        )
    return caa, clumps


def clump_metrics(clumps: list[Clump]) -> tuple[int, int, float]:
    """(clump count, voxel count of the biggest clump, mean voxel count)."""
    if not clumps:
        return 0, 0, 0.0
    sizes = [c.n_pix for c in clumps]
    return len(sizes), max(sizes), float(np.mean(sizes))


def save_caa_raw(caa: CAA, path: str) -> None:
    """Write labels as little-endian int32 in C order (axis2 fastest)."""
    with open(path, "wb") as fh:
        fh.write(caa.labels.astype("<i4").tobytes())


def load_caa_raw(path: str, dims: tuple[int, int, int]) -> CAA:
    """Read labels written by save_caa_raw; file size must match dims."""
    expected = int(np.prod(dims)) * 4
    try:
        with open(path, "rb") as fh:
            payload = fh.read()
    except OSError as exc:
        raise CubeFormatError(f"unreadable file {path}: {exc}") from exc
    if len(payload) != expected:
        raise CubeFormatError(
            f"size mismatch for {path}: dims {tuple(dims)} need {expected} bytes, "
            f"file has {len(payload)}"
        )
    labels = np.frombuffer(payload, dtype="<i4").reshape(dims)
    n = int(labels.max(initial=0))
    return CAA(labels.astype(np.int32), n)
