"""Memory-efficient multilevel 3D wavelet decomposition and reconstruction.

Each decomposition step keeps only the all-low-pass sub-cube: the low-pass
filter is applied with dyadic decimation along axis0, axis1 and axis2 in
turn, so the seven detail sub-cubes are never materialized.  One step shrinks
the voxel count to ~1/8 (plus filter-induced border growth).  Reconstruction
upsamples the approximation (zero-filled details) back through axis2..axis0,
cropping each axis to its recorded pre-step size, which yields a full-size
low-pass view of the cube at every level.

Conventions: lines are border-extended by half-point symmetry (configurable
to periodic or zero), and a decimated pass over an axis of length n with an
L-tap filter produces floor((n + L - 1) / 2) samples.  With these choices a
decimate/upsample round trip reproduces the low-pass projection exactly, and
constant cubes are preserved bit-near-exactly at every level for every
shipped bank.

The per-axis passes stream over the cube in bounded chunks, so the peak
transient allocation of a step stays near the size of the pass outputs
instead of multiples of the input.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from math import prod
from typing import Iterator, Literal

import numpy as np

from .cube_io import Cube
from .wavelets import FilterBank

BoundaryMode = Literal["symmetric", "periodic", "zero"]

#: Upper bound on voxels touched per streamed chunk of an axis pass.
CHUNK_VOXELS = 1 << 16


def approx_len(n: int, n_taps: int) -> int:
    """Decimated length of an n-sample line under an n_taps filter."""
    return (n + n_taps - 1) // 2


def _extension_indices(n: int, pad: int, mode: BoundaryMode) -> np.ndarray:
    """Gather indices realizing the border extension of an n-sample line."""
    idx = np.arange(-pad, n + pad)
    if mode == "periodic":
        return np.mod(idx, n)
    # half-point symmetric, folded as many times as the pad requires
    idx = np.mod(idx, 2 * n)
    return np.where(idx < n, idx, 2 * n - 1 - idx)


def _axis_slice(ndim: int, axis: int, sl: slice) -> tuple[slice, ...]:
    out: list[slice] = [slice(None)] * ndim
    out[axis] = sl
    return tuple(out)


def _iter_chunks(shape: tuple[int, ...], axis: int) -> Iterator[tuple[int, slice]]:
    """Slabs along some non-target axis keeping each slab under CHUNK_VOXELS."""
    it_ax = 0 if axis != 0 else 1
    per_index = prod(shape) // shape[it_ax]
    step = max(1, CHUNK_VOXELS // max(per_index, 1))
    for start in range(0, shape[it_ax], step):
        yield it_ax, slice(start, start + step)


def _conv_down_axis(arr: np.ndarray, axis: int, taps: np.ndarray, mode: BoundaryMode) -> np.ndarray:
    n = arr.shape[axis]
    n_taps = len(taps)
    if n_taps == 0:
        raise ValueError("filter taps must be non-empty")
    if n < 2:
        raise ValueError(f"axis {axis} has size {n}; need at least 2 samples")
    c = approx_len(n, n_taps)
    out_shape = list(arr.shape)
    out_shape[axis] = c
    out = np.empty(out_shape, dtype=np.float64)

    pad = n_taps - 1
    if mode == "zero":
        gather = None
    else:
        gather = _extension_indices(n, pad, mode)

    for it_ax, slab in _iter_chunks(arr.shape, axis):
        block = arr[_axis_slice(arr.ndim, it_ax, slab)]
        if gather is not None:
            ext = block.take(gather, axis=axis)
        else:
            ext_shape = list(block.shape)
            ext_shape[axis] += 2 * pad
            ext = np.zeros(ext_shape, dtype=np.float64)
            ext[_axis_slice(arr.ndim, axis, slice(pad, pad + n))] = block
        acc_shape = list(block.shape)
        acc_shape[axis] = c
        acc = np.zeros(acc_shape, dtype=np.float64)
        # output sample i along the axis is sum_j taps[j] * ext[2i + n_taps - j]
        for j in range(n_taps):
            start = n_taps - j
            sl = slice(start, start + 2 * c - 1, 2)
            acc += taps[j] * ext[_axis_slice(arr.ndim, axis, sl)]
        out_sl = [slice(None)] * arr.ndim
        out_sl[it_ax] = slab
        out[tuple(out_sl)] = acc
    return out


def _upsample_conv_axis(
    arr: np.ndarray, axis: int, taps: np.ndarray, target_len: int
) -> np.ndarray:
    c = arr.shape[axis]
    n_taps = len(taps)
    if n_taps == 0:
        raise ValueError("filter taps must be non-empty")
    if target_len < 1 or approx_len(target_len, n_taps) != c:
        raise ValueError(
            f"target length {target_len} is inconsistent with {c} coefficients "
            f"under a {n_taps}-tap filter"
        )
    full = 2 * c - n_taps + 2
    out_shape = list(arr.shape)
    out_shape[axis] = target_len
    out = np.empty(out_shape, dtype=np.float64)
    crop = (full - target_len) // 2

    for it_ax, slab in _iter_chunks(arr.shape, axis):
        block = arr[_axis_slice(arr.ndim, it_ax, slab)]
        up_shape = list(block.shape)
        up_shape[axis] = 2 * c - 1 + 2 * (n_taps - 1)
        up = np.zeros(up_shape, dtype=np.float64)
        up[_axis_slice(arr.ndim, axis, slice(n_taps - 1, n_taps - 1 + 2 * c - 1, 2))] = block
        acc_shape = list(block.shape)
        acc_shape[axis] = full
        acc = np.zeros(acc_shape, dtype=np.float64)
        # reconstruction sample t is sum_j taps[j] * up[t + 2*n_taps - 3 - j]
        for j in range(n_taps):
            start = 2 * n_taps - 3 - j
            acc += taps[j] * up[_axis_slice(arr.ndim, axis, slice(start, start + full))]
        out_sl = [slice(None)] * arr.ndim
        out_sl[it_ax] = slab
        out[tuple(out_sl)] = acc[_axis_slice(arr.ndim, axis, slice(crop, crop + target_len))]
    return out


def _as_result_cube(arr: np.ndarray, source: Cube) -> Cube:
    return Cube(arr, np.zeros(arr.shape, dtype=bool), dict(source.meta))


def conv_downsample_axis(
    cube: Cube, axis: int, taps: np.ndarray, mode: BoundaryMode = "symmetric"
) -> Cube:
    """Border-extend, convolve and decimate every line of `cube` along `axis`."""
    if axis not in (0, 1, 2):
        raise ValueError(f"axis must be 0, 1 or 2, got {axis}")
    return _as_result_cube(_conv_down_axis(cube.data, axis, np.asarray(taps, float), mode), cube)


def upsample_conv_axis(
    cube: Cube, axis: int, taps: np.ndarray, target_len: int
) -> Cube:
    """Zero-interleave, convolve and center-crop every line along `axis`."""
    if axis not in (0, 1, 2):
        raise ValueError(f"axis must be 0, 1 or 2, got {axis}")
    return _as_result_cube(
        _upsample_conv_axis(cube.data, axis, np.asarray(taps, float), target_len), cube
    )


def dwt3d_step(cube: Cube, bank: FilterBank, mode: BoundaryMode = "symmetric") -> Cube:
    """One decomposition step: the all-low-pass sub-cube of `cube`.

    Only the low-pass branch is evaluated on each of the three axis passes,
    so no detail coefficients are ever allocated.
    """
    arr = cube.data
    for axis in (0, 1, 2):
        if arr.shape[axis] < 2:
            raise ValueError(f"axis {axis} has size {arr.shape[axis]}; need at least 2 samples")
    a0 = _conv_down_axis(arr, 0, bank.lo_d, mode)
    a1 = _conv_down_axis(a0, 1, bank.lo_d, mode)
    del a0
    a2 = _conv_down_axis(a1, 2, bank.lo_d, mode)
    return _as_result_cube(a2, cube)


def idwt3d_step(approx: Cube, bank: FilterBank, target_dims: tuple[int, int, int]) -> Cube:
    """Invert one step onto `target_dims` with implicitly-zero details."""
    if len(target_dims) != 3:
        raise ValueError(f"target_dims must be a dim triple, got {target_dims!r}")
    arr = approx.data
    try:
        arr = _upsample_conv_axis(arr, 2, bank.lo_r, int(target_dims[2]))
        arr = _upsample_conv_axis(arr, 1, bank.lo_r, int(target_dims[1]))
        arr = _upsample_conv_axis(arr, 0, bank.lo_r, int(target_dims[0]))
    except ValueError as exc:
        raise ValueError(f"dim bookkeeping mismatch for target {tuple(target_dims)}: {exc}") from exc
    return _as_result_cube(arr, approx)


@dataclass(frozen=True, eq=False)
class MraLevel:
    """One decomposition level.

    approx is the coefficient sub-cube after `level` steps; recon is its
    full-size low-pass reconstruction (original dims).  padded_dims_per_step
    records the pre-step dims consumed by each step, which is exactly what
    reconstruction needs to crop every axis back.
    """

    level: int
    approx: Cube
    recon: Cube
    padded_dims_per_step: tuple[tuple[int, int, int], ...]


def reconstruct_level(
    approx: Cube, bank: FilterBank, dims_per_step: tuple[tuple[int, int, int], ...]
) -> Cube:
    """Apply idwt3d_step once per recorded step, newest step first."""
    cube = approx
    for dims in reversed(dims_per_step):
        cube = idwt3d_step(cube, bank, dims)
    return cube


def decompose(
    cube: Cube, bank: FilterBank, max_level: int, mode: BoundaryMode = "symmetric"
) -> list[MraLevel]:
    """Multilevel all-low-pass decomposition with per-level reconstructions.

    Level 0 is the original cube (approx == recon == input).  Decomposition
    stops early with a warning once any axis of the current approximation is
    shorter than the filter, so the returned list may hold fewer than
    max_level + 1 entries.  Reconstructions are recomputed from each level's
    coefficients rather than cached, trading CPU for memory.
    """
    if max_level < 1:
        raise ValueError(f"max_level must be >= 1, got {max_level}")
    levels = [MraLevel(0, cube, cube, ())]
    current = cube
    chain: list[tuple[int, int, int]] = []
    for level in range(1, max_level + 1):
        if min(current.dims) < len(bank.lo_d):
            warnings.warn(
                f"stopping decomposition at level {level - 1}: dims {current.dims} "
                f"have an axis shorter than the {len(bank.lo_d)}-tap filter",
                stacklevel=2,
            )
            break
        chain.append(current.dims)
        current = dwt3d_step(current, bank, mode)
        recon = reconstruct_level(current, bank, tuple(chain))
        if recon.dims != cube.dims:
            raise AssertionError(
                f"reconstruction dims {recon.dims} != original {cube.dims} at level {level}"
            )
        levels.append(MraLevel(level, current, recon, tuple(chain)))
    return levels
