"""3D data cube container plus minimal FITS-subset and raw binary I/O.

The FITS support is deliberately small: primary HDU only, BITPIX -32/-64,
NAXIS=3, optional BSCALE/BZERO, no extensions and no compression.  The raw
format is headerless little-endian float64 in C order (axis2 fastest) with
blank voxels encoded as NaN; dims travel out-of-band.

Internally the axis order is (axis0=frequency, axis1, axis2), i.e. FITS
NAXIS3/NAXIS2/NAXIS1.  Blank voxels carry data 0.0 so the wavelet engine
never needs to special-case them; only clump segmentation consults the mask.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FITS_BLOCK = 2880
FITS_CARD = 80

_STRUCTURAL_KEYS = frozenset(
    {"SIMPLE", "BITPIX", "NAXIS", "NAXIS1", "NAXIS2", "NAXIS3", "BSCALE", "BZERO", "END"}
)


class CubeFormatError(ValueError):
    """Raised for unreadable, truncated or unsupported cube files."""


@dataclass(frozen=True, eq=False)
class Cube:
    """Immutable dense 3D array of intensities with a blank-voxel mask.

    Invariants enforced at construction: data is float64 and C-contiguous,
    blank_mask matches the data shape, and every non-blank voxel is finite.
    Blank voxels hold data 0.0.  Arrays are marked read-only, so a Cube can
    be shared freely across workers.
    """

    data: np.ndarray
    blank_mask: np.ndarray
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        if data.ndim != 3:
            raise ValueError(f"cube data must be 3D, got {data.ndim}D")
        if min(data.shape) < 1:
            raise ValueError(f"cube axes must be positive, got {data.shape}")
        mask = np.ascontiguousarray(self.blank_mask, dtype=bool)
        if mask.shape != data.shape:
            raise ValueError(f"blank mask shape {mask.shape} != data shape {data.shape}")
        if not np.all(np.isfinite(data[~mask])):
            raise ValueError("non-blank voxels must be finite")
        if mask.any() and np.any(data[mask] != 0.0):
            data = data.copy()
            data[mask] = 0.0
        data.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "blank_mask", mask)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape  # type: ignore[return-value]

    @property
    def n_voxels(self) -> int:
        return self.data.size

    def valid_values(self) -> np.ndarray:
        """Flat array of the non-blank voxel intensities."""
        if self.blank_mask.any():
            return self.data[~self.blank_mask]
        return self.data.reshape(-1)

    def with_meta(self, **entries: str) -> "Cube":
        meta = dict(self.meta)
        meta.update({k: str(v) for k, v in entries.items()})
        return Cube(self.data, self.blank_mask, meta)


def cube_from_values(values: np.ndarray, meta: dict[str, str] | None = None) -> Cube:
    """Build a Cube from raw values, blanking every non-finite entry."""
    values = np.asarray(values, dtype=np.float64)
    mask = ~np.isfinite(values)
    data = np.where(mask, 0.0, values)
    return Cube(data, mask, dict(meta or {}))


def cubes_equal(a: Cube, b: Cube) -> bool:
    """Bit-exact equality of data and blank masks."""
    return (
        a.dims == b.dims
        and np.array_equal(a.data, b.data)
        and np.array_equal(a.blank_mask, b.blank_mask)
    )


# ---------------------------------------------------------------------------
# FITS subset
# ---------------------------------------------------------------------------

def _parse_card(card: str) -> tuple[str, str]:
    key = card[:8].strip()
    rest = card[8:]
    if rest.startswith("= "):
        value = rest[2:]
        if "/" in value and not value.lstrip().startswith("'"):
            value = value.split("/", 1)[0]
        return key, value.strip()
    return key, rest.strip()


def _card_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise CubeFormatError(f"malformed integer value for {key}: {raw!r}") from None


def _card_float(key: str, raw: str) -> float:
    try:
        return float(raw.replace("D", "E").replace("d", "e"))
    except ValueError:
        raise CubeFormatError(f"malformed float value for {key}: {raw!r}") from None


def load_fits(path: str) -> Cube:
    """Read a 3D cube from a minimal-subset FITS file.

    Axis order is mapped (NAXIS3, NAXIS2, NAXIS1) -> (axis0, axis1, axis2).
    BSCALE/BZERO are applied; non-finite voxels become blanks with data 0.0.
    Header cards are preserved in Cube.meta keyed by keyword.
    """
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise CubeFormatError(f"unreadable file {path}: {exc}") from exc

    if len(raw) < FITS_BLOCK or not raw[:6] == b"SIMPLE":
        raise CubeFormatError(f"{path} is not a FITS file (missing SIMPLE card)")

    cards: dict[str, str] = {}
    pos = 0
    ended = False
    while not ended:
        block = raw[pos : pos + FITS_BLOCK]
        if len(block) < FITS_BLOCK:
            raise CubeFormatError(f"{path}: header ended without END card")
        for i in range(0, FITS_BLOCK, FITS_CARD):
            card = block[i : i + FITS_CARD].decode("ascii", errors="replace")
            key, value = _parse_card(card)
            if key == "END":
                ended = True
                break
            if key:
                cards[key] = value
        pos += FITS_BLOCK

    bitpix = _card_int("BITPIX", cards.get("BITPIX", ""))
    if bitpix not in (-32, -64):
        raise CubeFormatError(f"unsupported BITPIX {bitpix} (only -32/-64 floating point)")
    naxis = _card_int("NAXIS", cards.get("NAXIS", ""))
    if naxis != 3:
        raise CubeFormatError(f"unsupported dimensionality: NAXIS={naxis}, need 3")
    n1 = _card_int("NAXIS1", cards.get("NAXIS1", ""))
    n2 = _card_int("NAXIS2", cards.get("NAXIS2", ""))
    n3 = _card_int("NAXIS3", cards.get("NAXIS3", ""))
    if min(n1, n2, n3) < 1:
        raise CubeFormatError(f"non-positive axis length in {path}")

    dtype = np.dtype(">f4") if bitpix == -32 else np.dtype(">f8")
    nbytes = n1 * n2 * n3 * dtype.itemsize
    payload = raw[pos : pos + nbytes]
    if len(payload) < nbytes:
        raise CubeFormatError(
            f"truncated data unit in {path}: expected {nbytes} bytes, got {len(payload)}"
        )
    values = np.frombuffer(payload, dtype=dtype).astype(np.float64).reshape(n3, n2, n1)

    bscale = _card_float("BSCALE", cards["BSCALE"]) if "BSCALE" in cards else 1.0
    bzero = _card_float("BZERO", cards["BZERO"]) if "BZERO" in cards else 0.0
    if bscale != 1.0 or bzero != 0.0:
        finite = np.isfinite(values)
        values = np.where(finite, values * bscale + bzero, values)

    meta = {key: value for key, value in cards.items()}
    return cube_from_values(values, meta)


def _format_card(key: str, value: str) -> bytes:
    card = f"{key:<8}= {value:>20}"
    return card.ljust(FITS_CARD).encode("ascii")[:FITS_CARD]


def _meta_card(key: str, value: str) -> bytes | None:
    key = key.upper()
    if key in _STRUCTURAL_KEYS or len(key) > 8 or not key.replace("-", "").replace("_", "").isalnum():
        return None
    text = value.replace("'", "''")
    if len(text) > 67:
        return None
    return f"{key:<8}= '{text}'".ljust(FITS_CARD).encode("ascii", errors="replace")[:FITS_CARD]


def save_fits(cube: Cube, path: str) -> None:
    """Write a cube as a BITPIX=-64 primary-HDU FITS file; blanks become NaN."""
    n0, n1, n2 = cube.dims
    cards = [
        _format_card("SIMPLE", "T"),
        _format_card("BITPIX", "-64"),
        _format_card("NAXIS", "3"),
        _format_card("NAXIS1", str(n2)),
        _format_card("NAXIS2", str(n1)),
        _format_card("NAXIS3", str(n0)),
    ]
    for key, value in cube.meta.items():
        card = _meta_card(key, value)
        if card is not None:
            cards.append(card)
    cards.append(b"END".ljust(FITS_CARD))
    header = b"".join(cards)
    header += b" " * (-len(header) % FITS_BLOCK)

    values = np.where(cube.blank_mask, np.nan, cube.data).astype(">f8")
    payload = values.tobytes()
    payload += b"\0" * (-len(payload) % FITS_BLOCK)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


# ---------------------------------------------------------------------------
# Raw binary format
# ---------------------------------------------------------------------------

def save_raw(cube: Cube, path: str) -> None:
    """Write little-endian float64 voxels in C order; blanks encoded as NaN."""
    values = np.where(cube.blank_mask, np.nan, cube.data).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(values.tobytes())


def load_raw(path: str, dims: tuple[int, int, int]) -> Cube:
    """Read a raw cube written by save_raw; file size must match dims exactly."""
    dims = tuple(int(d) for d in dims)  # type: ignore[assignment]
    if len(dims) != 3 or min(dims) < 1:
        raise ValueError(f"dims must be three positive integers, got {dims}")
    expected = dims[0] * dims[1] * dims[2] * 8
    try:
        with open(path, "rb") as fh:
            payload = fh.read()
    except OSError as exc:
        raise CubeFormatError(f"unreadable file {path}: {exc}") from exc
    if len(payload) != expected:
        raise CubeFormatError(
            f"size mismatch for {path}: dims {dims} need {expected} bytes, file has {len(payload)}"
        )
    values = np.frombuffer(payload, dtype="<f8").reshape(dims)
    return cube_from_values(values)
