"""Decomposition/reconstruction filter banks for the supported wavelet families.

Six banks are shipped: haar, db5, sym4, coif3, bior3.5 and rbio3.5.  The tap
values are embedded constants (not generated at runtime).  Orthonormal taps
were obtained by spectral factorization of the binomial half-band polynomial
(minimum-phase roots for db, least-asymmetric selection for sym) and by
Newton refinement of the coiflet moment equations; the bior3.5 analysis
filter is the exact dyadic-rational spline dual sqrt(2)/512 * [-5, 15, 19,
-97, -26, 350, 350, -26, -97, 19, 15, -5].  All banks satisfy, to well below
1e-10: sum(lo_d) = sqrt(2), equal even/odd reconstruction tap sums (constant
preservation), zero-sum high-pass taps, and, for the orthonormal families,
unit tap energy plus the quadrature mirror relation
hi_d[k] = (-1)^k * lo_d[L-1-k].
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

_SQRT2 = float(np.sqrt(2.0))


class Family(enum.Enum):
    """Wavelet family designators."""

    HAAR = "haar"
    DAUBECHIES = "db"
    SYMLET = "sym"
    COIFLET = "coif"
    BIORTHOGONAL = "bior"
    REVERSE_BIORTHOGONAL = "rbio"


_ORTHONORMAL = (Family.HAAR, Family.DAUBECHIES, Family.SYMLET, Family.COIFLET)

# Analysis low-pass taps, orthonormal families.
_HAAR_LO = np.array([_SQRT2 / 2.0, _SQRT2 / 2.0])

_DB5_LO = np.array([
    0.0033357252854737712,
    -0.012580751999081999,
    -0.006241490212798274,
    0.07757149384004572,
    -0.032244869584638375,
    -0.24229488706638203,
    0.13842814590132074,
    0.7243085284377729,
    0.6038292697971896,
    0.16010239797419293,
])

_SYM4_LO = np.array([
    -0.07576571478950221,
    -0.029635527646002493,
    0.497618667632775,
    0.8037387518051321,
    0.29785779560530606,
    -0.09921954357663353,
    -0.012603967262031304,
    0.032223100604051466,
])

_COIF3_LO = np.array([
    -3.4599773197272774e-05,
    -7.0983302506379e-05,
    0.0004662169598204029,
    0.0011175187708306303,
    -0.002574517688136797,
    -0.009007976136730624,
    0.015880544863669452,
    0.03455502757329773,
    -0.08230192710629981,
    -0.07179982161915484,
    0.42848347637737,
    0.7937772226260872,
    0.4051769024091182,
    -0.06112339000297254,
    -0.06577191128146936,
    0.023452696142077165,
    0.0077825964256727454,
    -0.0037935128643808015,
])

# bior3.5: analysis side is the 12-tap spline dual (exact dyadic rationals),
# synthesis side is the cubic B-spline filter, zero-padded symmetrically so
# all four filters share one length.
_BIOR35_DUAL_LO = _SQRT2 / 512.0 * np.array(
    [-5.0, 15.0, 19.0, -97.0, -26.0, 350.0, 350.0, -26.0, -97.0, 19.0, 15.0, -5.0]
)
_BIOR35_SPLINE_LO = _SQRT2 / 8.0 * np.array(
    [0.0, 0.0, 0.0, 0.0, 1.0, 3.0, 3.0, 1.0, 0.0, 0.0, 0.0, 0.0]
)


@dataclass(frozen=True, eq=False)
class FilterBank:
    """One wavelet family's analysis/synthesis tap sequences.

    lo_d/hi_d are the analysis (decomposition) low/high-pass filters, lo_r/hi_r
    the synthesis (reconstruction) ones.  All four share the same length.
    Instances are immutable and safe to share.
    """

    family: Family
    order: str
    lo_d: np.ndarray
    hi_d: np.ndarray
    lo_r: np.ndarray
    hi_r: np.ndarray

    def __post_init__(self) -> None:
        for name in ("lo_d", "hi_d", "lo_r", "hi_r"):
            taps = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            taps.setflags(write=False)
            object.__setattr__(self, name, taps)

    @property
    def name(self) -> str:
        if self.family is Family.HAAR:
            return "haar"
        return f"{self.family.value}{self.order}"

    def __len__(self) -> int:
        return len(self.lo_d)

    def __repr__(self) -> str:
        return f"FilterBank({self.name!r}, {len(self)} taps)"


def _alternating_signs(length: int) -> np.ndarray:
    signs = np.ones(length)
    signs[1::2] = -1.0
    return signs


def _make_bank(family: Family, order: str, lo_d: np.ndarray, lo_r: np.ndarray) -> FilterBank:
    # High-pass filters follow from the low-pass pair; the sign convention is
    # fixed so that haar yields hi_d = [1/sqrt2, -1/sqrt2].
    signs = _alternating_signs(len(lo_d))
    hi_d = signs * lo_r
    hi_r = -signs * lo_d
    return FilterBank(family=family, order=order, lo_d=lo_d, hi_d=hi_d, lo_r=lo_r, hi_r=hi_r)


def _orthonormal_bank(family: Family, order: str, lo_d: np.ndarray) -> FilterBank:
    return _make_bank(family, order, lo_d, lo_d[::-1])


_BANKS: dict[tuple[Family, str], FilterBank] = {
    (Family.HAAR, "1"): _orthonormal_bank(Family.HAAR, "1", _HAAR_LO),
    (Family.DAUBECHIES, "5"): _orthonormal_bank(Family.DAUBECHIES, "5", _DB5_LO),
    (Family.SYMLET, "4"): _orthonormal_bank(Family.SYMLET, "4", _SYM4_LO),
    (Family.COIFLET, "3"): _orthonormal_bank(Family.COIFLET, "3", _COIF3_LO),
    (Family.BIORTHOGONAL, "3.5"): _make_bank(
        Family.BIORTHOGONAL, "3.5", _BIOR35_DUAL_LO, _BIOR35_SPLINE_LO
    ),
    (Family.REVERSE_BIORTHOGONAL, "3.5"): _make_bank(
        Family.REVERSE_BIORTHOGONAL, "3.5", _BIOR35_SPLINE_LO, _BIOR35_DUAL_LO
    ),
}


def available_banks() -> tuple[str, ...]:
    """Names of all shipped banks, e.g. ("haar", "db5", ...)."""
    return tuple(bank.name for bank in _BANKS.values())


def filter_bank(family: Family | str, order: int | str = "") -> FilterBank:
    """Return the shipped bank for (family, order).

    Raises ValueError for anything outside the supported set; the supported
    orders are haar, db5, sym4, coif3, bior3.5 and rbio3.5.
    """
    if isinstance(family, str):
        try:
            family = Family(family.lower())
        except ValueError:
            raise ValueError(
                f"unsupported wavelet family {family!r}; families: "
                + ", ".join(f.value for f in Family)
            ) from None
    order = str(order).strip()
    if family is Family.HAAR and order in ("", "1"):
        order = "1"
    bank = _BANKS.get((family, order))
    if bank is None:
        raise ValueError(
            f"unsupported wavelet order {family.value}{order}; shipped banks: "
            + ", ".join(available_banks())
        )
    return bank


def bank_from_name(name: str) -> FilterBank:
    """Resolve a compact name like "db5" or "bior3.5" to its FilterBank."""
    compact = name.strip().lower()
    if compact == "haar":
        return filter_bank(Family.HAAR, "1")
    for family in Family:
        prefix = family.value
        if compact.startswith(prefix) and len(compact) > len(prefix):
            return filter_bank(family, compact[len(prefix):])
    raise ValueError(
        f"unrecognized wavelet name {name!r}; shipped banks: " + ", ".join(available_banks())
    )


def is_orthonormal(bank: FilterBank) -> bool:
    """True for the families whose banks satisfy the orthonormality relations."""
    return bank.family in _ORTHONORMAL
