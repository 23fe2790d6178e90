"""Integer histograms and the logarithmic probability sources read off them.

Counts are kept raw; the floor regularization that guarantees nonzero bins is
applied by the caller at scoring time.  All logarithms are natural and come
out of one shared integer log table, so a scoring pass only ever looks up
``log k`` for integer ``k`` up to the regularized total.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Histogram1D",
    "Histogram2D",
    "accumulate",
    "accumulate1d",
    "rebin",
    "regularize",
    "log_table",
    "pair_log_source",
    "leaf_log_prob",
]


@dataclass
class Histogram2D:
    """Square table of joint counts over ``2**bits`` x ``2**bits`` bins.

    ``floor`` is 0 for raw accumulated counts; ``regularize`` sets it to the
    bound it applied, which marks the table as already regularized.
    """

    bits: int
    counts: np.ndarray
    floor: int = 0

    def __post_init__(self):
        if self.bits < 0:
            raise ValueError("histogram bit width must be non-negative")
        counts = np.asarray(self.counts, dtype=np.int64)
        n = 1 << self.bits
        if counts.shape != (n, n):
            raise ValueError(f"expected counts of shape {(n, n)}, got {counts.shape}")
        if np.any(counts < 0):
            raise ValueError("histogram counts must be non-negative")
        if self.floor < 0 or (self.floor > 0 and counts.min() < self.floor):
            raise ValueError("histogram floor must not exceed any count")
        self.counts = counts

    @classmethod
    def zeros(cls, bits: int) -> "Histogram2D":
        n = 1 << bits
        return cls(bits, np.zeros((n, n), dtype=np.int64))

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass
class Histogram1D:
    """Vector of counts over ``2**bits`` bins; ``floor`` as in Histogram2D."""

    bits: int
    counts: np.ndarray
    floor: int = 0

    def __post_init__(self):
        if self.bits < 0:
            raise ValueError("histogram bit width must be non-negative")
        counts = np.asarray(self.counts, dtype=np.int64)
        n = 1 << self.bits
        if counts.shape != (n,):
            raise ValueError(f"expected counts of shape {(n,)}, got {counts.shape}")
        if np.any(counts < 0):
            raise ValueError("histogram counts must be non-negative")
        if self.floor < 0 or (self.floor > 0 and counts.min() < self.floor):
            raise ValueError("histogram floor must not exceed any count")
        self.counts = counts

    @classmethod
    def zeros(cls, bits: int) -> "Histogram1D":
        return cls(bits, np.zeros(1 << bits, dtype=np.int64))

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def accumulate(hist: Histogram2D, events) -> Histogram2D:
    """Add one count per ``(a, b)`` event; returns the mutated histogram.

    ``events`` is anything convertible to an integer array of shape (M, 2).
    Accumulation is plain bin-wise addition, so partial histograms built from
    split streams can be merged by adding their count arrays.
    """
    arr = np.asarray(events if isinstance(events, np.ndarray) else list(events), dtype=np.int64)
    arr = arr.reshape(-1, 2)
    n = 1 << hist.bits
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        raise ValueError(f"event code out of range for a {hist.bits}-bit histogram")
    np.add.at(hist.counts, (arr[:, 0], arr[:, 1]), 1)
    return hist


def accumulate1d(hist: Histogram1D, values) -> Histogram1D:
    """Add one count per scalar event; returns the mutated histogram."""
    arr = np.asarray(values, dtype=np.int64).ravel()
    n = 1 << hist.bits
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        raise ValueError(f"value out of range for a {hist.bits}-bit histogram")
    hist.counts += np.bincount(arr, minlength=n).astype(np.int64)
    return hist


def rebin(hist: Histogram2D, b: int) -> Histogram2D:
    """Merge ``2**b x 2**b`` blocks of bins, dropping ``b`` address bits per axis."""
    if b < 0:
        raise ValueError("cannot rebin by a negative number of bits")
    if b > hist.bits:
        raise ValueError(f"cannot drop {b} bits from a {hist.bits}-bit histogram")
    m = 1 << (hist.bits - b)
    k = 1 << b
    merged = hist.counts.reshape(m, k, m, k).sum(axis=(1, 3))
    return Histogram2D(hist.bits - b, merged)


def regularize(hist):
    """Raise every bin below the ceiling of the mean count up to that ceiling.

    Returns a new histogram of the same type carrying the applied floor; the
    input is untouched.  A histogram that already carries a floor is returned
    as is: the bound belongs to the raw counts, so one application is final
    and the operation is idempotent.
    """
    if hist.floor > 0:
        return hist
    total = int(hist.counts.sum())
    if total <= 0:
        raise ValueError("cannot regularize an empty histogram")
    m = -(-total // hist.counts.size)
    return type(hist)(hist.bits, np.maximum(hist.counts, m), floor=m)


def log_table(max_n: int) -> np.ndarray:
    """Natural logs of the integers: entry ``k`` is ``log k`` for 1 <= k <= max_n.

    Entry 0 is -inf and only exists so counts can index the table directly;
    regularized histograms never address it.
    """
    if max_n < 1:
        raise ValueError("log table needs at least one entry")
    table = np.empty(max_n + 1, dtype=float)
    table[0] = -np.inf
    table[1:] = np.log(np.arange(1, max_n + 1, dtype=float))
    return table


def _check_codes(arr: np.ndarray, bits: int, what: str) -> None:
    n = 1 << bits
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        raise ValueError(f"{what} out of range for a {bits}-bit histogram")


def pair_log_source(hist: Histogram2D, a, b):
    """log of count(a, b) * total / (row(a) * col(b)) on an all-positive table.

    This is the log ratio of the joint bin frequency to the product of its
    two marginal frequencies.  Scalar inputs give a float; array inputs of a
    common shape give an array of the same shape.
    """
    counts = hist.counts
    if np.any(counts < 1):
        raise ValueError("pair_log_source needs a regularized table (no empty bins)")
    rows = counts.sum(axis=1)
    cols = counts.sum(axis=0)
    total = int(counts.sum())
    table = log_table(total)
    a_arr = np.asarray(a, dtype=np.int64)
    b_arr = np.asarray(b, dtype=np.int64)
    _check_codes(a_arr, hist.bits, "pair code")
    _check_codes(b_arr, hist.bits, "pair code")
    out = table[counts[a_arr, b_arr]] + table[total] - table[rows[a_arr]] - table[cols[b_arr]]
    if np.ndim(a) == 0 and np.ndim(b) == 0:
        return float(out)
    return out


def leaf_log_prob(hist: Histogram1D, v):
    """log of count(v) / total on an all-positive table."""
    counts = hist.counts
    if np.any(counts < 1):
        raise ValueError("leaf_log_prob needs a regularized table (no empty bins)")
    total = int(counts.sum())
    table = log_table(total)
    v_arr = np.asarray(v, dtype=np.int64)
    _check_codes(v_arr, hist.bits, "leaf code")
    out = table[counts[v_arr]] - table[total]
    if np.ndim(v) == 0:
        return float(out)
    return out
