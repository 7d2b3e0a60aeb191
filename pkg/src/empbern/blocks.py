"""Interleaved block decomposition of a trajectory.

A trajectory of length ``n`` is cut into ``2m`` consecutive blocks of length
``tau``.  Odd blocks form the first sequence ``I_1, ..., I_m`` and even blocks
the second sequence ``I'_1, ..., I'_m``, so that blocks of one sequence are at
least ``tau`` steps apart.  Documentation uses 1-based indices; the arrays
stored on :class:`BlockSchedule` are 0-based positions into the data.
"""
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError, InfeasibleScheduleError


@dataclass(frozen=True)
class BlockSchedule:
    """Immutable interleaved block schedule.

    Attributes
    ----------
    n_effective : int
        Number of scheduled indices, ``2 * m * tau``.
    tau : int
        Block length.
    m : int
        Number of blocks in each of the two sequences.
    n_dropped : int
        Trailing indices discarded because ``n`` is not a multiple of
        ``2 * tau``.
    """

    n_effective: int
    tau: int
    m: int
    n_dropped: int = 0
    _starts: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        # 0-based start of block j in the interleaved order I_1, I'_1, I_2, ...
        starts = np.arange(2 * self.m) * self.tau
        starts.setflags(write=False)
        object.__setattr__(self, "_starts", starts)

    @property
    def n(self):
        return self.n_effective + self.n_dropped

    @property
    def first_sequence(self):
        """List of ``m`` 0-based index arrays ``I_k``."""
        return [np.arange(s, s + self.tau) for s in self._starts[0::2]]

    @property
    def second_sequence(self):
        """List of ``m`` 0-based index arrays ``I'_k``."""
        return [np.arange(s, s + self.tau) for s in self._starts[1::2]]

    def first_sequence_1based(self):
        return [list(ix + 1) for ix in self.first_sequence]

    def second_sequence_1based(self):
        return [list(ix + 1) for ix in self.second_sequence]

    def blocks(self):
        """All ``2m`` blocks in time order, each as a 0-based index array."""
        return [np.arange(s, s + self.tau) for s in self._starts]

    def sequence_labels(self):
        """Length ``n`` array: 0 for first-sequence, 1 for second, -1 dropped."""
        labels = np.full(self.n, -1, dtype=np.int64)
        t = np.arange(self.n_effective)
        labels[: self.n_effective] = (t // self.tau) % 2
        return labels

    def block_labels(self):
        """Length ``n`` array with the block number within its sequence (or -1)."""
        labels = np.full(self.n, -1, dtype=np.int64)
        t = np.arange(self.n_effective)
        labels[: self.n_effective] = t // (2 * self.tau)
        return labels


def build_schedule(n, tau):
    """Build the interleaved schedule for a trajectory of length ``n``.

    ``m = n // (2 * tau)``; the remainder ``n - 2 * m * tau`` is dropped from
    the end of the trajectory.

    >>> s = build_schedule(8, 2)
    >>> s.first_sequence_1based(), s.second_sequence_1based()
    ([[1, 2], [5, 6]], [[3, 4], [7, 8]])
    """
    n = int(n)
    tau = int(tau)
    if tau < 1:
        raise InfeasibleScheduleError(f"tau must be >= 1, got {tau}")
    if n < 2 * tau:
        raise InfeasibleScheduleError(
            f"n={n} is shorter than one pair of blocks of length tau={tau}"
        )
    m = n // (2 * tau)
    n_effective = 2 * m * tau
    return BlockSchedule(n_effective=n_effective, tau=tau, m=m, n_dropped=n - n_effective)


def pair_set_sizes(schedule):
    """Return ``(|S_tau|, |S~_tau|) = (2 m tau^2, 2 m (m-1) tau^2)``."""
    m, tau = schedule.m, schedule.tau
    return 2 * m * tau * tau, 2 * m * (m - 1) * tau * tau


def block_sums(values, schedule):
    """Sum ``values`` over every block of each sequence.

    Returns two arrays of length ``m``: the first-sequence sums and the
    second-sequence sums.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1:
        raise DimensionError("values must be one-dimensional")
    if values.shape[0] < schedule.n_effective:
        raise DimensionError(
            f"need at least {schedule.n_effective} values, got {values.shape[0]}"
        )
    sums = values[: schedule.n_effective].reshape(2 * schedule.m, schedule.tau).sum(axis=1)
    return sums[0::2], sums[1::2]


def enumerate_pairs(schedule, max_n=200):
    """Explicitly list ``S_tau`` and ``S~_tau`` as 0-based ``(t, s)`` pairs.

    Only meant for small schedules (tests, diagnostics).
    """
    if schedule.n_effective > max_n:
        raise ValueError(
            f"refusing to enumerate pairs for n_effective={schedule.n_effective} > {max_n}"
        )
    diag, off = [], []
    for seq in (schedule.first_sequence, schedule.second_sequence):
        for k, Ik in enumerate(seq):
            for l, Il in enumerate(seq):
                target = diag if k == l else off
                target.extend((int(t), int(s)) for t in Ik for s in Il)
    return diag, off
