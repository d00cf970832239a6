"""Stream bookkeeping for rate-splitting precoders.

A precoder matrix always carries ``1 + G + K`` columns in a fixed order:
one global common stream, then one per-group stream per group, then one
private stream per user. One-layer operation is the same layout with the
group block structurally unused, so both modes share every code path.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["StreamLayout"]


@dataclass(frozen=True)
class StreamLayout:
    """Who listens to which stream.

    Attributes
    ----------
    n_tx : int
        Transmit antennas.
    n_users : int
        Single-antenna receivers.
    n_groups : int
        User groups. One-layer mode keeps the group streams allocated but
        inactive (zero columns, excluded from rates and gradients).
    group_of : tuple of int
        ``group_of[k]`` is the group index of user k.
    mode : str
        ``"one_layer"`` or ``"hierarchical"``.
    """

    n_tx: int
    n_users: int
    n_groups: int
    group_of: tuple
    mode: str = "hierarchical"

    def __post_init__(self):
        if self.n_tx < 1 or self.n_users < 1 or self.n_groups < 1:
            raise ValueError("n_tx, n_users, n_groups must all be >= 1")
        if self.mode not in ("one_layer", "hierarchical"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if len(self.group_of) != self.n_users:
            raise ValueError("group_of must assign every user")
        for k, g in enumerate(self.group_of):
            if not 0 <= g < self.n_groups:
                raise ValueError(f"user {k} assigned to invalid group {g}")
        for g in range(self.n_groups):
            if g not in self.group_of:
                raise ValueError(f"group {g} has no members")

    # -- constructors -------------------------------------------------

    @classmethod
    def one_layer(cls, n_tx: int, n_users: int) -> "StreamLayout":
        """Single common stream plus private streams; no group layer."""
        return cls(n_tx=n_tx, n_users=n_users, n_groups=1,
                   group_of=tuple([0] * n_users), mode="one_layer")

    @classmethod
    def hierarchical(cls, n_tx: int, n_users: int, n_groups: int,
                     group_of=None) -> "StreamLayout":
        """Global common, per-group common, and private streams.

        Without an explicit ``group_of``, users are split into contiguous
        equal-size groups (requires n_users divisible by n_groups).
        """
        if group_of is None:
            if n_users % n_groups != 0:
                raise ValueError(
                    f"cannot split {n_users} users into {n_groups} equal groups; "
                    "pass group_of explicitly")
            per = n_users // n_groups
            group_of = tuple(k // per for k in range(n_users))
        return cls(n_tx=n_tx, n_users=n_users, n_groups=n_groups,
                   group_of=tuple(int(g) for g in group_of), mode="hierarchical")

    # -- column map ---------------------------------------------------

    @property
    def n_streams(self) -> int:
        """Total allocated precoder columns, active or not."""
        return 1 + self.n_groups + self.n_users

    @property
    def col_common(self) -> int:
        return 0

    def col_group(self, g: int) -> int:
        if not 0 <= g < self.n_groups:
            raise IndexError(f"group {g} out of range")
        return 1 + g

    def col_private(self, k: int) -> int:
        if not 0 <= k < self.n_users:
            raise IndexError(f"user {k} out of range")
        return 1 + self.n_groups + k

    @property
    def active_streams(self) -> tuple:
        """Columns that carry power and enter rates and gradients.

        One-layer mode drops the group block; hierarchical keeps all.
        """
        cols = [self.col_common]
        if self.mode == "hierarchical":
            cols.extend(self.col_group(g) for g in range(self.n_groups))
        cols.extend(self.col_private(k) for k in range(self.n_users))
        return tuple(cols)

    def group_members(self, g: int) -> tuple:
        """Users belonging to group g, ascending."""
        if not 0 <= g < self.n_groups:
            raise IndexError(f"group {g} out of range")
        return tuple(k for k, gk in enumerate(self.group_of) if gk == g)

    def member_mask(self) -> np.ndarray:
        """Boolean (G, K) matrix, entry (g, k) true when user k is in group g."""
        mask = np.zeros((self.n_groups, self.n_users), dtype=bool)
        for k, g in enumerate(self.group_of):
            mask[g, k] = True
        return mask
