"""Velocity/pressure pairings exposed by the command line and studies."""

from __future__ import annotations

from enum import Enum

from .femspace import SpaceKind


class PairId(Enum):
    """The four discretizations covered by the convergence studies."""

    NCP1_P0 = "ncp1-p0"
    NCP1_P1 = "ncp1-p1"
    NCP1_P1_STAB = "ncp1-p1-stab"
    P1_P1_STAB = "p1-p1-stab"

    @property
    def velocity_space(self):
        if self is PairId.P1_P1_STAB:
            return SpaceKind.P1_VECTOR
        return SpaceKind.NCP1_VECTOR

    @property
    def pressure_space(self):
        if self is PairId.NCP1_P0:
            return SpaceKind.P0_SCALAR
        return SpaceKind.P1_SCALAR

    @property
    def stabilized(self):
        return self in (PairId.NCP1_P1_STAB, PairId.P1_P1_STAB)


def parse_pair(name):
    """Resolve a CLI pair name such as ``ncp1-p1`` to a PairId."""
    for pair in PairId:
        if pair.value == name:
            return pair
    known = ", ".join(p.value for p in PairId)
    raise ValueError(f"unknown pair '{name}' (choose from: {known})")
