"""Operating modes of the reference firmware and its static transition function."""
from __future__ import annotations

import enum
from dataclasses import dataclass


class Mode(enum.Enum):
    PREFLIGHT = "PreFlight"
    TAKEOFF = "Takeoff"
    GUIDED = "Guided"
    POSITION_HOLD = "PositionHold"
    RTL = "ReturnToLaunch"
    LAND = "Land"
    DISARMED = "Disarmed"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "Mode":
        for m in cls:
            if text in (m.value, m.name):
                return m
        raise ValueError(f"unknown mode {text!r}")


ALLOWED_TRANSITIONS: dict[Mode, frozenset[Mode]] = {
    Mode.PREFLIGHT: frozenset({Mode.TAKEOFF}),
    Mode.TAKEOFF: frozenset({Mode.GUIDED, Mode.POSITION_HOLD, Mode.LAND, Mode.RTL}),
    Mode.GUIDED: frozenset({Mode.POSITION_HOLD, Mode.LAND, Mode.RTL}),
    Mode.POSITION_HOLD: frozenset({Mode.GUIDED, Mode.LAND, Mode.RTL}),
    Mode.RTL: frozenset({Mode.LAND}),
    Mode.LAND: frozenset({Mode.DISARMED, Mode.RTL}),
    Mode.DISARMED: frozenset(),
}

FLYING_MODES = frozenset({Mode.TAKEOFF, Mode.GUIDED, Mode.POSITION_HOLD, Mode.RTL, Mode.LAND})
FAILSAFE_MODES = frozenset({Mode.RTL, Mode.LAND})


@dataclass(frozen=True)
class ModeTransition:
    """A mode change; ``timestamp`` is the first step executed in the new mode."""

    from_mode: Mode
    to_mode: Mode
    timestamp: int

    @property
    def edge(self) -> tuple[Mode, Mode]:
        return (self.from_mode, self.to_mode)

    def to_json(self) -> dict:
        return {"from": self.from_mode.value, "to": self.to_mode.value, "step": self.timestamp}


def is_legal(from_mode: Mode, to_mode: Mode) -> bool:
    return to_mode in ALLOWED_TRANSITIONS[from_mode]
