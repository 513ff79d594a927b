"""Bundled experiment transcriptions shipped with the package."""
from __future__ import annotations

import io
from importlib.resources import files

LHS_INITIAL = "lhs_initial.csv"          # 30-condition initial sampling round
ROUNDS_NO_HITL = "rounds_no_hitl.csv"    # follow-up rounds, acquisition only
ROUNDS_HITL = "rounds_hitl.csv"          # follow-up rounds with feasibility model

ALL = (LHS_INITIAL, ROUNDS_NO_HITL, ROUNDS_HITL)


def open_dataset(name: str) -> io.TextIOBase:
    if name not in ALL:
        raise ValueError(f"unknown dataset {name!r}; available: {list(ALL)}")
    return (files("paretopilot") / "data" / name).open("r")
