"""Point-visit budget shared by all enumerations."""

from __future__ import annotations

import os
from contextlib import contextmanager

from .errors import BudgetError

DEFAULT_BUDGET = 1 << 33

_forced = False


def current_budget() -> int:
    env = os.environ.get("TRIQUAD_BUDGET")
    if env:
        return int(float(env))
    return DEFAULT_BUDGET


def check(estimate: int, what: str) -> None:
    if _forced:
        return
    b = current_budget()
    if estimate > b:
        raise BudgetError(f"{what} needs about {estimate:.3g} point visits, budget is {b:.3g}",
                          estimate=int(estimate), budget=b)


@contextmanager
def forced(flag: bool = True):
    global _forced
    old = _forced
    _forced = flag or old
    try:
        yield
    finally:
        _forced = old
