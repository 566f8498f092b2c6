"""Parsers for the compact text forms used on the command line and in scenario config."""
from typing import List, Optional, Tuple

from pydantic import ValidationError

from ..core.errors import UsageError
from ..posteriors import UNIFORM_PRIOR, ArmCounts, ArmLabel, BetaParams, near_zero_prior


def parse_counts(text: str, key: str, arm_label: ArmLabel = ArmLabel.ITX) -> ArmCounts:
    try:
        return ArmCounts.parse(text, arm_label)
    except ValueError as e:
        raise UsageError(first_message(e), key=key) from None


def parse_beta(text: str, key: str) -> BetaParams:
    """'a,b' shapes."""
    parts = str(text).split(",")
    if len(parts) != 2:
        raise UsageError(f"expected 'a,b' shapes, got '{text}'", key=key)
    try:
        return BetaParams(a=float(parts[0]), b=float(parts[1]))
    except ValueError:
        raise UsageError(f"shapes must be positive numbers, got '{text}'", key=key) from None


def resolve_prior(spec: Optional[str], near_zero: Optional[float], key: str) -> BetaParams:
    """Explicit 'a,b' prior wins over a near-zero p_a² weight; uniform otherwise."""
    if spec is not None:
        return parse_beta(spec, key)
    if near_zero is not None:
        try:
            return near_zero_prior(near_zero)
        except ValueError as e:
            raise UsageError(str(e), key="near_zero") from None
    return UNIFORM_PRIOR


def parse_range(text: str, key: str) -> List[int]:
    """Inclusive 'start:stop[:step]' integer range, or a comma-separated list."""
    text = str(text).strip()
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) not in (2, 3):
                raise ValueError
            start, stop = parts[0], parts[1]
            step = parts[2] if len(parts) == 3 else 1
            if step <= 0 or stop < start:
                raise ValueError
            return list(range(start, stop + 1, step))
        return [int(p) for p in text.split(",")]
    except ValueError:
        raise UsageError(f"expected 'start:stop[:step]' or a list of integers, got '{text}'", key=key) from None


def parse_allocation(text: str, key: str = "allocation") -> float:
    """'p:q' treat:control, or a positive number."""
    text = str(text).strip()
    try:
        if ":" in text:
            p, q = (float(x) for x in text.split(":"))
            ratio = p / q
        else:
            ratio = float(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"expected 'p:q' or a positive ratio, got '{text}'", key=key) from None
    if not ratio > 0:
        raise UsageError(f"allocation ratio must be positive, got '{text}'", key=key)
    return ratio


def parse_directions(text: Optional[str], key: str = "directions") -> Optional[Tuple[bool, ...]]:
    """'+,-,+' : whether a larger value is a win, per outcome component."""
    if text is None:
        return None
    flags = []
    for token in str(text).split(","):
        token = token.strip()
        if token not in ("+", "-"):
            raise UsageError(f"directions are '+' or '-', got '{token}'", key=key)
        flags.append(token == "+")
    return tuple(flags)


def first_message(exc: Exception) -> str:
    """First validation message of a pydantic error, or the plain message."""
    if isinstance(exc, ValidationError):
        return exc.errors()[0]["msg"]
    return str(exc)
