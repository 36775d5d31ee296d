from decimal import ROUND_HALF_UP, Decimal
from typing import Optional, Union


def round_half_up(value: float, digits: int = 0) -> Union[int, float]:
    """
    Rounds the printed decimal value half away from zero, so 6.5 becomes 7
    rather than the 6 of banker's rounding.
    """
    quantum = Decimal(1).scaleb(-digits)
    rounded = Decimal(repr(float(value))).quantize(quantum, rounding=ROUND_HALF_UP)
    return int(rounded) if digits == 0 else float(rounded)


def format_metric(value: float, drop: Optional[float] = None, digits: int = 1) -> str:
    """
    Formats a score the way result tables print it: "83.4 (6%)", with the
    relative drop rounded to an integer percentage. Without a drop, only the value.
    """
    text = f"{round_half_up(value, digits):.{digits}f}"
    if drop is None:
        return text
    return f"{text} ({round_half_up(drop)}%)"
