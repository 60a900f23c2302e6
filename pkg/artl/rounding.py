from __future__ import annotations

from decimal import ROUND_HALF_UP, Decimal


def round_half_up(fraction: float, n: int) -> int:
    """round(fraction * n) with halves going up, evaluated in decimal so 0.03 * 100 is 3."""
    return int((Decimal(repr(float(fraction))) * int(n)).quantize(Decimal(1), rounding=ROUND_HALF_UP))
