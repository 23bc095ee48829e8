"""Number formatting shared by every CSV writer."""

import math


def fmt(value: float) -> str:
    """15 significant digits in scientific notation; NaN spelled ``nan``."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    return f"{value:.14e}"
