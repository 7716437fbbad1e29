import math
from typing import Any

from app.core.config import settings


def format_float(value: Any, digits: int = None) -> str:
    """Format a number with a fixed count of significant digits"""
    if value is None:
        return ""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    digits = digits or settings.FLOAT_DIGITS
    text = f"{value:.{digits}g}"
    # -0 and 0 must print the same
    return "0" if text in ("-0", "0") else text


def generate_slug(text: str) -> str:
    """Generate file-name friendly slug from text"""
    return text.lower().replace(" ", "-").replace("_", "-").replace(".", "p")


def run_label(domain_kind: str, lam: float, delta: float) -> str:
    """File stem for one (domain, lambda, delta) run, e.g. slab-l3-d0p7"""
    return generate_slug(f"{domain_kind}_l{format_float(lam, 6)}_d{format_float(delta, 6)}")
