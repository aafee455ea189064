"""Small argument checkers used at public entry points."""
import math

import numpy as np

from .errors import ContractError, ValidationError


def check_positive(value, name):
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise ValidationError(f"{name} must be a positive finite number, got {value!r}")
    return value


def check_nonnegative(value, name):
    value = float(value)
    if not math.isfinite(value) or value < 0:
        raise ValidationError(f"{name} must be a nonnegative finite number, got {value!r}")
    return value


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or int(value) != value or value < minimum:
        raise ValidationError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_increasing(values, name):
    """Return `values` as a float array, requiring strict increase."""
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise ContractError(f"{name} must not be empty")
    if np.any(np.diff(arr) <= 0):
        raise ContractError(f"{name} must be strictly increasing, got {arr.tolist()}")
    return arr
