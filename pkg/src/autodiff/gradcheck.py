"""
Finite-difference gradient checking
Central differences as the oracle for the hand-written backward passes
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional

import numpy as np

from config.settings import settings
from src.autodiff.engine import DifferentiableGraph, evaluate_loss, forward_backward
from src.errors import NonFiniteError

logger = logging.getLogger(__name__)

LossFn = Callable[[Dict[str, np.ndarray]], float]


@dataclass
class GradientReport:
    """Per-tensor maximum relative error between analytic and numeric gradients"""
    max_errors: Dict[str, float]
    step: float
    tolerance: float
    passed: bool
    checked_entries: Dict[str, int] = field(default_factory=dict)
    message: str = ''

    @property
    def worst(self) -> float:
        return max(self.max_errors.values()) if self.max_errors else float('nan')


def relative_error(analytic: np.ndarray, numeric: np.ndarray,
                   floor: Optional[float] = None) -> np.ndarray:
    floor = settings.RELATIVE_ERROR_FLOOR if floor is None else floor
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / denom


def sample_entries(params: Dict[str, np.ndarray], seed: int = 0,
                   full_limit: Optional[int] = None,
                   sample_size: Optional[int] = None) -> Dict[str, np.ndarray]:
    """
    Flat indices to check per tensor

    Small tensors are checked entry by entry; larger ones get a seeded sample
    without replacement, sorted ascending.
    """
    full_limit = settings.GRADCHECK_FULL_LIMIT if full_limit is None else full_limit
    sample_size = settings.GRADCHECK_SAMPLE_SIZE if sample_size is None else sample_size
    rng = np.random.default_rng(seed)

    entries = {}
    for name, value in params.items():
        if value.size <= full_limit:
            entries[name] = np.arange(value.size)
        else:
            entries[name] = np.sort(rng.choice(value.size, size=min(sample_size, value.size),
                                               replace=False))
    return entries


def finite_difference_gradient(loss_fn: LossFn, params: Dict[str, np.ndarray], h: float,
                               entries: Optional[Dict[str, np.ndarray]] = None
                               ) -> Dict[str, np.ndarray]:
    """
    Central-difference gradient (f(p + h e) - f(p - h e)) / 2h

    Args:
        loss_fn: maps a dict of named arrays to a scalar
        params: point at which to differentiate (never modified)
        h: step size, must be positive
        entries: optional flat indices per tensor; entries not listed come back as NaN

    Returns:
        Dict of arrays shaped like `params`
    """
    if not h > 0:
        raise ValueError(f"Step size must be positive, got {h}")

    work = {name: np.array(value, dtype=np.float64, copy=True) for name, value in params.items()}
    result = {}
    for name, value in work.items():
        flat = value.reshape(-1)
        grad = np.full(value.size, np.nan)
        indices = range(value.size) if entries is None else entries[name]
        for i in indices:
            original = flat[i]
            flat[i] = original + h
            plus = loss_fn(work)
            flat[i] = original - h
            minus = loss_fn(work)
            flat[i] = original
            grad[i] = (plus - minus) / (2.0 * h)
        result[name] = grad.reshape(value.shape)
    return result


def gradient_check(model: DifferentiableGraph, example: Any, h: Optional[float] = None,
                   tol: Optional[float] = None, seed: int = 0) -> GradientReport:
    """
    Compare backprop gradients with central differences for every parameter tensor

    Non-finite values anywhere produce a failing report instead of an exception.
    """
    h = settings.GRADCHECK_STEP if h is None else h
    tol = settings.GRADCHECK_TOLERANCE if tol is None else tol
    params = model.parameters()

    def failure(message: str) -> GradientReport:
        logger.warning(f"Gradient check failed: {message}")
        return GradientReport({name: float('inf') for name in params}, h, tol, False,
                              message=message)

    try:
        _, analytic = forward_backward(model, params, example)
    except NonFiniteError as e:
        return failure(str(e))

    bad = [name for name, grad in analytic.items() if not np.all(np.isfinite(grad))]
    if bad:
        return failure(f"non-finite analytic gradients for {bad}")

    entries = sample_entries(params, seed=seed)
    try:
        numeric = finite_difference_gradient(
            lambda p: evaluate_loss(model, p, example), params, h, entries
        )
    except NonFiniteError as e:
        return failure(f"finite differences hit {e}")

    max_errors = {}
    checked = {}
    for name in params:
        idx = entries[name]
        errors = relative_error(analytic[name].reshape(-1)[idx], numeric[name].reshape(-1)[idx])
        max_errors[name] = float(np.max(errors)) if errors.size else 0.0
        checked[name] = int(idx.size)
        logger.debug(f"{name}: {checked[name]} entries, max relative error {max_errors[name]:.3e}")

    passed = all(np.isfinite(e) and e < tol for e in max_errors.values())
    report = GradientReport(max_errors, h, tol, passed, checked)
    logger.info(f"Gradient check {'passed' if passed else 'FAILED'}: "
                f"worst relative error {report.worst:.3e} (tol {tol:g}, h {h:g})")
    return report
