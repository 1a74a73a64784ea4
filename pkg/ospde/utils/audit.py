"""
Audit trail for verification checks.
Every numerical check of a run is recorded once and lands in the manifest.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional

logger = logging.getLogger(__name__)


def to_plain(value: Any) -> Any:
    """Convert numpy scalars and non-finite floats into JSON-safe values."""
    if hasattr(value, 'item') and not isinstance(value, (list, dict)):
        try:
            value = value.item()
        except (TypeError, ValueError):
            pass
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    return value


@dataclass
class CheckRecord:
    """Outcome of one verification check."""

    name: str
    statistic: float
    tolerance: float
    passed: bool
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        """Convert check record to dictionary."""
        return {
            'name': self.name,
            'statistic': to_plain(float(self.statistic)),
            'tolerance': to_plain(float(self.tolerance)),
            'pass': bool(self.passed),
            'details': to_plain(self.details),
        }

    def __repr__(self):
        status = 'pass' if self.passed else 'FAIL'
        return f'<CheckRecord {self.name} {status}>'


def log_check(name: str, statistic: float, tolerance: float, passed: bool,
              details: Optional[Dict[str, Any]] = None) -> CheckRecord:
    """
    Record a check and log it by outcome.

    Args:
        name: Check name
        statistic: Observed statistic
        tolerance: Threshold the statistic was compared with
        passed: Outcome
        details: Additional information

    Returns:
        The created CheckRecord
    """
    record = CheckRecord(name=name, statistic=statistic, tolerance=tolerance,
                         passed=bool(passed), details=details or {})

    if record.passed:
        logger.info(f'Check {name} passed: statistic={statistic:.6g} tolerance={tolerance:.6g}')
    else:
        logger.error(f'Check {name} failed: statistic={statistic:.6g} tolerance={tolerance:.6g}')

    return record


def failed_checks(records: Iterable[CheckRecord]) -> List[CheckRecord]:
    """Return the records that did not pass, in order."""
    return [record for record in records if not record.passed]
