"""
Placement Errors
Domain exceptions raised by the placement services
"""

from typing import List, Optional


class PlacementError(Exception):
    """Base class for every error raised by the placement services"""


class InstanceError(PlacementError):
    """Instance file could not be loaded or does not validate"""

    def __init__(self, message: str, violations: Optional[List[str]] = None):
        super().__init__(message)
        self.violations = list(violations or [])

    def __str__(self) -> str:
        text = super().__str__()
        if not self.violations:
            return text
        return text + "\n" + "\n".join(f"  - {v}" for v in self.violations)


class NoPathError(PlacementError):
    """No walk connects the requested endpoints"""


class UndefinedInputError(PlacementError):
    """A metric was requested over an empty input"""


class SearchSpaceTooLargeError(PlacementError):
    """Exhaustive enumeration was requested on a space above the configured bound"""


class ScenarioSpecError(PlacementError):
    """A scenario spec or sweep cannot produce a valid instance"""
