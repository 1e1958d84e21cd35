"""
Exception hierarchy for the saliency detector.

Library code raises these; only the CLI turns them into exit codes.
"""

from typing import List, Optional


class SalientError(Exception):
    """Base class for all detector errors"""


class ShapeError(SalientError, ValueError):
    """A tensor or image does not satisfy a shape contract"""


class ConfigError(SalientError, ValueError):
    """Invalid configuration key, value or combination"""


class DatasetError(SalientError):
    """Dataset directories are missing, empty or unreadable"""


class CheckpointError(SalientError):
    """Checkpoint file is missing or unreadable"""


class CheckpointVersionError(CheckpointError):
    """Checkpoint format or architecture does not match the running code"""


class NonFiniteLossError(SalientError):
    """Training produced a NaN or infinite loss"""

    def __init__(self, step: int, batch_ids: List[str], dump_path: Optional[str] = None):
        self.step = step
        self.batch_ids = list(batch_ids)
        self.dump_path = dump_path
        message = f"Non-finite loss at step {step} (batch: {', '.join(self.batch_ids)})"
        if dump_path:
            message += f"; batch dumped to {dump_path}"
        super().__init__(message)
