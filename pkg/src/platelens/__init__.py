"""Engine for digitizing scanned pottery plates into reviewed vessel cards."""

__version__ = "0.1.0"
