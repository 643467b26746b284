"""Exception types shared across the pipeline."""


class PlateLensError(Exception):
    """Base class for every error raised by this package."""


class InvalidGeometryError(PlateLensError):
    """Polygon or mask input that cannot describe a region."""


class AmbiguousInputError(PlateLensError):
    """Input admits more than one interpretation (e.g. multi-component mask)."""


class InvalidComparisonError(PlateLensError):
    """Two regions of different kinds were compared."""


class InvalidInputError(PlateLensError):
    """Structurally valid data that violates an operation precondition."""


class IngestError(PlateLensError):
    """Source document could not be turned into page images."""


class EmptyDocumentError(IngestError):
    """Document or directory contained no usable pages."""


class SchemaError(PlateLensError):
    """JSON document violating an interchange schema.

    ``pointer`` is a JSON pointer to the offending node.
    """

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(f"{message} (at {pointer or '/'})")
        self.pointer = pointer


class LabelParseError(PlateLensError):
    """Bad line in a text label or embedding file; carries file and line."""

    def __init__(self, message: str, path: str = "", line: int = 0):
        super().__init__(f"{path}:{line}: {message}" if path else message)
        self.path = path
        self.line = line


class DetectionError(PlateLensError):
    """Backend failure while detecting; carries the page number."""

    def __init__(self, message: str, page_no: int = 0):
        super().__init__(message)
        self.page_no = page_no


class BackendUnavailableError(PlateLensError):
    """Model backend cannot be constructed (missing runtime, bad file)."""


class ExtractionError(PlateLensError):
    """Card extraction failed (missing page file, unreadable image)."""


class NotFoundError(PlateLensError):
    """Referenced id (project, card, detection, embedding) does not exist."""


class ConflictError(PlateLensError):
    """Stale version token or overlapping exclusive job."""


class PackError(PlateLensError):
    """Item cannot be placed on any page; carries the card id."""

    def __init__(self, message: str, card_id: str = ""):
        super().__init__(message)
        self.card_id = card_id


class RenderError(PlateLensError):
    """PDF report rendering failed."""


class EmptyDatasetError(PlateLensError):
    """Export requested but no accepted detections exist."""
