"""Exception types shared across the package."""


class ChatGnnError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(ChatGnnError, ValueError):
    """Operands have incompatible shapes; the message names both."""

    def __init__(self, op: str, *shapes):
        self.shapes = shapes
        super().__init__(f"{op}: incompatible shapes {' vs '.join(str(s) for s in shapes)}")


class GraphIndexError(ChatGnnError, IndexError):
    """A node or edge index is outside the valid range."""


class DatasetFormatError(ChatGnnError, ValueError):
    """A dataset file is malformed; carries the offending line number."""

    def __init__(self, path: str, line_no: int, message: str):
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class DatasetValidationError(ChatGnnError, ValueError):
    """A dataset parsed fine but violates a semantic constraint; names the field."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"field '{field}': {message}")


class CheckpointFormatError(ChatGnnError, ValueError):
    """A checkpoint file is truncated or structurally invalid."""
