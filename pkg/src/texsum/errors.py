"""Exception hierarchy shared by all texsum modules.

The CLI maps these onto exit codes: InputError (and subclasses) exit with
code 2, everything else derived from TexsumError exits with code 1.
"""


class TexsumError(Exception):
    """Base class for all texsum errors."""


class InputError(TexsumError, ValueError):
    """Caller supplied an unusable argument, path, or value."""


class FormatError(InputError):
    """A file exists but its contents do not match the declared format."""


class TrainingError(TexsumError, RuntimeError):
    """Dictionary training cannot satisfy the request (e.g. too few points)."""


class PipelineError(TexsumError, RuntimeError):
    """A pipeline stage failed; message carries the stage name."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"stage '{stage}': {message}")


class NoInformativeFramesError(PipelineError):
    """Every frame fell below the noise-filter threshold."""

    def __init__(self, message: str = "all frames filtered out as uninformative"):
        super().__init__("noise-filter", message)
