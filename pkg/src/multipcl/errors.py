"""Exception hierarchy shared across corpus, ingest, fusion and harness."""


class MultiPCLError(Exception):
    """Base class for all errors raised by multipcl."""


class DomainError(MultiPCLError, ValueError):
    """Raised when an input lies outside an operation's domain."""


class ConfigurationError(MultiPCLError):
    """Raised when a configuration is inconsistent with the data it is applied to."""


class ContractError(MultiPCLError):
    """Raised when a component violates its declared shape or value contract."""


class ManifestParseError(MultiPCLError):
    """Raised when a manifest line cannot be parsed.

    Attributes:
        line: 1-based line number of the offending record.
    """

    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class ManifestValidationError(MultiPCLError):
    """Raised when a manifest entry violates an invariant.

    Attributes:
        entry_id: Identifier of the offending entry.
    """

    def __init__(self, entry_id: str, message: str) -> None:
        super().__init__(f"entry {entry_id!r}: {message}")
        self.entry_id = entry_id


class StratificationError(MultiPCLError):
    """Raised when a corpus cannot be split into the requested stratified folds."""


class AnnotationError(MultiPCLError):
    """Raised when an annotation table is malformed."""


class DegenerateAgreementError(MultiPCLError):
    """Raised when chance agreement is 1 and kappa carries no signal."""


class IngestError(MultiPCLError):
    """Raised when a corpus entry cannot be turned into features.

    Attributes:
        entry_id: Identifier of the entry being ingested.
    """

    def __init__(self, entry_id: str, message: str) -> None:
        super().__init__(f"entry {entry_id!r}: {message}")
        self.entry_id = entry_id


class CacheError(MultiPCLError):
    """Raised when a feature cache or checkpoint file is corrupt.

    Attributes:
        section: Name of the section that failed to decode.
    """

    def __init__(self, section: str, message: str) -> None:
        super().__init__(f"{section}: {message}")
        self.section = section


class CheckpointError(MultiPCLError):
    """Raised when a checkpoint does not match the expected model configuration."""


class TrainingError(MultiPCLError):
    """Raised when training produces non-finite values.

    Attributes:
        parameter: Parameter name, when a gradient is at fault.
        epoch: Epoch index, when the loss is at fault.
        batch: Batch index within the epoch, when the loss is at fault.
    """

    def __init__(
        self,
        message: str,
        parameter: str | None = None,
        epoch: int | None = None,
        batch: int | None = None,
    ) -> None:
        super().__init__(message)
        self.parameter = parameter
        self.epoch = epoch
        self.batch = batch


class UsageError(MultiPCLError):
    """Raised when the command line itself is malformed."""
