"""Exception hierarchy shared across the package."""


class TargenError(Exception):
    """Base class for all package-specific errors."""


class DatasetParseError(TargenError):
    """A dataset line could not be decoded. Carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class ValidationError(TargenError):
    """A domain invariant was violated. Carries the offending instance id when known."""

    def __init__(self, message: str, instance_id: str | None = None):
        if instance_id is not None:
            message = f"instance {instance_id}: {message}"
        super().__init__(message)
        self.instance_id = instance_id


class StructuralError(TargenError):
    """Structural precondition failure, e.g. overlapping method spans."""


class ContractError(TargenError):
    """An operation was called outside its contract."""


class TruncationError(TargenError):
    """The test context plus the top-priority hunk exceeds the token budget."""

    def __init__(self, required_tokens: int, budget: int):
        super().__init__(
            f"input needs {required_tokens} tokens but the budget is {budget}"
        )
        self.required_tokens = required_tokens
        self.budget = budget


class EncodingFailure(TargenError):
    """No unique anchor exists for an edit-sequence replacement."""

    def __init__(self, message: str, tokens: list[str] | None = None):
        super().__init__(message)
        self.tokens = tokens or []


class AmbiguityError(TargenError):
    """A replacement's target occurs zero or multiple times at application time."""

    def __init__(self, target: list[str], occurrences: int):
        super().__init__(
            f"target {' '.join(target)!r} occurs {occurrences} times; need exactly 1"
        )
        self.target = target
        self.occurrences = occurrences


class EditSequenceParseError(TargenError):
    """An edit-sequence string does not follow the replacement grammar."""


class TransportError(TargenError):
    """Generation backend unreachable or broke protocol. Carries the retry count."""

    def __init__(self, message: str, retries: int = 0):
        super().__init__(f"{message} (after {retries} retries)")
        self.retries = retries
