"""Exception hierarchy shared by every pipeline stage."""

from __future__ import annotations


class ToleranceIndexError(Exception):
    """Base class for all errors raised by this package."""


# ingest
class SchemaError(ToleranceIndexError, ValueError):
    """Input file header or field encoding does not match the declared schema."""


class MissingSlot(SchemaError):
    def __init__(self, respondent_id: str, day_kind: str, slot_index: int):
        self.respondent_id = respondent_id
        self.day_kind = day_kind
        self.slot_index = slot_index
        super().__init__(
            f"respondent {respondent_id!r} {day_kind} diary is missing slot {slot_index}"
        )


class DuplicateSlot(SchemaError):
    def __init__(self, respondent_id: str, day_kind: str, slot_index: int):
        self.respondent_id = respondent_id
        self.day_kind = day_kind
        self.slot_index = slot_index
        super().__init__(
            f"respondent {respondent_id!r} {day_kind} diary repeats slot {slot_index}"
        )


class UnknownActivity(SchemaError):
    def __init__(self, code: str):
        self.code = code
        super().__init__(f"activity code {code!r} is not in the taxonomy")


class OutOfRangeScore(SchemaError):
    def __init__(self, respondent_id: str, item: str, value: float):
        self.respondent_id = respondent_id
        self.item = item
        self.value = value
        super().__init__(
            f"respondent {respondent_id!r} item {item!r} = {value!r} outside [0, 100]"
        )


class UnknownItem(SchemaError):
    def __init__(self, item: str):
        self.item = item
        super().__init__(f"survey column {item!r} is not a registered item")


class MissingRequiredField(SchemaError):
    def __init__(self, field: str, respondent_id: str | None = None):
        self.field = field
        self.respondent_id = respondent_id
        where = f" for respondent {respondent_id!r}" if respondent_id else ""
        super().__init__(f"required field {field!r} missing{where}")


# derive
class MismatchedRespondent(ToleranceIndexError, ValueError):
    pass


class MissingItem(ToleranceIndexError, ValueError):
    pass


class ConstantVariable(ToleranceIndexError, ValueError):
    pass


# factor
class ConstantColumn(ToleranceIndexError, ValueError):
    pass


class TooFewRows(ToleranceIndexError, ValueError):
    pass


# sem
class NonPositiveDefiniteS(ToleranceIndexError, ValueError):
    pass


class NoConvergence(ToleranceIndexError, RuntimeError):
    pass


class SingularInformation(ToleranceIndexError, RuntimeError):
    pass


# composite
class DegenerateCorrelation(ToleranceIndexError, ValueError):
    pass


class TooFewItems(ToleranceIndexError, ValueError):
    pass


# validate
class RankDeficient(ToleranceIndexError, ValueError):
    pass


class TooFewClusters(ToleranceIndexError, ValueError):
    pass


class Separation(ToleranceIndexError, RuntimeError):
    pass


# synth
class NonPDPsi(ToleranceIndexError, ValueError):
    pass


class InfeasibleTarget(ToleranceIndexError, ValueError):
    pass


# cli / pipeline
class ConfigInvalid(ToleranceIndexError, ValueError):
    pass


class StageFailed(ToleranceIndexError, RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {type(cause).__name__}: {cause}")


class IoFailure(ToleranceIndexError, OSError):
    pass
