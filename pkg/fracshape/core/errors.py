# fracshape/core/errors.py
"""Exception hierarchy shared by every fracshape module."""


class FracShapeError(Exception):
    kind = "error"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def to_dict(self) -> dict:
        return {"kind": self.kind, "type": type(self).__name__, "message": self.message}


class ParameterError(FracShapeError):
    kind = "parameter"

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field

    def to_dict(self) -> dict:
        return {**super().to_dict(), "field": self.field}


class StructuralError(FracShapeError):
    kind = "structural"


class NoOverlapError(StructuralError):
    pass


class NumericError(FracShapeError):
    kind = "numeric"

    def __init__(self, message: str, achieved: float | None = None):
        if achieved is not None:
            message = f"{message} (achieved {achieved:.3e})"
        super().__init__(message)
        self.achieved = achieved

    def to_dict(self) -> dict:
        return {**super().to_dict(), "achieved": self.achieved}


class DomainEmptyError(FracShapeError):
    kind = "domain-empty"


class PreconditionError(FracShapeError):
    kind = "precondition"


class InvariantViolation(FracShapeError):
    kind = "invariant"

    def __init__(self, invariant: str, message: str):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant

    def to_dict(self) -> dict:
        return {**super().to_dict(), "invariant": self.invariant}
