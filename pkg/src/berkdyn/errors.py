"""Exception types carrying machine-readable codes."""


class BerkdynError(Exception):
    code = "error"
    exit_code = 2

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details

    def to_json(self) -> dict:
        out = {"error": self.code, "message": str(self)}
        if self.details:
            out["details"] = {k: str(v) for k, v in self.details.items()}
        return out


class InputError(BerkdynError):
    code = "invalid_input"
    exit_code = 1


class BudgetExceeded(BerkdynError):
    """An iteration or depth cap was hit before a computation settled."""

    code = "budget_exceeded"
    exit_code = 3


class VerificationFailure(BerkdynError):
    code = "verification_failed"
    exit_code = 2


class InconsistentGrid(InputError):
    code = "inconsistent_grid"
