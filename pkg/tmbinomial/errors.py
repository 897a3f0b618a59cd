from __future__ import annotations


class WordError(Exception):
    """Base error. Carries the process exit code the CLI should report."""

    exit_code = 2

    def __init__(self, detail: str, exit_code: int | None = None) -> None:
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


class UsageError(WordError):
    exit_code = 2


class PreconditionError(UsageError):
    pass


class AlphabetError(UsageError):
    pass


class IntervalError(UsageError):
    pass


class NotAFactorError(PreconditionError):
    pass


class BinomialOverflowError(WordError):
    exit_code = 3


class InsufficientPrefixError(WordError):
    exit_code = 4

    def __init__(self, detail: str, n: int | None = None) -> None:
        super().__init__(detail)
        self.n = n


class BudgetExceededError(WordError):
    exit_code = 5


class VerificationFailed(WordError):
    exit_code = 1
