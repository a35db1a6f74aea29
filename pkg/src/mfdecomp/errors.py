"""Exception types shared by all modules.

ValidationError marks precondition / configuration problems (CLI exit 1);
DataError marks problems discovered while computing on the data (CLI exit 2).
"""


class ValidationError(ValueError):
    pass


class DataError(RuntimeError):
    pass
