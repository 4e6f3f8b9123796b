class DataError(Exception):
    """Malformed or inconsistent input data (files, formats, id ranges)."""


class NumericalError(Exception):
    """A non-finite value appeared where a finite one is required."""
