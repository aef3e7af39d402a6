"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """A quantity was requested outside the region where its model holds."""


class GridError(ValueError):
    """The sampling grid cannot represent the requested propagation."""


class DegenerateInputError(ValueError):
    """Input carries no usable signal (empty, all zero, flat)."""


class DataFormatError(ValueError):
    """A data file does not follow the expected layout."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)


class NarrowbandWarning(UserWarning):
    pass


class ConfigurationWarning(UserWarning):
    pass
