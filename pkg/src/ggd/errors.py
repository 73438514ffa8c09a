"""Exception types shared across the package.

Each carries an ``exit_code`` so the CLI can map failures without a lookup table.
"""


class GGDError(Exception):
    exit_code = 4


class ParseError(GGDError):
    exit_code = 3


class ArgumentError(GGDError, ValueError):
    pass


class SplitError(GGDError):
    pass


class ShapeError(GGDError, ValueError):
    pass


class TrainError(GGDError):
    def __init__(self, message, epoch=None):
        super().__init__(message if epoch is None else f"{message} (epoch {epoch})")
        self.epoch = epoch


class PairError(GGDError):
    pass


class ConfigError(GGDError):
    pass


class LeakError(GGDError):
    pass
