from django.core.exceptions import ImproperlyConfigured


class BusybotError(Exception):
    """Base class for every error raised by the busybot package."""


class ConfigurationError(BusybotError, ImproperlyConfigured):
    """Invalid configuration: shapes, presets, config files, phase boundaries."""


class ContractError(BusybotError, ValueError):
    """An operation was called with arguments outside its contract."""


class NumericError(BusybotError, ArithmeticError):
    """Non-finite values where finite ones are required."""


class StateError(BusybotError, RuntimeError):
    """An operation was called in the wrong state (e.g. backward before forward)."""


class GenerationError(BusybotError):
    """Board generation failed; callers resample the seed."""


class TaskGenerationError(BusybotError):
    """No goal of the requested kind exists for a board."""


class EpisodeError(BusybotError):
    """A planning episode cannot continue (e.g. unreachable goal stage)."""
