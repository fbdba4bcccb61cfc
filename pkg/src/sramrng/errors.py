"""Exception hierarchy shared by the simulator modules."""


class SimulationError(Exception):
    """Base class for every error raised by :mod:`sramrng`."""


class ConstraintError(SimulationError, ValueError):
    """A parameter object violates one of its invariants."""


class RangeError(SimulationError, ValueError):
    """A numeric argument or bit range is out of bounds."""


class ArityError(SimulationError, ValueError):
    """Wrong number of words handed to the hash."""


class ClockError(SimulationError, ValueError):
    """Simulation time was asked to move backwards."""


class TagStateError(SimulationError, RuntimeError):
    """Operation not valid for the tag's current power state."""


class PowerError(TagStateError):
    """Memory access on an unpowered tag."""


class InsufficientInputError(SimulationError, ValueError):
    """Not enough memory to form a single hash chunk."""


class NoFitError(SimulationError, RuntimeError):
    """Samples are degenerate and admit no logistic fit."""


class InfeasibleError(SimulationError, ValueError):
    """The entropy supply per harvest is zero, so demand can never be met."""


class UnknownProtocolError(SimulationError, ValueError):
    pass


class InsufficientEntropy(SimulationError, RuntimeError):
    """The entropy pool cannot cover a draw.

    ``round_index`` is set by :func:`sramrng.protocol.authenticate` to the
    round that ran dry.
    """

    def __init__(self, needed, available, round_index=None):
        self.needed = needed
        self.available = available
        self.round_index = round_index
        msg = f"need {needed} bits, pool holds {available}"
        if round_index is not None:
            msg += f" (round {round_index})"
        super().__init__(msg)
