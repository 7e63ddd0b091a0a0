"""Exception types raised by the simulator."""


class InvalidArgument(ValueError):
    pass


class InvalidSchedule(ValueError):
    """Pulse supports overlap or the prep/readout window does not contain them."""


class IntegrationFailure(RuntimeError):
    """The adaptive integrator could not reach the end time.

    ``diagnostics`` carries the step counters and the time reached.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class NumericalInstability(RuntimeError):
    pass
