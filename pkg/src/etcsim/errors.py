"""Exception hierarchy shared across the package.

The CLI maps these onto its exit-code contract: configuration/schema
problems exit 2, admissibility failures 3, objective violations 4 and
guarantee breaches 5.
"""


class EtcsimError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(EtcsimError):
    """A scenario file does not match the documented schema."""


class ConfigurationError(EtcsimError):
    """A structurally valid configuration violates a model assumption."""


class DimensionError(ConfigurationError, ValueError):
    """Matrix or vector dimensions are inconsistent."""


class NotHurwitzError(ConfigurationError):
    """The closed-loop matrix has an eigenvalue with nonnegative real part."""


class DecayMarginError(ConfigurationError):
    """The guarded decay margin is nonpositive; the target rate is infeasible."""


class DomainError(EtcsimError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NumericalError(EtcsimError):
    """A computed result failed its residual or conditioning check."""


class HorizonError(EtcsimError):
    """A channel query lies outside the scheduled horizon."""


class InfeasibleTransmissionError(EtcsimError):
    """A transmission was requested at a time the channel cannot carry it."""


class ScaleGuardError(EtcsimError):
    """An exhaustive oracle was invoked beyond its intended instance size."""


class InvariantBreachError(EtcsimError):
    """An internal state invariant was violated (fail loudly, never clamp)."""


class CausalityError(EtcsimError):
    """An update was requested before the packet it depends on was sent."""


class FeasibilityError(EtcsimError):
    """A transmission record violates one of the channel feasibility rules."""


class AdmissibilityError(EtcsimError):
    """A scenario failed its pre-run admissibility checks."""

    def __init__(self, report):
        self.report = report
        super().__init__(str(report))


class ObjectiveViolationError(EtcsimError):
    """The performance ratio exceeded 1 at a trace sample."""


class GuaranteeBreachError(EtcsimError):
    """A theorem-backed guarantee failed at run time (diagnostic state attached)."""

    def __init__(self, message, state=None):
        self.state = state or {}
        super().__init__(message)
