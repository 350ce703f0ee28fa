"""Exception types raised by the public API.

Everything derives from :class:`TnsimError` so callers can catch one base
class.  The split into ``InputError`` and ``NumericalError`` mirrors the CLI
exit codes: malformed input exits with 2, a numerical failure inside an
otherwise valid computation exits with 1.
"""


class TnsimError(Exception):
    """Base class for all errors raised by this package."""


class InputError(TnsimError):
    """Invalid arguments, shapes, or file contents supplied by the caller."""


class NumericalError(TnsimError):
    """A computation produced values outside its numerical contract."""


# --- tensors ---------------------------------------------------------------

class ShapeMismatch(InputError):
    """Data length or operand shapes are inconsistent."""


class InvalidExtent(InputError):
    """An axis extent is not a positive integer."""


class AxisMismatch(InputError):
    """Contracted axes disagree in count or extent."""


class AxisOutOfRange(InputError):
    """An axis index does not exist on the operand."""


class DuplicateAxis(InputError):
    """The same axis was listed twice for one operand."""


class ShapeError(InputError):
    """The tensor does not admit the requested axis split."""


class NotFinite(NumericalError):
    """An operation produced NaN or Inf entries."""


# --- networks and paths ----------------------------------------------------

class InvalidNetwork(InputError):
    """Inconsistent labels/extents or an unsatisfiable output spec."""


class PathInvalid(InputError):
    """A contraction path does not match the network it is applied to."""


class TooLarge(InputError):
    """The instance exceeds the documented size guard for this routine."""


# --- circuits ---------------------------------------------------------------

class UnknownGate(InputError):
    """Gate name is not in the standard set."""


class ArityMismatch(InputError):
    """Number of wires does not match the gate."""


class MissingParam(InputError):
    """A parameterised gate was constructed without a parameter."""


class TooManyQubits(InputError):
    """Qubit count exceeds the guard for dense representations."""


class WireOutOfRange(InputError):
    """A gate references a wire outside the circuit register."""


class UnsupportedArity(InputError):
    """The engine only handles one- and two-qubit gates."""


class SizeMismatch(InputError):
    """Operands describe registers of different sizes."""


# --- observables and density operators --------------------------------------

class NonHermitianResidue(NumericalError):
    """An expectation value had an imaginary part above tolerance."""


class EmptyKeepSet(InputError):
    """Partial trace requires at least one retained qubit."""


class QubitOutOfRange(InputError):
    """A qubit index is outside the register."""


class KeepTooLarge(InputError):
    """The retained subsystem exceeds the dense-output guard."""


class NotPSD(NumericalError):
    """A density operator had an eigenvalue below -1e-8."""


class OverlappingSets(InputError):
    """Subsystems passed to mutual information must be disjoint."""


# --- differentiation ---------------------------------------------------------

class ParamCountMismatch(InputError):
    """Parameter vector length does not match the circuit's trainable slots."""


class UnsupportedGateForShift(InputError):
    """No shift rule is registered for this gate."""


class DivergenceDetected(NumericalError):
    """The optimiser encountered a non-finite loss or gradient."""


# --- graphs ------------------------------------------------------------------

class ParseError(InputError):
    """A text input (graph file, JSON document) could not be parsed."""


class SelfLoop(InputError):
    """Graph edge connects a vertex to itself."""


class DuplicateEdge(InputError):
    """The same undirected edge appears twice."""


class InvalidLabel(InputError):
    """A vertex index is negative or out of range."""


class TooManyVertices(InputError):
    """Brute force enumeration is capped; the graph is too big."""


# --- benchmarks ---------------------------------------------------------------

class MemoryEnvelopeExceeded(NumericalError):
    """A benchmark measured a peak allocation above its documented bound."""
