"""Exception types raised across the package."""


class GraphInvError(Exception):
    """Base class for all domain errors."""


# graph model
class GraphError(GraphInvError, ValueError):
    pass


class DuplicateVertex(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class NonPositiveWeight(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class InteriorBoundaryOverlap(GraphError):
    pass


class UnknownVertex(GraphError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class UnknownEdge(GraphError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class DisconnectedGraph(GraphError):
    pass


class NotStronglyConnected(GraphError):
    pass


class IsolatedBoundaryVertex(GraphError):
    pass


class EmptySet(GraphError):
    pass


class TooLargeForExhaustive(GraphError):
    pass


class MissingHeightValue(GraphError):
    pass


class InvalidDimensions(GraphError):
    pass


class MalformedInput(GraphError):
    """A file or description could not be interpreted."""


# spectral / wave
class SpectralError(GraphInvError):
    pass


class EigenSolverFailure(SpectralError):
    pass


class DimensionMismatch(SpectralError, ValueError):
    pass


class IncompatibleInitialValue(SpectralError, ValueError):
    pass


# reconstruction
class ReconstructionError(GraphInvError):
    pass


class ProfileOutOfBounds(ReconstructionError, ValueError):
    pass


class SearchBudgetExceeded(ReconstructionError):
    pass


class NoValidBasis(ReconstructionError):
    pass


class AmbiguousBasis(ReconstructionError):
    pass


class IdenticalMembers(ReconstructionError, ValueError):
    pass


class MissingMu(ReconstructionError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class InconsistentAprioriWeights(ReconstructionError):
    pass


class InconsistentApriori(ReconstructionError):
    pass


class NoZeroMode(ReconstructionError):
    pass


class NonConstantZeroMode(ReconstructionError):
    pass


class ResidualCheckFailed(ReconstructionError):
    pass


class AssumptionViolation(ReconstructionError):
    pass


class UnmatchedVertex(ReconstructionError):
    pass
