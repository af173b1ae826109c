"""Exception hierarchy.  Each family carries the CLI exit code of its stage."""


class Ortho3DError(Exception):
    exit_code = 1
    stage = "pipeline"


class ConfigError(Ortho3DError, ValueError):
    exit_code = 2
    stage = "config"


class InvalidSigma(ConfigError):
    pass


class ImageError(Ortho3DError):
    exit_code = 3
    stage = "image"


class ImageNotFound(ImageError, FileNotFoundError):
    pass


class UnsupportedFormat(ImageError):
    pass


class CorruptImage(ImageError):
    pass


class ImageTooSmall(ImageError, ValueError):
    pass


class DimensionMismatch(Ortho3DError, ValueError):
    pass


class EnvelopeError(Ortho3DError):
    exit_code = 4
    stage = "envelope"


class NoSilhouette(EnvelopeError):
    pass


class SelfIntersectingContour(EnvelopeError):
    pass


class TooFewVertices(EnvelopeError):
    pass


class NoCornersFound(EnvelopeError):
    pass


class CarveError(Ortho3DError):
    exit_code = 5
    stage = "carve"


class TooFewEnvelopes(CarveError):
    pass


class DuplicateAxis(CarveError):
    pass


class InconsistentViews(CarveError):
    pass


class EmptyIntersection(CarveError):
    pass


class EmptyGrid(CarveError):
    pass


class ReconstructionError(Ortho3DError):
    exit_code = 6
    stage = "reconstruction"


class TooFewPoints(ReconstructionError):
    pass


class AllCoplanar(ReconstructionError):
    pass


class DegenerateTetrahedron(ReconstructionError, ValueError):
    pass


class NumericalFailure(ReconstructionError):
    def __init__(self, message: str, insertion_index: int = -1):
        super().__init__(message)
        self.insertion_index = insertion_index


class VertexNotInTriangulation(ReconstructionError, KeyError):
    pass


class EmptyCrust(ReconstructionError):
    pass


class MeshIOError(Ortho3DError, OSError):
    exit_code = 7
    stage = "io"
