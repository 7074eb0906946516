"""Exception types raised across the library."""


class CamclustError(Exception):
    """Base class for every error raised by this package."""


class ZeroVector(CamclustError):
    """A vector with (near-)zero norm was found where a direction is required."""


class DimensionMismatch(CamclustError):
    """Two operands do not agree in dimension."""


class BadK(CamclustError):
    """Invalid neighbourhood sizes for the k-reciprocal encoding."""


class TooFewSamples(CamclustError):
    """More clusters requested than samples available."""


class EmptyCluster(CamclustError):
    """A cluster has no members where at least one is required."""

    def __init__(self, clusters):
        self.clusters = list(clusters) if hasattr(clusters, "__iter__") else [clusters]
        super().__init__(f"empty cluster(s): {self.clusters}")


class BadLabel(CamclustError):
    """A pseudo-label is outside the valid range."""


class EmptyIntersection(CamclustError):
    """No batch member carries the requested (label, camera) pair."""


class NoMembers(CamclustError):
    """No batch member carries the requested label."""


class NonFinite(CamclustError):
    """A gradient or parameter entry is NaN or infinite."""


class TooFewClusters(CamclustError):
    """Fewer surviving clusters than the sampler needs."""


class Malformed(CamclustError):
    """A dataset file line failed to parse."""

    def __init__(self, line, reason):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class LengthMismatch(CamclustError):
    """Two label vectors differ in length."""


class NoValidQuery(CamclustError):
    """No query has at least one valid gallery match."""


class BadModelFile(CamclustError):
    """An embedder weight file is truncated or has a wrong magic header."""
