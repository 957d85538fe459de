"""Exception types shared across the toolkit."""


class AmbiPruneError(Exception):
    """Base class for all toolkit errors."""


class ParseError(AmbiPruneError):
    """A file could not be parsed (malformed JSON, wrong structure)."""


class ValidationError(AmbiPruneError):
    """Parsed data violates a model invariant."""


class ScoringError(AmbiPruneError):
    """Ambiguity scoring is impossible for one or more instances."""


class EvaluationError(AmbiPruneError):
    """Detector evaluation cannot proceed (e.g. no ground truth)."""


class PruningError(AmbiPruneError):
    """Pruning preconditions are not met."""
