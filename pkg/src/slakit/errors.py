"""Exception types shared across the toolkit.

The class names follow the error vocabulary of the file-format and
operation contracts, so callers can catch conditions by the name the
documentation uses (``except slakit.errors.MissingEnd``).
"""

from __future__ import annotations


class SlakitError(Exception):
    """Base class for every error raised by this package."""


class ChatError(SlakitError):
    """A CHAT document violated the line grammar or a structural invariant."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


# -- CHAT parsing / rendering -------------------------------------------------

class MissingBegin(ChatError):
    pass


class MissingEnd(ChatError):
    pass


class UnknownParticipant(ChatError):
    pass


class MalformedLine(ChatError):
    pass


class DuplicateTier(ChatError):
    pass


class UnterminatedMarker(ChatError):
    pass


class UnbalancedScopes(ChatError):
    pass


class InvalidDoc(ChatError):
    """Rendering was asked for a document that fails strict validation."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        head = self.diagnostics[0].message if self.diagnostics else "invalid document"
        super().__init__(f"{head} ({len(self.diagnostics)} finding(s))")


# -- group algebra -------------------------------------------------------------

class DifferentUtterance(SlakitError):
    """Two ranges from different utterances were compared."""


# -- SLA store -----------------------------------------------------------------

class AmbiguityUnresolved(SlakitError):
    """An utterance has several interpretations and no pick was supplied."""

    def __init__(self, utterance_id: str, count: int):
        self.utterance_id = utterance_id
        self.count = count
        super().__init__(
            f"utterance {utterance_id} has {count} interpretations and no pick"
        )


class NotInlineRepresentable(SlakitError):
    """Overlapping or duplicate group ranges cannot be written inline."""

    def __init__(self, utterance_id: str, pairs):
        self.utterance_id = utterance_id
        self.pairs = list(pairs)
        pair_text = ", ".join(f"{a.id}/{b.id}" for a, b in self.pairs)
        super().__init__(f"utterance {utterance_id}: conflicting groups {pair_text}")


class DanglingReference(SlakitError):
    pass


class MalformedXml(SlakitError):
    pass


class SchemaViolation(SlakitError):
    pass


class VersionUnsupported(SlakitError):
    pass


# -- version log ---------------------------------------------------------------

class SeqGap(SlakitError):
    pass


class StaleBefore(SlakitError):
    pass


class PathInvalid(SlakitError):
    pass


class VersionOutOfRange(SlakitError):
    pass


# -- partial pipeline ----------------------------------------------------------

class OverlapInMediaTime(SlakitError):
    pass


class EmptySegment(SlakitError):
    pass


class SegmentNotIndexed(SlakitError):
    pass


class SegmentAlreadyTranscribed(SlakitError):
    pass


class DuplicateUtteranceId(SlakitError):
    pass


class UnknownScheme(SlakitError):
    pass


# -- storage -------------------------------------------------------------------

class LockHeld(SlakitError):
    """Another process holds the transcript's writer lock."""
