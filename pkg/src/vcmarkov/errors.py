"""Exception hierarchy shared by all vcmarkov modules.

Two families matter to callers: DataError for problems with input files or
corpus structure, and DomainError for numeric preconditions that fail on
otherwise well-formed data (poles, zero-count contexts, constant vectors).
The command line front end maps the families to distinct exit codes.
"""

from __future__ import annotations


class DataError(Exception):
    """Input data is malformed or inconsistent with its declared layout."""


class ParseError(DataError):
    """Corpus text violates the layout contract.

    Carries the byte offset of the offending line so the message points at
    a location in the original file rather than at internal state.
    """

    def __init__(self, message: str, byte_offset: int):
        self.byte_offset = byte_offset
        super().__init__(f"{message} (byte offset {byte_offset})")


class UnknownCharacterError(DataError):
    """A letter outside the encoding scheme was met under the strict policy."""

    def __init__(self, char: str, part: int, stanza: int, line: int, offset: int):
        self.char = char
        self.location = (part, stanza, line, offset)
        super().__init__(
            "character %r is not classified by the scheme "
            "(part %d, stanza %d, line %d, offset %d)"
            % (char, part, stanza, line, offset)
        )


class DomainError(Exception):
    """A numeric precondition failed: pole, empty support, degenerate input."""


class ZeroContextError(DomainError):
    """A conditional probability has no observations for its context."""

    def __init__(self, context: str):
        self.context = context
        super().__init__(
            f"no occurrences of context {context!r}; "
            "the conditional probability is undefined for this sequence"
        )
