"""Exception hierarchy shared by every module of the package."""


class SchcDnsError(Exception):
    """Base class for all errors raised by schcdns."""


# header codec / compression engine

class TruncatedDatagram(SchcDnsError, ValueError):
    pass


class NotIPv6(SchcDnsError, ValueError):
    pass


class InconsistentWidths(SchcDnsError, ValueError):
    pass


class WidthMismatch(SchcDnsError, ValueError):
    pass


class RuleMismatch(SchcDnsError, ValueError):
    """The header does not satisfy the rule's matching operators."""


class RuleIdMismatch(SchcDnsError, ValueError):
    pass


class ResidueUnderflow(SchcDnsError, ValueError):
    pass


class ResidueOverflow(SchcDnsError, ValueError):
    pass


class InvalidDescriptor(SchcDnsError, ValueError):
    pass


class IllegalPairing(InvalidDescriptor):
    """Matching operator and compression action do not go together."""


class DuplicateRuleId(SchcDnsError, ValueError):
    pass


class RuleSyntaxError(SchcDnsError, ValueError):
    """Malformed rule file. Carries 1-based ``line`` and ``column``."""

    def __init__(self, message, line, column=1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


# registry

class InvalidBody(SchcDnsError, ValueError):
    pass


class NotFound(SchcDnsError, LookupError):
    pass


class BindFailure(SchcDnsError, OSError):
    pass


# dns

class LabelTooLong(SchcDnsError, ValueError):
    pass


class MalformedRecord(SchcDnsError, ValueError):
    pass


class MissingVersion(MalformedRecord):
    pass


class MissingDigest(MalformedRecord):
    pass


class BadDigestLength(MalformedRecord):
    pass


class DnsTimeout(SchcDnsError, TimeoutError):
    pass


class NxDomain(SchcDnsError, LookupError):
    pass


class DnsProtocolError(SchcDnsError, ValueError):
    """Unparseable DNS message or unexpected response code."""


# context resolver

class EmptyPayload(SchcDnsError, ValueError):
    pass


class DigestMismatch(SchcDnsError):
    """Fetched rule body does not hash to the digest published in DNS."""


class DnsFailure(SchcDnsError):
    pass


class FetchFailure(SchcDnsError):
    pass


class DecompressError(SchcDnsError):
    pass


# simulator / bench

class ResponseMissedWindow(SchcDnsError):
    pass


class ConfigError(SchcDnsError, ValueError):
    pass


class EmptyInput(SchcDnsError, ValueError):
    pass


class BadP(SchcDnsError, ValueError):
    pass
