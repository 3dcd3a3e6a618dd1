"""Where rule metadata lives in DNS and how it is written.

A rule ``(deveui, rule_id)`` is published at
``<rule_id>.<deveui>._schc.<zone>`` as a TXT record::

    v=schc1;h=<sha-256 hex>[;u=<rule URL>]
"""

from dataclasses import dataclass
from urllib.parse import urlsplit

from ..errors import BadDigestLength, LabelTooLong, MalformedRecord, MissingDigest, MissingVersion
from .wire import split_name

VERSION_TAG = "schc1"
DEFAULT_TTL = 60
DIGEST_HEX_LEN = 64
_HEX = set("0123456789abcdef")


def normalize_deveui(deveui):
    """Lowercase 16-hex-digit DevEUI from str or 8 raw bytes."""
    if isinstance(deveui, (bytes, bytearray)):
        if len(deveui) != 8:
            raise ValueError(f"DevEUI must be 8 bytes, got {len(deveui)}")
        return deveui.hex()
    text = deveui.lower()
    if len(text) != 16 or not set(text) <= _HEX:
        raise ValueError(f"DevEUI must be 16 hex digits, got {deveui!r}")
    return text


def owner_name(deveui, rule_id, zone):
    if not zone or not zone.strip("."):
        raise LabelTooLong(f"invalid zone {zone!r}")
    if rule_id < 0:
        raise ValueError("rule id must be non-negative")
    zone = zone.lower()
    if not zone.endswith("."):
        zone += "."
    name = f"{rule_id}.{normalize_deveui(deveui)}._schc.{zone}"
    split_name(name)
    return name


def _check_url(url):
    parts = urlsplit(url)
    if parts.scheme not in ("http", "https") or not parts.netloc:
        raise MalformedRecord(f"rule URL must be absolute http(s), got {url!r}")
    if ";" in url or any(c.isspace() for c in url):
        raise MalformedRecord(f"rule URL may not contain ';' or whitespace: {url!r}")


@dataclass(frozen=True)
class ContextRecord:
    digest: str
    url: str = None
    ttl: int = DEFAULT_TTL

    def __post_init__(self):
        if len(self.digest) != DIGEST_HEX_LEN:
            raise BadDigestLength(f"digest has {len(self.digest)} hex chars, need 64")
        if not set(self.digest) <= _HEX:
            raise MalformedRecord("digest must be lowercase hex")
        if self.url is not None:
            _check_url(self.url)
        if self.ttl < 0:
            raise MalformedRecord("negative TTL")


def encode_txt(rec):
    text = f"v={VERSION_TAG};h={rec.digest}"
    if rec.url is not None:
        text += f";u={rec.url}"
    return text


def decode_txt(s, ttl=DEFAULT_TTL):
    """Parse the TXT payload. *s* may be one string or the list of
    character-strings of one record; unknown keys are ignored."""
    if not isinstance(s, str):
        s = "".join(s)
    pairs = {}
    for item in s.split(";"):
        key, sep, value = item.strip().partition("=")
        if not sep:
            if item.strip():
                raise MalformedRecord(f"item without '=': {item!r}")
            continue
        pairs.setdefault(key, value)
    if "v" not in pairs:
        raise MissingVersion(f"no v= in {s!r}")
    if pairs["v"] != VERSION_TAG:
        raise MalformedRecord(f"unsupported record version {pairs['v']!r}")
    if "h" not in pairs or not pairs["h"]:
        raise MissingDigest(f"no h= in {s!r}")
    return ContextRecord(pairs["h"].lower(), pairs.get("u") or None, ttl)
