"""Rule metadata in DNS: naming, TXT grammar, wire-format resolver, responder."""

from .client import query_txt, record_from_answer, resolve
from .records import (
    DEFAULT_TTL,
    ContextRecord,
    decode_txt,
    encode_txt,
    normalize_deveui,
    owner_name,
)
from .server import (
    AuthoritativeServer,
    ZoneTable,
    format_zone_file,
    load_zone_file,
    parse_zone_file,
    serve_authoritative,
    write_zone_file,
)

__all__ = [
    "AuthoritativeServer", "ContextRecord", "DEFAULT_TTL", "ZoneTable", "decode_txt",
    "encode_txt", "format_zone_file", "load_zone_file", "normalize_deveui", "owner_name",
    "parse_zone_file", "query_txt", "record_from_answer", "resolve", "serve_authoritative",
    "write_zone_file",
]
