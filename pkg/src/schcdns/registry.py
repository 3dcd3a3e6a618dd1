"""Rule registry: versioned single-rule documents, their SHA-256 digests, and
the HTTP download endpoint ``GET /<deveui>/<rule_id>``.

Every successful put also republishes the rule's DNS record, under the same
lock, so the digest in DNS always names the body the HTTP service returns.
"""

import hashlib
import http.server
import logging
import os
import re
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path

from .dns.records import DEFAULT_TTL, ContextRecord, normalize_deveui, owner_name
from .errors import BindFailure, InvalidBody, NotFound, RuleSyntaxError
from .schc import parse_rule_file

log = logging.getLogger(__name__)

DIGEST_HEADER = "x-schc-rule-digest"


def canonical_digest(body):
    """Lowercase hex SHA-256 of the exact body bytes."""
    return hashlib.sha256(body).hexdigest()


@dataclass(frozen=True)
class RuleDocument:
    deveui: str
    rule_id: int
    body: bytes
    version: int = 0

    @property
    def digest(self):
        return canonical_digest(self.body)


def validate_body(deveui, rule_id, body):
    """Parse *body* and check it is exactly one rule for this tuple."""
    try:
        ctx = parse_rule_file(body)
    except (RuleSyntaxError, ValueError) as exc:
        raise InvalidBody(f"rule body does not parse: {exc}") from None
    if ctx.deveui != normalize_deveui(deveui):
        raise InvalidBody(f"body is for device {ctx.deveui}, not {deveui}")
    if len(ctx.rules) != 1 or ctx.rules[0].rule_id != rule_id:
        raise InvalidBody(f"body must hold exactly rule {rule_id}")
    return ctx.rules[0]


def _atomic_write(path, data):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class RuleStore:
    """Latest version of each rule document, optionally persisted.

    Layout under *data_dir*: ``<deveui>/<rule_id>.rule`` holds the body and
    ``<rule_id>.version`` the version number. With *data_dir* None the store
    lives in memory only.

    If *zone* is given, each put publishes a :class:`ContextRecord` at the
    rule's owner name in *dns_zone*; the record carries
    ``<base_url>/<deveui>/<rule_id>`` when *base_url* is set.
    """

    def __init__(self, data_dir=None, zone=None, dns_zone="schc.example.", base_url=None,
                 ttl=DEFAULT_TTL, on_change=None):
        self.data_dir = Path(data_dir) if data_dir is not None else None
        self.zone = zone
        self.dns_zone = dns_zone
        self.base_url = base_url.rstrip("/") if base_url else None
        self.ttl = ttl
        self.on_change = on_change
        self._docs = {}
        self._lock = threading.Lock()
        if self.data_dir is not None:
            self.data_dir.mkdir(parents=True, exist_ok=True)
            self._load()

    def _paths(self, deveui, rule_id):
        d = self.data_dir / deveui
        return d / f"{rule_id}.rule", d / f"{rule_id}.version"

    def _load(self):
        for body_path in sorted(self.data_dir.glob("*/*.rule")):
            deveui, stem = body_path.parent.name, body_path.stem
            if not stem.isdigit():
                continue
            rule_id = int(stem)
            version_path = body_path.with_suffix(".version")
            version = int(version_path.read_text().split()[0]) if version_path.exists() else 1
            doc = RuleDocument(deveui, rule_id, body_path.read_bytes(), version)
            validate_body(deveui, rule_id, doc.body)
            self._docs[(deveui, rule_id)] = doc
        with self._lock:
            for doc in self._docs.values():
                self._publish(doc)
        if self._docs and self.on_change:
            self.on_change(self)

    def set_base_url(self, base_url):
        """Change the URL advertised in DNS and republish every record."""
        with self._lock:
            self.base_url = base_url.rstrip("/") if base_url else None
            for doc in self._docs.values():
                self._publish(doc)
        if self.on_change:
            self.on_change(self)

    def record_for(self, doc):
        url = f"{self.base_url}/{doc.deveui}/{doc.rule_id}" if self.base_url else None
        return ContextRecord(doc.digest, url, self.ttl)

    def _publish(self, doc):
        if self.zone is not None:
            self.zone.publish(owner_name(doc.deveui, doc.rule_id, self.dns_zone),
                              self.record_for(doc))

    def put_rule(self, doc):
        """Store *doc* (its ``version`` is ignored) and return the new digest.

        Re-putting an identical body keeps the version and digest.
        """
        deveui = normalize_deveui(doc.deveui)
        validate_body(deveui, doc.rule_id, doc.body)
        key = (deveui, doc.rule_id)
        with self._lock:
            current = self._docs.get(key)
            if current is not None and current.body == doc.body:
                return current.digest
            version = current.version + 1 if current is not None else 1
            stored = RuleDocument(deveui, doc.rule_id, bytes(doc.body), version)
            if self.data_dir is not None:
                body_path, version_path = self._paths(deveui, doc.rule_id)
                body_path.parent.mkdir(parents=True, exist_ok=True)
                _atomic_write(body_path, stored.body)
                _atomic_write(version_path, f"{version} {stored.digest}\n".encode())
            self._docs[key] = stored
            self._publish(stored)
        log.info("stored %s/%d version %d digest %s", deveui, doc.rule_id, version,
                 stored.digest[:12])
        if self.on_change:
            self.on_change(self)
        return stored.digest

    def get_rule(self, deveui, rule_id):
        doc = self._docs.get((normalize_deveui(deveui), rule_id))
        if doc is None:
            raise NotFound(f"no rule {rule_id} for device {deveui}")
        return doc

    def documents(self):
        return list(self._docs.values())

    def records(self):
        """Owner name -> ContextRecord for every stored document."""
        return {owner_name(d.deveui, d.rule_id, self.dns_zone): self.record_for(d)
                for d in self._docs.values()}

    def __len__(self):
        return len(self._docs)


_PATH = re.compile(r"^/([0-9a-fA-F]{16})/(0|[1-9][0-9]{0,9})$")


class _Handler(http.server.BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "schcdns-registry"

    def log_message(self, fmt, *args):
        log.debug("%s - " + fmt, self.client_address[0], *args)

    def _reply(self, status, body, digest=None):
        self.send_response(status)
        self.send_header("Content-Type", "text/plain")
        self.send_header("Content-Length", str(len(body)))
        if digest is not None:
            self.send_header(DIGEST_HEADER, digest)
        self.end_headers()
        if self.command != "HEAD":
            self.wfile.write(body)

    def do_GET(self):
        owner = self.server.owner
        owner._count()
        m = _PATH.match(self.path.split("?", 1)[0])
        if not m:
            self._reply(400, b"expected /<deveui-hex16>/<rule-id>\n")
            return
        try:
            doc = owner.store.get_rule(m.group(1), int(m.group(2)))
        except NotFound:
            self._reply(404, b"no such rule\n")
            return
        self._reply(200, doc.body, doc.digest)

    do_HEAD = do_GET


class _HTTPServer(http.server.ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True


class RegistryServer:
    """HTTP front end for a :class:`RuleStore`."""

    def __init__(self, store, host="127.0.0.1", port=0):
        self.store = store
        self.requests = 0
        self._lock = threading.Lock()
        try:
            self._server = _HTTPServer((host, port), _Handler)
        except OSError as exc:
            raise BindFailure(f"cannot bind registry to {host}:{port}: {exc}") from exc
        self._server.owner = self
        self._thread = None

    def _count(self):
        with self._lock:
            self.requests += 1

    @property
    def address(self):
        return self._server.server_address[:2]

    @property
    def base_url(self):
        host, port = self.address
        return f"http://{host}:{port}"

    def start(self):
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        kwargs={"poll_interval": 0.05}, daemon=True)
        self._thread.start()
        return self

    def serve_forever(self):
        self._server.serve_forever()

    def stop(self):
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def serve_http(store, bind=("127.0.0.1", 0)):
    """Start the registry endpoint in a background thread and return it."""
    return RegistryServer(store, bind[0], bind[1]).start()
