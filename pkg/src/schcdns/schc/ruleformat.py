"""Line-based text format for SCHC contexts.

::

    # comments and blank lines are skipped
    context 70b3d54996ed3b21
    rule 3
    field=ipv6.version len=4 pos=1 dir=bi tv=6 mo=equal cda=not-sent
    ...

A ``width=<n>`` token may follow the DevEUI on the ``context`` line to set a
rule-id width other than 8. ``serialize_context`` emits the canonical byte
form (no comments, no blank lines, rules in id order); that exact byte string
is what the registry hashes and serves.
"""

from ..errors import InvalidDescriptor, RuleSyntaxError
from .fields import FieldId
from .rule import CDA, DEFAULT_RULE_ID_WIDTH, MO, Context, Direction, FieldDescriptor, Rule

_KEYS = ("field", "len", "pos", "dir", "tv", "mo", "cda")
_HEX = set("0123456789abcdef")


def _hex_digits(bits):
    return (bits + 3) // 4


def format_value(value, bits):
    return format(value, f"0{_hex_digits(bits)}x")


def _parse_hex(text, bits, line, col):
    if len(text) != _hex_digits(bits) or not set(text) <= _HEX:
        raise RuleSyntaxError(
            f"expected {_hex_digits(bits)} lowercase hex digits, got {text!r}", line, col)
    value = int(text, 16)
    if value >> bits:
        raise RuleSyntaxError(f"value {text} does not fit in {bits} bits", line, col)
    return value


def _parse_int(text, line, col, what):
    if not text.isdigit() or (len(text) > 1 and text[0] == "0"):
        raise RuleSyntaxError(f"bad {what} {text!r}", line, col)
    return int(text)


def _parse_descriptor(tokens, lineno):
    fields = {}
    for tok, col in tokens:
        key, sep, value = tok.partition("=")
        if not sep or key not in _KEYS:
            raise RuleSyntaxError(f"unexpected token {tok!r}", lineno, col)
        if key in fields:
            raise RuleSyntaxError(f"duplicate key {key!r}", lineno, col)
        fields[key] = (value, col + len(key) + 1)
    missing = [k for k in _KEYS if k not in fields]
    if missing:
        raise RuleSyntaxError(f"missing keys: {', '.join(missing)}", lineno, tokens[0][1])

    name, col = fields["field"]
    try:
        fid = FieldId.from_label(name)
    except ValueError as exc:
        raise RuleSyntaxError(str(exc), lineno, col) from None
    length = _parse_int(fields["len"][0], lineno, fields["len"][1], "length")
    pos = _parse_int(fields["pos"][0], lineno, fields["pos"][1], "position")

    text, col = fields["dir"]
    try:
        direction = Direction(text)
    except ValueError:
        raise RuleSyntaxError(f"bad direction {text!r}", lineno, col) from None

    text, col = fields["mo"]
    msb_length = None
    if text.startswith("msb:"):
        mo = MO.MSB
        msb_length = _parse_int(text[4:], lineno, col + 4, "msb length")
    else:
        try:
            mo = MO(text)
        except ValueError:
            raise RuleSyntaxError(f"bad matching operator {text!r}", lineno, col) from None
        if mo is MO.MSB:
            raise RuleSyntaxError("msb needs a length (msb:n)", lineno, col)

    text, col = fields["cda"]
    try:
        cda = CDA(text)
    except ValueError:
        raise RuleSyntaxError(f"bad action {text!r}", lineno, col) from None

    text, col = fields["tv"]
    if text == "-":
        tv = None
    elif text.startswith("list:"):
        items = text[5:].split(",")
        tv = []
        offset = col + 5
        for item in items:
            tv.append(_parse_hex(item, length, lineno, offset))
            offset += len(item) + 1
        tv = tuple(tv)
    else:
        tv = _parse_hex(text, length, lineno, col)

    # IllegalPairing propagates unchanged; other invariant failures get a position
    try:
        return FieldDescriptor(fid, length, pos, direction, tv, mo, cda, msb_length)
    except InvalidDescriptor as exc:
        if type(exc) is InvalidDescriptor:
            raise RuleSyntaxError(str(exc), lineno, tokens[0][1]) from None
        raise


def _tokens(line):
    out = []
    col = 1
    for part in line.split(" "):
        if part:
            out.append((part, col))
        col += len(part) + 1
    return out


def parse_rule_file(text):
    """Parse rule-file bytes into a validated :class:`Context`."""
    if isinstance(text, str):
        text = text.encode("ascii", "strict")
    try:
        decoded = text.decode("ascii")
    except UnicodeDecodeError as exc:
        line = text[:exc.start].count(b"\n") + 1
        raise RuleSyntaxError("non-ASCII byte", line) from None

    deveui = None
    width = DEFAULT_RULE_ID_WIDTH
    rules = []  # (rule_id, lineno, [descriptors])
    for lineno, line in enumerate(decoded.split("\n"), start=1):
        if "\t" in line:
            raise RuleSyntaxError("tab character", lineno, line.index("\t") + 1)
        if "\r" in line:
            raise RuleSyntaxError("CR character (LF line endings only)", lineno, line.index("\r") + 1)
        stripped = line.strip(" ")
        if not stripped or stripped.startswith("#"):
            continue
        tokens = _tokens(line)
        head, col = tokens[0]
        if head == "context":
            if deveui is not None:
                raise RuleSyntaxError("second context line", lineno, col)
            if len(tokens) not in (2, 3):
                raise RuleSyntaxError("expected: context <deveui-hex16> [width=<n>]", lineno, col)
            eui, ecol = tokens[1]
            if len(eui) != 16 or not set(eui) <= _HEX:
                raise RuleSyntaxError(f"DevEUI must be 16 lowercase hex digits, got {eui!r}",
                                      lineno, ecol)
            deveui = eui
            if len(tokens) == 3:
                tok, wcol = tokens[2]
                if not tok.startswith("width="):
                    raise RuleSyntaxError(f"unexpected token {tok!r}", lineno, wcol)
                width = _parse_int(tok[6:], lineno, wcol + 6, "width")
                if width < 1:
                    raise RuleSyntaxError("width must be positive", lineno, wcol + 6)
        elif deveui is None:
            raise RuleSyntaxError("file must start with a context line", lineno, col)
        elif head == "rule":
            if len(tokens) != 2:
                raise RuleSyntaxError("expected: rule <id>", lineno, col)
            rid = _parse_int(tokens[1][0], lineno, tokens[1][1], "rule id")
            rules.append((rid, lineno, []))
        elif head.startswith("field="):
            if not rules:
                raise RuleSyntaxError("field line before any rule line", lineno, col)
            rules[-1][2].append(_parse_descriptor(tokens, lineno))
        else:
            raise RuleSyntaxError(f"unexpected token {head!r}", lineno, col)

    if deveui is None:
        raise RuleSyntaxError("missing context line", 1)

    built = []
    for rid, lineno, entries in rules:
        try:
            built.append(Rule(rid, tuple(entries), width))
        except InvalidDescriptor as exc:
            if type(exc) is InvalidDescriptor:
                raise RuleSyntaxError(str(exc), lineno) from None
            raise
    return Context(deveui, tuple(built), width)


def format_descriptor(d):
    if d.target_value is None:
        tv = "-"
    elif isinstance(d.target_value, tuple):
        tv = "list:" + ",".join(format_value(v, d.field_length) for v in d.target_value)
    else:
        tv = format_value(d.target_value, d.field_length)
    mo = f"msb:{d.msb_length}" if d.mo is MO.MSB else d.mo.value
    return (f"field={d.field_id.label} len={d.field_length} pos={d.field_position} "
            f"dir={d.direction.value} tv={tv} mo={mo} cda={d.cda.value}")


def _context_line(deveui, width):
    if width == DEFAULT_RULE_ID_WIDTH:
        return f"context {deveui}"
    return f"context {deveui} width={width}"


def serialize_rule(deveui, rule):
    """Canonical single-rule document (context line + one rule)."""
    lines = [_context_line(deveui.lower(), rule.rule_id_width), f"rule {rule.rule_id}"]
    lines += [format_descriptor(d) for d in rule.entries]
    return ("\n".join(lines) + "\n").encode("ascii")


def serialize_context(ctx):
    lines = [_context_line(ctx.deveui, ctx.rule_id_width)]
    for rule in ctx.rules:
        lines.append(f"rule {rule.rule_id}")
        lines += [format_descriptor(d) for d in rule.entries]
    return ("\n".join(lines) + "\n").encode("ascii")
