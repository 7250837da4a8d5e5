#coding: utf-8

import struct

import numpy as np

from .base_types import UnitSchedule, TokenSequence, SCHEDULE_KINDS, InvalidArgument

TEXT_MAGIC = "tokenmark-v1"
BINARY_MAGIC = b"TMK1"
BINARY_SUFFIX = ".tmk"

_kind_codes = dict((k, i) for i, k in enumerate(SCHEDULE_KINDS))


class FormatError(ValueError):
    ''' A token (or student) file that cannot be parsed.
        lineNumber is 1-based for the text form; offset is a byte offset for binary forms.
    '''
    def __init__(self, message, path=None, lineNumber=None, offset=None):
        where = path or "<input>"
        if lineNumber is not None:
            where = "%s:%d" % (where, lineNumber)
        elif offset is not None:
            where = "%s@%d" % (where, offset)
        ValueError.__init__(self, "%s: %s" % (where, message))
        self.path = path
        self.lineNumber = lineNumber
        self.offset = offset


def format_text(seq):
    s = seq.schedule
    r = ["%s %s %d %s" % (TEXT_MAGIC, s.kind, s.n_units, ",".join(map(str, s.unit_sizes)))]
    r_append = r.append
    for u in seq.units:
        r_append(" ".join(map(str, u.tolist())))
    return "\n".join(r) + "\n"


def _parse_int(text, path, lineNumber, what):
    try:
        v = int(text)
    except ValueError:
        raise FormatError("invalid %s %r" % (what, text), path, lineNumber)
    if v < 0:
        raise FormatError("negative %s %r" % (what, text), path, lineNumber)
    return v


def parse_text(text, path=None):
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise FormatError("empty token file", path, 1)
    fields = lines[0].split()
    if len(fields) != 4 or fields[0] != TEXT_MAGIC:
        raise FormatError("malformed header, expected '%s <kind> <K> <t_1,...,t_K>'" % TEXT_MAGIC, path, 1)
    kind = fields[1]
    if kind not in SCHEDULE_KINDS:
        raise FormatError("unknown schedule kind %r" % kind, path, 1)
    K = _parse_int(fields[2], path, 1, "unit count")
    sizes = [_parse_int(t, path, 1, "unit size") for t in fields[3].split(",")]
    if len(sizes) != K:
        raise FormatError("header declares %d units but lists %d sizes" % (K, len(sizes)), path, 1)
    try:
        schedule = UnitSchedule(kind, sizes)
    except InvalidArgument as e:
        raise FormatError(str(e), path, 1)
    if len(lines) - 1 < K:
        raise FormatError("expected %d unit lines, found %d" % (K, len(lines) - 1), path, len(lines) + 1)
    if len(lines) - 1 > K:
        raise FormatError("unexpected line after the last unit", path, K + 2)
    units = []
    for i, (line, t) in enumerate(zip(lines[1:], sizes)):
        lineNumber = i + 2
        ids = [_parse_int(v, path, lineNumber, "token id") for v in line.split()]
        if len(ids) != t:
            raise FormatError("unit %d has %d ids, header says %d" % (i, len(ids), t), path, lineNumber)
        units.append(ids)
    return TokenSequence.from_units(schedule, units)


def format_binary(seq):
    s = seq.schedule
    header = np.array([_kind_codes[s.kind], s.n_units] + list(s.unit_sizes), dtype="<u4")
    return BINARY_MAGIC + header.tobytes() + seq.ids.astype("<u4").tobytes()


def parse_binary(data, path=None):
    if data[:4] != BINARY_MAGIC:
        raise FormatError("bad magic, expected %r" % BINARY_MAGIC, path, offset=0)
    pos = 4
    if len(data) < pos + 8:
        raise FormatError("truncated header", path, offset=pos)
    kindCode, K = struct.unpack_from("<II", data, pos)
    if kindCode >= len(SCHEDULE_KINDS):
        raise FormatError("unknown schedule kind code %d" % kindCode, path, offset=pos)
    pos += 8
    if len(data) < pos + 4 * K:
        raise FormatError("truncated unit sizes", path, offset=pos)
    sizes = np.frombuffer(data, dtype="<u4", count=K, offset=pos).tolist()
    pos += 4 * K
    try:
        schedule = UnitSchedule(SCHEDULE_KINDS[kindCode], sizes)
    except InvalidArgument as e:
        raise FormatError(str(e), path, offset=8)
    T = schedule.total_tokens
    if len(data) != pos + 4 * T:
        raise FormatError("expected %d token ids, payload has %d bytes" % (T, len(data) - pos), path, offset=pos)
    ids = np.frombuffer(data, dtype="<u4", count=T, offset=pos).astype(np.int64)
    return TokenSequence(schedule, ids)


def write_sequence(path, seq):
    if str(path).endswith(BINARY_SUFFIX):
        with open(path, "wb") as f:
            f.write(format_binary(seq))
    else:
        with open(path, "w", encoding="ascii", newline="\n") as f:
            f.write(format_text(seq))


def read_sequence(path):
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] == BINARY_MAGIC:
        return parse_binary(data, str(path))
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError:
        raise FormatError("not a token file (neither %s nor %r)" % (TEXT_MAGIC, BINARY_MAGIC), str(path), 1)
    return parse_text(text, str(path))
