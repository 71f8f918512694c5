"""Readers and writers for matrices and iteration traces.

Three matrix formats are supported: MatrixMarket dense array, MatrixMarket
symmetric coordinate (lower triangle on disk, mirrored to full dense
storage on read), and plain CSV.  Traces are CSV files with one header row
and one row per iteration.

All writers are deterministic: reals are serialized with 17 significant
digits, which round-trips IEEE doubles exactly, and the field and line
separators are fixed (',' and '\\n') independent of locale.
"""

import numpy as np

from .dense import as_matrix, symmetrize_checked
from .solvers import IterationRecord

__all__ = [
    "MATRIX_FORMATS",
    "MatrixParseError",
    "read_matrix",
    "read_trace",
    "write_matrix",
    "write_trace",
]

FORMAT_MM_ARRAY = "matrixmarket_array"
FORMAT_MM_COORD_SYM = "matrixmarket_coordinate_symmetric"
FORMAT_CSV = "csv"
MATRIX_FORMATS = (FORMAT_MM_ARRAY, FORMAT_MM_COORD_SYM, FORMAT_CSV)

TRACE_HEADER = "k,f_value,fitting_error,symmetry_gap,step_norm_sq,elapsed_seconds"


class MatrixParseError(ValueError):
    """A file could not be parsed; carries path and 1-based line number."""

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


def _fmt(value):
    return f"{value:.17g}"


def _parse_float(token, path, line_no):
    try:
        value = float(token)
    except ValueError:
        raise MatrixParseError(path, line_no, f"expected a real number, got {token!r}")
    if not np.isfinite(value):
        raise MatrixParseError(path, line_no, f"non-finite value {token!r}")
    return value


def _parse_dims(tokens, path, line_no, count):
    if len(tokens) != count:
        raise MatrixParseError(path, line_no, f"expected {count} integers, got {tokens!r}")
    try:
        dims = [int(t) for t in tokens]
    except ValueError:
        raise MatrixParseError(path, line_no, f"expected integers, got {tokens!r}")
    if any(d < 1 for d in dims[:2]):
        raise MatrixParseError(path, line_no, "dimensions must be positive")
    return dims


def _read_mm(path, lines):
    header = lines[0][1].split()
    if len(header) != 5 or header[0] != "%%MatrixMarket" or header[1] != "matrix":
        raise MatrixParseError(path, lines[0][0], "malformed MatrixMarket header")
    layout, field, symmetry = header[2], header[3], header[4]
    if field != "real":
        raise MatrixParseError(path, lines[0][0], f"unsupported field {field!r}")
    body = [(no, text) for no, text in lines[1:] if not text.startswith("%")]
    if not body:
        raise MatrixParseError(path, lines[0][0] + 1, "missing size line")

    if layout == "array" and symmetry == "general":
        no, text = body[0]
        rows, cols = _parse_dims(text.split(), path, no, 2)
        values = body[1:]
        if len(values) != rows * cols:
            raise MatrixParseError(
                path, no, f"expected {rows * cols} values, found {len(values)}"
            )
        a = np.empty((rows, cols))
        idx = 0
        for j in range(cols):  # array layout is column-major
            for i in range(rows):
                vno, vtext = values[idx]
                a[i, j] = _parse_float(vtext, path, vno)
                idx += 1
        return a

    if layout == "coordinate" and symmetry == "symmetric":
        no, text = body[0]
        rows, cols, nnz = _parse_dims(text.split(), path, no, 3)
        if rows != cols:
            raise MatrixParseError(path, no, "symmetric matrices must be square")
        entries = body[1:]
        if len(entries) != nnz:
            raise MatrixParseError(path, no, f"expected {nnz} entries, found {len(entries)}")
        a = np.zeros((rows, cols))
        for eno, etext in entries:
            tokens = etext.split()
            if len(tokens) != 3:
                raise MatrixParseError(path, eno, f"expected 'i j value', got {etext!r}")
            try:
                i, j = int(tokens[0]), int(tokens[1])
            except ValueError:
                raise MatrixParseError(path, eno, f"expected integer indices, got {etext!r}")
            if not (1 <= i <= rows and 1 <= j <= cols):
                raise MatrixParseError(path, eno, f"index ({i}, {j}) out of range")
            if i < j:
                raise MatrixParseError(
                    path, eno, "symmetric coordinate entries must satisfy row >= column"
                )
            value = _parse_float(tokens[2], path, eno)
            a[i - 1, j - 1] = value
            a[j - 1, i - 1] = value
        return a

    raise MatrixParseError(
        path, lines[0][0], f"unsupported MatrixMarket kind: {layout} {symmetry}"
    )


def _read_csv(path, lines):
    rows = []
    width = None
    for no, text in lines:
        tokens = text.split(",")
        if width is None:
            width = len(tokens)
        elif len(tokens) != width:
            raise MatrixParseError(
                path, no, f"expected {width} fields, got {len(tokens)}"
            )
        rows.append([_parse_float(t.strip(), path, no) for t in tokens])
    if not rows:
        raise MatrixParseError(path, 1, "file contains no data")
    return np.array(rows)


def read_matrix(path, fmt=None):
    """Read a dense matrix from ``path``.

    ``fmt`` is one of :data:`MATRIX_FORMATS`; when omitted it is sniffed
    from the file content (MatrixMarket banner) or treated as CSV.
    Symmetric coordinate input is mirrored into full dense storage, so the
    result satisfies ``X == X.T`` exactly.
    """
    with open(path, "r", encoding="ascii") as fh:
        raw = fh.read().splitlines()
    lines = [(no, text.strip()) for no, text in enumerate(raw, start=1) if text.strip()]
    if not lines:
        raise MatrixParseError(path, 1, "file is empty")

    is_mm = lines[0][1].startswith("%%MatrixMarket")
    if fmt is None:
        fmt = FORMAT_MM_ARRAY if is_mm else FORMAT_CSV
    if fmt not in MATRIX_FORMATS:
        raise ValueError(f"unknown matrix format {fmt!r}")

    if fmt in (FORMAT_MM_ARRAY, FORMAT_MM_COORD_SYM):
        if not is_mm:
            raise MatrixParseError(path, lines[0][0], "missing MatrixMarket banner")
        a = _read_mm(path, lines)
        if fmt == FORMAT_MM_COORD_SYM and not np.array_equal(a, a.T):
            # _read_mm mirrored it already; reaching here means the file
            # declared a different kind than the caller asked for.
            raise MatrixParseError(path, lines[0][0], "file is not coordinate symmetric")
        return as_matrix(a, name=str(path))
    return as_matrix(_read_csv(path, lines), name=str(path))


def write_matrix(path, a, fmt=FORMAT_MM_ARRAY):
    """Write ``a`` to ``path`` in the given format, deterministically."""
    a = as_matrix(a, name="matrix")
    rows, cols = a.shape
    out = []
    if fmt == FORMAT_MM_ARRAY:
        out.append("%%MatrixMarket matrix array real general")
        out.append(f"{rows} {cols}")
        for j in range(cols):
            for i in range(rows):
                out.append(_fmt(a[i, j]))
    elif fmt == FORMAT_MM_COORD_SYM:
        symmetrize_checked(a, name="matrix")
        entries = [
            (i, j, a[i, j])
            for i in range(rows)
            for j in range(i + 1)
            if a[i, j] != 0.0
        ]
        out.append("%%MatrixMarket matrix coordinate real symmetric")
        out.append(f"{rows} {cols} {len(entries)}")
        out.extend(f"{i + 1} {j + 1} {_fmt(v)}" for i, j, v in entries)
    elif fmt == FORMAT_CSV:
        out.extend(",".join(_fmt(v) for v in row) for row in a)
    else:
        raise ValueError(f"unknown matrix format {fmt!r}")
    _write_text(path, out)


def _write_text(path, lines):
    try:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write("\n".join(lines))
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def write_trace(path, trace):
    """Write iteration records as CSV with the fixed trace header."""
    lines = [TRACE_HEADER]
    for rec in trace:
        lines.append(
            ",".join(
                [
                    str(rec.k),
                    _fmt(rec.f_value),
                    _fmt(rec.fitting_error),
                    _fmt(rec.symmetry_gap),
                    _fmt(rec.step_norm_sq),
                    _fmt(rec.elapsed_seconds),
                ]
            )
        )
    _write_text(path, lines)


def read_trace(path):
    """Read a trace CSV back into :class:`IterationRecord` rows."""
    with open(path, "r", encoding="ascii") as fh:
        raw = fh.read().splitlines()
    if not raw or raw[0].strip() != TRACE_HEADER:
        raise MatrixParseError(path, 1, f"expected trace header {TRACE_HEADER!r}")
    records = []
    last_k = -1
    for no, text in enumerate(raw[1:], start=2):
        if not text.strip():
            continue
        tokens = text.split(",")
        if len(tokens) != 6:
            raise MatrixParseError(path, no, f"expected 6 fields, got {len(tokens)}")
        try:
            k = int(tokens[0])
        except ValueError:
            raise MatrixParseError(path, no, f"expected integer iteration, got {tokens[0]!r}")
        if k <= last_k:
            raise MatrixParseError(path, no, "iteration indices must be strictly increasing")
        last_k = k
        try:
            values = [float(t) for t in tokens[1:]]
        except ValueError:
            raise MatrixParseError(path, no, f"malformed real field in {text!r}")
        records.append(IterationRecord(k, *values))
    return records
