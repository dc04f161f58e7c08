"""MPS reader for NETLIB-style linear programs.

Accepts both fixed-column and whitespace-delimited ("free") MPS, which covers
the circulating NETLIB copies.  The parsed problem keeps every entry verbatim
so it can round-trip through :func:`write_mps`; :func:`to_region` turns the
constraint rows, ranges and bounds into a polytope region, dropping the
objective row (the experiments supply their own random objectives).

Not handled (out of scope): OBJSENSE/SOS extensions, integrality enforcement
(BV bounds relax to the [0, 1] box), compressed/emps encodings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lp
from .regions import Polytope

_ROW_SENSES = ("N", "L", "G", "E")
_BOUND_TYPES = ("UP", "LO", "FX", "FR", "MI", "PL", "BV")
_SECTIONS = ("NAME", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA")


class MpsParseError(ValueError):
    """Malformed MPS input; carries the 1-based line number."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


@dataclass(frozen=True)
class MpsProblem:
    """Structured MPS contents, order-preserving and round-trip safe."""

    name: str
    rows: tuple            # (sense, row_name) in file order, N rows included
    objective_row: str     # name of the first N row
    columns: tuple         # column names in order of first appearance
    column_entries: tuple  # (column, row, coefficient)
    rhs_entries: tuple     # (row, value)
    range_entries: tuple   # (row, value)
    bound_entries: tuple   # (bound_type, column, value or None)

    @property
    def num_rows(self):
        """Row count by the NETLIB convention (objective row included)."""
        return len(self.rows)

    @property
    def num_columns(self):
        return len(self.columns)


def parse_mps(source):
    """Parse MPS text (str or bytes) into an :class:`MpsProblem`."""
    if isinstance(source, bytes):
        try:
            source = source.decode("ascii")
        except UnicodeDecodeError as exc:
            raise MpsParseError(f"input is not ASCII: {exc}") from None

    name = ""
    rows = []
    row_senses = {}
    objective_row = None
    columns = []
    column_set = set()
    column_entries = []
    rhs_entries = []
    range_entries = []
    bound_entries = []
    set_names = {}  # section -> the single accepted set name

    section = None
    seen = set()
    ended = False

    for line_no, raw in enumerate(source.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("*"):
            continue
        if ended:
            continue
        is_header = not raw[0].isspace()
        tokens = raw.split()

        if is_header:
            keyword = tokens[0].upper()
            if keyword not in _SECTIONS:
                raise MpsParseError(f"unknown section {tokens[0]!r}", line_no)
            if keyword in seen:
                raise MpsParseError(f"duplicate section {keyword}", line_no)
            seen.add(keyword)
            if keyword == "NAME":
                name = tokens[1] if len(tokens) > 1 else ""
                section = None
            elif keyword == "ENDATA":
                ended = True
                section = None
            else:
                section = keyword
            continue

        if section == "ROWS":
            if len(tokens) != 2:
                raise MpsParseError("ROWS entries need a sense and a name", line_no)
            sense, row = tokens[0].upper(), tokens[1]
            if sense not in _ROW_SENSES:
                raise MpsParseError(f"unknown row sense {tokens[0]!r}", line_no)
            if row in row_senses:
                raise MpsParseError(f"duplicate row name {row!r}", line_no)
            row_senses[row] = sense
            rows.append((sense, row))
            if sense == "N" and objective_row is None:
                objective_row = row

        elif section == "COLUMNS":
            if len(tokens) >= 3 and tokens[1].strip("'").upper() == "MARKER":
                continue  # integrality markers: relaxed, ignored
            if len(tokens) < 3 or len(tokens) % 2 == 0:
                raise MpsParseError(
                    "COLUMNS entries need a column plus (row, value) pairs", line_no
                )
            col = tokens[0]
            if col not in column_set:
                column_set.add(col)
                columns.append(col)
            for k in range(1, len(tokens), 2):
                row = tokens[k]
                if row not in row_senses:
                    raise MpsParseError(f"entry references unknown row {row!r}", line_no)
                column_entries.append((col, row, _number(tokens[k + 1], line_no)))

        elif section in ("RHS", "RANGES"):
            if len(tokens) < 3 or len(tokens) % 2 == 0:
                raise MpsParseError(
                    f"{section} entries need a set name plus (row, value) pairs",
                    line_no,
                )
            _check_set_name(set_names, section, tokens[0], line_no)
            sink = rhs_entries if section == "RHS" else range_entries
            for k in range(1, len(tokens), 2):
                row = tokens[k]
                if row not in row_senses:
                    raise MpsParseError(f"entry references unknown row {row!r}", line_no)
                sink.append((row, _number(tokens[k + 1], line_no)))

        elif section == "BOUNDS":
            if len(tokens) < 3:
                raise MpsParseError(
                    "BOUNDS entries need a type, a set name and a column", line_no
                )
            btype = tokens[0].upper()
            if btype not in _BOUND_TYPES:
                raise MpsParseError(f"unknown bound type {tokens[0]!r}", line_no)
            _check_set_name(set_names, "BOUNDS", tokens[1], line_no)
            col = tokens[2]
            if col not in column_set:
                raise MpsParseError(f"bound references unknown column {col!r}", line_no)
            needs_value = btype in ("UP", "LO", "FX")
            value = None
            if len(tokens) > 3:
                value = _number(tokens[3], line_no)
            elif needs_value:
                raise MpsParseError(f"{btype} bound needs a value", line_no)
            if not needs_value:
                value = None  # FR/MI/PL/BV ignore any stray value
            bound_entries.append((btype, col, value))

        else:
            raise MpsParseError("data line outside any section", line_no)

    if not ended:
        raise MpsParseError("missing ENDATA")
    if objective_row is None:
        raise MpsParseError("no objective (N) row declared")

    return MpsProblem(
        name=name,
        rows=tuple(rows),
        objective_row=objective_row,
        columns=tuple(columns),
        column_entries=tuple(column_entries),
        rhs_entries=tuple(rhs_entries),
        range_entries=tuple(range_entries),
        bound_entries=tuple(bound_entries),
    )


def _number(token, line_no):
    try:
        return float(token)
    except ValueError:
        raise MpsParseError(f"expected a number, got {token!r}", line_no) from None


def _check_set_name(set_names, section, candidate, line_no):
    known = set_names.setdefault(section, candidate)
    if known != candidate:
        raise MpsParseError(
            f"multiple {section} sets ({known!r} and {candidate!r}) are not supported",
            line_no,
        )


def parse_mps_file(path):
    with open(path, "rb") as fh:
        return parse_mps(fh.read())


def to_model(problem):
    """LpModel of the constraint system (objective and other N rows dropped)."""
    cols = {c: j for j, c in enumerate(problem.columns)}
    n = len(cols)
    if n == 0:
        raise ValueError("problem has no columns")

    constraint_rows = [(s, r) for s, r in problem.rows if s != "N"]
    idx = {r: i for i, (_, r) in enumerate(constraint_rows)}
    m = len(constraint_rows)

    A = np.zeros((m, n))
    for col, row, coeff in problem.column_entries:
        if row in idx:
            A[idx[row], cols[col]] += coeff

    rhs = np.zeros(m)
    for row, value in problem.rhs_entries:
        if row in idx:  # an RHS on the objective row would be a constant term
            rhs[idx[row]] = value

    # per-row interval [lo, hi] after applying RANGES
    lo = np.full(m, -np.inf)
    hi = np.full(m, np.inf)
    for i, (sense, _) in enumerate(constraint_rows):
        if sense == "L":
            hi[i] = rhs[i]
        elif sense == "G":
            lo[i] = rhs[i]
        else:
            lo[i] = hi[i] = rhs[i]
    for row, rng in problem.range_entries:
        if row not in idx:
            continue
        i = idx[row]
        sense = constraint_rows[i][0]
        if sense == "L":
            lo[i] = rhs[i] - abs(rng)
        elif sense == "G":
            hi[i] = rhs[i] + abs(rng)
        else:  # E row: the sign of the range picks the side
            lo[i] = rhs[i] + min(rng, 0.0)
            hi[i] = rhs[i] + max(rng, 0.0)

    out_coeffs = []
    out_senses = []
    out_rhs = []
    for i in range(m):
        if lo[i] == hi[i]:
            out_coeffs.append(A[i])
            out_senses.append(lp.EQ)
            out_rhs.append(lo[i])
            continue
        if np.isfinite(hi[i]):
            out_coeffs.append(A[i])
            out_senses.append(lp.LE)
            out_rhs.append(hi[i])
        if np.isfinite(lo[i]):
            out_coeffs.append(A[i])
            out_senses.append(lp.GE)
            out_rhs.append(lo[i])

    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    explicit_lower = np.zeros(n, dtype=bool)
    for btype, col, value in problem.bound_entries:
        j = cols[col]
        if btype == "LO":
            lower[j] = value
            explicit_lower[j] = True
        elif btype == "UP":
            upper[j] = value
            # NETLIB legacy: a negative upper bound with the lower bound still
            # at its default zero frees the lower bound
            if value < 0.0 and not explicit_lower[j]:
                lower[j] = -np.inf
        elif btype == "FX":
            lower[j] = upper[j] = value
            explicit_lower[j] = True
        elif btype == "FR":
            lower[j], upper[j] = -np.inf, np.inf
        elif btype == "MI":
            lower[j] = -np.inf
        elif btype == "PL":
            upper[j] = np.inf
        else:  # BV, integrality relaxed
            lower[j], upper[j] = 0.0, 1.0
            explicit_lower[j] = True

    coeffs = np.array(out_coeffs) if out_coeffs else np.zeros((0, n))
    return lp.LpModel(coeffs, tuple(out_senses), np.array(out_rhs), lower, upper)


def to_region(problem):
    """Polytope region over the problem's feasible set."""
    return Polytope(to_model(problem))


def write_mps(problem):
    """Serialize back to (free-format) MPS text; parse(write(p)) == p."""
    out = [f"NAME          {problem.name}".rstrip(), "ROWS"]
    for sense, row in problem.rows:
        out.append(f" {sense}  {row}")
    out.append("COLUMNS")
    for col, row, coeff in problem.column_entries:
        out.append(f"    {col}  {row}  {float(coeff)!r}")
    if problem.rhs_entries:
        out.append("RHS")
        for row, value in problem.rhs_entries:
            out.append(f"    RHS  {row}  {float(value)!r}")
    if problem.range_entries:
        out.append("RANGES")
        for row, value in problem.range_entries:
            out.append(f"    RNG  {row}  {float(value)!r}")
    if problem.bound_entries:
        out.append("BOUNDS")
        for btype, col, value in problem.bound_entries:
            if value is None:
                out.append(f" {btype} BND  {col}")
            else:
                out.append(f" {btype} BND  {col}  {float(value)!r}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"
