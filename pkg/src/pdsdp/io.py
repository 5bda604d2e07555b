"""Problem ingestion and solution serialization.

Three on-disk formats:

* ``.dat-s``    SDPA sparse problems (SDPLIB-compatible grammar).
* ``.sdp.json`` extended JSON problems that also carry inequalities.
* ``.sol``      JSON solution documents written after a solve.

SDPA files encode  max tr(F0 Y)  s.t.  tr(F_i Y) = c_i, Y psd.  We store
C = -F0 and record objective_sign = -1 so reported objectives match the
published SDPLIB values.  Multiple blocks are embedded block-diagonally
into a single PSD variable.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np

from .pdhg import SolveResult
from .problem import SdpProblem, SolutionReport, SparseRow
from .symmat import SQRT2, SymMatrix, packed_coords, packed_index, packed_length

logger = logging.getLogger(__name__)

EXTENDED_FORMAT_TAG = "sdp-extended"
SOLUTION_FORMAT_TAG = "sdp-solution"


class ParseError(ValueError):
    """Malformed problem or solution document."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


# ---------------------------------------------------------------------------
# SDPA sparse format


def _tokens(line: str) -> list[str]:
    # SDPA block-size and c-vector lines may carry {}, () and commas
    return line.replace(",", " ").replace("{", " ").replace("}", " ") \
               .replace("(", " ").replace(")", " ").split()


def _parse_number(token: str, lineno: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"non-numeric {what} token {token!r}", lineno) from None
    if not np.isfinite(value):
        raise ParseError(f"non-finite {what} value {token!r}", lineno)
    return value


def _parse_int(token: str, lineno: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"non-integer {what} token {token!r}", lineno) from None


def parse_sdpa(text: str) -> SdpProblem:
    """Parse an SDPA sparse (.dat-s) document into a problem.

    Only upper-triangle entries are accepted; duplicate entries are summed
    with a warning; entries inside diagonal blocks (negative block sizes)
    must sit on the diagonal.
    """
    numbered = [
        (i + 1, line)
        for i, line in enumerate(text.splitlines())
    ]
    body = [
        (no, line)
        for no, line in numbered
        if line.strip() and not line.lstrip().startswith(('"', "*"))
    ]
    if len(body) < 4:
        raise ParseError("file too short for an SDPA header")
    pos = 0

    lineno, line = body[pos]
    toks = _tokens(line)
    m_cons = _parse_int(toks[0], lineno, "constraint count")
    if m_cons < 0:
        raise ParseError(f"negative constraint count {m_cons}", lineno)
    pos += 1

    lineno, line = body[pos]
    nblocks = _parse_int(_tokens(line)[0], lineno, "block count")
    if nblocks < 1:
        raise ParseError(f"block count must be positive, got {nblocks}", lineno)
    pos += 1

    block_sizes: list[int] = []
    while len(block_sizes) < nblocks:
        if pos >= len(body):
            raise ParseError("unexpected end of file while reading block sizes")
        lineno, line = body[pos]
        for tok in _tokens(line):
            block_sizes.append(_parse_int(tok, lineno, "block size"))
        pos += 1
    if len(block_sizes) != nblocks:
        raise ParseError(f"expected {nblocks} block sizes, got {len(block_sizes)}",
                         lineno)
    if any(s == 0 for s in block_sizes):
        raise ParseError("zero block size", lineno)

    c_vec: list[float] = []
    while len(c_vec) < m_cons:
        if pos >= len(body):
            raise ParseError("unexpected end of file while reading the c vector")
        lineno, line = body[pos]
        for tok in _tokens(line):
            c_vec.append(_parse_number(tok, lineno, "c vector"))
        pos += 1
    if len(c_vec) != m_cons:
        raise ParseError(f"expected {m_cons} c values, got {len(c_vec)}", lineno)

    offsets = np.concatenate([[0], np.cumsum([abs(s) for s in block_sizes])])
    n = int(offsets[-1])

    # entries[k] accumulates matrix F_k as global (i, j) -> value, 0-based
    entries: list[dict[tuple[int, int], float]] = [dict() for _ in range(m_cons + 1)]
    for lineno, line in body[pos:]:
        toks = line.split()
        if len(toks) != 5:
            raise ParseError(
                f"expected 5 fields (matrix block i j value), got {len(toks)}",
                lineno,
            )
        mat = _parse_int(toks[0], lineno, "matrix index")
        blk = _parse_int(toks[1], lineno, "block index")
        i = _parse_int(toks[2], lineno, "row index")
        j = _parse_int(toks[3], lineno, "column index")
        val = _parse_number(toks[4], lineno, "entry")
        if not 0 <= mat <= m_cons:
            raise ParseError(f"matrix index {mat} outside [0, {m_cons}]", lineno)
        if not 1 <= blk <= nblocks:
            raise ParseError(f"block index {blk} outside [1, {nblocks}]", lineno)
        size = block_sizes[blk - 1]
        dim = abs(size)
        if not 1 <= i <= j <= dim:
            if i > j:
                raise ParseError(
                    f"lower-triangle entry ({i}, {j}); SDPA files carry the "
                    "upper triangle only", lineno)
            raise ParseError(
                f"entry ({i}, {j}) outside block of dimension {dim}", lineno)
        if size < 0 and i != j:
            raise ParseError(
                f"off-diagonal entry ({i}, {j}) in diagonal block {blk}", lineno)
        key = (int(offsets[blk - 1]) + i - 1, int(offsets[blk - 1]) + j - 1)
        if key in entries[mat]:
            logger.warning(
                "line %d: duplicate entry for matrix %d at %s; summing",
                lineno, mat, key)
            entries[mat][key] += val
        else:
            entries[mat][key] = val

    c_packed = np.zeros(packed_length(n))
    for (i, j), v in entries[0].items():
        scale = 1.0 if i == j else SQRT2
        c_packed[packed_index(n, i, j)] += -scale * v
    rows = [
        SparseRow.from_matrix_entries(n, [(i, j, v) for (i, j), v in ent.items()])
        for ent in entries[1:]
    ]
    return SdpProblem(
        n=n,
        C=SymMatrix(n, c_packed),
        A=rows,
        b=np.array(c_vec),
        G=[],
        h=np.zeros(0),
        objective_sign=-1.0,
    )


def _row_matrix_entries(row: SparseRow, n: int) -> list[tuple[int, int, float]]:
    """Recover (i, j, value) mathematical entries from a packed sparse row."""
    i, j = packed_coords(n, row.indices)
    out = []
    for a, b_, v in zip(i, j, row.values):
        out.append((int(a), int(b_), float(v) if a == b_ else float(v) / SQRT2))
    return out


def write_sdpa(prob: SdpProblem) -> str:
    """Serialize an equality-only problem as a single-block SDPA document."""
    if prob.p != 0:
        raise ValueError("SDPA sparse format cannot express inequalities")
    lines = [str(prob.m), "1", str(prob.n)]
    lines.append(" ".join(repr(float(v)) for v in prob.b))
    # objective matrix F0 = -C
    for i, j, v in _row_matrix_entries(
        SparseRow(np.nonzero(prob.C.data)[0], prob.C.data[prob.C.data != 0.0]),
        prob.n,
    ):
        lines.append(f"0 1 {i + 1} {j + 1} {repr(-v)}")
    for k, row in enumerate(prob.A, start=1):
        for i, j, v in _row_matrix_entries(row, prob.n):
            lines.append(f"{k} 1 {i + 1} {j + 1} {repr(v)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Extended JSON format


def _entries_from_doc(raw, n: int, what: str) -> list[tuple[int, int, float]]:
    entries = []
    for item in raw:
        if len(item) != 3:
            raise ParseError(f"{what} entry {item!r} is not an (i, j, value) triple")
        i, j, v = int(item[0]), int(item[1]), float(item[2])
        if not 1 <= i <= j <= n:
            if i > j:
                raise ParseError(
                    f"{what} entry ({i}, {j}) is lower-triangle; use i <= j")
            raise ParseError(f"{what} entry ({i}, {j}) outside dimension {n}")
        if not np.isfinite(v):
            raise ParseError(f"non-finite {what} value at ({i}, {j})")
        entries.append((i - 1, j - 1, v))
    return entries


def parse_extended(text: str) -> SdpProblem:
    """Parse the extended JSON problem document.

    Entries are 1-based upper-triangle (i, j, value) triples holding the
    mathematical matrix entries; an off-diagonal entry sets both (i, j) and
    (j, i) of the constraint matrix.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ParseError("top-level JSON value must be an object")
    if doc.get("format", EXTENDED_FORMAT_TAG) != EXTENDED_FORMAT_TAG:
        raise ParseError(f"unexpected format tag {doc.get('format')!r}")
    try:
        n = int(doc["n"])
    except KeyError:
        raise ParseError("missing field 'n'") from None
    if n < 1:
        raise ParseError(f"dimension must be positive, got {n}")

    c_packed = np.zeros(packed_length(n))
    for i, j, v in _entries_from_doc(doc.get("objective", []), n, "objective"):
        scale = 1.0 if i == j else SQRT2
        c_packed[packed_index(n, i, j)] += scale * v

    def read_rows(key: str):
        rows, rhs = [], []
        for cons in doc.get(key, []):
            if "entries" not in cons or "rhs" not in cons:
                raise ParseError(f"{key} constraint needs 'entries' and 'rhs'")
            rhs_v = float(cons["rhs"])
            if not np.isfinite(rhs_v):
                raise ParseError(f"non-finite {key} right-hand side")
            rows.append(
                SparseRow.from_matrix_entries(
                    n, _entries_from_doc(cons["entries"], n, key)
                )
            )
            rhs.append(rhs_v)
        return rows, np.array(rhs)

    A, b = read_rows("equalities")
    G, h = read_rows("inequalities")
    return SdpProblem(
        n=n,
        C=SymMatrix(n, c_packed),
        A=A,
        b=b,
        G=G,
        h=h,
        name=str(doc.get("name", "")),
        objective_sign=float(doc.get("objective_sign", 1.0)),
    )


def write_extended(prob: SdpProblem) -> str:
    """Serialize a problem as the extended JSON document."""
    obj_idx = np.nonzero(prob.C.data)[0]
    obj_row = SparseRow(obj_idx, prob.C.data[obj_idx])

    def entry_list(row: SparseRow):
        return [[i + 1, j + 1, v] for i, j, v in _row_matrix_entries(row, prob.n)]

    doc = {
        "format": EXTENDED_FORMAT_TAG,
        "name": prob.name,
        "n": prob.n,
        "objective_sign": prob.objective_sign,
        "objective": entry_list(obj_row),
        "equalities": [
            {"entries": entry_list(row), "rhs": float(rhs)}
            for row, rhs in zip(prob.A, prob.b)
        ],
        "inequalities": [
            {"entries": entry_list(row), "rhs": float(rhs)}
            for row, rhs in zip(prob.G, prob.h)
        ],
    }
    return json.dumps(doc, indent=1)


# ---------------------------------------------------------------------------
# Solution documents


def write_solution(result: SolveResult, report: SolutionReport) -> str:
    """Serialize a solve outcome plus its quality report as JSON.

    Floats go through repr, so parsing the document back reproduces every
    value bit-exactly.
    """
    X_dense = result.X.to_dense()
    doc = {
        "format": SOLUTION_FORMAT_TAG,
        "status": result.status.value,
        "objective": result.reported_objective,
        "objective_sign": result.objective_sign,
        "primal_objective": report.primal_objective,
        "dual_objective": report.dual_objective,
        "duality_gap": report.duality_gap,
        "equality_violation": report.equality_violation,
        "inequality_violation": report.inequality_violation,
        "min_eigenvalue": report.min_eigenvalue,
        "iterations": result.iterations,
        "wall_time_s": result.wall_time_s,
        "residuals": {
            "primal": result.final_residuals[0],
            "dual": result.final_residuals[1],
            "combined": result.final_residuals[2],
            "scale": result.residual_scale,
        },
        "rank_path": [[int(k), int(r)] for k, r in result.rank_path],
        "n": result.X.n,
        "X": [[float(v) for v in row] for row in X_dense],
        "y": [float(v) for v in result.y],
        "checkpoints": [
            {"rank": int(cp.rank), "objective": float(cp.objective)}
            for cp in result.checkpoints
        ],
    }
    return json.dumps(doc, indent=1)


def read_solution(text: str) -> dict:
    """Parse a solution document; returns the dict with X as a SymMatrix
    and y as an array."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if doc.get("format") != SOLUTION_FORMAT_TAG:
        raise ParseError(f"not a solution document (format={doc.get('format')!r})")
    X = np.array(doc["X"], dtype=float)
    doc["X"] = SymMatrix.from_dense(X, tol=1e-9)
    doc["y"] = np.array(doc["y"], dtype=float)
    return doc


# ---------------------------------------------------------------------------
# Path-level helpers


def detect_format(path: str | Path) -> str:
    name = str(path)
    if name.endswith(".dat-s"):
        return "sdpa"
    if name.endswith(".json"):
        return "extended"
    raise ValueError(f"cannot infer problem format from {name!r}; pass it explicitly")


def load_problem(path: str | Path, fmt: str = "auto") -> SdpProblem:
    """Read a problem file in either supported format."""
    path = Path(path)
    if fmt == "auto":
        fmt = detect_format(path)
    text = path.read_text()
    if fmt == "sdpa":
        prob = parse_sdpa(text)
    elif fmt == "extended":
        prob = parse_extended(text)
    else:
        raise ValueError(f"unknown problem format {fmt!r}")
    if not prob.name:
        prob.name = path.name
    return prob
