"""Fixed-layout MPS writer and a minimal reader for round-trip checks.

Names longer than eight characters are written in place, so the files are
whitespace-separable rather than strictly column-bound; every MILP solver
in common use reads them. MPS minimizes, so objective coefficients are
negated on the way out and restored on the way in.
"""

from __future__ import annotations

from collections import defaultdict

import numpy as np

from ..exceptions import ParseError
from ..milp import MilpModel, generic_model

OBJ_ROW = "OBJ"
_SENSE_CODE = {"<=": "L", ">=": "G", "=": "E"}
_CODE_SENSE = {v: k for k, v in _SENSE_CODE.items()}


def _num(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return format(float(value), ".17g")


def row_names(model: MilpModel) -> list[str]:
    counters: dict[str, int] = defaultdict(int)
    names = []
    for tag in model.tags:
        counters[tag] += 1
        names.append(f"c{tag}_{counters[tag]}")
    return names


def export_mps(model: MilpModel, name: str = "DSNWEEK") -> bytes:
    rows = row_names(model)
    lines = [f"NAME          {name}", "* maximize: objective coefficients are negated", "ROWS", f" N  {OBJ_ROW}"]
    lines.extend(f" {_SENSE_CODE[s]}  {r}" for s, r in zip(model.sense, rows))

    lines.append("COLUMNS")
    csc = model.A.tocsc()
    csc.sort_indices()
    for j, var in enumerate(model.variables.names):
        lines.append(f"    {var:<8}  {OBJ_ROW:<8}  {_num(-model.objective[j] + 0.0):>12}")
        start, end = csc.indptr[j], csc.indptr[j + 1]
        for i, v in zip(csc.indices[start:end], csc.data[start:end]):
            if v:
                lines.append(f"    {var:<8}  {rows[i]:<8}  {_num(v):>12}")

    lines.append("RHS")
    for r, b in zip(rows, model.rhs):
        if b:
            lines.append(f"    RHS       {r:<8}  {_num(b):>12}")

    lines.append("BOUNDS")
    lines.extend(f" BV BND       {var}" for var in model.variables.names)
    lines.append("ENDATA")
    return ("\n".join(lines) + "\n").encode()


def read_mps(data: bytes | str) -> MilpModel:
    """Parse what :func:`export_mps` writes back into a name-keyed model."""
    text = data.decode() if isinstance(data, bytes) else data
    section = None
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    terms: dict[str, dict[str, int]] = defaultdict(dict)
    rhs: dict[str, float] = {}
    objective: dict[str, float] = {}
    names: list[str] = []
    seen: set[str] = set()
    binaries: set[str] = set()
    obj_row = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw[0].isspace():
            section = raw.split()[0]
            if section not in ("NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"):
                raise ParseError(f"unsupported section {section}", path=f"line {lineno}")
            continue
        fields = raw.split()
        if section == "ROWS":
            code, rname = fields
            if code == "N":
                obj_row = rname
            else:
                row_sense[rname] = _CODE_SENSE[code]
                row_order.append(rname)
        elif section == "COLUMNS":
            if "'MARKER'" in fields:
                continue
            var = fields[0]
            if var not in seen:
                seen.add(var)
                names.append(var)
            for rname, val in zip(fields[1::2], fields[2::2]):
                if rname == obj_row:
                    objective[var] = -float(val) + 0.0
                else:
                    terms[rname][var] = int(float(val))
        elif section == "RHS":
            for rname, val in zip(fields[1::2], fields[2::2]):
                rhs[rname] = float(val)
        elif section == "BOUNDS":
            if fields[0] != "BV":
                raise ParseError(f"only binary bounds are supported, got {fields[0]}", path=f"line {lineno}")
            binaries.add(fields[2])

    not_binary = set(names) - binaries
    if not_binary:
        raise ParseError(f"{len(not_binary)} columns lack BV bounds")
    rows = []
    for rname in row_order:
        tag = rname[1:].rsplit("_", 1)[0] if rname.startswith("c") and "_" in rname else "raw"
        rows.append((terms.get(rname, {}), row_sense[rname], int(rhs.get(rname, 0)), tag))
    return generic_model(names, objective, rows)


def structural_key(model: MilpModel):
    """Order-independent description of a model, for equality checks."""
    names = model.variables.names
    csr = model.A.tocsr()
    csr.sort_indices()
    row_set = []
    for i in range(model.n_rows):
        start, end = csr.indptr[i], csr.indptr[i + 1]
        entries = tuple(sorted((names[j], int(v)) for j, v in zip(csr.indices[start:end], csr.data[start:end]) if v))
        row_set.append((str(model.tags[i]), str(model.sense[i]), int(model.rhs[i]), entries))
    obj = tuple(sorted((n, float(c)) for n, c in zip(names, np.asarray(model.objective)) if c))
    return tuple(names), obj, tuple(sorted(row_set))
