"""Strict readers for the simulator's file contracts.

Only the documented CSV/JSON formats are consumed; the simulator package is
never imported, which keeps the rendering side honest about the boundary.
Malformed inputs raise :class:`ContractError` naming the offending file and
line.
"""

import json
import re
from pathlib import Path

import numpy as np

TRACE_HEAD = ["t", "dt", "max_grad_sq", "V_phi"]
TRACE_TAIL = ["A0_phi", "A1_phi", "min_smin", "max_speed",
              "r_min_node", "r_max_node"]
_ALPHA_COL = re.compile(r"^V_phi_alpha_[-+0-9.eE]+$")


class ContractError(ValueError):
    """An input file does not conform to the documented contract."""


def read_trace(path):
    """Parse trace.csv into a dict of named columns."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ContractError(f"{path}: empty trace file")
    names = lines[0].split(",")
    if names[: len(TRACE_HEAD)] != TRACE_HEAD or names[-len(TRACE_TAIL):] != TRACE_TAIL:
        raise ContractError(
            f"{path}, line 1: header does not match the trace contract "
            f"(got {lines[0]!r})")
    for extra in names[len(TRACE_HEAD):-len(TRACE_TAIL)]:
        if not _ALPHA_COL.match(extra):
            raise ContractError(f"{path}, line 1: unexpected column {extra!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != len(names):
            raise ContractError(
                f"{path}, line {lineno}: expected {len(names)} fields, "
                f"got {len(parts)}")
        try:
            rows.append([float(x) for x in parts])
        except ValueError as exc:
            raise ContractError(f"{path}, line {lineno}: {exc}") from exc
    if len(rows) < 1:
        raise ContractError(f"{path}: no data rows")
    data = np.asarray(rows)
    return {name: data[:, i] for i, name in enumerate(names)}


def read_summary(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ContractError(f"{path}, line {exc.lineno}: {exc.msg}") from exc
    missing = {"r_infinity", "r_star", "measured_decay_rate", "beta_hat",
               "converged"} - set(doc)
    if missing:
        raise ContractError(f"{path}: missing summary keys {sorted(missing)}")
    return doc


def read_verdicts(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ContractError(f"{path}, line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, list):
        raise ContractError(f"{path}: verdicts must be an array")
    for i, entry in enumerate(doc):
        missing = {"name", "passed", "worst_violation", "tolerance"} - set(entry)
        if missing:
            raise ContractError(f"{path}: verdict {i} missing {sorted(missing)}")
    return doc


def read_snapshots(directory):
    """All gamma_<step>.csv files, sorted by step index.

    Returns a list of (step, coords, gamma) with coords of shape (nodes, k).
    """
    directory = Path(directory)
    out = []
    for path in directory.glob("gamma_*.csv"):
        m = re.match(r"gamma_(\d+)\.csv$", path.name)
        if not m:
            continue
        lines = path.read_text(encoding="utf-8").splitlines()
        if not lines or not lines[0].endswith("gamma"):
            raise ContractError(f"{path}, line 1: bad snapshot header")
        ncols = len(lines[0].split(","))
        rows = []
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            parts = line.split(",")
            if len(parts) != ncols:
                raise ContractError(
                    f"{path}, line {lineno}: expected {ncols} fields")
            try:
                rows.append([float(x) for x in parts])
            except ValueError as exc:
                raise ContractError(f"{path}, line {lineno}: {exc}") from exc
        data = np.asarray(rows)
        out.append((int(m.group(1)), data[:, :-1], data[:, -1]))
    out.sort(key=lambda item: item[0])
    return out
