"""Flat-file formats.

Graph files::

    n 5
    1 2
    2 3

Vertices in files are 1-based.  Assignment files hold whitespace-separated
1-based colors.  Matrices are CSV with one line per row.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import ContractViolation
from .model import ColorAssignment, SimpleGraph


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def write_graph(G: SimpleGraph, path) -> None:
    lines = [f"n {G.n}"] + [f"{u + 1} {v + 1}" for u, v in G.edges]
    Path(path).write_text("\n".join(lines) + "\n")


def parse_graph(text: str) -> SimpleGraph:
    n = None
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "n":
            if n is not None or len(parts) != 2:
                raise ContractViolation(f"line {lineno}: malformed header")
            n = int(parts[1])
            continue
        if n is None:
            raise ContractViolation("graph file must start with 'n <count>'")
        if len(parts) != 2:
            raise ContractViolation(f"line {lineno}: expected 'u v'")
        pairs.append((int(parts[0]) - 1, int(parts[1]) - 1))
    if n is None:
        raise ContractViolation("missing 'n <count>' header")
    return SimpleGraph.from_pairs(n, pairs)


def read_graph(path) -> SimpleGraph:
    return parse_graph(Path(path).read_text())


def write_assignment(sigma: ColorAssignment, path) -> None:
    Path(path).write_text(" ".join(map(str, sigma.one_based())) + "\n")


def read_assignment(path, k: int) -> ColorAssignment:
    return ColorAssignment.from_one_based((int(t) for t in Path(path).read_text().split()), k)


def write_matrix(rho, path) -> None:
    a = np.asarray(rho, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in a:
            w.writerow([format_float(x) for x in row])


def read_matrix(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [[float(x) for x in row] for row in csv.reader(fh) if row]
    a = np.array(rows, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolation("matrix CSV must have k rows of k entries")
    return a
