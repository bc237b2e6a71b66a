"""File formats: field CSV, observables CSV, reports, and run manifests.

Field CSV schema: a first line ``# {json header}`` recording n_edges (N),
edge_length (L), points_per_edge (M) and alpha, then the header row
``edge_index,x,re,im`` and one row per node, edge-major.  The shared vertex
row (x = 0) is repeated once per edge with that edge's index.  Floats are
written with 17 significant digits so values round-trip exactly.

Every CLI run directory holds exactly one ``manifest.json`` with the
subcommand, the full flattened parameter map, the artifact version and a
timestamp; re-running from a manifest reproduces the other outputs
byte-for-byte.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__ as _version
from .core import GraphField, StarGrid, VertexCoupling, make_grid
from .errors import InvalidParameterError

__all__ = [
    "fmt",
    "save_field_csv",
    "load_field_csv",
    "write_observables_csv",
    "RunManifest",
    "write_manifest",
    "read_manifest",
]

FIELD_HEADER = ["edge_index", "x", "re", "im"]
OBSERVABLES_HEADER = ["t", "mass", "energy", "vertex_re", "vertex_im", "deviation"]


def fmt(x: float) -> str:
    """17-significant-digit float formatting (exact round trip)."""
    return format(float(x), ".17g")


def save_field_csv(path, field: GraphField, coupling: VertexCoupling) -> None:
    grid = field.grid
    header = {
        "n_edges": grid.n_edges,
        "edge_length": grid.edge_length,
        "points_per_edge": grid.points_per_edge,
        "alpha": coupling.alpha,
    }
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        writer = csv.writer(fh)
        writer.writerow(FIELD_HEADER)
        x = grid.x
        for k in range(grid.n_edges):
            vals = field.edge_values(k)
            for i in range(grid.points_per_edge + 1):
                writer.writerow(
                    [k, fmt(x[i]), fmt(vals[i].real), fmt(vals[i].imag)]
                )


def load_field_csv(path) -> tuple[GraphField, VertexCoupling]:
    path = Path(path)
    with path.open() as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise InvalidParameterError(f"{path}: missing JSON header line")
        header = json.loads(first[1:].strip())
        reader = csv.reader(fh)
        cols = next(reader)
        if cols != FIELD_HEADER:
            raise InvalidParameterError(
                f"{path}: expected columns {FIELD_HEADER}, got {cols}"
            )
        grid = make_grid(
            header["n_edges"], header["edge_length"], header["points_per_edge"]
        )
        n, m = grid.n_edges, grid.points_per_edge
        data = np.zeros((n, m + 1), dtype=complex)
        count = 0
        for row in reader:
            k = int(row[0])
            i = count % (m + 1)
            data[k, i] = float(row[2]) + 1j * float(row[3])
            count += 1
        if count != n * (m + 1):
            raise InvalidParameterError(
                f"{path}: expected {n * (m + 1)} rows, got {count}"
            )
    vertex_vals = data[:, 0]
    if np.max(np.abs(vertex_vals - vertex_vals[0])) > 1e-12 * max(
        1.0, float(np.max(np.abs(data)))
    ):
        raise InvalidParameterError(f"{path}: vertex rows disagree across edges")
    return (
        GraphField(grid, vertex_vals[0], data[:, 1:]),
        VertexCoupling(header["alpha"]),
    )


def write_observables_csv(path, trajectory) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(OBSERVABLES_HEADER)
        dev = trajectory.deviation
        for i, t in enumerate(trajectory.times):
            writer.writerow(
                [
                    fmt(t),
                    fmt(trajectory.mass[i]),
                    fmt(trajectory.energy[i]),
                    fmt(trajectory.vertex[i].real),
                    fmt(trajectory.vertex[i].imag),
                    fmt(dev[i]) if dev is not None else "",
                ]
            )


@dataclass
class RunManifest:
    subcommand: str
    parameters: dict
    artifact_version: str
    timestamp: str


def write_manifest(directory, subcommand: str, parameters: dict) -> RunManifest:
    manifest = RunManifest(
        subcommand=subcommand,
        parameters=parameters,
        artifact_version=_version,
        timestamp=datetime.now(timezone.utc).isoformat(),
    )
    path = Path(directory) / "manifest.json"
    with path.open("w") as fh:
        json.dump(
            {
                "subcommand": manifest.subcommand,
                "parameters": manifest.parameters,
                "artifact_version": manifest.artifact_version,
                "timestamp": manifest.timestamp,
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    return manifest


def read_manifest(path) -> RunManifest:
    with Path(path).open() as fh:
        data = json.load(fh)
    return RunManifest(
        subcommand=data["subcommand"],
        parameters=data["parameters"],
        artifact_version=data.get("artifact_version", "unknown"),
        timestamp=data.get("timestamp", ""),
    )
