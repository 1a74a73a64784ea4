"""
CSV and JSON writers for run artifacts.

Floats are written with ``repr``, the shortest string that round-trips, so a
rerun of the same config produces byte-identical files.
"""

import csv
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np


def format_value(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_table_csv(path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write rows under a header; returns the path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(value) for value in row])
    return path


def _node_rows(grid, field: np.ndarray, keep=None):
    coords = [axis for axis in grid.axes]
    for k, t in enumerate(grid.times):
        for index in np.ndindex(*grid.shape):
            value = field[(k,) + index]
            if keep is not None and not keep[(k,) + index]:
                continue
            yield [t] + [coords[a][i] for a, i in enumerate(index)] + [value]


def _coordinate_header(grid) -> list:
    return ['t', 'x', 'y'][:grid.dim + 1]


def write_field_csv(path, grid, field: np.ndarray) -> Path:
    """
    Write a space-time field as rows ``t, x[, y], value``.

    Args:
        path: Output file
        grid: SpaceTimeGrid the field lives on
        field: Array of shape (nt + 1, *grid.shape)

    Returns:
        Path of the written file
    """
    return write_table_csv(path, _coordinate_header(grid) + ['value'], _node_rows(grid, field))


def write_measure_csv(path, grid, measure) -> Path:
    """Write the charged cells of a discrete measure as ``t, x[, y], mass``."""
    masses = np.zeros((grid.nt + 1,) + grid.shape)
    masses[:-1] = measure.masses
    return write_table_csv(path, _coordinate_header(grid) + ['mass'],
                           _node_rows(grid, masses, keep=masses > 0))


def write_json_atomic(path, payload: Any) -> Path:
    """Write JSON through a temporary file in the same directory, then ``os.replace``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f'.{path.name}.', suffix='.tmp')
    try:
        with os.fdopen(fd, 'w') as handle:
            json.dump(payload, handle, indent=2, sort_keys=True)
            handle.write('\n')
        os.replace(tmp_name, path)
    except Exception:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path
