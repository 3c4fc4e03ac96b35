import csv
import io
import json
import math

import numpy as np

from errors import TrajectoryFormatError
from log import Logger
from MovingFrame.motions import Jet4

logger = Logger("TrajectoryIO").get_logger()

TRAJECTORY_HEADER = ("t", "x", "y", "z")
INVARIANT_FIELDS = ("t", "a1", "a2", "a3", "Jcurv", "regular", "boundary", "ill_conditioned")
# bumped whenever a key or column of the emitted records changes
SCHEMA_VERSION = 1
SCHEMA_KEY = "schema_version"
JET_HEADER = ("t", "x", "y", "z") + tuple(axis + "'" * n for n in range(1, 5) for axis in "xyz")
JET_KEYS = ("x", "x1", "x2", "x3", "x4")


def read_trajectory(path):
    """
    Reads a trajectory CSV with header t,x,y,z.

    Args:
        path (str): File path.

    Returns:
        tuple: (ts, xs) with shapes (n,) and (n, 3).

    Raises:
        TrajectoryFormatError: On a bad header, unparsable or non-finite fields, or times that
            are not strictly increasing; the message carries the 1-based line number.
    """
    try:
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header is None:
                raise TrajectoryFormatError("empty file", line=1)
            if tuple(h.strip() for h in header) != TRAJECTORY_HEADER:
                raise TrajectoryFormatError(f"expected header {','.join(TRAJECTORY_HEADER)}, got {','.join(header)}", line=1)
            rows = []
            for line, row in enumerate(reader, start=2):
                if not row or all(not field.strip() for field in row):
                    continue
                if len(row) != 4:
                    raise TrajectoryFormatError(f"expected 4 fields, got {len(row)}", line=line)
                try:
                    values = [float(field) for field in row]
                except ValueError as e:
                    raise TrajectoryFormatError(f"not a decimal number: {e}", line=line) from e
                if not all(math.isfinite(v) for v in values):
                    raise TrajectoryFormatError("NaN or infinite value", line=line)
                if rows and values[0] <= rows[-1][1][0]:
                    raise TrajectoryFormatError(
                        f"time {values[0]!r} does not increase (previous {rows[-1][1][0]!r})", line=line
                    )
                rows.append((line, values))
    except OSError as e:
        logger.error("Cannot read trajectory %s: %s", path, e)
        raise TrajectoryFormatError(f"cannot read {path}: {e}") from e
    except TrajectoryFormatError as e:
        logger.error("Invalid trajectory %s: %s", path, e)
        raise
    if not rows:
        raise TrajectoryFormatError("no samples", line=2)
    data = np.array([values for _, values in rows])
    logger.info("Read %d samples from %s.", len(data), path)
    return data[:, 0], data[:, 1:]


def _number(value):
    return format(float(value), ".17g")


def trajectory_lines(ts, xs):
    """CSV lines (header first) of a trajectory, every number with 17 significant digits."""
    lines = [",".join(TRAJECTORY_HEADER)]
    for t, x in zip(ts, xs):
        lines.append(",".join(_number(v) for v in (t, *x)))
    return lines


def write_trajectory(path, ts, xs):
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("\n".join(trajectory_lines(ts, xs)) + "\n")
    logger.info("Wrote %d samples to %s.", len(ts), path)


def jet_lines(jets):
    """CSV lines (header first) of a jet sequence: t, position and four derivatives per row."""
    lines = [",".join(JET_HEADER)]
    for j in jets:
        lines.append(",".join(_number(v) for v in (j.t, *j.derivs.ravel())))
    return lines


def read_jet_lines(lines):
    """
    Parses jet CSV lines as written by jet_lines.

    Args:
        lines (iterable): CSV lines, header first.

    Returns:
        list: One Jet4 per row.

    Raises:
        TrajectoryFormatError: On a bad header or row; the message carries the 1-based line number.
    """
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != JET_HEADER:
        raise TrajectoryFormatError(f"expected header {','.join(JET_HEADER)}", line=1)
    jets = []
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(JET_HEADER):
            raise TrajectoryFormatError(f"expected {len(JET_HEADER)} fields, got {len(row)}", line=line)
        try:
            values = np.array([float(field) for field in row])
        except ValueError as e:
            raise TrajectoryFormatError(f"not a decimal number: {e}", line=line) from e
        jets.append(Jet4.from_derivatives(values[0], values[1:].reshape(len(JET_KEYS), 3)))
    return jets


def jets_to_json(jets):
    """JSON array of jet records with keys schema_version, t, x, x1..x4 and boundary."""
    records = []
    for j in jets:
        record = {SCHEMA_KEY: SCHEMA_VERSION, "t": j.t}
        record.update({k: getattr(j, k).tolist() for k in JET_KEYS})
        record["boundary"] = bool(j.boundary)
        records.append(record)
    return json.dumps(records)


def jets_from_json(text):
    """
    Parses a JSON array written by jets_to_json.

    Raises:
        TrajectoryFormatError: On malformed JSON, a missing key or another schema version.
    """
    try:
        records = json.loads(text)
        jets = []
        for i, r in enumerate(records):
            if r.get(SCHEMA_KEY) != SCHEMA_VERSION:
                raise TrajectoryFormatError(f"jet record {i} has schema version {r.get(SCHEMA_KEY)!r}, "
                                            f"expected {SCHEMA_VERSION}")
            jets.append(Jet4(r["t"], *(r[k] for k in JET_KEYS), boundary=bool(r.get("boundary", False))))
    except (ValueError, KeyError, TypeError, AttributeError) as e:
        raise TrajectoryFormatError(f"invalid jet JSON: {e}") from e
    return jets


def _csv_value(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return "" if math.isnan(value) else _number(value)
    return str(value)


def _json_value(value):
    if isinstance(value, (np.floating, float)):
        return None if math.isnan(value) else float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    return value


def versioned(record):
    """The record with the schema version as its first key."""
    return {SCHEMA_KEY: SCHEMA_VERSION, **record}


def record_lines(records, fmt, fields):
    """
    Serializes records as JSON lines or CSV with a fixed key order.

    Every JSON object and every CSV row starts with schema_version.

    Args:
        records (list): Dicts containing at least the given fields.
        fmt (str): "json" or "csv".
        fields (tuple): Key order after schema_version; CSV output starts with a header.

    Returns:
        list: Output lines without trailing newlines.
    """
    if fmt == "json":
        return [json.dumps(versioned({k: _json_value(r.get(k)) for k in fields})) for r in records]
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow((SCHEMA_KEY, *fields))
    for r in records:
        writer.writerow([SCHEMA_VERSION, *(_csv_value(r.get(k)) for k in fields)])
    return buffer.getvalue().splitlines()
