"""Atomic CSV / JSON writers used by every command."""

import csv
import json
import numbers
import os
import tempfile


def _atomic_write(path, write):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            write(f)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cell(value):
    # numpy scalars repr as np.float64(...) under numpy 2
    if isinstance(value, numbers.Integral):
        return int(value)
    if isinstance(value, numbers.Real):
        return float.__repr__(float(value))
    return value


def write_csv(path, header, rows):
    def write(f):
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])

    _atomic_write(path, write)


def write_json(path, obj):
    def write(f):
        json.dump(obj, f, indent=2, ensure_ascii=False, allow_nan=True)
        f.write("\n")

    _atomic_write(path, write)


def complex_pair(z):
    z = complex(z)
    return [z.real, z.imag]
