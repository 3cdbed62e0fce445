"""Plain-text matrix dumps for fixtures and debugging.

Format::

    # pwclra-matrix 1
    # shape <d0> <d1> ...
    <re> <im> <re> <im> ...

Entries are row-major (last index fastest), each complex value written as
its real and imaginary parts with 17 significant digits.  One line holds
the last axis, so a 2-D matrix is written one row per line.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ConfigurationError

MAGIC = "# pwclra-matrix 1"


def dumps_matrix(a) -> str:
    a = np.asarray(a, dtype=complex)
    lines = [MAGIC, "# shape " + " ".join(str(d) for d in a.shape)]
    if a.size == 0:
        rows = []
    else:
        rows = a.reshape(-1, a.shape[-1] if a.ndim else 1)
    for row in rows:
        pairs = np.column_stack([row.real, row.imag]).ravel()
        lines.append(" ".join(f"{x:.17g}" for x in pairs))
    return "\n".join(lines) + "\n"


def loads_matrix(text: str) -> np.ndarray:
    lines = text.splitlines()
    if len(lines) < 2 or lines[0].strip() != MAGIC or not lines[1].startswith("# shape"):
        raise ConfigurationError("not a pwclra matrix dump")
    shape = tuple(int(t) for t in lines[1].split()[2:])
    values = np.array([float(t) for line in lines[2:] for t in line.split()])
    n = int(np.prod(shape)) if shape else 1
    if values.size != 2 * n:
        raise ConfigurationError(f"dump holds {values.size // 2} entries, shape needs {n}")
    return (values[0::2] + 1j * values[1::2]).reshape(shape)


def dump_matrix(path, a) -> None:
    Path(path).write_text(dumps_matrix(a))


def load_matrix(path) -> np.ndarray:
    return loads_matrix(Path(path).read_text())


def dump_realization(directory, channels) -> None:
    """Write ``h_rb_los``, ``h_rb_nlos`` and ``h_ur`` (``K x M x L``) dumps."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    dump_matrix(d / "h_rb_los.txt", channels.h_rb_los)
    dump_matrix(d / "h_rb_nlos.txt", channels.h_rb_nlos)
    dump_matrix(d / "h_ur.txt", channels.h_ur)


def load_realization(directory):
    from .channel import ChannelRealization
    d = Path(directory)
    return ChannelRealization(load_matrix(d / "h_rb_los.txt"), load_matrix(d / "h_rb_nlos.txt"),
                              load_matrix(d / "h_ur.txt"))
