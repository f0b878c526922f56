"""JSON kernel files.

::

    {
      "name": "example2",
      "states": 4,
      "base": [[0, 0, 0.5, 0.5], ...],
      "coeff": [{"x": 1, "j": 2, "k": 1, "value": 0.4}, ...]
    }

Indices are 1-based. ``coeff`` lists the nonzero ``c[x][j][k]`` terms of
``P_mu(x, j) = base[x][j] + sum_k c[x][j][k] mu(k)``.
"""

import json
import numbers

import numpy as np

from .errors import InvalidKernelError, SpecSyntaxError
from .kernels import AffineKernel

TOP_FIELDS = {"name", "states", "base", "coeff"}
COEFF_FIELDS = {"x", "j", "k", "value"}


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise SpecSyntaxError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _index(value, states, where):
    if isinstance(value, bool) or not isinstance(value, int):
        raise SpecSyntaxError(f"{where}: expected an integer index, got {value!r}")
    if not 1 <= value <= states:
        raise SpecSyntaxError(f"{where}: index {value} outside [1, {states}]")
    return value - 1


def parse_spec(text):
    """Parse and validate a kernel file; returns an :class:`AffineKernel`.

    Raises
    ------
    SpecSyntaxError
        Malformed JSON (with line and column), unknown or missing fields,
        wrong types or out-of-range indices.
    InvalidKernelError
        The kernel parses but is not a transition kernel for every law.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise SpecSyntaxError("top level must be an object")
    unknown = set(doc) - TOP_FIELDS
    if unknown:
        raise SpecSyntaxError(f"unknown fields: {', '.join(sorted(unknown))}")
    missing = {"states", "base"} - set(doc)
    if missing:
        raise SpecSyntaxError(f"missing fields: {', '.join(sorted(missing))}")

    states = doc["states"]
    if isinstance(states, bool) or not isinstance(states, int) or states < 1:
        raise SpecSyntaxError(f"states must be a positive integer, got {states!r}")
    name = doc.get("name", "kernel")
    if not isinstance(name, str):
        raise SpecSyntaxError("name must be a string")

    base = doc["base"]
    if not isinstance(base, list) or len(base) != states:
        raise SpecSyntaxError(f"base must be a list of {states} rows")
    rows = []
    for x, row in enumerate(base, 1):
        if not isinstance(row, list) or len(row) != states:
            raise SpecSyntaxError(f"base row {x} must have {states} entries")
        rows.append([_number(v, f"base[{x}][{j}]") for j, v in enumerate(row, 1)])

    entries = []
    coeff = doc.get("coeff", [])
    if not isinstance(coeff, list):
        raise SpecSyntaxError("coeff must be a list")
    for i, item in enumerate(coeff, 1):
        where = f"coeff entry {i}"
        if not isinstance(item, dict):
            raise SpecSyntaxError(f"{where}: expected an object")
        extra = set(item) - COEFF_FIELDS
        if extra:
            raise SpecSyntaxError(f"{where}: unknown fields: {', '.join(sorted(extra))}")
        if COEFF_FIELDS - set(item):
            raise SpecSyntaxError(f"{where}: needs fields x, j, k, value")
        entries.append((_index(item["x"], states, where + " x"),
                        _index(item["j"], states, where + " j"),
                        _index(item["k"], states, where + " k"),
                        _number(item["value"], where + " value")))

    kernel = AffineKernel.from_sparse(np.array(rows), entries, name=name)
    report = kernel.report
    if not report.ok:
        details = "; ".join(v.describe() for v in report.violations)
        raise InvalidKernelError(f"kernel {name!r} is invalid: {details}", report.violations)
    return kernel


def spec_dict(kernel):
    return {
        "name": kernel.name,
        "states": kernel.size,
        "base": kernel.base.tolist(),
        "coeff": [{"x": x + 1, "j": j + 1, "k": k + 1, "value": v}
                  for x, j, k, v in kernel.sparse_entries()],
    }


def dump_spec(kernel):
    return json.dumps(spec_dict(kernel), indent=2) + "\n"


def load_spec(path):
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read())
