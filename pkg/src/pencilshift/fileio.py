"""Matrix Market I/O and complex-literal parsing."""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse

from . import errors

__all__ = ["read_matrix", "write_matrix", "parse_complex", "parse_complex_list"]

_PAIR = re.compile(r"^\(\s*([^,()]+?)\s*,\s*([^,()]+?)\s*\)$")


def read_matrix(path) -> np.ndarray:
    """Read a dense real matrix from a Matrix Market file.

    Both ``array`` and ``coordinate`` storage are accepted; symmetric
    storage is expanded to the full matrix.
    """
    path = Path(path)
    try:
        A = scipy.io.mmread(str(path))
    except (OSError, ValueError) as exc:
        raise errors.InvalidConfig(f"cannot read {path}: {exc}") from exc
    if scipy.sparse.issparse(A):
        A = A.toarray()
    A = np.asarray(A)
    if np.iscomplexobj(A):
        if np.any(A.imag):
            raise errors.InvalidConfig(f"{path} holds complex entries; system matrices must be real")
        A = A.real
    return np.atleast_2d(A.astype(float))


def write_matrix(path, A, comment=""):
    """Write a dense real matrix in ``array`` format with 17 significant digits.

    Values read back with :func:`read_matrix` are bit-identical.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    scipy.io.mmwrite(str(path), A, comment=comment, field="real", precision=17)


def parse_complex(text) -> complex:
    """Parse ``"a+bi"``, ``"a-bi"``, ``"a"``, ``"bi"`` or ``"(re,im)"``.

    The unicode minus sign and a ``j`` suffix are accepted as well.

    >>> parse_complex("-0.0129+1.4389i")
    (-0.0129+1.4389j)
    >>> parse_complex("(1.5, -2)")
    (1.5-2j)
    """
    if isinstance(text, (int, float, complex)):
        return complex(text)
    s = str(text).strip().replace("−", "-")
    m = _PAIR.match(s)
    try:
        if m:
            return complex(float(m.group(1)), float(m.group(2)))
        s = s.replace(" ", "")
        if s.endswith("i"):
            s = s[:-1] + "j"
        if s.endswith(("+j", "-j")) or s == "j":
            s = s[:-1] + "1j"
        return complex(s)
    except ValueError:
        raise errors.InvalidConfig(f"cannot parse complex value {text!r}") from None


def parse_complex_list(text) -> np.ndarray:
    """Comma- or whitespace-separated complex literals.

    ``"(re,im)"`` items keep their inner comma.
    """
    if not isinstance(text, str):
        return np.array([parse_complex(t) for t in text], dtype=complex)
    items = re.findall(r"\([^()]*\)|[^,\s]+", text.replace("−", "-"))
    if not items:
        raise errors.InvalidConfig("empty list of complex values")
    return np.array([parse_complex(t) for t in items], dtype=complex)
