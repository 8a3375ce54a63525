"""Versioned text persistence for exact coefficient tables.

Format (UTF-8, LF line endings)::

    # halfsign-table v1
    kind form
    k 9
    N 10000
    scale 1
    coords 0 1 -16
    eigen 3 12
    ...
    data
    0 0
    1 1
    ...
    sha256 <hex digest of every preceding byte>

Every value is an exact integer or ``p/q`` rational, so a write/read cycle is
bit-exact. The trailing checksum detects truncation and tampering.
"""

from __future__ import annotations

import hashlib
from fractions import Fraction
from pathlib import Path

from .context import ValidationError
from .qspace import HalfIntegralForm

MAGIC = "# halfsign-table v1"


def _fmt(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _body(kind: str, header: list[tuple[str, str]], values: list) -> str:
    lines = [MAGIC, f"kind {kind}"]
    lines += [f"{key} {val}" for key, val in header]
    lines.append("data")
    lines += [f"{m} {_fmt(v)}" for m, v in enumerate(values)]
    return "\n".join(lines) + "\n"


def _seal(body: str) -> str:
    return body + f"sha256 {hashlib.sha256(body.encode()).hexdigest()}\n"


def dumps_form(form: HalfIntegralForm) -> str:
    header = [
        ("k", str(form.k)),
        ("N", str(form.N)),
        ("scale", str(form.scale)),
        ("coords", " ".join(_fmt(x) for x in form.coords)),
    ]
    header += [("eigen", f"{p} {_fmt(lam)}") for p, lam in sorted(form.eigenvalues.items())]
    return _seal(_body("form", header, form.c))


def dumps_lift(lift) -> str:
    header = [
        ("k", str(lift.k)),
        ("M", str(lift.M)),
        ("weight", str(lift.k - 1)),
        ("level", "2"),
    ]
    header += [("eigen", f"{p} {_fmt(lam)}") for p, lam in sorted(lift.eigenvalues.items())]
    return _seal(_body("lift", header, lift.A))


def _parse(text: str) -> tuple[str, dict[str, list[str]], list[Fraction]]:
    if not text.endswith("\n"):
        raise ValidationError("table file truncated")
    body, _, last = text[:-1].rpartition("\n")
    body += "\n"
    if not last.startswith("sha256 "):
        raise ValidationError("table checksum line missing")
    if hashlib.sha256(body.encode()).hexdigest() != last.split()[1]:
        raise ValidationError("table checksum mismatch")
    lines = body.splitlines()
    if lines[0] != MAGIC:
        raise ValidationError(f"unknown table format {lines[0]!r}")
    header: dict[str, list[str]] = {}
    i = 1
    while lines[i] != "data":
        key, _, val = lines[i].partition(" ")
        header.setdefault(key, []).append(val)
        i += 1
    values = []
    for m, line in enumerate(lines[i + 1 :]):
        idx, val = line.split()
        if int(idx) != m:
            raise ValidationError(f"table index {idx} out of sequence")
        values.append(Fraction(val))
    return header["kind"][0], header, values


def loads_form(text: str) -> HalfIntegralForm:
    kind, h, values = _parse(text)
    if kind != "form":
        raise ValidationError(f"expected a form table, got {kind}")
    eig = {}
    for entry in h.get("eigen", []):
        p, lam = entry.split()
        eig[int(p)] = Fraction(lam)
    coords = [Fraction(x) for x in h["coords"][0].split()]
    return HalfIntegralForm(int(h["k"][0]), int(h["N"][0]), [int(v) for v in values], coords, eig, int(h["scale"][0]))


def loads_lift(text: str):
    from .lift import LiftCoefficients

    kind, h, values = _parse(text)
    if kind != "lift":
        raise ValidationError(f"expected a lift table, got {kind}")
    eig = {}
    for entry in h.get("eigen", []):
        p, lam = entry.split()
        eig[int(p)] = Fraction(lam)
    return LiftCoefficients(int(h["k"][0]), int(h["M"][0]), [v if v.denominator != 1 else int(v) for v in values], eig)


def write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(text.encode())
    tmp.replace(path)


def save_form(form: HalfIntegralForm, path) -> None:
    write_text(path, dumps_form(form))


def load_form(path) -> HalfIntegralForm:
    return loads_form(Path(path).read_bytes().decode())


def save_lift(lift, path) -> None:
    write_text(path, dumps_lift(lift))


def load_lift(path):
    return loads_lift(Path(path).read_bytes().decode())
