"""Plain-text model files.

One coefficient per line::

    # first-harmonic model
    a[0] = 0.92 + 0.82i
    a[1] = 0.91 - 0.77i
    b[0] = 0.41 - 0.95i
    b[1] = -0.84 - 0.70i

``i`` or ``j`` marks the imaginary unit. Blank lines and ``#`` comments are
ignored. Repeated entries for the same index are rejected.
"""

import re
from pathlib import Path

from chiral_winding.core.coeff_model import CoefficientField
from chiral_winding.errors import ModelError

_LINE = re.compile(r"^\s*([ab])\s*\[\s*([+-]?\d+)\s*\]\s*=\s*(.+?)\s*$")


def parse_complex(text: str) -> complex:
    """Parse '0.92 + 0.82i', '-0.5i', '1e-3' etc. into a complex number.

    Raises:
        ValueError: If the text is not a complex literal.
    """
    cleaned = text.replace(" ", "").replace("I", "j").replace("i", "j").replace("J", "j")
    if not cleaned:
        raise ValueError("empty coefficient")
    if cleaned in ("j", "+j", "-j"):
        cleaned = cleaned.replace("j", "1j")
    try:
        return complex(cleaned)
    except ValueError:
        raise ValueError(f"invalid complex coefficient: {text!r}") from None


def parse_model(text: str) -> CoefficientField:
    """Build a CoefficientField from model-file text.

    Raises:
        ModelError: On malformed lines, duplicates, non-finite values or an
            empty model.
    """
    series: dict[str, dict[int, complex]] = {"a": {}, "b": {}}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue

        match = _LINE.match(line)
        if match is None:
            raise ModelError(f"line {lineno}: expected 'a[m] = value', got {raw.strip()!r}")

        name, index, value = match.group(1), int(match.group(2)), match.group(3)
        try:
            coefficient = parse_complex(value)
        except ValueError as e:
            raise ModelError(f"line {lineno}: {e}") from e

        if index in series[name]:
            raise ModelError(f"line {lineno}: duplicate entry {name}[{index}]")
        series[name][index] = coefficient

    if not series["a"] and not series["b"]:
        raise ModelError("model file defines no coefficients")

    return CoefficientField(series["a"], series["b"])


def load_model(path: Path | str) -> CoefficientField:
    """Read and parse a model file.

    Raises:
        FileNotFoundError: If the file does not exist.
        ModelError: If the contents are invalid.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Model file not found: {path}")
    return parse_model(path.read_text())


def format_model(field: CoefficientField) -> str:
    """Inverse of parse_model for the raw Laurent coefficients."""
    lines = []
    for name, coeffs in (("a", field.a_coeffs), ("b", field.b_coeffs)):
        for m, c in coeffs.items():
            lines.append(f"{name}[{m}] = {c.real!r} {'+' if c.imag >= 0 else '-'} {abs(c.imag)!r}i")
    return "\n".join(lines) + "\n"
