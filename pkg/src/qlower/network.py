"""Feedforward networks with exact rational weights.

A network of depth L is the composition

    f(x) = output_scale * W_L . act o W_{L-1} . ... . act o W_0 . (1, x)

where the activation acts coordinate-wise after every matrix except the
last, and the constant coordinate 1 prepended to the input stands in for
shift vectors. Networks are immutable; evaluation, validation, counting,
and serialization are pure functions, so any number of concurrent
readers is safe.

Exact evaluation never touches floats: each layer is computed in integer
arithmetic over a running common denominator, which avoids per-operation
gcd reduction and is exact for arbitrary rational weights and inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence, Union

from .errors import DimensionError, DomainError, ParseError
from .rationals import RationalLike, as_rational, format_rational, lcm_denominators

FORMAT_VERSION = 1

ZERO = Fraction(0)
HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)


class ActivationKind(str, Enum):
    """Coordinate-wise activation applied after every non-final matrix."""

    RELU = "relu"                  # max(0, z)
    RELU_HALF = "relu_half"        # max(0, z) / 2
    RELU_QUARTER = "relu_quarter"  # max(0, z) / 4
    INDICATOR01 = "indicator01"    # 1 if 0 <= z < 1 else 0


class WeightSet(str, Enum):
    """Admissible weight alphabets; membership tests are exact."""

    UNRESTRICTED = "unrestricted"
    BASE_A = "baseA"                  # {0, +-1/2, +-1, 2}
    TERNARY_HALF = "ternary_half"     # {0, +-1/2}
    TERNARY_UNIT = "ternary_unit"     # {0, +-1}
    BINARY_QUARTER = "binary_quarter" # {+-1/4}
    BINARY_UNIT = "binary_unit"       # {+-1}

    def members(self) -> frozenset[Fraction] | None:
        """The finite alphabet, or None for the unrestricted set."""
        return _WEIGHT_SET_MEMBERS[self]

    def contains(self, value: Fraction) -> bool:
        members = _WEIGHT_SET_MEMBERS[self]
        return True if members is None else value in members


_WEIGHT_SET_MEMBERS: dict[WeightSet, frozenset[Fraction] | None] = {
    WeightSet.UNRESTRICTED: None,
    WeightSet.BASE_A: frozenset({ZERO, HALF, -HALF, Fraction(1), Fraction(-1), Fraction(2)}),
    WeightSet.TERNARY_HALF: frozenset({ZERO, HALF, -HALF}),
    WeightSet.TERNARY_UNIT: frozenset({ZERO, Fraction(1), Fraction(-1)}),
    WeightSet.BINARY_QUARTER: frozenset({QUARTER, -QUARTER}),
    WeightSet.BINARY_UNIT: frozenset({Fraction(1), Fraction(-1)}),
}


@dataclass(frozen=True)
class WeightMatrix:
    """Dense rational matrix; entries row-major, in lowest terms."""

    rows: int
    cols: int
    entries: tuple[Fraction, ...]

    def __post_init__(self):
        if self.rows <= 0 or self.cols <= 0:
            raise DimensionError(f"matrix shape must be positive, got {self.rows}x{self.cols}")
        if len(self.entries) != self.rows * self.cols:
            raise DimensionError(
                f"{self.rows}x{self.cols} matrix needs {self.rows * self.cols} entries, "
                f"got {len(self.entries)}"
            )

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[RationalLike]]) -> "WeightMatrix":
        if not rows:
            raise DimensionError("matrix needs at least one row")
        ncols = len(rows[0])
        flat: list[Fraction] = []
        for r, row in enumerate(rows):
            if len(row) != ncols:
                raise DimensionError(f"row {r} has {len(row)} entries, expected {ncols}")
            flat.extend(as_rational(v) for v in row)
        return cls(len(rows), ncols, tuple(flat))

    def entry(self, r: int, c: int) -> Fraction:
        return self.entries[r * self.cols + c]

    def row(self, r: int) -> tuple[Fraction, ...]:
        return self.entries[r * self.cols:(r + 1) * self.cols]

    def iter_rows(self) -> Iterable[tuple[Fraction, ...]]:
        for r in range(self.rows):
            yield self.row(r)

    def scaled_by(self, factor: RationalLike) -> "WeightMatrix":
        f = as_rational(factor)
        return WeightMatrix(self.rows, self.cols, tuple(e * f for e in self.entries))

    def nonzero_count(self) -> int:
        return sum(1 for e in self.entries if e)

    # Cached forms used by the evaluation kernels. The integer form scales
    # the whole matrix by the lcm of its denominators so every entry is an
    # int; sparse rows win once most entries are zero.
    @cached_property
    def _int_form(self) -> tuple[int, tuple, bool]:
        scale = lcm_denominators(self.entries)
        dense = tuple(
            tuple(e.numerator * (scale // e.denominator) for e in self.row(r))
            for r in range(self.rows)
        )
        nnz = self.nonzero_count()
        if nnz * 2 < self.rows * self.cols:
            sparse = tuple(
                tuple((j, w) for j, w in enumerate(row) if w) for row in dense
            )
            return scale, sparse, True
        return scale, dense, False

    @cached_property
    def _float_rows(self) -> tuple[tuple[float, ...], ...]:
        return tuple(tuple(float(e) for e in self.row(r)) for r in range(self.rows))


@dataclass(frozen=True)
class Network:
    """Immutable network: matrices, activation, and an output scale.

    The output scale is bookkeeping for rescaled weight alphabets; it
    multiplies the final linear output and is ignored by alphabet
    validation.
    """

    input_dim: int
    matrices: tuple[WeightMatrix, ...]
    activation: ActivationKind
    output_scale: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "matrices", tuple(self.matrices))
        object.__setattr__(self, "output_scale", as_rational(self.output_scale))
        if self.input_dim < 1:
            raise DimensionError(f"input_dim must be positive, got {self.input_dim}")
        if not self.matrices:
            raise DimensionError("network needs at least one matrix")
        if self.matrices[0].cols != self.input_dim + 1:
            raise DimensionError(
                f"layer 0 has {self.matrices[0].cols} columns, expected input_dim+1 = "
                f"{self.input_dim + 1}",
                layer=0,
            )
        for i in range(len(self.matrices) - 1):
            if self.matrices[i + 1].cols != self.matrices[i].rows:
                raise DimensionError(
                    f"layer {i + 1} has {self.matrices[i + 1].cols} columns but layer "
                    f"{i} emits {self.matrices[i].rows} units",
                    layer=i + 1,
                )

    @property
    def depth(self) -> int:
        """Number of activation applications."""
        return len(self.matrices) - 1

    @property
    def width_vector(self) -> tuple[int, ...]:
        """(p_0, ..., p_{L+1}) with p_0 = input_dim + 1."""
        return (self.matrices[0].cols,) + tuple(m.rows for m in self.matrices)

    @property
    def width_max(self) -> int:
        return max(self.width_vector)

    @property
    def output_dim(self) -> int:
        return self.matrices[-1].rows


@dataclass(frozen=True)
class SparsityReport:
    total_nonzero: int
    per_matrix: tuple[int, ...]


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    weight_set: WeightSet
    offender: tuple[int, int, int, str] | None  # (matrix, row, col, value)

    def __bool__(self) -> bool:
        return self.passed


EvalMode = str  # "exact" | "float"


def _check_mode(mode: str) -> None:
    if mode not in ("exact", "float"):
        raise DomainError(f"mode must be 'exact' or 'float', got {mode!r}")


def _coerce_input(net: Network, x: Sequence[RationalLike], mode: str):
    if len(x) != net.input_dim:
        raise DimensionError(
            f"input has {len(x)} coordinates, network expects {net.input_dim}",
            layer=0,
        )
    if mode == "exact":
        return [as_rational(v) for v in x]
    return [float(v) for v in x]


def _forward_exact(net: Network, xs: list[Fraction], want_trace: bool):
    # State: integer numerators over one shared positive denominator.
    den = lcm_denominators(xs)
    nums = [den] + [f.numerator * (den // f.denominator) for f in xs]
    kind = net.activation
    last = len(net.matrices) - 1
    trace: list[list[Fraction]] = []
    for i, mat in enumerate(net.matrices):
        scale, rows, is_sparse = mat._int_form
        if is_sparse:
            nums = [sum(w * nums[j] for j, w in row) for row in rows]
        else:
            nums = [sum(w * v for w, v in zip(row, nums) if w) for row in rows]
        den *= scale
        if i < last:
            if kind is ActivationKind.INDICATOR01:
                nums = [1 if 0 <= n < den else 0 for n in nums]
                den = 1
            else:
                nums = [n if n > 0 else 0 for n in nums]
                if kind is ActivationKind.RELU_HALF:
                    den *= 2
                elif kind is ActivationKind.RELU_QUARTER:
                    den *= 4
            if want_trace:
                trace.append([Fraction(n, den) for n in nums])
    sn, sd = net.output_scale.numerator, net.output_scale.denominator
    out = [Fraction(n * sn, den * sd) for n in nums]
    return out, trace


def _forward_float(net: Network, xs: list[float], want_trace: bool):
    vals = [1.0] + xs
    kind = net.activation
    last = len(net.matrices) - 1
    trace: list[list[float]] = []
    for i, mat in enumerate(net.matrices):
        vals = [sum(w * v for w, v in zip(row, vals)) for row in mat._float_rows]
        if i < last:
            if kind is ActivationKind.INDICATOR01:
                vals = [1.0 if 0.0 <= v < 1.0 else 0.0 for v in vals]
            elif kind is ActivationKind.RELU:
                vals = [v if v > 0.0 else 0.0 for v in vals]
            elif kind is ActivationKind.RELU_HALF:
                vals = [v / 2.0 if v > 0.0 else 0.0 for v in vals]
            else:
                vals = [v / 4.0 if v > 0.0 else 0.0 for v in vals]
            if want_trace:
                trace.append(list(vals))
    scale = float(net.output_scale)
    return [v * scale for v in vals], trace


def evaluate(net: Network, x: Sequence[RationalLike], mode: EvalMode = "exact"):
    """Evaluate the network at x; scalar when the output has one unit.

    Exact mode does all arithmetic in rationals (floats in x are taken at
    their exact binary value). Float mode uses 64-bit arithmetic with
    round-to-nearest; near activation thresholds of the indicator the two
    modes may disagree, and only exact mode honours the half-open
    interval semantics at boundary points. Inputs outside [0,1]^d are
    evaluated by the same formula, but the lowering and approximation
    guarantees elsewhere in this package only cover the unit cube.
    """
    _check_mode(mode)
    xs = _coerce_input(net, x, mode)
    if mode == "exact":
        out, _ = _forward_exact(net, xs, want_trace=False)
    else:
        out, _ = _forward_float(net, xs, want_trace=False)
    return out[0] if len(out) == 1 else tuple(out)


def forward_trace(net: Network, x: Sequence[RationalLike], mode: EvalMode = "exact"):
    """Return (post-activation tuples per hidden layer, output).

    The output collapses to a scalar for one-unit outputs, as in
    ``evaluate``.
    """
    _check_mode(mode)
    xs = _coerce_input(net, x, mode)
    if mode == "exact":
        out, trace = _forward_exact(net, xs, want_trace=True)
    else:
        out, trace = _forward_float(net, xs, want_trace=True)
    return [tuple(v) for v in trace], (out[0] if len(out) == 1 else tuple(out))


def validate(net: Network, weight_set: WeightSet) -> ValidationReport:
    """Check that every matrix entry lies in the alphabet (exact equality).

    The output scale is exempt: it is bookkeeping, not a weight.
    """
    members = weight_set.members()
    if members is None:
        return ValidationReport(True, weight_set, None)
    for i, mat in enumerate(net.matrices):
        for idx, e in enumerate(mat.entries):
            if e not in members:
                r, c = divmod(idx, mat.cols)
                return ValidationReport(False, weight_set, (i, r, c, format_rational(e)))
    return ValidationReport(True, weight_set, None)


def sparsity(net: Network) -> SparsityReport:
    """Count exactly-nonzero weights, per matrix and in total."""
    per = tuple(m.nonzero_count() for m in net.matrices)
    return SparsityReport(sum(per), per)


# --- serialization -----------------------------------------------------------
#
# UTF-8 JSON, one object per network:
#   {"format_version": 1, "input_dim": d, "activation": "relu",
#    "output_scale": "p/q",
#    "matrices": [{"rows": r, "cols": c, "entries": ["p/q", ...]}, ...]}
# Entries are row-major; the writer always emits lowest terms.


def network_to_dict(net: Network) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "input_dim": net.input_dim,
        "activation": net.activation.value,
        "output_scale": format_rational(net.output_scale),
        "matrices": [
            {
                "rows": m.rows,
                "cols": m.cols,
                "entries": [format_rational(e) for e in m.entries],
            }
            for m in net.matrices
        ],
    }


def serialize(net: Network) -> bytes:
    return (json.dumps(network_to_dict(net), indent=1) + "\n").encode("utf-8")


def _expect(payload: dict, key: str, types, location: str):
    if key not in payload:
        raise ParseError(f"missing key {key!r}", location=location)
    value = payload[key]
    if not isinstance(value, types) or isinstance(value, bool):
        raise ParseError(f"key {key!r} has wrong type {type(value).__name__}", location=location)
    return value


def _parse_entry(raw, location: str) -> Fraction:
    if isinstance(raw, bool) or isinstance(raw, float):
        raise ParseError(f"entry must be a rational string or integer, got {raw!r}", location=location)
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, str):
        try:
            return Fraction(raw.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"bad rational {raw!r}", location=location) from exc
    raise ParseError(f"entry must be a rational string or integer, got {raw!r}", location=location)


def network_from_dict(payload: dict, location: str = "$") -> Network:
    if not isinstance(payload, dict):
        raise ParseError("network payload must be a JSON object", location=location)
    version = _expect(payload, "format_version", int, location)
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported format_version {version}", location=location)
    input_dim = _expect(payload, "input_dim", int, location)
    act_raw = _expect(payload, "activation", str, location)
    try:
        activation = ActivationKind(act_raw)
    except ValueError:
        raise ParseError(f"unknown activation {act_raw!r}", location=f"{location}.activation") from None
    scale = _parse_entry(payload.get("output_scale", "1"), f"{location}.output_scale")
    mats_raw = _expect(payload, "matrices", list, location)
    matrices = []
    for i, m in enumerate(mats_raw):
        loc = f"{location}.matrices[{i}]"
        if not isinstance(m, dict):
            raise ParseError("matrix must be a JSON object", location=loc)
        rows = _expect(m, "rows", int, loc)
        cols = _expect(m, "cols", int, loc)
        entries_raw = _expect(m, "entries", list, loc)
        if len(entries_raw) != rows * cols:
            raise DimensionError(
                f"matrix {i} declares {rows}x{cols} but carries {len(entries_raw)} entries",
                layer=i,
            )
        entries = tuple(
            _parse_entry(e, f"{loc}.entries[{j}]") for j, e in enumerate(entries_raw)
        )
        matrices.append(WeightMatrix(rows, cols, entries))
    return Network(input_dim, tuple(matrices), activation, scale)


def deserialize(data: Union[bytes, str]) -> Network:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        payload = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", location=f"line {exc.lineno} col {exc.colno}") from exc
    return network_from_dict(payload)


def load_network(path) -> Network:
    with open(path, "rb") as fh:
        return deserialize(fh.read())


def save_network(net: Network, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(net))
