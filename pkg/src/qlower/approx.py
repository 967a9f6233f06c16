"""Depth-2 indicator-activation approximators on the unit cube.

The construction partitions [0,1]^d into (M+1)^d congruent half-open
cells, detects the cell of the input with one indicator layer per
threshold, selects it with a second indicator layer, and reads out the
target's value at the cell's representative corner. The resulting
network is exactly piecewise constant, and for a (beta, K)-Hoelder
target its sup error is at most K/(M+1)^beta.

Grid convention: the axis thresholds sit at j/(M+1) for j = 1..M, so
cell m along an axis is [m/(M+1), (m+1)/(M+1)) (the last cell closes at
1) and the representative of a cell is its smallest corner, coordinates
m_i/(M+1). Cells are indexed k = sum_i m_i (M+1)^(i-1).

Boundary semantics: points exactly on a threshold belong to the upper
cell. Exact rational evaluation honours this always; 64-bit evaluation
of the materialized network may land inputs within 1 ulp of a threshold
in the neighbouring cell.
"""

from __future__ import annotations

import math
import os
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .errors import CapacityError, DomainError
from .network import ActivationKind, Network, WeightMatrix, evaluate
from .rationals import RationalLike, as_rational

DEFAULT_SELECTOR_CAP = 10**8
CAP_ENV_VAR = "QLOWER_CAP"

NOTE_CERTIFIED = "certified resolution from the Hoelder constants"
NOTE_USER_M = "user-supplied resolution"
NOTE_HEURISTIC = "heuristic sampled-modulus resolution, not a proof"
NOTE_RECONSTRUCTED = "reconstructed from a serialized network"

ZERO = Fraction(0)
ONE = Fraction(1)


def selector_cap(cap: Optional[int] = None) -> int:
    """Effective materialization cap; QLOWER_CAP overrides the default."""
    if cap is not None:
        return cap
    raw = os.environ.get(CAP_ENV_VAR)
    if raw is None:
        return DEFAULT_SELECTOR_CAP
    try:
        value = int(raw)
    except ValueError:
        raise DomainError(f"{CAP_ENV_VAR} must be an integer, got {raw!r}") from None
    if value <= 0:
        raise DomainError(f"{CAP_ENV_VAR} must be positive, got {value}")
    return value


@dataclass(frozen=True)
class GridSpec:
    """Uniform partition of [0,1]^d into (M+1)^d half-open cells."""

    d: int
    M: int

    def __post_init__(self):
        if self.d < 1:
            raise DomainError(f"dimension must be >= 1, got {self.d}")
        if self.M < 1:
            raise DomainError(f"resolution must be >= 1, got {self.M}")

    @property
    def cell_count(self) -> int:
        return (self.M + 1) ** self.d

    @property
    def spacing(self) -> Fraction:
        return Fraction(1, self.M + 1)

    def cell_coords(self, k: int) -> tuple[int, ...]:
        """Digits (m_1, ..., m_d) of cell k in base M+1, axis 1 first."""
        if not 0 <= k < self.cell_count:
            raise DomainError(f"cell index {k} out of range [0, {self.cell_count})")
        base = self.M + 1
        out = []
        for _ in range(self.d):
            k, m = divmod(k, base)
            out.append(m)
        return tuple(out)

    def cell_index_of(self, coords: Sequence[int]) -> int:
        base = self.M + 1
        k = 0
        for i, m in enumerate(coords):
            if not 0 <= m <= self.M:
                raise DomainError(f"cell digit {m} out of range [0, {self.M}]")
            k += m * base**i
        return k

    def representative(self, k: int) -> tuple[Fraction, ...]:
        """Smallest corner of cell k, coordinates m_i/(M+1)."""
        base = self.M + 1
        return tuple(Fraction(m, base) for m in self.cell_coords(k))


def choose_resolution(K: RationalLike, beta: RationalLike, epsilon: RationalLike) -> int:
    """Smallest admissible grid resolution, M = max(1, ceil((K/eps)^(1/beta))).

    Computed exactly when 1/beta is an integer (the common beta = 1 and
    beta = 1/2 cases); otherwise in 64-bit arithmetic.
    """
    K_ = as_rational(K)
    beta_ = as_rational(beta)
    eps_ = as_rational(epsilon)
    if K_ <= 0 or eps_ <= 0:
        raise DomainError(f"K and epsilon must be positive, got K={K}, epsilon={epsilon}")
    if not 0 < beta_ <= 1:
        raise DomainError(f"beta must lie in (0, 1], got {beta}")
    q = K_ / eps_
    inv = 1 / beta_
    if inv.denominator == 1:
        return max(1, math.ceil(q ** inv.numerator))
    return max(1, math.ceil(float(q) ** float(inv)))


def cell_index(x: Sequence[RationalLike], grid: GridSpec) -> int:
    """Index of the cell containing x, by exact rational comparison.

    Along each axis, m_i counts the thresholds j/(M+1) that x_i meets or
    exceeds. Floats are taken at their exact binary value.
    """
    if len(x) != grid.d:
        raise DomainError(f"point has {len(x)} coordinates, grid expects {grid.d}")
    base = grid.M + 1
    coords = []
    for i, raw in enumerate(x):
        v = as_rational(raw)
        if not ZERO <= v <= ONE:
            raise DomainError(f"coordinate {i} = {raw} lies outside [0, 1]")
        coords.append(min(grid.M, math.floor(v * base)))
    return grid.cell_index_of(coords)


def build_threshold_matrix(grid: GridSpec) -> WeightMatrix:
    """First-layer matrix: one all-zero row (the constant-1 code bit after
    the indicator), then per axis i and threshold j the row computing
    x_i - j/(M+1)."""
    d, M = grid.d, grid.M
    base = M + 1
    rows = [[ZERO] * (d + 1)]
    for i in range(1, d + 1):
        for j in range(1, M + 1):
            row = [ZERO] * (d + 1)
            row[0] = Fraction(-j, base)
            row[i] = ONE
            rows.append(row)
    return WeightMatrix.from_rows(rows)


def build_selector_matrix(grid: GridSpec, cap: Optional[int] = None) -> WeightMatrix:
    """Second-layer matrix mapping the threshold code to (r - k)_r.

    Row r carries r in the constant column and -(M+1)^(i-1) in every
    column of axis i's threshold block, so the indicator of the result
    is one-hot at the input's cell index. All entries are integers of
    magnitude below (M+1)^d.
    """
    d, M = grid.d, grid.M
    cells = grid.cell_count
    width = d * M + 1
    effective_cap = selector_cap(cap)
    if cells * width > effective_cap:
        raise CapacityError(
            f"selector matrix needs {cells * width} entries, over the cap of "
            f"{effective_cap}; evaluate implicitly instead or raise {CAP_ENV_VAR}",
            required=cells * width,
            cap=effective_cap,
        )
    axis_weights = [Fraction(-((M + 1) ** i)) for i in range(d)]
    entries: list[Fraction] = []
    for r in range(cells):
        entries.append(Fraction(r))
        for i in range(d):
            entries.extend([axis_weights[i]] * M)
    return WeightMatrix(cells, width, tuple(entries))


@dataclass(frozen=True)
class HolderFunctionSpec:
    """A target on [0,1]^d with claimed Hoelder data |f(x)-f(y)| <= K|x-y|^beta.

    The claim is trusted here; the harness spot-verifies it by sampling.
    ``note`` records where the constants come from.
    """

    evaluator: Callable
    d: int
    beta: float
    K: float
    F: float
    note: str = ""

    def __post_init__(self):
        if self.d < 1:
            raise DomainError(f"dimension must be >= 1, got {self.d}")
        if not 0 < float(self.beta) <= 1:
            raise DomainError(f"beta must lie in (0, 1], got {self.beta}")
        if float(self.K) <= 0 or float(self.F) <= 0:
            raise DomainError("K and F must be positive")


def build_readout(f, grid: GridSpec) -> tuple[Fraction, ...]:
    """Target values at all cell representatives, as exact rationals.

    Accepts a HolderFunctionSpec or a bare callable. Evaluator failures
    propagate annotated with the offending cell index.
    """
    evaluator = f.evaluator if isinstance(f, HolderFunctionSpec) else f
    out = []
    for k in range(grid.cell_count):
        point = grid.representative(k)
        try:
            value = evaluator(point)
        except Exception as exc:
            raise DomainError(f"target evaluator failed at cell {k} ({point})") from exc
        out.append(as_rational(value))
    return tuple(out)


@dataclass(frozen=True)
class ApproximatorBundle:
    """The assembled approximator plus its error certificate.

    ``selector`` and ``network`` are None when materializing the selector
    would exceed the cap; ``evaluate_implicit`` works either way.
    """

    grid: GridSpec
    epsilon: float
    thresholds: WeightMatrix
    selector: Optional[WeightMatrix]
    readout: tuple[Fraction, ...]
    network: Optional[Network]
    holder: Optional[HolderFunctionSpec]
    note: str

    @property
    def certified(self) -> bool:
        bound = self.error_bound
        return bound is not None and bound <= float(self.epsilon)

    @property
    def error_bound(self) -> Optional[float]:
        """K/(M+1)^beta when Hoelder data is attached, else None."""
        if self.holder is None:
            return None
        return float(self.holder.K) / (self.grid.M + 1) ** float(self.holder.beta)

    def certificate_dict(self) -> dict:
        h = self.holder
        return {
            "d": self.grid.d,
            "M": self.grid.M,
            "beta": None if h is None else float(h.beta),
            "K": None if h is None else float(h.K),
            "F": None if h is None else float(h.F),
            "epsilon": float(self.epsilon),
            "bound": self.error_bound,
            "certified": self.certified,
            "note": self.note,
            "materialized": self.network is not None,
        }


def readout_matrix(readout: tuple[Fraction, ...]) -> WeightMatrix:
    return WeightMatrix(1, len(readout), tuple(readout))


def _assemble(grid, epsilon, f_spec, evaluator, note, cap) -> ApproximatorBundle:
    thresholds = build_threshold_matrix(grid)
    readout = build_readout(evaluator, grid)
    try:
        selector = build_selector_matrix(grid, cap)
        network = Network(
            grid.d,
            (thresholds, selector, readout_matrix(readout)),
            ActivationKind.INDICATOR01,
        )
    except CapacityError:
        selector = None
        network = None
        note = note + "; selector left implicit (over the materialization cap)"
    return ApproximatorBundle(
        grid=grid,
        epsilon=float(epsilon),
        thresholds=thresholds,
        selector=selector,
        readout=readout,
        network=network,
        holder=f_spec,
        note=note,
    )


def build_approximator(
    f: HolderFunctionSpec,
    epsilon: RationalLike,
    M_override: Optional[int] = None,
    cap: Optional[int] = None,
) -> ApproximatorBundle:
    """Build the approximator for a Hoelder target at accuracy epsilon.

    The resolution is chosen so that K/(M+1)^beta <= epsilon, which
    certifies the sup-norm error whenever the target really satisfies
    its claimed Hoelder inequality. An explicit M_override skips the
    choice and is recorded in the certificate note.
    """
    eps = as_rational(epsilon)
    if eps <= 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    if M_override is None:
        M = choose_resolution(f.K, f.beta, eps)
        note = NOTE_CERTIFIED
    else:
        if M_override < 1:
            raise DomainError(f"resolution override must be >= 1, got {M_override}")
        M = M_override
        note = NOTE_USER_M
    grid = GridSpec(f.d, M)
    return _assemble(grid, eps, f, f.evaluator, note, cap)


def evaluate_implicit(bundle: ApproximatorBundle, x: Sequence[RationalLike], mode: str = "exact"):
    """Look up the readout value of x's cell without the selector matrix.

    Agrees exactly with evaluating the materialized network in exact
    mode. The cell is always resolved by exact comparison on the given
    coordinates; float mode only converts the result.
    """
    value = bundle.readout[cell_index(x, bundle.grid)]
    if mode == "float":
        return float(value)
    if mode != "exact":
        raise DomainError(f"mode must be 'exact' or 'float', got {mode!r}")
    return value


def _sampled_modulus(evaluator, d: int, h: float, rng: random.Random, pairs: int) -> float:
    """Largest sampled |f(x) - f(y)| over pairs at sup-distance <= h."""
    worst = 0.0
    span = max(0.0, 1.0 - h)
    for n in range(pairs):
        x = [rng.uniform(0.0, span) for _ in range(d)]
        if n % 2 == 0:
            y = [v + h for v in x]
        else:
            y = list(x)
            y[rng.randrange(d)] += h
        diff = abs(float(evaluator(x)) - float(evaluator(y)))
        if diff > worst:
            worst = diff
    return worst


def approximate_continuous(
    evaluator: Callable,
    d: int,
    epsilon: RationalLike,
    M_override: Optional[int] = None,
    seed: int = 0,
    pairs: int = 200,
    max_resolution: int = 4096,
    cap: Optional[int] = None,
) -> ApproximatorBundle:
    """Approximate a continuous target without certified Hoelder data.

    With M_override the bundle is built at that resolution. Otherwise
    the modulus of continuity is estimated by seeded sampling and the
    smallest resolution whose sampled modulus at the cell spacing falls
    below epsilon is used; the certificate is marked as heuristic, since
    sampling can miss the true modulus.
    """
    eps = as_rational(epsilon)
    if eps <= 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    if d < 1:
        raise DomainError(f"dimension must be >= 1, got {d}")
    if M_override is not None:
        if M_override < 1:
            raise DomainError(f"resolution override must be >= 1, got {M_override}")
        grid = GridSpec(d, M_override)
        return _assemble(grid, eps, None, evaluator, NOTE_USER_M, cap)
    eps_f = float(eps)
    for M in range(1, max_resolution + 1):
        rng = random.Random(f"modulus:{seed}:{M}")
        if _sampled_modulus(evaluator, d, 1.0 / (M + 1), rng, pairs) <= eps_f:
            return _assemble(GridSpec(d, M), eps, None, evaluator, NOTE_HEURISTIC, cap)
    raise DomainError(
        f"no resolution up to {max_resolution} reached the sampled target accuracy; "
        "pass an explicit resolution"
    )


def bundle_from_network(net: Network) -> ApproximatorBundle:
    """Rebuild a bundle (grid and readout) from a materialized network.

    The network must have the depth-2 indicator shape produced by
    build_approximator; the grid is inferred from the matrix sizes.
    """
    if net.activation is not ActivationKind.INDICATOR01 or len(net.matrices) != 3:
        raise DomainError("not a depth-2 indicator approximator network")
    w, v, u = net.matrices
    d = net.input_dim
    if (w.rows - 1) % d != 0:
        raise DomainError("threshold matrix rows do not match any grid resolution")
    M = (w.rows - 1) // d
    grid = GridSpec(d, M)
    if v.rows != grid.cell_count or u.rows != 1 or u.cols != grid.cell_count:
        raise DomainError("selector/readout shapes do not match the inferred grid")
    readout = tuple(e * net.output_scale for e in u.entries)
    return ApproximatorBundle(
        grid=grid,
        epsilon=float("nan"),
        thresholds=w,
        selector=v,
        readout=readout,
        network=net,
        holder=None,
        note=NOTE_RECONSTRUCTED,
    )
