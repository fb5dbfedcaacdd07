"""Interior-weight engine: closed forms, lower-bound recurrences, brackets,
retentional point sets, and explicit crowding optimizers.

All closed-form weights are exact rationals; floats appear only at API
boundaries.  The interior weight caps the boundary crowding of positive
representations; its reciprocal is the boundary weight (the positivity CFL
cap).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from .geometry import CanonicalCell, CellKind, gauss_lobatto, lobatto_endpoint_weight
from .polyspace import SpaceKind


class Provenance(Enum):
    CLOSED_FORM_EXACT = "closed_form_exact"
    RECURRENCE = "recurrence"
    STAR_FORMULA = "star_formula"
    SPHERE_FORMULA = "sphere_formula"
    SAMPLED = "sampled"


@dataclass(frozen=True)
class WeightBracket:
    """Certified interval for the optimal interior weight of a (cell, k) pair."""

    cell: str
    degree: int
    lower: Fraction
    upper: Fraction
    provenance: Provenance

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError("bracket lower bound exceeds upper bound")
        if self.provenance in (Provenance.CLOSED_FORM_EXACT,
                               Provenance.SPHERE_FORMULA) and self.lower != self.upper:
            raise ValueError("exact provenance requires lower == upper")

    @property
    def is_exact(self) -> bool:
        return self.lower == self.upper

    @property
    def lower_float(self) -> float:
        return float(self.lower)

    @property
    def upper_float(self) -> float:
        return float(self.upper)


@dataclass(frozen=True)
class RetentionalPoints:
    """Interior points whose positivity enforces the crowding cap.

    Normalized so the cell average is ``sum(w_x p(x)) + W * Bbar(p)`` with
    the face-averaged boundary functional; point weights plus the boundary
    weight sum to one.
    """

    points: np.ndarray          # (n, dim)
    weights: np.ndarray         # (n,)
    boundary_weight: float

    def __post_init__(self):
        if len(self.points) and np.any(self.weights <= 0.0):
            raise ValueError("retentional point weights must be strictly positive")


# ---------------------------------------------------------------------------
# Closed forms and recurrences
# ---------------------------------------------------------------------------


def interval_weight(k: int) -> Fraction:
    """Optimal interior weight for degree-k polynomials on an interval."""
    if k < 0:
        raise ValueError("degree must be >= 0")
    n = k // 2
    return Fraction((n + 1) * (n + 2), 2)


def sphere_weight(dim: int, k: int) -> Fraction:
    """Optimal interior weight for a dim-dimensional ball."""
    if dim < 1 or k < 0:
        raise ValueError("need dim >= 1 and k >= 0")
    n = k // 2
    return Fraction((n // 2 + 1) * (2 * ((n + 1) // 2) + dim), dim)


def star_weight(dim: int, k: int) -> Fraction:
    """Admissible interior weight for any star-regular cell."""
    if dim < 1 or k < 0:
        raise ValueError("need dim >= 1 and k >= 0")
    return Fraction((k // 2 + 1) * ((k + 1) // 2 + dim), dim)


def quadratic_star_weight(dim: int) -> Fraction:
    """Exact optimum for quadratics on star-regular cells (and cubics on boxes)."""
    if dim < 1:
        raise ValueError("need dim >= 1")
    return Fraction(dim + 2, dim)


def cubic_simplex_weight(dim: int) -> Fraction:
    """Exact optimum for cubics on the regular triangle / tetrahedron."""
    if dim == 2:
        return Fraction(20, 9)
    if dim == 3:
        return Fraction(11, 6)
    raise ValueError("cubic simplex weight is defined for dim in {2, 3}")


def box_lower_bound(dim: int, k: int) -> Fraction:
    """Lower bound for the box optimum, by restriction to a face."""
    if dim < 1:
        raise ValueError("need dim >= 1")
    m = interval_weight(k)
    for d in range(2, dim + 1):
        m = (1 + (d - 1) * m) / d
    return m


def simplex_lower_bound(dim: int, k: int) -> Fraction:
    """Lower bound for the simplex optimum, by homogeneous extension of a
    face-supported polynomial."""
    if dim < 1:
        raise ValueError("need dim >= 1")
    m = interval_weight(k)
    for d in range(2, dim + 1):
        m = Fraction(d + k, d) * (1 + d * Fraction(d - 1, d + k - 1) * m) / (1 + d)
    return m


def tabulated_weight(cell: CanonicalCell | str, k: int,
                     space_kind: SpaceKind = SpaceKind.TOTAL_DEGREE) -> WeightBracket:
    """Best certified bracket (or exact value) for a supported (cell, k) pair."""
    if isinstance(cell, str):
        cell = CanonicalCell.from_name(cell)
    if k < 0:
        raise ValueError("degree must be >= 0")
    name = cell.name
    if space_kind is SpaceKind.TENSOR_PRODUCT:
        if cell.kind not in (CellKind.BOX, CellKind.INTERVAL):
            raise ValueError("tensor-product weights are defined on boxes")
        w = interval_weight(k)
        return WeightBracket(name, k, w, w, Provenance.CLOSED_FORM_EXACT)
    if cell.kind is CellKind.INTERVAL:
        w = interval_weight(k)
        return WeightBracket(name, k, w, w, Provenance.CLOSED_FORM_EXACT)
    if cell.kind is CellKind.SPHERE:
        w = sphere_weight(cell.dim, k)
        return WeightBracket(name, k, w, w, Provenance.SPHERE_FORMULA)
    if cell.kind is CellKind.BOX:
        if k <= 1:
            return WeightBracket(name, k, Fraction(1), Fraction(1),
                                 Provenance.CLOSED_FORM_EXACT)
        if k <= 3:
            w = quadratic_star_weight(cell.dim)
            return WeightBracket(name, k, w, w, Provenance.CLOSED_FORM_EXACT)
        lo = box_lower_bound(cell.dim, k)
        hi = sphere_weight(cell.dim, k)
        return WeightBracket(name, k, lo, hi, Provenance.RECURRENCE)
    # simplex
    if k <= 1:
        return WeightBracket(name, k, Fraction(1), Fraction(1),
                             Provenance.CLOSED_FORM_EXACT)
    if k == 2:
        w = quadratic_star_weight(cell.dim)
        return WeightBracket(name, k, w, w, Provenance.CLOSED_FORM_EXACT)
    if k == 3:
        w = cubic_simplex_weight(cell.dim)
        return WeightBracket(name, k, w, w, Provenance.CLOSED_FORM_EXACT)
    lo = simplex_lower_bound(cell.dim, k)
    if cell.dim == 2:
        # Zhang-Xia-Shu boundary-weighted rule for triangles: tightest stated
        # admissible bound, below the generic star formula for odd k.
        hi = min(interval_weight(k), star_weight(2, k))
    else:
        hi = star_weight(3, k)
    return WeightBracket(name, k, lo, hi, Provenance.RECURRENCE)


SUPPORTED_CELLS = ("interval", "box2", "box3", "triangle", "tetrahedron",
                   "sphere1", "sphere2", "sphere3")


def weight_table(cells=SUPPORTED_CELLS, degree_max: int = 11,
                 space_kind: SpaceKind = SpaceKind.TOTAL_DEGREE) -> list[WeightBracket]:
    return [tabulated_weight(c, k, space_kind)
            for c in cells for k in range(degree_max + 1)]


# ---------------------------------------------------------------------------
# Retentional (interior) points
# ---------------------------------------------------------------------------


def _simplex_cubic_points(cell: CanonicalCell) -> RetentionalPoints:
    """Centroid plus face centers, with weights solved from exactness on the
    isometry-invariant cubics (a 3x3 linear system in w_c, w_f, W)."""
    fs = cell.face_set(3)
    nfaces = len(fs)
    centers = np.stack([f.normal for f in fs.faces])  # face centers at radius 1
    rule = cell.volume_rule(8)

    def cavg(vals):
        return float(vals @ rule.weights) / cell.volume

    def bbar(fvals_fn):
        acc = 0.0
        for f in fs.faces:
            acc += float(fvals_fn(f.rule.points) @ f.rule.weights) / f.measure
        return acc / nfaces

    q = lambda x: np.sum(x**2, axis=1)
    if cell.dim == 2:
        cub = lambda x: 3.0 * x[:, 0] ** 2 * x[:, 1] - x[:, 1] ** 3
    else:
        cub = lambda x: x[:, 0] * x[:, 1] * x[:, 2]
    # rows: constants, invariant quadratic, invariant cubic
    A = np.array([
        [1.0, float(nfaces), 1.0],
        [0.0, float(np.sum(q(centers))), bbar(lambda p: q(p))],
        [0.0, float(np.sum(cub(centers))), bbar(lambda p: cub(p))],
    ])
    b = np.array([1.0, cavg(q(rule.points)), cavg(cub(rule.points))])
    w_c, w_f, w_bnd = np.linalg.solve(A, b)
    pts = np.concatenate([np.zeros((1, cell.dim)), centers])
    wts = np.concatenate([[w_c], np.full(nfaces, w_f)])
    return RetentionalPoints(pts, wts, float(w_bnd))


def retentional_points(cell: CanonicalCell | str, k: int) -> RetentionalPoints:
    """Optimal interior point set for the supported (cell, k) pairs.

    Interval: interior Gauss-Lobatto points.  k <= 1: empty (boundary nodes
    suffice).  k = 2 anywhere star-regular, and k = 3 on boxes: the cell
    center.  k = 3 on simplices: centroid plus face centers.
    """
    if isinstance(cell, str):
        cell = CanonicalCell.from_name(cell)
    if k < 0:
        raise ValueError("degree must be >= 0")
    if cell.kind is CellKind.INTERVAL:
        n = k // 2
        rule = gauss_lobatto(n)
        w_end = float(lobatto_endpoint_weight(n))
        return RetentionalPoints(rule.points[1:-1], rule.weights[1:-1],
                                 2.0 * w_end)
    if k <= 1:
        return RetentionalPoints(np.zeros((0, cell.dim)), np.zeros(0), 1.0)
    if k == 2 or (k == 3 and cell.kind in (CellKind.BOX, CellKind.SPHERE)):
        w_bnd = float(1 / quadratic_star_weight(cell.dim))
        return RetentionalPoints(np.zeros((1, cell.dim)),
                                 np.array([1.0 - w_bnd]), w_bnd)
    if k == 3 and cell.kind is CellKind.SIMPLEX:
        return _simplex_cubic_points(cell)
    raise ValueError(
        f"no retentional point set for ({cell.name}, k={k}); use "
        "tabulated_weight and limit the retentional directly")


# ---------------------------------------------------------------------------
# Explicit crowding optimizers (mutual confirmation)
# ---------------------------------------------------------------------------


def interval_optimizer(n: int):
    """The squared nodal polynomial through the n interior Lobatto points."""
    xi = gauss_lobatto(n).points[1:-1, 0]

    def u(x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 2:
            x = x[:, 0]
        out = np.ones_like(x)
        for t in xi:
            out = out * (x - t) ** 2
        return out

    return u


def simplex_cubic_optimizer(cell: CanonicalCell):
    """The isometry-invariant definite cubic vanishing at the centroid and the
    face centers; solved from a small linear system."""
    if cell.kind is not CellKind.SIMPLEX:
        raise ValueError("cubic optimizer is defined on simplices")
    fs = cell.face_set(3)
    centers = np.stack([f.normal for f in fs.faces])
    q = lambda x: np.sum(np.atleast_2d(x) ** 2, axis=1)
    if cell.dim == 2:
        cub = lambda x: 3.0 * np.atleast_2d(x)[:, 0] ** 2 * np.atleast_2d(x)[:, 1] \
            - np.atleast_2d(x)[:, 1] ** 3
    else:
        cub = lambda x: np.prod(np.atleast_2d(x), axis=1)
    # a*1 + b*q + c*cub zero at origin forces a = 0; zero at the (symmetric)
    # face centers pins b : c.
    qc = float(q(centers)[0])
    cc = float(cub(centers)[0])
    b, c = 1.0, -qc / cc

    def u(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return b * q(x) + c * cub(x)

    # definite up to sign; normalize to nonnegative
    probe = u(cell.sample_grid(12))
    sign = 1.0 if probe.sum() >= 0 else -1.0
    return lambda x: sign * u(x)


def sample_lower_bound(cell, k, samples, seed):
    """Sampled lower bound for the optimal interior weight (see
    :mod:`posflow.sampling` for the generator details)."""
    from .sampling import sample_lower_bound as _impl
    return _impl(cell, k, samples, seed)


def crowding_of_callable(cell: CanonicalCell, f, degree: int) -> float:
    """Boundary crowding of a callable, via quadrature exact to ``degree``."""
    def _vals(pts):
        return np.asarray(f(pts), dtype=float).ravel()

    vol = cell.volume_rule(degree)
    cavg = float(_vals(vol.points) @ vol.weights) / cell.volume
    if cell.kind is CellKind.SPHERE:
        bnd = cell.boundary_rule(degree)
        bavg = float(_vals(bnd.points) @ bnd.weights) / cell.boundary_area
    else:
        fs = cell.face_set(degree)
        bavg = 0.0
        for face in fs.faces:
            bavg += float(_vals(face.rule.points) @ face.rule.weights) / face.measure
        bavg /= len(fs)
    return bavg / cavg
