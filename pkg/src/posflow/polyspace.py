"""Modal polynomial spaces on canonical cells and the cell functionals.

The basis is orthonormal under the cell-average inner product, with the
constant mode first, so the cell average of a polynomial is just its first
coefficient.  On the interval this is the shifted Legendre family in closed
form; on other cells an orthonormal basis is produced by QR against a
quadrature exact to twice the space degree.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .geometry import CanonicalCell, CellKind


class SpaceKind(Enum):
    TOTAL_DEGREE = "total_degree"
    TENSOR_PRODUCT = "tensor_product"


def total_degree_dim(k: int, d: int) -> int:
    return math.comb(k + d, d)


def _multi_indices(k: int, d: int, kind: SpaceKind) -> list[tuple[int, ...]]:
    if d == 1:
        return [(i,) for i in range(k + 1)]
    if kind is SpaceKind.TENSOR_PRODUCT:
        idx = list(itertools.product(range(k + 1), repeat=d))
    else:
        idx = [a for a in itertools.product(range(k + 1), repeat=d) if sum(a) <= k]
    idx.sort(key=lambda a: (sum(a), a))
    return idx


class PolySpace:
    """Polynomials of degree <= k on a canonical cell, with an orthonormal
    modal basis (first mode constant)."""

    def __init__(self, cell: CanonicalCell, degree: int,
                 kind: SpaceKind = SpaceKind.TOTAL_DEGREE):
        if degree < 0:
            raise ValueError("degree must be >= 0")
        if kind is SpaceKind.TENSOR_PRODUCT and cell.kind not in (
                CellKind.BOX, CellKind.INTERVAL):
            raise ValueError("tensor-product spaces are defined on boxes")
        self.cell = cell
        self.degree = degree
        self.kind = kind
        self.indices = _multi_indices(degree, cell.dim, kind)
        self.dim = len(self.indices)
        self._is_interval = cell.kind is CellKind.INTERVAL
        if self._is_interval:
            self._transform = None
        else:
            self._build_orthonormal_transform()
        # cache of common functionals
        self._bbar_face = None

    @property
    def is_interval(self) -> bool:
        return self._is_interval

    # -- basis evaluation ---------------------------------------------------

    def _legendre_products(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the raw (non-orthonormal) Legendre-product family."""
        lo, hi = self.cell.bounding_box
        t = 2.0 * (x - lo) / (hi - lo) - 1.0
        kmax = max(max(a) for a in self.indices)
        vander = [np.polynomial.legendre.legvander(t[:, d], kmax)
                  for d in range(self.cell.dim)]
        cols = [np.prod([vander[d][:, a[d]] for d in range(self.cell.dim)], axis=0)
                for a in self.indices]
        return np.stack(cols, axis=1)

    def _build_orthonormal_transform(self) -> None:
        rule = self.cell.volume_rule(2 * self.degree)
        F = self._legendre_products(rule.points)
        sw = np.sqrt(rule.weights / self.cell.volume)
        Q, R = np.linalg.qr(sw[:, None] * F)
        signs = np.sign(np.diag(R))
        signs[signs == 0.0] = 1.0
        self._transform = np.linalg.solve(R, np.diag(signs))

    def eval_basis(self, x: np.ndarray) -> np.ndarray:
        """Basis values at points ``x`` of shape (n, dim); returns (n, dim_V)."""
        x = np.asarray(x, dtype=float).reshape(-1, self.cell.dim)
        if self._is_interval:
            t = 2.0 * x[:, 0] - 1.0
            V = np.polynomial.legendre.legvander(t, self.degree)
            scale = np.sqrt(2.0 * np.arange(self.degree + 1) + 1.0)
            return V * scale
        return self._legendre_products(x) @ self._transform

    def eval_basis_deriv(self, x: np.ndarray) -> np.ndarray:
        """d/dx of the basis on the interval; shape (n, dim_V)."""
        if not self._is_interval:
            raise NotImplementedError("derivatives are provided for interval spaces")
        x = np.asarray(x, dtype=float).reshape(-1, 1)
        t = 2.0 * x[:, 0] - 1.0
        out = np.zeros((len(t), self.degree + 1))
        for j in range(1, self.degree + 1):
            c = np.zeros(j + 1)
            c[j] = 1.0
            dc = np.polynomial.legendre.legder(c)
            out[:, j] = np.polynomial.legendre.legval(t, dc) * 2.0
        scale = np.sqrt(2.0 * np.arange(self.degree + 1) + 1.0)
        return out * scale

    # -- functionals of the basis -------------------------------------------

    def basis_boundary_face_average(self) -> np.ndarray:
        """Vector of arithmetic-mean-of-face-averages of each basis function."""
        if self._bbar_face is None:
            fs = self.cell.face_set(self.degree)
            acc = np.zeros(self.dim)
            for f in fs.faces:
                vals = self.eval_basis(f.rule.points)
                acc += (f.rule.weights @ vals) / f.measure
            self._bbar_face = acc / len(fs)
        return self._bbar_face

    def gram_matrix(self) -> np.ndarray:
        rule = self.cell.volume_rule(2 * self.degree)
        V = self.eval_basis(rule.points)
        return (V.T * rule.weights) @ V / self.cell.volume


@dataclass
class Polynomial:
    """Value type: modal coefficients over a PolySpace basis."""

    space: PolySpace
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.space.dim,):
            raise ValueError(
                f"coefficient length {self.coeffs.shape} != space dim {self.space.dim}")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return evaluate(self, x)


def evaluate(p: Polynomial, x: np.ndarray) -> np.ndarray:
    """Point values of ``p``; scalar in, scalar out."""
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0 if p.space.cell.dim == 1 else arr.ndim == 1
    pts = np.atleast_2d(arr.reshape(-1, p.space.cell.dim))
    vals = p.space.eval_basis(pts) @ p.coeffs
    return float(vals[0]) if scalar else vals


def cell_average(p: Polynomial) -> float:
    """Mean of ``p`` over the cell; the first modal coefficient."""
    return float(p.coeffs[0])


def boundary_face_average(p: Polynomial) -> float:
    """Arithmetic average over faces of the face averages of ``p``.

    On the interval this is (p(0) + p(1)) / 2.  Sphere cells have no face
    decomposition and are rejected; use :func:`boundary_average` there.
    """
    if p.space.cell.kind is CellKind.SPHERE:
        raise ValueError("sphere cells have no polytope faces")
    return float(p.space.basis_boundary_face_average() @ p.coeffs)


def boundary_average(p: Polynomial) -> float:
    """Uniform average of ``p`` over the whole cell boundary.

    Coincides with :func:`boundary_face_average` on regular polytopes (all
    faces congruent) and extends the functional to spheres.
    """
    cell = p.space.cell
    rule = cell.boundary_rule(p.space.degree)
    vals = evaluate(p, rule.points)
    return float(vals @ rule.weights) / cell.boundary_area


def boundary_crowding(p: Polynomial) -> float:
    """Ratio of the boundary face average to the cell average."""
    c = cell_average(p)
    if c <= 0.0:
        raise ValueError("crowding undefined: cell average must be positive")
    return boundary_face_average(p) / c


def project(f, space: PolySpace) -> Polynomial:
    """L2-orthogonal projection of a callable onto the space.

    Uses a volume rule exact to 2k, so members of the space round-trip.
    ``f`` receives points of shape (n, dim) (or (n,) on the interval).
    """
    rule = space.cell.volume_rule(2 * space.degree)
    pts = rule.points[:, 0] if space.cell.dim == 1 else rule.points
    fv = np.asarray(f(pts), dtype=float)
    V = space.eval_basis(rule.points)
    coeffs = (V.T * rule.weights) @ fv / space.cell.volume
    return Polynomial(space, coeffs)
