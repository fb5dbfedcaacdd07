"""Canonical mesh cells, their quadrature rules, and face decompositions.

Two conventions coexist on purpose:

* the solver's canonical interval is ``[0, 1]``;
* star-regular cells (boxes, regular simplices, spheres) are centered at the
  origin and scaled so that ``n . x = 1`` on the boundary (inradius 1), which
  is the normalization the boundary-weight table assumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np
from scipy.special import roots_jacobi


class CellKind(Enum):
    INTERVAL = "interval"
    BOX = "box"
    SIMPLEX = "simplex"
    SPHERE = "sphere"


@dataclass(frozen=True)
class QuadratureRule:
    """Positive-weight rule; ``weights`` sum to the measure of the domain."""

    points: np.ndarray  # (n, dim)
    weights: np.ndarray  # (n,)
    exact_degree: int

    def __post_init__(self):
        if self.points.ndim != 2 or len(self.points) != len(self.weights):
            raise ValueError("points must be (n, dim) matching weights")
        if np.any(self.weights <= 0.0):
            raise ValueError("quadrature weights must be strictly positive")

    @property
    def measure(self) -> float:
        return float(np.sum(self.weights))

    def integrate(self, values: np.ndarray) -> float | np.ndarray:
        return values @ self.weights


@dataclass(frozen=True)
class Face:
    measure: float
    rule: QuadratureRule
    normal: np.ndarray  # outward unit normal


@dataclass(frozen=True)
class FaceSet:
    faces: tuple[Face, ...]

    @property
    def boundary_area(self) -> float:
        return sum(f.measure for f in self.faces)

    def __len__(self) -> int:
        return len(self.faces)


def gauss_legendre(n: int) -> QuadratureRule:
    """Gauss-Legendre rule on [0, 1]; exact for degree <= 2n - 1."""
    if n < 1:
        raise ValueError("gauss_legendre requires n >= 1")
    x, w = np.polynomial.legendre.leggauss(n)
    pts = ((x + 1.0) / 2.0).reshape(-1, 1)
    return QuadratureRule(pts, w / 2.0, exact_degree=2 * n - 1)


def lobatto_endpoint_weight(n_interior: int) -> Fraction:
    """Endpoint weight of the [0,1] Gauss-Lobatto rule, as an exact rational."""
    return Fraction(1, (n_interior + 1) * (n_interior + 2))


def gauss_lobatto(n_interior: int) -> QuadratureRule:
    """Gauss-Lobatto rule on [0, 1], both endpoints included.

    With ``n`` interior points the rule is exact for degree <= 2n + 1 and the
    endpoint weight is exactly ``1 / ((n+1)(n+2))`` (rational before rounding).
    """
    if n_interior < 0:
        raise ValueError("gauss_lobatto requires n_interior >= 0")
    n = n_interior
    n_nodes = n + 2
    w_end = float(lobatto_endpoint_weight(n))
    if n == 0:
        pts = np.array([[0.0], [1.0]])
        return QuadratureRule(pts, np.array([0.5, 0.5]), exact_degree=1)
    # Interior nodes are roots of P'_{n+1}, i.e. of the Jacobi(1,1) polynomial.
    xi, _ = roots_jacobi(n, 1.0, 1.0)
    pn1 = np.polynomial.legendre.legval(xi, [0.0] * (n_nodes - 1) + [1.0])
    w_int = 2.0 / (n_nodes * (n_nodes - 1) * pn1**2)
    x = np.concatenate(([-1.0], xi, [1.0]))
    w = np.concatenate(([2.0 * w_end], w_int / 2.0 * 2.0, [2.0 * w_end]))
    # Above arrays live on [-1,1] (weights sum 2); map to [0,1].
    pts = ((x + 1.0) / 2.0).reshape(-1, 1)
    w01 = w / 2.0
    w01[0] = w_end
    w01[-1] = w_end
    return QuadratureRule(pts, w01, exact_degree=2 * n + 1)


def _tensor_rule(rules_1d: list[tuple[np.ndarray, np.ndarray]], exact_degree: int) -> QuadratureRule:
    """Tensor product of 1D (nodes, weights) pairs."""
    pts = np.array([[x] for x in rules_1d[0][0]])
    wts = rules_1d[0][1].copy()
    for x, w in rules_1d[1:]:
        pts = np.concatenate(
            [np.repeat(pts, len(x), axis=0), np.tile(x.reshape(-1, 1), (len(pts), 1))],
            axis=1,
        )
        wts = np.outer(wts, w).ravel()
    return QuadratureRule(pts, wts, exact_degree)


def _gl_pm1(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(max(n, 1))
    return x, w


def _unit_simplex_rule(dim: int, degree: int) -> QuadratureRule:
    """Collapsed-coordinate rule on the unit right simplex {x >= 0, sum x <= 1}."""
    m = max(1, (degree + 2) // 2)
    if dim == 2:
        su, wu = roots_jacobi(m, 1.0, 0.0)  # weight (1-u) after mapping
        sv, wv = _gl_pm1(m)
        u = (su + 1.0) / 2.0
        v = (sv + 1.0) / 2.0
        wu = wu / 4.0  # absorbs the (1-u) jacobian on [0,1]
        wv = wv / 2.0
        U, V = np.meshgrid(u, v, indexing="ij")
        W = np.outer(wu, wv)
        x = U
        y = V * (1.0 - U)
        pts = np.stack([x.ravel(), y.ravel()], axis=1)
        return QuadratureRule(pts, W.ravel(), exact_degree=degree)
    if dim == 3:
        su, wu = roots_jacobi(m, 2.0, 0.0)
        sv, wv = roots_jacobi(m, 1.0, 0.0)
        sw, ww = _gl_pm1(m)
        u = (su + 1.0) / 2.0
        v = (sv + 1.0) / 2.0
        w = (sw + 1.0) / 2.0
        wu = wu / 8.0
        wv = wv / 4.0
        ww = ww / 2.0
        U, V, W3 = np.meshgrid(u, v, w, indexing="ij")
        Wt = np.einsum("i,j,k->ijk", wu, wv, ww)
        x = U
        y = V * (1.0 - U)
        z = W3 * (1.0 - U) * (1.0 - V)
        pts = np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1)
        return QuadratureRule(pts, Wt.ravel(), exact_degree=degree)
    raise ValueError(f"unsupported simplex dimension {dim}")


def _map_simplex_rule(rule: QuadratureRule, verts: np.ndarray) -> QuadratureRule:
    """Affine-map a unit right-simplex rule onto the simplex with rows `verts`."""
    p0 = verts[0]
    A = (verts[1:] - p0).T  # (dim, dim)
    det = abs(np.linalg.det(A))
    pts = rule.points @ A.T + p0
    return QuadratureRule(pts, rule.weights * det, rule.exact_degree)


def _mapped_triangle_face_rule(rule: QuadratureRule, verts3d: np.ndarray) -> QuadratureRule:
    """Map a unit right-triangle rule onto a planar triangle in 3D."""
    p0, p1, p2 = verts3d
    e1, e2 = p1 - p0, p2 - p0
    scale = float(np.linalg.norm(np.cross(e1, e2)))  # = 2 * face area
    pts = p0 + np.outer(rule.points[:, 0], e1) + np.outer(rule.points[:, 1], e2)
    return QuadratureRule(pts, rule.weights * scale, rule.exact_degree)


def _circle_rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
    m = degree + 2
    phi = 2.0 * np.pi * np.arange(m) / m
    pts = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    return pts, np.full(m, 2.0 * np.pi / m)


def _sphere_surface_rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
    mt = max(1, (degree + 2) // 2)
    mphi = degree + 2
    t, wt = _gl_pm1(mt)
    phi = 2.0 * np.pi * np.arange(mphi) / mphi
    st = np.sqrt(1.0 - t**2)
    T, P = np.meshgrid(np.arange(mt), np.arange(mphi), indexing="ij")
    pts = np.stack(
        [
            st[T] * np.cos(phi[P]),
            st[T] * np.sin(phi[P]),
            np.broadcast_to(t[:, None], T.shape),
        ],
        axis=-1,
    ).reshape(-1, 3)
    w = (np.outer(wt, np.full(mphi, 2.0 * np.pi / mphi))).ravel()
    return pts, w


def _simplex_vertices(dim: int) -> np.ndarray:
    if dim == 2:
        # Equilateral triangle, inradius 1, circumradius 2.
        ang = np.array([0.5, 7.0 / 6.0, 11.0 / 6.0]) * np.pi
        return 2.0 * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    if dim == 3:
        # Regular tetrahedron, inradius 1, circumradius 3.
        v = np.array(
            [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float
        )
        return math.sqrt(3.0) * v
    raise ValueError(f"unsupported simplex dimension {dim}")


_SPHERE_VOLUME = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}
_SPHERE_AREA = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}


@dataclass(frozen=True)
class CanonicalCell:
    """A canonical mesh cell; immutable and safe to share."""

    kind: CellKind
    dim: int
    vertices: np.ndarray | None = None

    # -- constructors ------------------------------------------------------

    @staticmethod
    def interval() -> "CanonicalCell":
        return CanonicalCell(CellKind.INTERVAL, 1, np.array([[0.0], [1.0]]))

    @staticmethod
    def box(dim: int) -> "CanonicalCell":
        if dim not in (2, 3):
            raise ValueError("box dimension must be 2 or 3")
        corners = np.array(
            np.meshgrid(*([[-1.0, 1.0]] * dim), indexing="ij")
        ).reshape(dim, -1).T
        return CanonicalCell(CellKind.BOX, dim, corners)

    @staticmethod
    def simplex(dim: int) -> "CanonicalCell":
        if dim not in (2, 3):
            raise ValueError("simplex dimension must be 2 or 3")
        return CanonicalCell(CellKind.SIMPLEX, dim, _simplex_vertices(dim))

    @staticmethod
    def sphere(dim: int) -> "CanonicalCell":
        if dim not in (1, 2, 3):
            raise ValueError("sphere dimension must be 1, 2 or 3")
        return CanonicalCell(CellKind.SPHERE, dim, None)

    @staticmethod
    def from_name(name: str) -> "CanonicalCell":
        table = {
            "interval": lambda: CanonicalCell.interval(),
            "box2": lambda: CanonicalCell.box(2),
            "box3": lambda: CanonicalCell.box(3),
            "triangle": lambda: CanonicalCell.simplex(2),
            "tetrahedron": lambda: CanonicalCell.simplex(3),
            "sphere1": lambda: CanonicalCell.sphere(1),
            "sphere2": lambda: CanonicalCell.sphere(2),
            "sphere3": lambda: CanonicalCell.sphere(3),
        }
        try:
            return table[name]()
        except KeyError:
            raise ValueError(f"unknown cell name {name!r}") from None

    @property
    def name(self) -> str:
        if self.kind is CellKind.INTERVAL:
            return "interval"
        if self.kind is CellKind.BOX:
            return f"box{self.dim}"
        if self.kind is CellKind.SIMPLEX:
            return "triangle" if self.dim == 2 else "tetrahedron"
        return f"sphere{self.dim}"

    @property
    def is_star_regular(self) -> bool:
        """Centered with n . x = 1 on the boundary (everything but [0,1])."""
        return self.kind is not CellKind.INTERVAL

    # -- measures ----------------------------------------------------------

    @property
    def volume(self) -> float:
        if self.kind is CellKind.INTERVAL:
            return 1.0
        if self.kind is CellKind.BOX:
            return 2.0**self.dim
        if self.kind is CellKind.SIMPLEX:
            return 3.0 * math.sqrt(3.0) if self.dim == 2 else 8.0 * math.sqrt(3.0)
        return _SPHERE_VOLUME[self.dim]

    @property
    def boundary_area(self) -> float:
        if self.kind is CellKind.INTERVAL:
            return 2.0  # counting measure on the two endpoints
        if self.kind is CellKind.BOX:
            return 2.0 * self.dim * 2.0 ** (self.dim - 1)
        if self.kind is CellKind.SIMPLEX:
            return 6.0 * math.sqrt(3.0) if self.dim == 2 else 24.0 * math.sqrt(3.0)
        return _SPHERE_AREA[self.dim]

    @property
    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind is CellKind.SPHERE:
            return -np.ones(self.dim), np.ones(self.dim)
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return lo, hi

    # -- quadrature --------------------------------------------------------

    def volume_rule(self, degree: int) -> QuadratureRule:
        """Rule over the cell, exact for polynomials up to ``degree``."""
        degree = max(degree, 1)
        m = (degree + 2) // 2
        if self.kind is CellKind.INTERVAL:
            return gauss_legendre(m)
        if self.kind is CellKind.BOX:
            x, w = _gl_pm1(m)
            return _tensor_rule([(x, w)] * self.dim, degree)
        if self.kind is CellKind.SIMPLEX:
            return _map_simplex_rule(_unit_simplex_rule(self.dim, degree), self.vertices)
        return self._ball_rule(degree)

    def _ball_rule(self, degree: int) -> QuadratureRule:
        d = self.dim
        if d == 1:
            x, w = _gl_pm1((degree + 2) // 2)
            return QuadratureRule(x.reshape(-1, 1), w, degree)
        mr = max(1, (degree + 2) // 2)
        t, wt = roots_jacobi(mr, 0.0, float(d - 1))
        r = (t + 1.0) / 2.0
        wr = wt / 2.0**d
        if d == 2:
            ang_pts, ang_w = _circle_rule(degree)
        else:
            ang_pts, ang_w = _sphere_surface_rule(degree)
        pts = (r[:, None, None] * ang_pts[None, :, :]).reshape(-1, d)
        w = np.outer(wr, ang_w).ravel()
        return QuadratureRule(pts, w, degree)

    def boundary_rule(self, degree: int) -> QuadratureRule:
        """Single rule over the whole boundary (weights sum to |dK|)."""
        if self.kind is CellKind.SPHERE:
            d = self.dim
            if d == 1:
                pts = np.array([[-1.0], [1.0]])
                return QuadratureRule(pts, np.array([1.0, 1.0]), degree)
            if d == 2:
                pts, w = _circle_rule(degree)
            else:
                pts, w = _sphere_surface_rule(degree)
            return QuadratureRule(pts, w, degree)
        fs = self.face_set(degree)
        pts = np.concatenate([f.rule.points for f in fs.faces])
        w = np.concatenate([f.rule.weights for f in fs.faces])
        return QuadratureRule(pts, w, degree)

    def face_set(self, surface_degree: int) -> FaceSet:
        """Face decomposition with per-face rules exact to ``surface_degree``."""
        if self.kind is CellKind.SPHERE:
            raise ValueError("sphere cells have no polytope faces")
        deg = max(surface_degree, 1)
        m = (deg + 2) // 2
        if self.kind is CellKind.INTERVAL:
            faces = (
                Face(1.0, QuadratureRule(np.array([[0.0]]), np.array([1.0]), deg),
                     np.array([-1.0])),
                Face(1.0, QuadratureRule(np.array([[1.0]]), np.array([1.0]), deg),
                     np.array([1.0])),
            )
            return FaceSet(faces)
        if self.kind is CellKind.BOX:
            x, w = _gl_pm1(m)
            faces = []
            for axis in range(self.dim):
                for side in (-1.0, 1.0):
                    if self.dim == 2:
                        pts = np.zeros((len(x), 2))
                        pts[:, axis] = side
                        pts[:, 1 - axis] = x
                        rule = QuadratureRule(pts, w.copy(), deg)
                    else:
                        others = [a for a in range(3) if a != axis]
                        sub = _tensor_rule([(x, w), (x, w)], deg)
                        pts = np.zeros((len(sub.points), 3))
                        pts[:, axis] = side
                        pts[:, others[0]] = sub.points[:, 0]
                        pts[:, others[1]] = sub.points[:, 1]
                        rule = QuadratureRule(pts, sub.weights, deg)
                    normal = np.zeros(self.dim)
                    normal[axis] = side
                    faces.append(Face(2.0 ** (self.dim - 1), rule, normal))
            return FaceSet(tuple(faces))
        # simplex
        verts = self.vertices
        faces = []
        if self.dim == 2:
            x, w = _gl_pm1(m)
            t = (x + 1.0) / 2.0
            wt = w / 2.0
            for i in range(3):
                a, b = verts[(i + 1) % 3], verts[(i + 2) % 3]
                length = float(np.linalg.norm(b - a))
                pts = a + np.outer(t, b - a)
                rule = QuadratureRule(pts, wt * length, deg)
                normal = -verts[i] / np.linalg.norm(verts[i])
                faces.append(Face(length, rule, normal))
        else:
            tri = _unit_simplex_rule(2, deg)
            for i in range(4):
                fverts = np.delete(verts, i, axis=0)
                rule = _mapped_triangle_face_rule(tri, fverts)
                normal = -verts[i] / np.linalg.norm(verts[i])
                faces.append(Face(float(np.sum(rule.weights)), rule, normal))
        return FaceSet(tuple(faces))

    # -- dense sample grids (for positivity/zero-set checks) ---------------

    def sample_grid(self, n_per_axis: int = 24) -> np.ndarray:
        if self.kind is CellKind.INTERVAL:
            return np.linspace(0.0, 1.0, n_per_axis).reshape(-1, 1)
        if self.kind is CellKind.BOX:
            axes = [np.linspace(-1.0, 1.0, n_per_axis)] * self.dim
            return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        if self.kind is CellKind.SIMPLEX:
            m = n_per_axis
            bary = []
            if self.dim == 2:
                for i in range(m + 1):
                    for j in range(m + 1 - i):
                        bary.append((i / m, j / m, (m - i - j) / m))
            else:
                for i in range(m + 1):
                    for j in range(m + 1 - i):
                        for k in range(m + 1 - i - j):
                            bary.append((i / m, j / m, k / m, (m - i - j - k) / m))
            return np.array(bary) @ self.vertices
        # ball: radial shells of the boundary grid plus the center
        if self.dim == 1:
            return np.linspace(-1.0, 1.0, n_per_axis).reshape(-1, 1)
        if self.dim == 2:
            ang, _ = _circle_rule(2 * n_per_axis)
        else:
            ang, _ = _sphere_surface_rule(n_per_axis)
        radii = np.linspace(0.0, 1.0, n_per_axis // 2 + 2)[1:]
        pts = (radii[:, None, None] * ang[None, :, :]).reshape(-1, self.dim)
        return np.concatenate([np.zeros((1, self.dim)), pts])
