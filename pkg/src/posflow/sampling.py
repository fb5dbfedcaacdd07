"""Sampling oracle for the optimal interior weight.

Maximizes boundary crowding over generated positive representations:
sums of squares, products of squared affine forms, positive combinations,
and (on simplices) free coefficient vectors made certifiably nonnegative by
shifting with their minimum Bernstein coefficient.  Every reported value is
the crowding of a representation that is positive on the cell by
construction or by certificate, so the result is a true lower bound.

The candidate stream is processed in fixed-size blocks and depends only on
the seed and on earlier blocks, so the result is deterministic and monotone
nondecreasing in the sample budget.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .geometry import CanonicalCell, CellKind

BLOCK = 256
_REFINE_START = 4  # first block index eligible for refinement
_FREE_TETRA_MAX_DEGREE = 3
_BERNSTEIN_ELEVATION = {2: 400, 3: 100}
_CERT_PER_BLOCK = 8


def _monomial_indices(k: int, d: int) -> list[tuple[int, ...]]:
    idx = [a for a in itertools.product(range(k + 1), repeat=d) if sum(a) <= k]
    idx.sort(key=lambda a: (sum(a), a))
    return idx


def _monomial_values(idx, pts: np.ndarray) -> np.ndarray:
    """(n_mono, n_pts) values of each monomial."""
    out = np.empty((len(idx), len(pts)))
    for i, a in enumerate(idx):
        v = np.ones(len(pts))
        for d, p in enumerate(a):
            if p:
                v = v * pts[:, d] ** p
        out[i] = v
    return out


def _bernstein_matrix(cell: CanonicalCell, k: int, elevation: int) -> np.ndarray:
    """Map monomial coefficients to degree-``elevation`` Bernstein coefficients
    on the simplex.  Nonnegative Bernstein coefficients certify positivity."""
    verts = cell.vertices
    d = cell.dim
    nb = d + 1
    idx = _monomial_indices(k, d)
    shape = (k + 1,) * nb

    def lin_multiply(arr: np.ndarray, lin: np.ndarray) -> np.ndarray:
        out = np.zeros_like(arr)
        for i in range(nb):
            shifted = np.roll(arr, 1, axis=i)
            sl = [slice(None)] * nb
            sl[i] = 0
            shifted[tuple(sl)] = 0.0
            out += lin[i] * shifted
        return out

    ones = np.ones(nb)
    # homogeneous barycentric coefficients of each monomial, at degree k
    gammas = [g for g in itertools.product(range(k + 1), repeat=nb) if sum(g) == k]
    gamma_pos = {g: i for i, g in enumerate(gammas)}
    hom = np.zeros((len(gammas), len(idx)))
    for j, a in enumerate(idx):
        arr = np.zeros(shape)
        arr[(0,) * nb] = 1.0
        for axis in range(d):
            for _ in range(a[axis]):
                arr = lin_multiply(arr, verts[:, axis])
        for _ in range(k - sum(a)):
            arr = lin_multiply(arr, ones)
        nz = np.argwhere(arr != 0.0)
        for g in nz:
            hom[gamma_pos[tuple(int(x) for x in g)], j] = arr[tuple(g)]
    # elevation: b_beta = sum_gamma a_gamma * C(E-k, beta-gamma) / C(E, beta)
    E = elevation
    betas = np.array(
        [b for b in _compositions(E, nb)], dtype=np.int64)
    lg = math.lgamma
    log_mult_num = lg(E - k + 1)
    elev = np.zeros((len(betas), len(gammas)))
    lgamma_tab = np.array([lg(i + 1) for i in range(E + 1)])
    log_cb = lg(E + 1) - lgamma_tab[betas].sum(axis=1)
    for gi, g in enumerate(gammas):
        mu = betas - np.array(g)
        ok = (mu >= 0).all(axis=1)
        lm = log_mult_num - lgamma_tab[mu[ok]].sum(axis=1)
        elev[ok, gi] = np.exp(lm - log_cb[ok])
    return elev @ hom


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


class _Context:
    """Precomputed matrices for one (cell, degree) pair."""

    def __init__(self, cell: CanonicalCell, k: int):
        self.cell = cell
        self.k = k
        self.dim = cell.dim
        self.half = k // 2
        deg = 2 * k + 2
        vol = cell.volume_rule(deg)
        self.vol_pts = vol.points
        self.vol_w = vol.weights / cell.volume
        if cell.kind is CellKind.SPHERE:
            bnd = cell.boundary_rule(deg)
            self.bnd_pts = bnd.points
            self.bnd_w = bnd.weights / cell.boundary_area
        else:
            fs = cell.face_set(deg)
            pts, wts = [], []
            for f in fs.faces:
                pts.append(f.rule.points)
                wts.append(f.rule.weights / (f.measure * len(fs)))
            self.bnd_pts = np.concatenate(pts)
            self.bnd_w = np.concatenate(wts)
        self.all_pts = np.concatenate([self.vol_pts, self.bnd_pts])
        self.n_vol = len(self.vol_pts)
        self.idx_full = _monomial_indices(k, self.dim)
        self.idx_half = _monomial_indices(self.half, self.dim)
        self.mono_full = _monomial_values(self.idx_full, self.all_pts)
        self.mono_half = _monomial_values(self.idx_half, self.all_pts)
        lo, hi = cell.bounding_box
        self.root_lo = float(np.min(lo)) - 0.25
        self.root_hi = float(np.max(hi)) + 0.25
        self.free_enabled = cell.kind is CellKind.SIMPLEX and (
            self.dim == 2 or k <= _FREE_TETRA_MAX_DEGREE)
        self._bern = None

    @property
    def bernstein(self) -> np.ndarray:
        if self._bern is None:
            self._bern = _bernstein_matrix(
                self.cell, self.k, _BERNSTEIN_ELEVATION[self.dim])
        return self._bern

    def crowding_from_values(self, vals: np.ndarray, shift: np.ndarray | float = 0.0):
        """vals: (n_cand, n_pts) point values; returns certified crowding."""
        cavg = vals[:, : self.n_vol] @ self.vol_w + shift
        bavg = vals[:, self.n_vol:] @ self.bnd_w + shift
        out = np.full(len(vals), -np.inf)
        ok = cavg > 1e-300
        out[ok] = bavg[ok] / cavg[ok]
        return out


def _gen_product(ctx: _Context, rng, n: int):
    m = ctx.half
    if m == 0:
        vals = np.ones((n, ctx.all_pts.shape[0]))
        return vals, [("product", np.zeros((0, ctx.dim)), np.zeros(0))] * n
    dirs = rng.normal(size=(n, m, ctx.dim))
    dirs /= np.linalg.norm(dirs, axis=2, keepdims=True)
    ts = rng.uniform(ctx.root_lo, ctx.root_hi, size=(n, m))
    proj = np.einsum("qd,cmd->cqm", ctx.all_pts, dirs)
    vals = np.prod((proj - ts[:, None, :]) ** 2, axis=2)
    params = [("product", dirs[i], ts[i]) for i in range(n)]
    return vals, params


def _gen_sos(ctx: _Context, rng, n: int):
    c = rng.normal(size=(n, 2, len(ctx.idx_half)))
    # half the candidates are single squares, half positive combinations
    c[rng.random(n) < 0.5, 1, :] = 0.0
    q = np.einsum("csm,mq->csq", c, ctx.mono_half)
    vals = np.sum(q**2, axis=1)
    params = [("sos", c[i]) for i in range(n)]
    return vals, params


def _gen_free(ctx: _Context, rng, n: int):
    c = rng.normal(size=(n, len(ctx.idx_full)))
    vals = c @ ctx.mono_full
    return vals, [("free", c[i]) for i in range(n)]


def _perturb(ctx: _Context, rng, params, radius: float, n: int):
    kind = params[0]
    if kind == "product":
        _, dirs, ts = params
        d = dirs[None] + radius * rng.normal(size=(n,) + dirs.shape)
        norm = np.linalg.norm(d, axis=2, keepdims=True)
        norm[norm == 0.0] = 1.0
        d /= norm
        t = ts[None] + radius * (ctx.root_hi - ctx.root_lo) * rng.normal(
            size=(n,) + ts.shape)
        if dirs.shape[0] == 0:
            vals = np.ones((n, ctx.all_pts.shape[0]))
            return vals, [params] * n
        proj = np.einsum("qd,cmd->cqm", ctx.all_pts, d)
        vals = np.prod((proj - t[:, None, :]) ** 2, axis=2)
        return vals, [("product", d[i], t[i]) for i in range(n)]
    if kind == "sos":
        c0 = params[1]
        scale = radius * max(1e-12, float(np.sqrt(np.mean(c0**2))))
        c = c0[None] + scale * rng.normal(size=(n,) + c0.shape)
        q = np.einsum("csm,mq->csq", c, ctx.mono_half)
        vals = np.sum(q**2, axis=1)
        return vals, [("sos", c[i]) for i in range(n)]
    # free
    c0 = params[1]
    scale = radius * max(1e-12, float(np.sqrt(np.mean(c0**2))))
    c = c0[None] + scale * rng.normal(size=(n,) + c0.shape)
    vals = c @ ctx.mono_full
    return vals, [("free", c[i]) for i in range(n)]


def _certify_free(ctx: _Context, cand_vals, cand_params, raw_crowding, floor):
    """Shift the most promising free candidates into positivity and return
    their certified crowding values (-inf elsewhere)."""
    out = np.full(len(cand_params), -np.inf)
    order = np.argsort(raw_crowding)[::-1]
    taken = 0
    B = ctx.bernstein
    for i in order:
        if taken >= _CERT_PER_BLOCK or raw_crowding[i] <= floor:
            break
        c = cand_params[i][1]
        b = B @ c
        shift = max(0.0, -float(b.min())) + 1e-9 * max(1.0, float(np.abs(b).max()))
        out[i] = ctx.crowding_from_values(cand_vals[i][None], shift)[0]
        taken += 1
    return out


def sample_lower_bound(cell: CanonicalCell | str, k: int, samples: int,
                       seed: int) -> float:
    """Sampled lower bound on the optimal interior weight.

    Deterministic given ``seed`` and monotone nondecreasing in ``samples``
    (the candidate stream is prefix-stable in whole blocks).  Each family of
    candidates keeps its own incumbent, so the hill climb can follow a family
    whose best member is not yet the global best.
    """
    if isinstance(cell, str):
        cell = CanonicalCell.from_name(cell)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if k < 0:
        raise ValueError("degree must be >= 0")
    ctx = _Context(cell, k)
    rng = np.random.default_rng(seed)
    n_blocks = -(-samples // BLOCK)
    families = ["product", "sos"] + (["free"] if ctx.free_enabled else [])
    gens = {"product": _gen_product, "sos": _gen_sos, "free": _gen_free}
    best_val = {f: -np.inf for f in families}
    best_params = {f: None for f in families}
    explore_i = 0
    refine_i = 0
    for j in range(n_blocks):
        bootstrap = j < len(families)
        refine = not bootstrap and j >= _REFINE_START and j % 4 != 0
        if refine:
            kind = families[refine_i % len(families)]
            refine_i += 1
            radius = max(0.35 * 0.975**j, 1e-6)
            vals, params = _perturb(ctx, rng, best_params[kind], radius, BLOCK)
        else:
            kind = families[explore_i % len(families)]
            explore_i += 1
            vals, params = gens[kind](ctx, rng, BLOCK)
        if kind == "free":
            raw = ctx.crowding_from_values(vals)
            crowd = _certify_free(ctx, vals, params, raw, best_val[kind])
        else:
            crowd = ctx.crowding_from_values(vals)
        i = int(np.argmax(crowd))
        if crowd[i] > best_val[kind]:
            best_val[kind] = float(crowd[i])
            best_params[kind] = params[i]
    return max(best_val.values())
