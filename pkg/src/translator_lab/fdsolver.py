"""Finite differences and damped Newton for Lu = P(grad u, Hess u) on grids.

Arrays are indexed ``values[j, i]`` with i along x2 and j along x3, so a node
sits at ``(origin.x2 + i h, origin.x3 + j h)`` and rows run along x2.

All derivatives are centred.  The drift coefficient is one, so the linear
stencil is monotone exactly when h < 2.  Interior nodes need all eight
neighbours in the grid (the mixed derivative uses the diagonals); nodes of the
domain that lack one are demoted to boundary nodes and take the trace value.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .domains import Domain, Point2, Rectangle
from .errors import ConfigurationError, DivergenceError, NumericError

OUTSIDE, BOUNDARY, INTERIOR = 0, 1, 2

# 3x3 stencil offsets (dj, di)
_OFFSETS = [(dj, di) for dj in (-1, 0, 1) for di in (-1, 0, 1)]


@dataclass(frozen=True, eq=False)
class Grid:
    origin: Point2
    h: float
    nx2: int
    nx3: int
    mask: np.ndarray

    def __post_init__(self):
        if not self.h > 0:
            raise ConfigurationError("grid spacing must be positive")
        if self.h >= 2.0:
            raise ConfigurationError(f"grid Peclet number h/2 = {self.h / 2} must be < 1 (need h < 2)")
        if self.mask.shape != (self.nx3, self.nx2):
            raise ConfigurationError("mask shape must be (nx3, nx2)")
        self.mask.setflags(write=False)

    @classmethod
    def from_domain(cls, d: Domain | None, rect: Rectangle, h: float) -> "Grid":
        """Nodes of ``rect`` spaced by ``h``, masked by the closed domain ``d``."""
        if not h > 0:
            raise ConfigurationError("grid spacing must be positive")
        if h >= 2.0:
            raise ConfigurationError(f"grid Peclet number h/2 = {h / 2} must be < 1 (need h < 2)")
        n2 = _node_count(rect.x2_hi - rect.x2_lo, h)
        n3 = _node_count(rect.x3_hi - rect.x3_lo, h)
        origin = Point2(float(rect.x2_lo), float(rect.x3_lo))
        x2 = origin.x2 + h * np.arange(n2)
        x3 = origin.x3 + h * np.arange(n3)
        X2, X3 = np.meshgrid(x2, x3)
        inside = np.ones_like(X2, bool) if d is None else np.asarray(d.contains_xy(X2, X3), bool)
        return cls(origin, float(h), n2, n3, _classify(inside))

    def coords(self):
        x2 = self.origin.x2 + self.h * np.arange(self.nx2)
        x3 = self.origin.x3 + self.h * np.arange(self.nx3)
        return np.meshgrid(x2, x3)

    @property
    def x2(self):
        return self.origin.x2 + self.h * np.arange(self.nx2)

    @property
    def x3(self):
        return self.origin.x3 + self.h * np.arange(self.nx3)

    @property
    def interior(self):
        return self.mask == INTERIOR

    @property
    def boundary(self):
        return self.mask == BOUNDARY

    @property
    def active(self):
        return self.mask != OUTSIDE

    def to_dict(self):
        return {"nx2": self.nx2, "nx3": self.nx3, "h": self.h, "origin": [self.origin.x2, self.origin.x3]}


def _node_count(length, h):
    n = length / h
    k = int(round(n))
    if abs(n - k) > 1e-9 * max(1.0, n):
        k = int(math.floor(n))
    if k < 2:
        raise ConfigurationError("rectangle must span at least two cells in each direction")
    return k + 1


def _classify(inside):
    mask = np.where(inside, BOUNDARY, OUTSIDE).astype(np.int8)
    full = np.zeros_like(inside)
    core = inside[1:-1, 1:-1].copy()
    for dj, di in _OFFSETS:
        core &= inside[1 + dj : inside.shape[0] - 1 + dj, 1 + di : inside.shape[1] - 1 + di]
    full[1:-1, 1:-1] = core
    mask[full] = INTERIOR
    return mask


@dataclass(eq=False)
class GridFunction:
    """Values on a grid; outside nodes hold NaN."""

    grid: Grid
    values: np.ndarray
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, float)
        if self.values.shape != (self.grid.nx3, self.grid.nx2):
            raise ConfigurationError("values shape must be (nx3, nx2)")

    def copy(self):
        return GridFunction(self.grid, self.values.copy(), dict(self.info))

    def at(self, x2, x3):
        """Value at the node nearest to (x2, x3)."""
        i = int(round((x2 - self.grid.origin.x2) / self.grid.h))
        j = int(round((x3 - self.grid.origin.x3) / self.grid.h))
        return float(self.values[j, i])

    def interpolate(self, x2, x3):
        """Bilinear interpolation; NaN where a cell touches an outside node."""
        g = self.grid
        s = (np.asarray(x2, float) - g.origin.x2) / g.h
        r = (np.asarray(x3, float) - g.origin.x3) / g.h
        i = np.clip(np.floor(s).astype(int), 0, g.nx2 - 2)
        j = np.clip(np.floor(r).astype(int), 0, g.nx3 - 2)
        fs, fr = s - i, r - j
        v = self.values
        out = (
            (1 - fs) * (1 - fr) * v[j, i]
            + fs * (1 - fr) * v[j, i + 1]
            + (1 - fs) * fr * v[j + 1, i]
            + fs * fr * v[j + 1, i + 1]
        )
        return out if np.ndim(out) else float(out)

    # --- serialization ------------------------------------------------------

    def to_csv(self) -> str:
        g = self.grid
        buf = io.StringIO()
        buf.write("nx2,nx3,h,origin_x2,origin_x3\n")
        buf.write(f"{g.nx2},{g.nx3},{g.h:.17g},{g.origin.x2:.17g},{g.origin.x3:.17g}\n")
        for row in self.values:
            buf.write(",".join(f"{v:.17g}" for v in row))
            buf.write("\n")
        return buf.getvalue()

    def to_json(self) -> str:
        g = self.grid
        meta = dict(g.to_dict())
        meta["mask"] = ["".join(str(int(c)) for c in row) for row in g.mask]
        return json.dumps({"grid": meta, "info": self.info, "csv": self.to_csv()}, sort_keys=True)

    @classmethod
    def from_csv(cls, text: str, mask=None) -> "GridFunction":
        lines = text.strip().splitlines()
        nx2, nx3, h, o2, o3 = lines[1].split(",")
        nx2, nx3 = int(nx2), int(nx3)
        values = np.array([[float(v) for v in line.split(",")] for line in lines[2:]])
        if mask is None:
            mask = _classify(np.isfinite(values))
        grid = Grid(Point2(float(o2), float(o3)), float(h), nx2, nx3, np.asarray(mask, np.int8))
        return cls(grid, values)

    @classmethod
    def from_json(cls, text: str) -> "GridFunction":
        data = json.loads(text)
        mask = np.array([[int(c) for c in row] for row in data["grid"]["mask"]], np.int8)
        out = cls.from_csv(data["csv"], mask)
        out.info = data.get("info", {})
        return out


@dataclass(frozen=True)
class NewtonConfig:
    residual_tol: float = 1e-10
    max_iters: int = 50
    armijo: float = 1e-4
    max_halvings: int = 30
    # residuals below this multiple of the rounding floor eps*max|u|/h^2 count as converged
    roundoff_factor: float = 64.0

    def __post_init__(self):
        if not self.residual_tol > 0:
            raise ConfigurationError("residual_tol must be positive")
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be >= 1")


# --- stencils ---------------------------------------------------------------


def _shift(a, dj, di):
    """View of ``a`` shifted so that index [j, i] reads a[j + dj, i + di] on the inner block."""
    n3, n2 = a.shape
    return a[1 + dj : n3 - 1 + dj, 1 + di : n2 - 1 + di]


def _derivatives(values, h):
    """Centred (u2, u3, u22, u23, u33) on the inner block [1:-1, 1:-1]."""
    c = _shift(values, 0, 0)
    e, w = _shift(values, 0, 1), _shift(values, 0, -1)
    n, s = _shift(values, 1, 0), _shift(values, -1, 0)
    ne, nw = _shift(values, 1, 1), _shift(values, 1, -1)
    se, sw = _shift(values, -1, 1), _shift(values, -1, -1)
    u2 = (e - w) / (2 * h)
    u3 = (n - s) / (2 * h)
    u22 = (e - 2 * c + w) / (h * h)
    u33 = (n - 2 * c + s) / (h * h)
    u23 = (ne - nw - se + sw) / (4 * h * h)
    return u2, u3, u22, u23, u33


def _inner_interior(grid):
    return grid.interior[1:-1, 1:-1]


def residual(u: GridFunction) -> GridFunction:
    """Discrete Lu - P at interior nodes; zero on boundary nodes, NaN outside."""
    g = u.grid
    out = np.where(g.active, 0.0, np.nan)
    vals = np.where(g.active, u.values, 0.0)
    u2, u3, u22, u23, u33 = _derivatives(vals, g.h)
    den = 1.0 + u2 * u2 + u3 * u3
    res = u22 + u33 + u3 - (u22 * u2 * u2 + 2.0 * u23 * u2 * u3 + u33 * u3 * u3) / den
    inner = out[1:-1, 1:-1]
    m = _inner_interior(g)
    inner[m] = res[m]
    return GridFunction(g, out)


def drift_laplacian(u: GridFunction) -> GridFunction:
    """Discrete Lu at interior nodes."""
    g = u.grid
    out = np.where(g.active, 0.0, np.nan)
    vals = np.where(g.active, u.values, 0.0)
    _, u3, u22, _, u33 = _derivatives(vals, g.h)
    m = _inner_interior(g)
    out[1:-1, 1:-1][m] = (u22 + u33 + u3)[m]
    return GridFunction(g, out)


def gradient(u: GridFunction):
    """(u2, u3) at interior nodes, NaN elsewhere."""
    g = u.grid
    u2, u3, *_ = _derivatives(u.values, g.h)
    return _embed(g, u2), _embed(g, u3)


def hessian(u: GridFunction):
    """(u22, u23, u33) at interior nodes, NaN elsewhere; the mixed partial is symmetric by construction."""
    g = u.grid
    _, _, u22, u23, u33 = _derivatives(u.values, g.h)
    return _embed(g, u22), _embed(g, u23), _embed(g, u33)


def _embed(g, inner):
    out = np.full((g.nx3, g.nx2), np.nan)
    m = _inner_interior(g)
    out[1:-1, 1:-1][m] = inner[m]
    return out


def _index_map(grid):
    idx = np.full(grid.mask.shape, -1, dtype=np.int64)
    interior = grid.interior
    idx[interior] = np.arange(int(interior.sum()))
    return idx


def _assemble(grid, coeffs):
    """Sparse matrix over interior unknowns from per-offset coefficient blocks.

    ``coeffs[(dj, di)]`` is an inner-block array of the coefficient that
    node (j, i) places on neighbour (j + dj, i + di).  Boundary neighbours are
    dropped (their values are fixed).
    """
    idx = _index_map(grid)
    m = _inner_interior(grid)
    rows_all = _shift(idx, 0, 0)[m]
    rows, cols, data = [], [], []
    for off in _OFFSETS:
        c = coeffs.get(off)
        if c is None:
            continue
        nb = _shift(idx, *off)[m]
        cv = np.broadcast_to(c, m.shape)[m]
        keep = (nb >= 0) & (cv != 0.0)
        rows.append(rows_all[keep])
        cols.append(nb[keep])
        data.append(cv[keep])
    n = int(grid.interior.sum())
    mat = sp.coo_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return mat.tocsc()


def _linear_coeffs(h):
    a = 1.0 / (h * h)
    b = 1.0 / (2.0 * h)
    return {(0, 0): -4.0 * a, (0, 1): a, (0, -1): a, (1, 0): a + b, (-1, 0): a - b}


def _jacobian(u_values, grid):
    h = grid.h
    u2, u3, u22, u23, u33 = _derivatives(u_values, h)
    den = 1.0 + u2 * u2 + u3 * u3
    num = u22 * u2 * u2 + 2.0 * u23 * u2 * u3 + u33 * u3 * u3
    d22 = 1.0 - u2 * u2 / den
    d33 = 1.0 - u3 * u3 / den
    d23 = -2.0 * u2 * u3 / den
    d2 = -(2.0 * u22 * u2 + 2.0 * u23 * u3) / den + 2.0 * num * u2 / (den * den)
    d3 = 1.0 - (2.0 * u23 * u2 + 2.0 * u33 * u3) / den + 2.0 * num * u3 / (den * den)
    a = 1.0 / (h * h)
    b = 1.0 / (2.0 * h)
    q = 1.0 / (4.0 * h * h)
    coeffs = {
        (0, 0): -2.0 * a * (d22 + d33),
        (0, 1): a * d22 + b * d2,
        (0, -1): a * d22 - b * d2,
        (1, 0): a * d33 + b * d3,
        (-1, 0): a * d33 - b * d3,
        (1, 1): q * d23,
        (-1, -1): q * d23,
        (1, -1): -q * d23,
        (-1, 1): -q * d23,
    }
    return _assemble(grid, coeffs)


def _splu_solve(mat, rhs):
    try:
        x = spla.spsolve(mat, rhs)
    except RuntimeError as exc:  # singular factor
        raise NumericError(f"sparse direct solve failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise NumericError("sparse direct solve produced non-finite values")
    return x


# --- traces -----------------------------------------------------------------


def evaluate_trace(trace, grid: Grid):
    """Boundary values from a trace: a callable (x2, x3), a 1-D x2 trace, or a constant."""
    X2, X3 = grid.coords()
    sel = grid.boundary
    if callable(trace) and not hasattr(trace, "evaluate"):
        vals = np.asarray(trace(X2[sel], X3[sel]), float)
    elif hasattr(trace, "evaluate"):
        vals = np.asarray(trace.evaluate(X2[sel]), float)
    else:
        vals = np.full(int(sel.sum()), float(trace))
    if not np.all(np.isfinite(vals)):
        raise ConfigurationError("trace must be finite on every boundary node")
    out = np.full(grid.mask.shape, np.nan)
    out[grid.active] = 0.0
    out[sel] = np.broadcast_to(vals, (int(sel.sum()),))
    return out


def _source_values(f, grid):
    if f is None:
        return None
    if isinstance(f, GridFunction):
        return f.values
    if callable(f):
        X2, X3 = grid.coords()
        return np.asarray(f(X2, X3), float) + 0.0 * X2
    return np.full(grid.mask.shape, float(f))


# --- solvers ----------------------------------------------------------------


def solve_L_on_grid(grid: Grid, trace, f=None) -> GridFunction:
    """Linear Dirichlet problem L u = f with the centred stencil."""
    vals = evaluate_trace(trace, grid)
    if not grid.interior.any():
        return GridFunction(grid, vals, {"kind": "linear"})
    mat = _assemble(grid, _linear_coeffs(grid.h))
    # move the known boundary contributions to the right-hand side
    base = np.where(grid.active, np.nan_to_num(vals), 0.0)
    base[grid.interior] = 0.0
    lb = drift_laplacian(GridFunction(grid, base)).values
    rhs = -lb[grid.interior]
    fv = _source_values(f, grid)
    if fv is not None:
        rhs = rhs + fv[grid.interior]
    x = _splu_solve(mat, rhs)
    vals[grid.interior] = x
    return GridFunction(grid, vals, {"kind": "linear"})


def solve_L_dirichlet(d: Domain | None, rect: Rectangle, trace, f=None, *, h: float) -> GridFunction:
    return solve_L_on_grid(Grid.from_domain(d, rect, h), trace, f)


def _roundoff_floor(values, grid, cfg):
    scale = float(np.nanmax(np.abs(values))) if np.isfinite(values).any() else 1.0
    return cfg.roundoff_factor * np.finfo(float).eps * max(scale, 1.0) / grid.h**2


def newton_solve(grid: Grid, trace, cfg: NewtonConfig | None = None, initial=None) -> GridFunction:
    """Damped Newton for Lu = P with Dirichlet data; starts from the L-harmonic extension."""
    cfg = cfg or NewtonConfig()
    if initial is None:
        u = solve_L_on_grid(grid, trace).values
    else:
        u = np.array(initial.values if isinstance(initial, GridFunction) else initial, float)
        u[grid.boundary] = evaluate_trace(trace, grid)[grid.boundary]
    interior = grid.interior
    history = []
    merit_history = []

    def res_of(vals):
        r = residual(GridFunction(grid, vals)).values
        return r[interior]

    r = res_of(u)
    tol = max(cfg.residual_tol, _roundoff_floor(u, grid, cfg))
    for it in range(cfg.max_iters + 1):
        rn = float(np.max(np.abs(r))) if r.size else 0.0
        history.append(rn)
        merit_history.append(float(r @ r))
        if rn <= tol:
            info = {
                "kind": "newton",
                "iterations": it,
                "residual_history": history,
                "residual_inf": rn,
                "effective_tol": tol,
            }
            return GridFunction(grid, u, info)
        if it == cfg.max_iters:
            break
        jac = _jacobian(u, grid)
        step = _splu_solve(jac, -r)
        merit = 0.5 * float(r @ r)
        lam = 1.0
        for _ in range(cfg.max_halvings):
            trial = u.copy()
            trial[interior] += lam * step
            rt = res_of(trial)
            if np.all(np.isfinite(rt)) and 0.5 * float(rt @ rt) <= (1.0 - 2.0 * cfg.armijo * lam) * merit:
                break
            lam *= 0.5
        else:
            raise DivergenceError(
                "line search failed to reduce the residual",
                last_iterate=GridFunction(grid, u),
                residual_history=history,
            )
        u, r = trial, rt
        tol = max(cfg.residual_tol, _roundoff_floor(u, grid, cfg))
    raise DivergenceError(
        f"Newton did not reach {tol:.3g} within {cfg.max_iters} iterations",
        last_iterate=GridFunction(grid, u),
        residual_history=history,
    )


def solve_translator_dirichlet(d: Domain | None, rect: Rectangle, trace, cfg: NewtonConfig | None = None, *, h: float) -> GridFunction:
    """Solve the translator equation on ``d`` truncated to ``rect`` with Dirichlet ``trace``."""
    return newton_solve(Grid.from_domain(d, rect, h), trace, cfg)


def max_principle_violation(u: GridFunction) -> float:
    """How far u leaves [min boundary, max boundary]; 0 when the principle holds."""
    g = u.grid
    b = u.values[g.boundary]
    inner = u.values[g.interior]
    if inner.size == 0:
        return 0.0
    return float(max(0.0, inner.max() - b.max(), b.min() - inner.min()))


def sample(fld, grid: Grid) -> GridFunction:
    """A closed-form field sampled on the active nodes of ``grid``."""
    X2, X3 = grid.coords()
    vals = np.full(grid.mask.shape, np.nan)
    act = grid.active
    vals[act] = np.asarray(fld(X2[act], X3[act]), float)
    return GridFunction(grid, vals)


def newton_tail_constant(history):
    """Fitted C in r_{k+1} <= C r_k^2 over the tail where r_k < 1e-4 (nan if too short)."""
    h = np.asarray(history, float)
    ratios = [h[k + 1] / h[k] ** 2 for k in range(len(h) - 1) if 0 < h[k] < 1e-4 and h[k + 1] > 0]
    return float(max(ratios)) if ratios else float("nan")
