"""Assembly and solution of the discrete Dirichlet problem
-div(A grad u) = f + div F on the box, with certified ellipticity.

Discretization is conservative: diagonal coefficients enter through
face-averaged fluxes (the classical 3-point stencil per axis), off-diagonal
coefficients through averaged cross stencils, so that for symmetric A the
assembled operator is symmetric to machine precision and summation-by-parts
identities survive discretization up to O(h).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, field as dfield
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .domain_grid import Grid
from .errors import NotEllipticError, SolverStagnationError
from .field_calculus import Field, VecField, load_field, save_field

# Largest per-axis node count for which sparse direct elimination is used.
DIRECT_SOLVE_MAX_M = 129

# Required relative algebraic residual of any returned solution.
SOLVE_RTOL = 1e-10


class CoefficientField:
    """Matrix-valued coefficient A(x), not necessarily symmetric.

    Carries certified ellipticity constants: lam and Lam are the extreme
    nodal eigenvalues of the symmetric part, L the nodal sup of |a_ij|.
    Optional regularity certificates (Lipschitz or Holder bounds on the
    entries) gate the estimates that need them.
    """

    __slots__ = (
        "grid", "entries", "lam", "Lam", "L",
        "lipschitz_bound", "holder_alpha", "holder_bound", "smooth_certified",
    )

    def __init__(self, grid: Grid, entries):
        entries = np.asarray(entries, dtype=float)
        if entries.shape != (grid.n, grid.n) + grid.shape:
            raise ValueError(
                f"entries shape {entries.shape} != {(grid.n, grid.n) + grid.shape}"
            )
        if not np.isfinite(entries).all():
            raise ValueError("coefficient entries must be finite")
        entries.setflags(write=False)
        self.grid = grid
        self.entries = entries
        self.lam, self.Lam, self.L = validate_ellipticity(self)
        self.lipschitz_bound = None
        self.holder_alpha = None
        self.holder_bound = None
        self.smooth_certified = False

    @classmethod
    def identity(cls, grid: Grid) -> "CoefficientField":
        e = np.zeros((grid.n, grid.n) + grid.shape)
        for i in range(grid.n):
            e[i, i] = 1.0
        return cls(grid, e)

    @classmethod
    def from_constant(cls, grid: Grid, matrix) -> "CoefficientField":
        matrix = np.asarray(matrix, dtype=float)
        e = np.empty((grid.n, grid.n) + grid.shape)
        for i in range(grid.n):
            for j in range(grid.n):
                e[i, j] = matrix[i, j]
        return cls(grid, e)

    @classmethod
    def from_functions(cls, grid: Grid, fns) -> "CoefficientField":
        """fns[i][j] evaluated on the node coordinates."""
        coords = grid.coords()
        e = np.empty((grid.n, grid.n) + grid.shape)
        for i in range(grid.n):
            for j in range(grid.n):
                e[i, j] = np.broadcast_to(fns[i][j](*coords), grid.shape)
        return cls(grid, e)

    @property
    def is_symmetric(self) -> bool:
        return bool(
            np.abs(self.entries - self.entries.transpose(1, 0, *range(2, 2 + self.grid.n))).max()
            <= 1e-14 * max(1.0, self.L)
        )

    def set_lipschitz_certificate(self, bound: float) -> None:
        self.lipschitz_bound = float(bound)

    def set_holder_certificate(self, alpha: float, bound: float) -> None:
        if not 0 < alpha <= 1:
            raise ValueError("certificate exponent must lie in (0, 1]")
        self.holder_alpha = float(alpha)
        self.holder_bound = float(bound)


def validate_ellipticity(A: CoefficientField) -> tuple:
    """Extreme eigenvalues of the symmetric part plus the entry sup.

    Fails (reporting the offending node) if the smallest nodal eigenvalue of
    (A + A^T)/2 is not strictly positive. The antisymmetric part never enters
    the quadratic form, so only the symmetric part is certified.
    """
    grid = A.grid
    n = grid.n
    ent = A.entries.reshape(n, n, -1)
    sym = 0.5 * (ent + ent.transpose(1, 0, 2)).transpose(2, 0, 1)  # (N, n, n)
    eigs = np.linalg.eigvalsh(sym)
    lam_idx = int(np.argmin(eigs[:, 0]))
    lam = float(eigs[lam_idx, 0])
    Lam = float(eigs[:, -1].max())
    L = float(np.abs(A.entries).max())
    if lam <= 0:
        node = np.unravel_index(lam_idx, grid.shape)
        coords = tuple(float(grid.axis[i]) for i in node)
        raise NotEllipticError(
            f"symmetric part has eigenvalue {lam:.3e} <= 0 at node {coords}",
            node=node,
            eigenvalue=lam,
        )
    return lam, Lam, L


@dataclass
class EllipticProblem:
    """Data bundle (A, f, F, Dirichlet boundary g, integrability exponents).

    Exponents default to (p, q) = (2, 4), admissible for n in {2, 3}. The
    boundary field g is read only on the boundary nodes. ``certificates``
    carries optional data-regularity bounds (keys like "F_holder",
    "F_lipschitz", "f_holder") that gate the estimates requiring them.
    """

    A: CoefficientField
    f: Field
    F: VecField
    g: Field
    p: float = 2.0
    q: float = 4.0
    certificates: dict = dfield(default_factory=dict)

    def __post_init__(self):
        grid = self.A.grid
        for part in (self.f, self.F, self.g):
            if part.grid != grid:
                raise ValueError("problem data must share one grid")
        if not self.p > grid.n / 2:
            raise ValueError(f"need p > n/2 = {grid.n / 2}, got {self.p}")
        if not self.q > grid.n:
            raise ValueError(f"need q > n = {grid.n}, got {self.q}")

    @property
    def grid(self) -> Grid:
        return self.A.grid

    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        for arr in (self.A.entries, self.f.values, self.F.components, self.g.values):
            digest.update(np.ascontiguousarray(arr).tobytes())
        digest.update(np.float64([self.p, self.q]).tobytes())
        return digest.hexdigest()[:12]

    def scaled(self, c: float) -> "EllipticProblem":
        """Same operator, data (f, F, g) scaled by c; the solution scales too."""
        certs = dict(self.certificates)
        return EllipticProblem(
            A=self.A, f=c * self.f, F=c * self.F, g=c * self.g,
            p=self.p, q=self.q, certificates=certs,
        )


@dataclass
class LinearSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    grid: Grid
    interior_ids: np.ndarray  # flat full-grid index -> interior unknown id or -1
    symmetric: bool


def _interior_info(grid: Grid):
    interior = grid.interior_mask(1)
    flat = interior.ravel()
    ids = -np.ones(grid.num_nodes, dtype=np.int64)
    ids[flat] = np.arange(int(flat.sum()))
    return interior, ids


def _axis_stride(grid: Grid, axis: int) -> int:
    return int(np.prod(grid.shape[axis + 1 :], dtype=np.int64))


def _shift(values: np.ndarray, axis: int, s: int) -> np.ndarray:
    """values(x + s e_axis); wrap positions are never read at interior rows."""
    return np.roll(values, -s, axis=axis)


def assemble(problem: EllipticProblem) -> LinearSystem:
    """Sparse operator on the interior unknowns, Dirichlet rows eliminated.

    Interior row for node x:
      diagonal a_jj: face-averaged fluxes, three points per axis;
      off-diagonal a_ij: averaged central cross stencil on x +/- e_i +/- e_j.
    Right side: f + central-difference div F, plus boundary moves of g.
    """
    grid = problem.grid
    n, h = grid.n, grid.h
    ent = problem.A.entries
    inv_h2 = 1.0 / h**2
    inv_4h2 = 0.25 * inv_h2

    # offset tuple -> nodal weight array (weight of u(x + offset) in row x)
    weights: dict = {}

    def add(offset: tuple, w: np.ndarray):
        if offset in weights:
            weights[offset] = weights[offset] + w
        else:
            weights[offset] = w.copy()

    zero = (0,) * n
    for j in range(n):
        a = ent[j, j]
        face_plus = 0.5 * (a + _shift(a, j, +1))   # coefficient on face x + e_j/2
        face_minus = 0.5 * (a + _shift(a, j, -1))  # coefficient on face x - e_j/2
        e_j = tuple(int(k == j) for k in range(n))
        m_j = tuple(-int(k == j) for k in range(n))
        add(e_j, -face_plus * inv_h2)
        add(m_j, -face_minus * inv_h2)
        add(zero, (face_plus + face_minus) * inv_h2)

    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            a = ent[i, j]
            a_ip = _shift(a, i, +1)  # a_ij(x + h e_i)
            a_im = _shift(a, i, -1)  # a_ij(x - h e_i)
            for si, sj, sign in ((+1, +1, -1.0), (+1, -1, +1.0), (-1, +1, +1.0), (-1, -1, -1.0)):
                off = tuple(si * int(k == i) + sj * int(k == j) for k in range(n))
                add(off, sign * (a_ip if si > 0 else a_im) * inv_4h2)

    interior, ids = _interior_info(grid)
    flat_rows = np.flatnonzero(interior.ravel())
    row_ids = ids[flat_rows]
    n_int = len(flat_rows)

    from .field_calculus import divergence

    rhs_field = problem.f.values + divergence(problem.F).values
    rhs = rhs_field.ravel()[flat_rows].copy()

    rows, cols, vals = [], [], []
    for offset, w in weights.items():
        shift_flat = sum(o * _axis_stride(grid, ax) for ax, o in enumerate(offset))
        targets = flat_rows + shift_flat
        wvals = w.ravel()[flat_rows]
        target_ids = ids[targets]
        inside = target_ids >= 0
        rows.append(row_ids[inside])
        cols.append(target_ids[inside])
        vals.append(wvals[inside])
        if not inside.all():
            # neighbor is a boundary node: move its Dirichlet value to the rhs
            btargets = targets[~inside]
            rhs_rows = row_ids[~inside]
            np.add.at(rhs, rhs_rows, -wvals[~inside] * problem.g.values.ravel()[btargets])

    matrix = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_int, n_int),
    ).tocsr()
    matrix.eliminate_zeros()

    symmetric = problem.A.is_symmetric
    return LinearSystem(matrix=matrix, rhs=rhs, grid=grid, interior_ids=ids, symmetric=symmetric)


@dataclass
class DiscreteSolution:
    """Solution field plus the generating problem and solver diagnostics."""

    u: Field
    problem: EllipticProblem
    diagnostics: dict = field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return self.u.grid

    def scaled(self, c: float) -> "DiscreteSolution":
        """Exact by linearity: c*u solves the problem with data scaled by c."""
        diag = dict(self.diagnostics)
        diag["scaled_by"] = diag.get("scaled_by", 1.0) * c
        return DiscreteSolution(u=c * self.u, problem=self.problem.scaled(c), diagnostics=diag)


def _amg_preconditioner(matrix: sp.csr_matrix):
    try:
        import pyamg

        ml = pyamg.smoothed_aggregation_solver(matrix, max_coarse=64)
        return ml.aspreconditioner(cycle="V")
    except Exception:
        return None


def solve_dirichlet(problem: EllipticProblem) -> DiscreteSolution:
    """Solve the assembled system to relative residual <= 1e-10.

    Sparse direct elimination for m <= 129; above that, AMG-preconditioned
    conjugate gradients for symmetric operators and ILU-preconditioned
    GMRES otherwise, capped at 50*m iterations.
    """
    system = assemble(problem)
    grid = system.grid
    matrix, rhs = system.matrix, system.rhs
    cap = 50 * grid.m
    iterations = 0
    bnorm = float(np.linalg.norm(rhs))

    if grid.m <= DIRECT_SOLVE_MAX_M:
        x = spla.spsolve(matrix.tocsc(), rhs)
        method = "direct"
    elif system.symmetric:
        pre = _amg_preconditioner(matrix)
        count = [0]

        def cb(_xk):
            count[0] += 1

        x, info = spla.cg(matrix, rhs, rtol=1e-13, atol=0.0, maxiter=cap, M=pre, callback=cb)
        iterations = count[0]
        method = "amg-cg" if pre is not None else "cg"
        if info > 0 and bnorm > 0:
            rel = float(np.linalg.norm(rhs - matrix @ x)) / bnorm
            if rel > SOLVE_RTOL:
                raise SolverStagnationError(
                    f"CG stalled at relative residual {rel:.3e} after {iterations} iterations",
                    diagnostics={"method": method, "iterations": iterations, "residual": rel},
                )
    else:
        ilu = spla.spilu(matrix.tocsc(), drop_tol=1e-5, fill_factor=20)
        pre = spla.LinearOperator(matrix.shape, ilu.solve)
        count = [0]

        def cb(_rk):
            count[0] += 1

        # scipy's gmres counts restart cycles, so the 50*m inner-iteration
        # budget translates to cap/restart cycles
        x, info = spla.gmres(
            matrix, rhs, rtol=1e-12, atol=0.0, maxiter=max(2, cap // 50),
            M=pre, callback=cb, callback_type="pr_norm", restart=50,
        )
        iterations = count[0]
        method = "ilu-gmres"

    residual = float(np.linalg.norm(rhs - matrix @ x)) / (bnorm if bnorm > 0 else 1.0)
    if not np.isfinite(residual) or residual > SOLVE_RTOL:
        raise SolverStagnationError(
            f"{method} finished with relative residual {residual:.3e} > {SOLVE_RTOL}",
            diagnostics={"method": method, "iterations": iterations, "residual": residual},
        )

    full = problem.g.values.copy()
    interior = grid.interior_mask(1)
    full[interior] = x
    u = Field(grid, full)
    return DiscreteSolution(
        u=u,
        problem=problem,
        diagnostics={
            "method": method,
            "iterations": iterations,
            "residual": residual,
            "symmetric": system.symmetric,
            "unknowns": matrix.shape[0],
        },
    )


def weak_residual(u: Field, problem: EllipticProblem, phi: Field) -> float:
    """|sum A grad u . grad phi - sum f phi + sum F . grad phi| * h^n.

    phi must vanish on the two outermost node layers; for a solved problem
    with smooth data the value decays like h^2 times the H^1 size of phi.
    """
    from .field_calculus import gradient
    from .errors import SupportViolationError

    grid = u.grid
    m = grid.m
    for ax in range(grid.n):
        lo = (slice(None),) * ax + (slice(0, 2),)
        hi = (slice(None),) * ax + (slice(m - 2, m),)
        if np.any(phi.values[lo] != 0.0) or np.any(phi.values[hi] != 0.0):
            raise SupportViolationError("phi must vanish on the outer two node layers")
    hn = grid.h**grid.n
    gu = gradient(u).components
    gphi = gradient(phi).components
    a_grad = np.einsum("ij...,j...->i...", problem.A.entries, gu)
    t1 = float((a_grad * gphi).sum()) * hn
    t2 = float((problem.f.values * phi.values).sum()) * hn
    t3 = float((problem.F.components * gphi).sum()) * hn
    return abs(t1 - t2 + t3)


# -- problem manifests --------------------------------------------------------
#
# A problem bundle is a JSON manifest referencing field binaries:
# {"grid": {"n":2,"m":65,"half_width":1.0},
#  "A": {"constant": [[1,0],[0,1]]} | {"files": [["a00.bin",...],...]},
#  "f": {"constant": 0.0} | {"file": "f.bin"},
#  "F": {"constant": 0.0} | {"files": ["F0.bin", "F1.bin"]},
#  "g": {"constant": 0.0} | {"file": "g.bin"},
#  "p": 2.0, "q": 4.0}


def load_problem(manifest_path) -> EllipticProblem:
    manifest_path = Path(manifest_path)
    spec = json.loads(manifest_path.read_text())
    gspec = spec["grid"]
    grid = Grid(n=int(gspec["n"]), half_width=float(gspec["half_width"]), m=int(gspec["m"]))
    base = manifest_path.parent

    def scalar_part(entry) -> Field:
        if "constant" in entry:
            return Field.full(grid, entry["constant"])
        return load_field(base / entry["file"])

    aspec = spec["A"]
    if "constant" in aspec:
        A = CoefficientField.from_constant(grid, np.asarray(aspec["constant"], dtype=float))
    else:
        rows = [[load_field(base / name).values for name in row] for row in aspec["files"]]
        A = CoefficientField(grid, np.asarray(rows))

    fspec = spec["F"]
    if "constant" in fspec:
        F = VecField(grid, np.full((grid.n,) + grid.shape, float(fspec["constant"])))
    else:
        F = VecField(grid, np.stack([load_field(base / name).values for name in fspec["files"]]))

    return EllipticProblem(
        A=A,
        f=scalar_part(spec["f"]),
        F=F,
        g=scalar_part(spec["g"]),
        p=float(spec.get("p", 2.0)),
        q=float(spec.get("q", 4.0)),
    )


def save_solution(sol: DiscreteSolution, out_dir) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_field(out_dir / "u.bin", sol.u)
    record = dict(sol.diagnostics)
    record["fingerprint"] = sol.problem.fingerprint()
    record["grid"] = {"n": sol.grid.n, "m": sol.grid.m, "half_width": sol.grid.half_width}
    (out_dir / "diagnostics.json").write_text(json.dumps(record, indent=2))
