"""Discrete differential and smoothing operators on nodal fields.

Fields are value-semantic samples on a :class:`~schauderlab.domain_grid.Grid`
with an explicit validity mask: operators that lose nodes at the boundary
(shifted quotients, pure central stencils, mollification) mark those nodes
invalid instead of padding values, and every norm downstream skips them.

Difference quotients are restricted to steps that are integer multiples of
the spacing, so that summation by parts
    sum D_j^h u . phi  =  - sum u . D_j^{-h} phi
is an exact identity whenever phi vanishes on a wide enough boundary band.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage
from scipy.integrate import cumulative_trapezoid

from .domain_grid import Grid
from .errors import (
    KernelUnderResolvedError,
    MisalignedStepError,
    SupportViolationError,
)


class Field:
    """Scalar nodal samples on a grid, immutable after construction.

    ``valid`` marks nodes carrying meaningful values; invalid nodes are
    stored as 0.0 and excluded from norms and inner products.
    """

    __slots__ = ("grid", "values", "valid")

    def __init__(self, grid: Grid, values, valid=None):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            raise ValueError(f"values shape {values.shape} != grid shape {grid.shape}")
        if valid is None:
            valid = np.ones(grid.shape, dtype=bool)
        else:
            valid = np.asarray(valid, dtype=bool)
            if valid.shape != grid.shape:
                raise ValueError("validity mask shape mismatch")
        if not np.isfinite(values[valid]).all():
            raise ValueError("non-finite values at valid nodes")
        values = np.where(valid, values, 0.0)
        values.setflags(write=False)
        valid = valid.copy()
        valid.setflags(write=False)
        self.grid = grid
        self.values = values
        self.valid = valid

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "Field":
        """Sample ``fn(*coords)`` at the nodes; fn must broadcast over arrays."""
        return cls(grid, fn(*grid.coords()))

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def full(cls, grid: Grid, value: float) -> "Field":
        return cls(grid, np.full(grid.shape, float(value)))

    @property
    def all_valid(self) -> bool:
        return bool(self.valid.all())

    def _combine(self, other, op):
        if isinstance(other, Field):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return Field(self.grid, op(self.values, other.values), self.valid & other.valid)
        return Field(self.grid, op(self.values, other), self.valid)

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    def __rmul__(self, other):
        return self._combine(other, lambda a, b: np.multiply(b, a))

    def __neg__(self):
        return Field(self.grid, -self.values, self.valid)

    def clip_positive_part(self, level: float) -> "Field":
        """(u - level)_+ nodewise."""
        return Field(self.grid, np.maximum(self.values - level, 0.0), self.valid)

    def clip_negative_part(self, level: float) -> "Field":
        """(u - level)_- nodewise, i.e. max(level - u, 0)."""
        return Field(self.grid, np.maximum(level - self.values, 0.0), self.valid)


class VecField:
    """n-component nodal samples sharing one grid and one validity mask."""

    __slots__ = ("grid", "components", "valid")

    def __init__(self, grid: Grid, components, valid=None):
        components = np.asarray(components, dtype=float)
        if components.shape != (grid.n,) + grid.shape:
            raise ValueError(
                f"components shape {components.shape} != {(grid.n,) + grid.shape}"
            )
        if valid is None:
            valid = np.ones(grid.shape, dtype=bool)
        else:
            valid = np.asarray(valid, dtype=bool)
        if not np.isfinite(components[:, valid]).all():
            raise ValueError("non-finite components at valid nodes")
        components = np.where(valid[None], components, 0.0)
        components.setflags(write=False)
        valid = valid.copy()
        valid.setflags(write=False)
        self.grid = grid
        self.components = components
        self.valid = valid

    @classmethod
    def zeros(cls, grid: Grid) -> "VecField":
        return cls(grid, np.zeros((grid.n,) + grid.shape))

    @classmethod
    def from_functions(cls, grid: Grid, fns) -> "VecField":
        coords = grid.coords()
        comps = np.stack([np.broadcast_to(fn(*coords), grid.shape) for fn in fns])
        return cls(grid, comps)

    def component(self, j: int) -> Field:
        return Field(self.grid, self.components[j], self.valid)

    def magnitude(self) -> Field:
        return Field(self.grid, np.sqrt((self.components**2).sum(axis=0)), self.valid)

    def __mul__(self, scalar):
        return VecField(self.grid, self.components * float(scalar), self.valid)

    __rmul__ = __mul__


def _shift_slices(m: int, s: int):
    """Index slices so that dst[sl_dst] = src[sl_src] realizes src(x + s e_j)."""
    if s >= 0:
        return slice(0, m - s), slice(s, m)
    return slice(-s, m), slice(0, m + s)


def difference_quotient(u: Field, j: int, h_step: float) -> Field:
    """Incremental quotient (u(x + h_step e_j) - u(x)) / h_step.

    ``h_step`` is signed and must be a nonzero integer multiple of the grid
    spacing; nodes whose shifted point leaves the box are marked invalid.
    """
    grid = u.grid
    if not 0 <= j < grid.n:
        raise ValueError(f"axis {j} out of range for dimension {grid.n}")
    if h_step == 0:
        raise ValueError("h_step must be nonzero")
    ratio = h_step / grid.h
    s = int(round(ratio))
    if s == 0 or abs(ratio - s) > 1e-9:
        raise MisalignedStepError(
            f"h_step {h_step:.6g} is not an integer multiple of spacing {grid.h:.6g}"
        )
    m = grid.m
    sl_dst, sl_src = _shift_slices(m, s)
    out = np.zeros(grid.shape)
    ok = np.zeros(grid.shape, dtype=bool)
    ix_dst = (slice(None),) * j + (sl_dst,)
    ix_src = (slice(None),) * j + (sl_src,)
    out[ix_dst] = (u.values[ix_src] - u.values[ix_dst]) / h_step
    ok[ix_dst] = u.valid[ix_src] & u.valid[ix_dst]
    return Field(grid, out, ok)


def _band_clear(phi: Field, width_nodes: int) -> bool:
    """True iff phi vanishes on a band of the given node width at every face."""
    m = phi.grid.m
    w = width_nodes
    for ax in range(phi.grid.n):
        lo = (slice(None),) * ax + (slice(0, w),)
        hi = (slice(None),) * ax + (slice(m - w, m),)
        if np.any(phi.values[lo] != 0.0) or np.any(phi.values[hi] != 0.0):
            return False
    return True


def summation_by_parts_residual(u: Field, phi: Field, j: int, h_step: float) -> float:
    """|sum D_j^h u . phi + sum u . D_j^{-h} phi| * h^n, an exact-zero identity.

    Requires phi to vanish on a boundary band at least |h_step| wide; the
    returned residual is absolute (normalize by ||u||_2 ||phi||_2 to compare
    against the 1e-12 relative contract).
    """
    grid = u.grid
    s = abs(int(round(h_step / grid.h)))
    if not _band_clear(phi, s):
        raise SupportViolationError(
            f"phi must vanish on a {s}-node boundary band for step {h_step:.6g}"
        )
    hn = grid.h**grid.n
    d_u = difference_quotient(u, j, h_step)
    d_phi = difference_quotient(phi, j, -h_step)
    a = float(np.sum(d_u.values * phi.values * d_u.valid)) * hn
    b = float(np.sum(u.values * d_phi.values * d_phi.valid)) * hn
    return abs(a + b)


def gradient(u: Field) -> VecField:
    """Second-order gradient: central differences inside, one-sided at faces.

    Exact on fields whose restriction to each grid line is quadratic. When u
    carries invalid nodes the result is additionally eroded by one node so no
    stencil touches an invalid value.
    """
    grid = u.grid
    comps = np.stack(
        [np.gradient(u.values, grid.h, axis=ax, edge_order=2) for ax in range(grid.n)]
    )
    if u.all_valid:
        return VecField(grid, comps)
    structure = ndimage.generate_binary_structure(grid.n, 1)
    ok = ndimage.binary_erosion(u.valid, structure=structure, border_value=0)
    return VecField(grid, comps, ok)


def central_difference(u: Field, axis: int) -> Field:
    """Pure central difference along one axis; the face layers become invalid.

    Used where one-sided boundary formulas would contaminate higher
    derivatives (repeated differentiation for C^{k,alpha} and H^k norms).
    """
    grid = u.grid
    m, h = grid.m, grid.h
    out = np.zeros(grid.shape)
    mid = (slice(None),) * axis + (slice(1, m - 1),)
    plus = (slice(None),) * axis + (slice(2, m),)
    minus = (slice(None),) * axis + (slice(0, m - 2),)
    out[mid] = (u.values[plus] - u.values[minus]) / (2.0 * h)
    ok = np.zeros(grid.shape, dtype=bool)
    ok[mid] = u.valid[plus] & u.valid[minus] & u.valid[mid]
    return Field(grid, out, ok)


def divergence(F: VecField) -> Field:
    """Central-difference divergence sum_j d_j F_j (valid strictly inside)."""
    total = None
    for j in range(F.grid.n):
        term = central_difference(F.component(j), j)
        total = term if total is None else total + term
    return total


class Mollifier:
    """Unit-mass bump kernel exp(-1/(1 - |x/eps|^2)) sampled on grid offsets.

    The kernel is nonnegative, radially nonincreasing, supported strictly in
    the eps-ball, and renormalized so its discrete mass (sum times h^n) is 1
    to machine precision.
    """

    __slots__ = ("grid", "eps", "weights", "radius_nodes")

    def __init__(self, grid: Grid, eps: float):
        if eps < 2.0 * grid.h:
            raise KernelUnderResolvedError(
                f"eps = {eps:.6g} below 2h = {2 * grid.h:.6g}"
            )
        if eps >= grid.half_width:
            raise ValueError("kernel support must sit strictly inside the box")
        self.grid = grid
        self.eps = float(eps)
        s = int(np.ceil(eps / grid.h)) - 1
        offs = np.arange(-s, s + 1) * grid.h
        mesh = np.meshgrid(*([offs] * grid.n), indexing="ij")
        rho2 = sum(c**2 for c in mesh) / eps**2
        w = np.zeros(mesh[0].shape)
        inside = rho2 < 1.0
        w[inside] = np.exp(-1.0 / (1.0 - rho2[inside]))
        w /= w.sum()
        w.setflags(write=False)
        self.weights = w
        self.radius_nodes = s

    @property
    def kernel(self) -> Field:
        """Kernel as a grid field centered at the origin, mass h^n-normalized."""
        vals = np.zeros(self.grid.shape)
        s = self.radius_nodes
        c = self.grid.m // 2
        block = (slice(c - s, c + s + 1),) * self.grid.n
        vals[block] = self.weights / self.grid.h**self.grid.n
        return Field(self.grid, vals)


def mollify(g: Field, eps: float) -> Field:
    """Convolve with the unit-mass bump kernel; valid on the eps-interior.

    Discrete Young inequality holds exactly: for every p >= 1 the L^p norm of
    the result over its valid set is at most the L^p norm of g over the box.
    """
    moll = Mollifier(g.grid, eps)
    out = ndimage.convolve(g.values, moll.weights, mode="constant", cval=0.0)
    footprint = moll.weights > 0
    ok = ndimage.binary_erosion(g.valid, structure=footprint, border_value=0)
    return Field(g.grid, np.where(ok, out, 0.0), ok)


def mollify_vec(F: VecField, eps: float) -> VecField:
    comps = [mollify(F.component(j), eps) for j in range(F.grid.n)]
    ok = comps[0].valid
    return VecField(F.grid, np.stack([c.values for c in comps]), ok)


def forcing_to_field(f: Field) -> VecField:
    """Antiderivative lift of a forcing into a field term.

    Returns F with only the last component nonzero, the cumulative trapezoid
    of f along the last axis anchored at the hyperplane x_n = 0, so that the
    discrete divergence of F reproduces f with O(h^2) interior residual.
    """
    grid = f.grid
    c = cumulative_trapezoid(f.values, dx=grid.h, axis=-1, initial=0.0)
    mid = grid.m // 2
    c = c - c[..., mid : mid + 1]
    comps = np.zeros((grid.n,) + grid.shape)
    comps[-1] = c
    return VecField(grid, comps, f.valid)


# -- flat-binary and CSV interchange ----------------------------------------
#
# Binary layout: int64 n, int64 m, float64 half_width (little-endian), then
# the node values as little-endian float64 in C order. Validity masks are not
# serialized; the format targets data fields, which are valid everywhere.

_HEADER_DTYPE = np.dtype([("n", "<i8"), ("m", "<i8"), ("half_width", "<f8")])


def save_field(path, u: Field) -> None:
    with open(path, "wb") as fh:
        header = np.array([(u.grid.n, u.grid.m, u.grid.half_width)], dtype=_HEADER_DTYPE)
        fh.write(header.tobytes())
        fh.write(u.values.astype("<f8").tobytes())


def load_field(path) -> Field:
    with open(path, "rb") as fh:
        header = np.frombuffer(fh.read(_HEADER_DTYPE.itemsize), dtype=_HEADER_DTYPE)[0]
        grid = Grid(n=int(header["n"]), half_width=float(header["half_width"]), m=int(header["m"]))
        raw = np.frombuffer(fh.read(), dtype="<f8")
    if raw.size != grid.num_nodes:
        raise ValueError(f"payload holds {raw.size} values, grid needs {grid.num_nodes}")
    return Field(grid, raw.reshape(grid.shape))


def field_to_csv(path, u: Field) -> None:
    """Plain-text export for small grids: one '# grid n m half_width' line,
    a coordinate header, then one node per row."""
    coords = [c.ravel() for c in u.grid.coords()]
    names = ["x", "y", "z"][: u.grid.n]
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# grid {u.grid.n} {u.grid.m} {u.grid.half_width!r}\n")
        fh.write(",".join(names + ["value"]) + "\n")
        for row in zip(*coords, u.values.ravel()):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def field_from_csv(path) -> Field:
    with open(path, "r", encoding="ascii") as fh:
        tag = fh.readline().split()
        if len(tag) != 5 or tag[0] != "#" or tag[1] != "grid":
            raise ValueError("missing '# grid n m half_width' header line")
        grid = Grid(n=int(tag[2]), half_width=float(tag[4]), m=int(tag[3]))
        fh.readline()  # column header
        vals = np.array([float(line.rsplit(",", 1)[1]) for line in fh if line.strip()])
    return Field(grid, vals.reshape(grid.shape))
