"""Discrete calculus on a flat Kahler 2-torus T^4 = (R/Z)^4.

Two complex coordinates z_j = X_j + i Y_j run over torus factors of areas
(a1, a2); grid coordinates live on the unit cube with N points per axis and
all derivatives are taken in physical units ``d/dX = (1/L) d/dx``,
``L_j = sqrt(a_j)``.

Two backends:

* ``spectral``  -- Fourier differentiation, degree-(0,0) bundles only, exact
  on band-limited fields (Nyquist derivative bins are zeroed);
* ``link``      -- central covariant differences built from unitary link
  phases; nontrivial bidegrees enter through constant-flux background links
  whose seam phases realize the twist; identities converge at second order.

Component conventions are orthonormal throughout (see ``spin_algebra``):
(0,1)-forms carry coefficients of ``dz_jb/sqrt2``, (0,2)-forms of
``dz1b^dz2b/2``, real 1-forms the four physical axis components, real 2-forms
the six physical components F_{mu nu} with pairs ordered
(01, 02, 03, 12, 13, 23) for axes (X1, Y1, X2, Y2).  The Kahler form then has
``Lambda(F) = F_01 + F_23`` and ``Lambda(omega) = 2``, and the quadrature is
a plain grid sum times the cell volume (exact for periodic band-limited
integrands).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "GridSpec",
    "Field",
    "Connection",
    "KindError",
    "KIND_COMPONENTS",
    "PAIRS",
    "dbar",
    "partial",
    "covariant_axis",
    "nabla_norm_sq",
    "rough_laplacian",
    "laplacian_scalar",
    "solve_poisson_mean_zero",
    "curvature",
    "chern_weil_degree",
    "lambda_contract",
    "selfdual_plus",
    "antiselfdual",
    "hodge_star",
    "f20_component",
    "f02_component",
    "exterior_d",
    "integrate",
    "inner_product",
    "pointwise_inner",
    "norm_l2",
    "norm_sup",
    "random_band_limited",
    "random_connection",
    "random_gauge",
    "gauge_transform",
    "mean_value",
    "mode_field",
]


class KindError(ValueError):
    """Raised when an operator is applied to a field of the wrong kind."""


KIND_COMPONENTS = {
    "00": 1,   # functions
    "01": 2,   # (0,1)-forms
    "10": 2,   # (1,0)-forms
    "02": 1,   # (0,2)-forms
    "20": 1,   # (2,0)-forms
    "11": 4,   # (1,1)-forms, (i, jbar) index pairs (11,12,21,22)
    "12": 2,   # (1,2)-forms, eps_i ^ eps1b ^ eps2b
    "1r": 4,   # real 1-forms, physical axis components
    "2r": 6,   # real 2-forms, physical pairs
    "3r": 4,   # real 3-forms, physical triples (012, 013, 023, 123)
    "4": 1,    # top forms, coefficient of the volume form
}

PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
TRIPLES = ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3))
GEOMS = ("scalar", "section", "endo")


@dataclass(frozen=True)
class GridSpec:
    """Discretization data: N points per axis, areas of the two torus
    factors, backend, background bidegree and bundle rank.

    The spectral backend requires bidegree (0, 0); twisted backgrounds are
    line bundles, so a nonzero bidegree forces rank 1.
    """

    n: int
    areas: tuple = (1.0, 1.0)
    backend: str = "spectral"
    bidegree: tuple = (0, 0)
    rank: int = 1

    def __post_init__(self):
        if self.n % 2 != 0 or self.n < 8:
            raise ValueError("grid size must be even and at least 8")
        if self.backend not in ("spectral", "link"):
            raise ValueError(f"unknown backend {self.backend!r}")
        object.__setattr__(self, "areas", (float(self.areas[0]), float(self.areas[1])))
        object.__setattr__(self, "bidegree", (int(self.bidegree[0]), int(self.bidegree[1])))
        if self.areas[0] <= 0 or self.areas[1] <= 0:
            raise ValueError("areas must be positive")
        if self.backend == "spectral" and self.bidegree != (0, 0):
            raise ValueError("spectral backend supports only bidegree (0, 0)")
        if self.bidegree != (0, 0) and self.rank != 1:
            raise ValueError("twisted backgrounds are line bundles: rank must be 1")
        if self.rank < 1:
            raise ValueError("rank must be >= 1")

    @property
    def shape(self):
        return (self.n,) * 4

    @property
    def volume(self):
        return self.areas[0] * self.areas[1]

    @property
    def lengths(self):
        """Physical length per axis (X1, Y1, X2, Y2)."""
        l1 = self.areas[0] ** 0.5
        l2 = self.areas[1] ** 0.5
        return (l1, l1, l2, l2)

    @property
    def cell_volume(self):
        return self.volume / self.n ** 4

    def coordinates(self):
        """Unit-cube coordinate arrays, broadcastable to the grid shape."""
        x = np.arange(self.n) / self.n
        return tuple(
            x.reshape((1,) * axis + (self.n,) + (1,) * (3 - axis))
            for axis in range(4)
        )


def _mat_shape(grid: GridSpec, geom: str):
    return {"scalar": (), "section": (grid.rank,), "endo": (grid.rank, grid.rank)}[geom]


@dataclass(frozen=True)
class Field:
    """A periodic field: orthonormal components of a (p,q)- or real-form kind,
    each a complex grid array, optionally bundle valued.

    ``values`` has shape ``(ncomp, *mat, n, n, n, n)`` where ``mat`` is ``()``
    for plain scalars, ``(r,)`` for sections of E, ``(r, r)`` for End(E).
    Twisted sections are plain grid arrays; the twist lives in the background
    links of the connection used to differentiate them.
    """

    grid: GridSpec
    kind: str
    geom: str
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in KIND_COMPONENTS:
            raise KindError(f"unknown field kind {self.kind!r}")
        if self.geom not in GEOMS:
            raise ValueError(f"unknown geometry {self.geom!r}")
        expected = (KIND_COMPONENTS[self.kind],) + _mat_shape(self.grid, self.geom) + self.grid.shape
        values = np.asarray(self.values, dtype=complex)
        if values.shape != expected:
            raise ValueError(f"values shape {values.shape} != expected {expected}")
        object.__setattr__(self, "values", values)

    # -- construction -------------------------------------------------------

    @classmethod
    def zeros(cls, grid, kind, geom="scalar"):
        shape = (KIND_COMPONENTS[kind],) + _mat_shape(grid, geom) + grid.shape
        return cls(grid, kind, geom, np.zeros(shape, dtype=complex))

    @classmethod
    def from_scalar(cls, grid, array, kind="00", geom="scalar"):
        arr = np.asarray(array, dtype=complex)
        out = cls.zeros(grid, kind, geom)
        out.values[0] = np.broadcast_to(arr, out.values[0].shape)
        return out

    @classmethod
    def constant(cls, grid, value, kind="00", geom="scalar"):
        return cls.from_scalar(grid, np.full(grid.shape, value, dtype=complex), kind, geom)

    # -- arithmetic ---------------------------------------------------------

    def _like(self, values):
        return Field(self.grid, self.kind, self.geom, values)

    def __add__(self, other):
        self._check_compatible(other)
        return self._like(self.values + other.values)

    def __sub__(self, other):
        self._check_compatible(other)
        return self._like(self.values - other.values)

    def __mul__(self, scalar):
        return self._like(self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return self._like(-self.values)

    def _check_compatible(self, other):
        if not isinstance(other, Field) or other.kind != self.kind or other.geom != self.geom:
            raise KindError("incompatible fields")
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")


@lru_cache(maxsize=64)
def _spectral_multiplier(n: int, length: float):
    """1j * 2 pi k / L per Fourier bin, with the ambiguous Nyquist bin zeroed."""
    k = np.fft.fftfreq(n, d=1.0) * n
    mult = 2j * np.pi * k / length
    mult[n // 2] = 0.0
    return mult


def _spectral_derivative(values, axis, grid: GridSpec):
    grid_axis = values.ndim - 4 + axis
    mult = _spectral_multiplier(grid.n, grid.lengths[axis])
    shape = [1] * values.ndim
    shape[grid_axis] = grid.n
    spec = np.fft.fft(values, axis=grid_axis)
    spec *= mult.reshape(shape)
    return np.fft.ifft(spec, axis=grid_axis)


# ---------------------------------------------------------------------------
# connections and their lattice links
# ---------------------------------------------------------------------------


def _expm_skew(m):
    """Matrix exponential of a pointwise skew-Hermitian stack (..., r, r)."""
    r = m.shape[-1]
    if r == 1:
        return np.exp(m)
    w, v = np.linalg.eigh(-1j * m)
    phase = np.exp(1j * w)
    return np.einsum("...ij,...j,...kj->...ik", v, phase, np.conj(v))


def _background_links(grid: GridSpec):
    """Constant-flux U(1) link phases realizing bidegree (d1, d2); the seam
    column carries the automorphy phase so every plaquette angle is exactly
    -2 pi d / N^2 on its factor."""
    n = grid.n
    links = []
    idx = np.arange(n)
    for factor, (ax_x, ax_y) in enumerate(((0, 1), (2, 3))):
        d = grid.bidegree[factor]
        omega = -2.0 * np.pi * d / n ** 2
        ux = np.ones(grid.shape, dtype=complex)
        uy = np.ones(grid.shape, dtype=complex)
        if d != 0:
            nx = idx.reshape((1,) * ax_x + (n,) + (1,) * (3 - ax_x))
            ny = idx.reshape((1,) * ax_y + (n,) + (1,) * (3 - ax_y))
            uy = uy * np.exp(1j * omega * nx)
            seam = (nx == n - 1)
            ux = np.where(seam, np.exp(-1j * omega * n * ny), 1.0).astype(complex)
        links.append((ax_x, ux))
        links.append((ax_y, uy))
    out = [None] * 4
    for axis, u in links:
        out[axis] = u
    return tuple(out)


@dataclass(frozen=True)
class Connection:
    """Background constant-curvature bidegree data plus a periodic
    skew-Hermitian potential.

    ``potential`` holds the four physical axis components, each an r x r
    matrix over the grid; pointwise skew-Hermiticity is enforced to 1e-14.
    """

    grid: GridSpec
    potential: np.ndarray

    def __post_init__(self):
        expected = (4, self.grid.rank, self.grid.rank) + self.grid.shape
        pot = np.asarray(self.potential, dtype=complex)
        if pot.shape != expected:
            raise ValueError(f"potential shape {pot.shape} != {expected}")
        defect = np.max(np.abs(pot + np.conj(np.swapaxes(pot, 1, 2))))
        if defect > 1e-14 * max(1.0, np.max(np.abs(pot))):
            raise ValueError("potential components must be pointwise skew-Hermitian")
        object.__setattr__(self, "potential", pot)

    @classmethod
    def trivial(cls, grid: GridSpec):
        return cls(grid, np.zeros((4, grid.rank, grid.rank) + grid.shape, dtype=complex))

    @property
    def links(self):
        cached = self.__dict__.get("_links")
        if cached is None:
            cached = self._build_links()
            self.__dict__["_links"] = cached
        return cached

    def _build_links(self):
        grid = self.grid
        bg = _background_links(grid)
        links = []
        for axis in range(4):
            h = grid.lengths[axis] / grid.n
            a = self.potential[axis]
            grid_axis = a.ndim - 4 + axis
            mid = 0.5 * (a + np.roll(a, -1, axis=grid_axis))
            u = _expm_skew(np.moveaxis(h * mid, (0, 1), (-2, -1)))
            u = np.moveaxis(u, (-2, -1), (0, 1))
            links.append(bg[axis][None, None] * u)
        return tuple(links)


def covariant_axis(conn: Connection, field: Field, axis: int) -> np.ndarray:
    """Covariant derivative of the component stack along one physical axis.

    Spectral: Fourier derivative plus the zeroth-order potential term.
    Link: central covariant difference through the unitary links (background
    twist included), second-order accurate.
    """
    grid = conn.grid
    vals = field.values
    if grid.backend == "spectral":
        out = _spectral_derivative(vals, axis, grid)
        if field.geom == "section":
            out = out + np.einsum("ij...,cj...->ci...", conn.potential[axis], vals)
        elif field.geom == "endo":
            a = conn.potential[axis]
            out = out + np.einsum("ij...,cjk...->cik...", a, vals) - np.einsum(
                "cij...,jk...->cik...", vals, a
            )
        return out
    # link backend
    u = conn.links[axis]
    grid_axis = vals.ndim - 4 + axis
    h = grid.lengths[axis] / grid.n
    fwd = np.roll(vals, -1, axis=grid_axis)
    bwd = np.roll(vals, 1, axis=grid_axis)
    u_b = np.roll(u, 1, axis=u.ndim - 4 + axis)
    if field.geom == "scalar":
        return (fwd - bwd) / (2.0 * h)
    udag = np.conj(np.swapaxes(u, 0, 1))
    u_bdag = np.conj(np.swapaxes(u_b, 0, 1))
    if field.geom == "section":
        plus = np.einsum("ij...,cj...->ci...", u, fwd)
        minus = np.einsum("ij...,cj...->ci...", u_bdag, bwd)
        return (plus - minus) / (2.0 * h)
    plus = np.einsum("ij...,cjk...,kl...->cil...", u, fwd, udag)
    minus = np.einsum("ij...,cjk...,kl...->cil...", u_bdag, bwd, u_b)
    return (plus - minus) / (2.0 * h)


def _dop(conn, field, axis_pair, sign):
    """(1/2)(D_X + i s D_Y) along a complex coordinate, s = +1 for dbar."""
    ax_x, ax_y = axis_pair
    return 0.5 * (
        covariant_axis(conn, field, ax_x) + sign * 1j * covariant_axis(conn, field, ax_y)
    )


_SQRT2 = float(np.sqrt(2.0))


def dbar(conn: Connection, field: Field) -> Field:
    """The (0,1) covariant derivative in orthonormal components."""
    g = conn.grid
    db = [_dop(conn, field, (0, 1), +1), _dop(conn, field, (2, 3), +1)]
    if field.kind == "00":
        vals = np.stack([_SQRT2 * db[0][0], _SQRT2 * db[1][0]])
        return Field(g, "01", field.geom, vals)
    if field.kind == "01":
        vals = _SQRT2 * (db[0][1] - db[1][0])
        return Field(g, "02", field.geom, vals[None])
    if field.kind == "10":
        out = np.empty((4,) + field.values.shape[1:], dtype=complex)
        # component (p, qbar) of eps_p ^ epsbar_q is -sqrt2 dbar_q beta_p
        out[0] = -_SQRT2 * db[0][0]
        out[1] = -_SQRT2 * db[1][0]
        out[2] = -_SQRT2 * db[0][1]
        out[3] = -_SQRT2 * db[1][1]
        return Field(g, "11", field.geom, out)
    raise KindError(f"dbar undefined on kind {field.kind!r}")


def partial(conn: Connection, field: Field) -> Field:
    """The (1,0) covariant derivative in orthonormal components."""
    g = conn.grid
    dp = [_dop(conn, field, (0, 1), -1), _dop(conn, field, (2, 3), -1)]
    if field.kind == "00":
        vals = np.stack([_SQRT2 * dp[0][0], _SQRT2 * dp[1][0]])
        return Field(g, "10", field.geom, vals)
    if field.kind == "02":
        vals = np.stack([_SQRT2 * dp[0][0], _SQRT2 * dp[1][0]])
        return Field(g, "12", field.geom, vals)
    if field.kind == "01":
        out = np.empty((4,) + field.values.shape[1:], dtype=complex)
        # component (p, qbar) of eps_p ^ epsbar_q is sqrt2 d_p theta_q
        out[0] = _SQRT2 * dp[0][0]
        out[1] = _SQRT2 * dp[0][1]
        out[2] = _SQRT2 * dp[1][0]
        out[3] = _SQRT2 * dp[1][1]
        return Field(g, "11", field.geom, out)
    if field.kind == "10":
        vals = _SQRT2 * (dp[0][1] - dp[1][0])
        return Field(g, "20", field.geom, vals[None])
    raise KindError(f"partial undefined on kind {field.kind!r}")


def nabla_norm_sq(conn: Connection, field: Field) -> float:
    """Integrated squared norm of the full covariant derivative."""
    total = 0.0
    for axis in range(4):
        d = covariant_axis(conn, field, axis)
        total += float(np.sum(np.abs(d) ** 2)) * conn.grid.cell_volume
    return total


def rough_laplacian(conn: Connection, field: Field) -> Field:
    """Connection Laplacian nabla* nabla = -sum_mu D_mu D_mu."""
    out = np.zeros_like(field.values)
    for axis in range(4):
        first = Field(field.grid, field.kind, field.geom, covariant_axis(conn, field, axis))
        out -= covariant_axis(conn, first, axis)
    return Field(field.grid, field.kind, field.geom, out)


def laplacian_scalar(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    """Positive scalar Laplacian (= 2i Lambda dbar d) via Fourier multipliers."""
    spec = np.fft.fftn(values, axes=(-4, -3, -2, -1))
    spec *= _laplace_symbol(grid)
    return np.fft.ifftn(spec, axes=(-4, -3, -2, -1))


@lru_cache(maxsize=16)
def _laplace_symbol(grid: GridSpec):
    n = grid.n
    k = np.fft.fftfreq(n, d=1.0) * n
    sym = np.zeros((n,) * 4)
    for axis, length in enumerate(grid.lengths):
        shape = [1] * 4
        shape[axis] = n
        sym = sym + (2.0 * np.pi * k / length).reshape(shape) ** 2
    return sym


def solve_poisson_mean_zero(grid: GridSpec, rhs: np.ndarray) -> np.ndarray:
    """Solve nabla* nabla u = rhs with mean-zero u (rhs mean is discarded)."""
    spec = np.fft.fftn(np.asarray(rhs, complex), axes=(-4, -3, -2, -1))
    sym = _laplace_symbol(grid).copy()
    sym[0, 0, 0, 0] = 1.0
    spec = spec / sym
    spec[..., 0, 0, 0, 0] = 0.0
    return np.fft.ifftn(spec, axes=(-4, -3, -2, -1))


# ---------------------------------------------------------------------------
# curvature
# ---------------------------------------------------------------------------


def _unitary_log(u):
    """Principal logarithm of a stack of unitary matrices."""
    r = u.shape[-1]
    if r == 1:
        ang = np.angle(u[..., 0, 0])
        if np.max(np.abs(ang)) > np.pi - 0.2:
            raise ValueError(
                "plaquette phase near the branch cut: field too rough for this grid, refine N"
            )
        return 1j * ang[..., None, None]
    w, v = np.linalg.eig(u)
    v, _ = np.linalg.qr(v)
    ang = np.angle(w)
    if np.max(np.abs(ang)) > np.pi - 0.2:
        raise ValueError(
            "plaquette eigenphase near the branch cut: field too rough for this grid, refine N"
        )
    return np.einsum("...ij,...j,...kj->...ik", v, 1j * ang, np.conj(v))


def curvature(conn: Connection) -> Field:
    """Curvature 2-form of the connection as a real-pair component field.

    Spectral backend: F = da + a ^ a from the potential.  Link backend:
    clover-averaged plaquette logarithms (background twist included), with an
    explicit error when a plaquette log leaves the principal branch.
    """
    grid = conn.grid
    out = Field.zeros(grid, "2r", "endo")
    if grid.backend == "spectral":
        a = conn.potential
        for c, (mu, nu) in enumerate(PAIRS):
            dmu_anu = _spectral_derivative(a[nu], mu, grid)
            dnu_amu = _spectral_derivative(a[mu], nu, grid)
            comm = np.einsum("ij...,jk...->ik...", a[mu], a[nu]) - np.einsum(
                "ij...,jk...->ik...", a[nu], a[mu]
            )
            out.values[c] = dmu_anu - dnu_amu + comm
        return out
    links = conn.links

    def _shift(arr, axis, steps):
        return np.roll(arr, -steps, axis=axis)

    def _dag(m):
        return np.conj(np.swapaxes(m, -1, -2))

    for c, (mu, nu) in enumerate(PAIRS):
        h2 = (grid.lengths[mu] / grid.n) * (grid.lengths[nu] / grid.n)
        # links reshaped to (n, n, n, n, r, r): grid axes lead
        u = np.moveaxis(links[mu], (0, 1), (-2, -1))
        v = np.moveaxis(links[nu], (0, 1), (-2, -1))
        plaq = u @ _shift(v, mu, 1) @ _dag(_shift(u, nu, 1)) @ _dag(v)
        # clover average of the four plaquettes cornered at each site
        total = _unitary_log(plaq)
        total = total + _unitary_log(_shift(plaq, mu, -1))
        total = total + _unitary_log(_shift(plaq, nu, -1))
        total = total + _unitary_log(_shift(_shift(plaq, mu, -1), nu, -1))
        out.values[c] = np.moveaxis(total / (4.0 * h2), (-2, -1), (0, 1))
    return out


def chern_weil_degree(conn: Connection, curvature_field: Field | None = None) -> float:
    """(1/2pi) integral of Tr(i F) wedge the Kahler form: the pairing of the
    first Chern class with the Kahler class.  Integer combination of the
    areas (to rounding) for any potential on a fixed background, since
    F wedge omega = (F_01 + F_23) dVol in physical components."""
    F = curvature(conn) if curvature_field is None else curvature_field
    grid = conn.grid

    def _tr(m):
        return np.einsum("ii...->...", m)

    i01 = float(np.real(np.sum(_tr(1j * F.values[0])))) * grid.cell_volume
    i23 = float(np.real(np.sum(_tr(1j * F.values[5])))) * grid.cell_volume
    return (i01 + i23) / (2.0 * np.pi)


def lambda_contract(field: Field) -> Field:
    """Adjoint of wedging with the Kahler form."""
    g = field.grid
    if field.kind == "2r":
        vals = field.values[0] + field.values[5]
        return Field(g, "00", field.geom, vals[None])
    if field.kind == "11":
        vals = -1j * (field.values[0] + field.values[3])
        return Field(g, "00", field.geom, vals[None])
    if field.kind == "12":
        vals = np.stack([1j * field.values[1], -1j * field.values[0]])
        return Field(g, "01", field.geom, vals)
    raise KindError(f"lambda_contract undefined on kind {field.kind!r}")


def selfdual_plus(field: Field) -> Field:
    """Self-dual projection of a real-pair 2-form."""
    if field.kind != "2r":
        raise KindError("selfdual_plus expects a real-pair 2-form")
    v = field.values
    out = np.empty_like(v)
    out[0] = out[5] = 0.5 * (v[0] + v[5])
    out[1] = 0.5 * (v[1] - v[4])
    out[4] = -out[1]
    out[2] = 0.5 * (v[2] + v[3])
    out[3] = out[2]
    return Field(field.grid, "2r", field.geom, out)


def antiselfdual(field: Field) -> Field:
    return field - selfdual_plus(field)


def hodge_star(field: Field) -> Field:
    """Hodge star; on 2-forms it fixes the self-dual part and flips the rest."""
    if field.kind == "2r":
        v = field.values
        out = np.empty_like(v)
        out[0], out[5] = v[5], v[0]
        out[1], out[4] = -v[4], -v[1]
        out[2], out[3] = v[3], v[2]
        return Field(field.grid, "2r", field.geom, out)
    if field.kind == "00":
        return Field(field.grid, "4", field.geom, field.values)
    if field.kind == "4":
        return Field(field.grid, "00", field.geom, field.values)
    raise KindError(f"hodge_star undefined on kind {field.kind!r}")


def f20_component(F: Field) -> Field:
    """Orthonormal (2,0) component of a real-pair 2-form."""
    if F.kind != "2r":
        raise KindError("expected a real-pair 2-form")
    v = F.values
    vals = 0.5 * ((v[1] - v[4]) - 1j * (v[2] + v[3]))
    return Field(F.grid, "20", F.geom, vals[None])


def f02_component(F: Field) -> Field:
    if F.kind != "2r":
        raise KindError("expected a real-pair 2-form")
    v = F.values
    vals = 0.5 * ((v[1] - v[4]) + 1j * (v[2] + v[3]))
    return Field(F.grid, "02", F.geom, vals[None])


def exterior_d(conn: Connection, field: Field) -> Field:
    """Covariant exterior derivative on real-component forms."""
    g = field.grid
    if field.kind == "1r":
        out = Field.zeros(g, "2r", field.geom)
        comps = [
            Field(g, "00", field.geom, field.values[m][None]) for m in range(4)
        ]
        for c, (mu, nu) in enumerate(PAIRS):
            out.values[c] = (
                covariant_axis(conn, comps[nu], mu)[0]
                - covariant_axis(conn, comps[mu], nu)[0]
            )
        return out
    if field.kind == "2r":
        out = Field.zeros(g, "3r", field.geom)
        comp = {pair: Field(g, "00", field.geom, field.values[c][None]) for c, pair in enumerate(PAIRS)}
        for c, (mu, nu, rho) in enumerate(TRIPLES):
            out.values[c] = (
                covariant_axis(conn, comp[(nu, rho)], mu)[0]
                - covariant_axis(conn, comp[(mu, rho)], nu)[0]
                + covariant_axis(conn, comp[(mu, nu)], rho)[0]
            )
        return out
    raise KindError(f"exterior_d undefined on kind {field.kind!r}")


# ---------------------------------------------------------------------------
# integration, norms
# ---------------------------------------------------------------------------


def integrate(grid: GridSpec, values: np.ndarray):
    """Grid-sum quadrature, spectrally exact for smooth periodic integrands."""
    return np.sum(values, axis=(-4, -3, -2, -1)) * grid.cell_volume


def mean_value(grid: GridSpec, values: np.ndarray):
    return integrate(grid, values) / grid.volume


def pointwise_inner(f: Field, g: Field) -> np.ndarray:
    f._check_compatible(g)
    axes = tuple(range(f.values.ndim - 4))
    return np.sum(f.values * np.conj(g.values), axis=axes)


def inner_product(f: Field, g: Field) -> complex:
    return complex(integrate(f.grid, pointwise_inner(f, g)))


def norm_l2(f: Field) -> float:
    return float(np.sqrt(max(0.0, np.real(inner_product(f, f)))))


def norm_sup(f: Field) -> float:
    return float(np.max(np.abs(f.values)))


# ---------------------------------------------------------------------------
# random data and gauge transformations
# ---------------------------------------------------------------------------


def _random_band_limited_array(grid, rng, cutoff, shape, real):
    """Trig polynomial with modes strictly inside the cutoff per axis, so that
    pointwise products of two such fields stay below the Nyquist bin."""
    if cutoff >= grid.n // 2:
        raise ValueError("cutoff must satisfy cutoff < N/2")
    n = grid.n
    spec = np.zeros(shape + grid.shape, dtype=complex)
    modes = [np.r_[0:cutoff, n - cutoff + 1 : n] for _ in range(4)]
    sub = np.ix_(*modes)
    size = tuple(len(m) for m in modes)
    block = rng.standard_normal(shape + size) + 1j * rng.standard_normal(shape + size)
    spec[(Ellipsis,) + sub] = block
    vals = np.fft.ifftn(spec, axes=(-4, -3, -2, -1)) * (n ** 2.0)
    if real:
        vals = vals.real.astype(complex)
    scale = np.max(np.abs(vals))
    return vals / scale if scale > 0 else vals


def random_band_limited(grid: GridSpec, seed, cutoff, kind="00", geom="scalar",
                        real=False, skew_hermitian=False, amplitude=1.0) -> Field:
    """Deterministic band-limited random field, normalized to unit sup norm
    then scaled by ``amplitude``."""
    rng = np.random.default_rng(seed)
    shape = (KIND_COMPONENTS[kind],) + _mat_shape(grid, geom)
    vals = _random_band_limited_array(grid, rng, cutoff, shape, real)
    if skew_hermitian:
        if geom != "endo":
            raise ValueError("skew_hermitian requires endomorphism geometry")
        vals = 0.5 * (vals - np.conj(np.swapaxes(vals, 1, 2)))
    return Field(grid, kind, geom, amplitude * vals)


def random_connection(grid: GridSpec, seed, cutoff, amplitude=0.2) -> Connection:
    rng = np.random.default_rng(seed)
    r = grid.rank
    raw = _random_band_limited_array(grid, rng, cutoff, (4, r, r), real=False)
    pot = 0.5 * (raw - np.conj(np.swapaxes(raw, 1, 2)))
    return Connection(grid, amplitude * pot)


def random_gauge(grid: GridSpec, seed, winding_range=1) -> np.ndarray:
    """Random unitary gauge field exactly representable on the grid:
    a constant unitary conjugating diagonal winding phases
    exp(2 pi i m . x).  These are genuine large gauge transformations and
    keep every spectral identity at machine precision."""
    rng = np.random.default_rng(seed)
    r = grid.rank
    coords = grid.coordinates()
    diag = np.zeros((r, r) + grid.shape, dtype=complex)
    for j in range(r):
        m = rng.integers(-winding_range, winding_range + 1, size=4)
        theta = float(rng.uniform(0, 2 * np.pi))
        phase = theta + 2.0 * np.pi * sum(int(m[a]) * coords[a] for a in range(4))
        diag[j, j] = np.exp(1j * phase)
    z = rng.standard_normal((r, r)) + 1j * rng.standard_normal((r, r))
    q, _ = np.linalg.qr(z)
    return np.einsum("ij,jk...,lk->il...", q, diag, np.conj(q))


def gauge_transform(g: np.ndarray, obj):
    """Apply a unitary gauge transformation: sections by g^-1, endomorphisms
    by conjugation, connections by g^-1 a g + g^-1 dg."""
    gdag = np.conj(np.swapaxes(g, 0, 1))
    if isinstance(obj, Field):
        if obj.geom == "section":
            vals = np.einsum("ij...,cj...->ci...", gdag, obj.values)
        elif obj.geom == "endo":
            vals = np.einsum("ij...,cjk...,kl...->cil...", gdag, obj.values, g)
        else:
            raise ValueError("gauge transformation acts on bundle-valued fields")
        return Field(obj.grid, obj.kind, obj.geom, vals)
    if isinstance(obj, Connection):
        grid = obj.grid
        pot = np.empty_like(obj.potential)
        for axis in range(4):
            dg = _spectral_derivative(g, axis, grid)
            pot[axis] = np.einsum("ij...,jk...,kl...->il...", gdag, obj.potential[axis], g)
            pot[axis] += np.einsum("ij...,jk...->ik...", gdag, dg)
        # the exact result is skew-Hermitian; project away derivative roundoff
        pot = 0.5 * (pot - np.conj(np.swapaxes(pot, 1, 2)))
        return Connection(grid, pot)
    raise TypeError("cannot gauge transform this object")


def mode_field(grid: GridSpec, kind, geom, component, wavevector, amplitude=1.0) -> Field:
    """Single Fourier mode exp(2 pi i k . x) placed in one component (and the
    (0, .., 0) bundle entry for bundle-valued fields)."""
    coords = grid.coordinates()
    phase = sum(int(wavevector[a]) * coords[a] for a in range(4))
    wave = amplitude * np.exp(2j * np.pi * phase)
    out = Field.zeros(grid, kind, geom)
    index = (component,) + (0,) * len(_mat_shape(grid, geom))
    out.values[index] = wave
    return out
