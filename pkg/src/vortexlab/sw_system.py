"""The coupled monopole equations on the flat Kahler torus.

Dirac operator, the four-equation complex-geometric form of the coupled
equations, the curvature-form / quadratic-map formulation and its gap, the
Weitzenboeck and integrated energy identities used as convention arbiters,
and the degree dichotomy that splits solutions into a section branch and a
conjugate-section branch.

The scalar curvature of the flat torus vanishes; its role in the equations is
played by a decoupled real parameter function ``t`` entering as a fictitious
constant-curvature determinant twist ``F_c = (i t / 2) w`` (so the third
equation reads ``i Lambda F_A - t/2 = -(phi phibar - alpha alphabar)/2`` and
``t = 0`` is the untwisted system).  The Weitzenboeck and energy identities
below are evaluated with the honest flat determinant connection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field_calculus import (
    Connection,
    Field,
    KindError,
    chern_weil_degree,
    curvature,
    dbar,
    f02_component,
    f20_component,
    lambda_contract,
    nabla_norm_sq,
    norm_l2,
    partial,
    rough_laplacian,
    selfdual_plus,
)

__all__ = [
    "SpinorField",
    "SWResidual",
    "dirac",
    "dirac_negative",
    "dirac_square",
    "spinor_quadratic_field",
    "gamma_two_field",
    "apply_spinor_endo",
    "sw_star_residual",
    "formulation_gap",
    "energy_identity_gap",
    "weitzenbock_gap",
    "cor23_gap",
    "dichotomy_analyze",
    "DichotomyReport",
]

_SQRT2 = float(np.sqrt(2.0))


@dataclass(frozen=True)
class SpinorField:
    """Positive spinor with values in a rank-r bundle: a scalar block ``phi``
    and a (0,2) block ``alpha`` on the same grid."""

    phi: Field
    alpha: Field

    def __post_init__(self):
        if self.phi.kind != "00" or self.alpha.kind != "02":
            raise KindError("spinor blocks must be a function and a (0,2)-form")
        if self.phi.geom != "section" or self.alpha.geom != "section":
            raise KindError("spinor blocks must be sections")
        if self.phi.grid != self.alpha.grid:
            raise ValueError("spinor blocks live on different grids")

    @property
    def grid(self):
        return self.phi.grid

    def stack(self):
        """Block values stacked as (2, r, n, n, n, n)."""
        return np.stack([self.phi.values[0], self.alpha.values[0]])

    def norm_sq(self) -> float:
        return norm_l2(self.phi) ** 2 + norm_l2(self.alpha) ** 2

    @classmethod
    def zero(cls, grid):
        return cls(Field.zeros(grid, "00", "section"), Field.zeros(grid, "02", "section"))

    @classmethod
    def from_blocks(cls, grid, phi_values, alpha_values=None):
        phi = Field(grid, "00", "section", np.asarray(phi_values, complex)[None])
        if alpha_values is None:
            alpha = Field.zeros(grid, "02", "section")
        else:
            alpha = Field(grid, "02", "section", np.asarray(alpha_values, complex)[None])
        return cls(phi, alpha)


def dirac(conn: Connection, psi: SpinorField) -> Field:
    """sqrt2 (dbar_A phi - i Lambda d_A alpha): the positive-to-negative
    Dirac operator of the canonical structure with flat determinant."""
    part = dbar(conn, psi.phi).values - 1j * lambda_contract(partial(conn, psi.alpha)).values
    return Field(psi.grid, "01", "section", _SQRT2 * part)


def dirac_negative(conn: Connection, theta: Field) -> SpinorField:
    """sqrt2 (dbar_A theta - i Lambda d_A theta): the adjoint block, mapping
    negative spinors back to positive ones."""
    if theta.kind != "01":
        raise KindError("negative spinors are (0,1)-forms")
    alpha = _SQRT2 * dbar(conn, theta).values
    phi = -_SQRT2 * 1j * lambda_contract(partial(conn, theta)).values
    grid = theta.grid
    return SpinorField(
        Field(grid, "00", "section", phi), Field(grid, "02", "section", alpha)
    )


def dirac_square(conn: Connection, psi: SpinorField) -> SpinorField:
    return dirac_negative(conn, dirac(conn, psi))


def spinor_quadratic_field(psi: SpinorField) -> np.ndarray:
    """Pointwise trace-free quadratic endomorphism, blocks (2, 2, r, r, grid)."""
    s = psi.stack()
    outer = np.einsum("ai...,bj...->abij...", s, np.conj(s))
    trace = outer[0, 0] + outer[1, 1]
    outer[0, 0] -= 0.5 * trace
    outer[1, 1] -= 0.5 * trace
    return outer


def _as_t_array(grid, t):
    if t is None:
        return None
    if isinstance(t, Field):
        return t.values[0]
    arr = np.asarray(t, dtype=complex)
    if arr.ndim == 0:
        return np.full(grid.shape, complex(arr))
    return arr


def gamma_two_field(F: Field, t=None) -> np.ndarray:
    """Clifford action of the self-dual curvature part on positive spinors,
    as blocks (2, 2, r, r, grid):

        [[-i Lambda F, -2 f20], [2 f02, i Lambda F]]

    An optional parameter function ``t`` dresses the determinant twist,
    shifting Lambda F by (i t / 2) id."""
    lam = lambda_contract(F).values[0]
    f20 = f20_component(F).values[0]
    f02 = f02_component(F).values[0]
    grid = F.grid
    r = grid.rank
    t_arr = _as_t_array(grid, t)
    if t_arr is not None:
        eye = np.eye(r, dtype=complex).reshape(r, r, 1, 1, 1, 1)
        lam = lam + (0.5j * t_arr) * eye
    out = np.zeros((2, 2, r, r) + grid.shape, dtype=complex)
    out[0, 0] = -1j * lam
    out[0, 1] = -2.0 * f20
    out[1, 0] = 2.0 * f02
    out[1, 1] = 1j * lam
    return out


def apply_spinor_endo(blocks: np.ndarray, psi: SpinorField) -> SpinorField:
    s = psi.stack()
    out = np.einsum("abij...,bj...->ai...", blocks, s)
    grid = psi.grid
    return SpinorField(
        Field(grid, "00", "section", out[0][None]),
        Field(grid, "02", "section", out[1][None]),
    )


def _l2_of(grid, values) -> float:
    return float(np.sqrt(max(0.0, np.real(np.sum(np.abs(values) ** 2)) * grid.cell_volume)))


@dataclass(frozen=True)
class SWResidual:
    """Per-equation L2 residual norms of the coupled system, plus the gap of
    the curvature-form formulation.  All entries vanish together exactly on
    solutions; ``gamma_gap^2 = 4 eq20^2 + 4 eq02^2 + 2 eqLambda^2`` and
    ``dirac^2 = 2 eq4^2`` tie the two formulations."""

    dirac_norm: float
    eq20_norm: float
    eq02_norm: float
    eqLambda_norm: float
    eq4_norm: float
    gamma_gap: float

    def max_norm(self) -> float:
        return max(self.dirac_norm, self.eq20_norm, self.eq02_norm,
                   self.eqLambda_norm, self.eq4_norm)


def sw_star_residual(conn: Connection, psi: SpinorField, t=None) -> SWResidual:
    """Evaluate the four complex-geometric equations

        F20 = -(phi x alphabar)/2,   F02 = (alpha x phibar)/2,
        i Lambda F_A - t/2 = -(phi phibar - alpha alphabar)/2,
        dbar_A phi = i Lambda d_A alpha,

    together with the equivalent curvature-form gap."""
    grid = psi.grid
    F = curvature(conn)
    t_arr = _as_t_array(grid, t)
    phi = psi.phi.values[0]
    alpha = psi.alpha.values[0]
    r = grid.rank
    eye = np.eye(r, dtype=complex).reshape(r, r, 1, 1, 1, 1)

    phi_alpha = np.einsum("i...,j...->ij...", phi, np.conj(alpha))
    alpha_phi = np.einsum("i...,j...->ij...", alpha, np.conj(phi))
    phi_phi = np.einsum("i...,j...->ij...", phi, np.conj(phi))
    alpha_alpha = np.einsum("i...,j...->ij...", alpha, np.conj(alpha))

    res20 = f20_component(F).values[0] + 0.5 * phi_alpha
    res02 = f02_component(F).values[0] - 0.5 * alpha_phi
    lam = 1j * lambda_contract(F).values[0]
    if t_arr is not None:
        lam = lam - 0.5 * t_arr * eye
    res_lam = lam + 0.5 * (phi_phi - alpha_alpha)

    holo = dbar(conn, psi.phi).values - 1j * lambda_contract(partial(conn, psi.alpha)).values
    dpsi = dirac(conn, psi)

    gap_blocks = gamma_two_field(selfdual_plus(F), t) - spinor_quadratic_field(psi)

    return SWResidual(
        dirac_norm=norm_l2(dpsi),
        eq20_norm=_l2_of(grid, res20),
        eq02_norm=_l2_of(grid, res02),
        eqLambda_norm=_l2_of(grid, res_lam),
        eq4_norm=_l2_of(grid, holo),
        gamma_gap=_l2_of(grid, gap_blocks),
    )


def formulation_gap(res: SWResidual) -> float:
    """Relative mismatch between the curvature-form gap and the weighted
    aggregate of the equation norms (and between the Dirac and holomorphy
    norms); zero when the two formulations agree."""
    agg = 4.0 * res.eq20_norm ** 2 + 4.0 * res.eq02_norm ** 2 + 2.0 * res.eqLambda_norm ** 2
    g1 = abs(res.gamma_gap ** 2 - agg) / (1.0 + res.gamma_gap ** 2)
    g2 = abs(res.dirac_norm ** 2 - 2.0 * res.eq4_norm ** 2) / (1.0 + res.dirac_norm ** 2)
    return max(g1, g2)


def energy_identity_gap(conn: Connection, psi: SpinorField):
    """Integrated energy identity at zero scalar curvature:

        |D psi|^2 + |Gamma(F+) - q(psi)|^2 / 2
          = |nabla psi|^2 + |F+|^2 / 2 + |q(psi)|^2 / 2

    with the curvature seminorm measured through the Clifford action
    (|F+|^2 := |Gamma(F+)|^2 = 4 |f20|^2 + 4 |f02|^2 + 2 |Lambda F|^2).
    Returns (lhs, rhs, relative gap)."""
    grid = psi.grid
    F = curvature(conn)
    quad = spinor_quadratic_field(psi)
    gamma_blocks = gamma_two_field(selfdual_plus(F))

    dpsi = dirac(conn, psi)
    lhs = norm_l2(dpsi) ** 2 + 0.5 * _l2_of(grid, gamma_blocks - quad) ** 2

    grad = nabla_norm_sq(conn, psi.phi) + nabla_norm_sq(conn, psi.alpha)
    f20 = f20_component(F).values[0]
    f02 = f02_component(F).values[0]
    lam = lambda_contract(F).values[0]
    fplus_sq = (
        4.0 * _l2_of(grid, f20) ** 2
        + 4.0 * _l2_of(grid, f02) ** 2
        + 2.0 * _l2_of(grid, lam) ** 2
    )
    rhs = grad + 0.5 * fplus_sq + 0.5 * _l2_of(grid, quad) ** 2
    return lhs, rhs, abs(lhs - rhs) / (1.0 + abs(lhs))


def weitzenbock_gap(conn: Connection, psi: SpinorField) -> float:
    """Pointwise sup norm of D^2 psi - nabla*nabla psi - Gamma(F) psi.

    Only the self-dual curvature part acts on positive spinors, so the
    curvature term is the block action of Gamma(F+)."""
    dd = dirac_square(conn, psi)
    lap_phi = rough_laplacian(conn, psi.phi)
    lap_alpha = rough_laplacian(conn, psi.alpha)
    gamma_psi = apply_spinor_endo(
        gamma_two_field(selfdual_plus(curvature(conn))), psi
    )
    gap_phi = dd.phi.values - lap_phi.values - gamma_psi.phi.values
    gap_alpha = dd.alpha.values - lap_alpha.values - gamma_psi.alpha.values
    return float(max(np.max(np.abs(gap_phi)), np.max(np.abs(gap_alpha))))


def cor23_gap(conn: Connection, psi: SpinorField) -> float:
    """Inner-product form of the curvature term: the action pairing
    (Gamma(F+) psi, psi) equals the Frobenius pairing with the trace-free
    quadratic map, (Gamma(F+), q(psi))."""
    grid = psi.grid
    blocks = gamma_two_field(selfdual_plus(curvature(conn)))
    gpsi = apply_spinor_endo(blocks, psi)
    s = psi.stack()
    lhs = np.real(np.sum(gpsi.stack() * np.conj(s))) * grid.cell_volume
    quad = spinor_quadratic_field(psi)
    rhs = np.real(np.sum(blocks * np.conj(quad))) * grid.cell_volume
    return float(abs(lhs - rhs) / (1.0 + abs(lhs)))


@dataclass(frozen=True)
class DichotomyReport:
    degree: float
    coupling_degree: float   # 2 r (mu - lambda): sign decides the branch
    lam: float
    branch: str              # "A", "B" or "reducible"
    phi_norm: float
    alpha_norm: float
    small_component_ok: bool
    residuals: dict
    note: str = ""


def dichotomy_analyze(conn: Connection, psi: SpinorField, t=None, lam=None,
                      tol=None) -> DichotomyReport:
    """Branch analysis of a near-solution of the third coupled equation.

    Integrating its trace forces ``|phi|^2 - |alpha|^2 = 4 pi r (lambda - mu)``
    for exact solutions, so the sign of the coupling degree
    ``2 r (mu - lambda)`` decides which component must vanish: negative means
    branch A (alpha = 0, a holomorphic-section pair), positive branch B
    (phi = 0, conjugate sections), zero with vanishing parameter means only
    reducible solutions exist.  On the untwisted system (``t = 0``) the
    threshold is the monopole one and the coupling degree is the degree of
    the twisted spinor bundle."""
    grid = psi.grid
    deg = chern_weil_degree(conn)
    r = grid.rank
    mu = deg / r
    if lam is None:
        t_arr = _as_t_array(grid, t)
        t_mean = 0.0 if t_arr is None else float(np.real(np.mean(t_arr)))
        lam = t_mean * grid.volume / (4.0 * np.pi)
    j_eff = 2.0 * r * (mu - lam)
    if tol is None:
        tol = 1e-7 if grid.backend == "spectral" else 5.0 / grid.n ** 2
    phi_norm = norm_l2(psi.phi)
    alpha_norm = norm_l2(psi.alpha)
    res = sw_star_residual(conn, psi, t)
    residuals = {
        "eq20": res.eq20_norm,
        "eq02": res.eq02_norm,
        "eqLambda": res.eqLambda_norm,
        "eq4": res.eq4_norm,
    }
    scale = max(1.0, phi_norm + alpha_norm)
    if abs(j_eff) <= tol * scale:
        branch = "reducible"
        small_ok = phi_norm <= tol * scale and alpha_norm <= tol * scale
        note = (
            "coupling degree vanishes: with vanishing parameter the only "
            "solutions are reducible pairs (zero spinor, self-dual-flat twist)"
        )
    elif j_eff < 0:
        branch = "A"
        small_ok = alpha_norm <= tol * scale
        note = "negative coupling degree: the (0,2) block must vanish"
        residuals["branch_eq"] = _branch_a_residual(conn, psi, t)
    else:
        branch = "B"
        small_ok = phi_norm <= tol * scale
        note = "positive coupling degree: the section block must vanish"
        residuals["branch_eq"] = _branch_b_residual(conn, psi, t)
    if not small_ok and branch != "reducible" and min(phi_norm, alpha_norm) > tol * scale:
        note += (
            "; inconsistent input: both blocks are large on a near-solution, "
            "which the sign argument of the trace integration forbids"
        )
    return DichotomyReport(
        degree=deg, coupling_degree=j_eff, lam=lam, branch=branch,
        phi_norm=phi_norm, alpha_norm=alpha_norm,
        small_component_ok=bool(small_ok), residuals=residuals, note=note,
    )


def _branch_a_residual(conn, psi, t):
    """i Lambda F + (phi phibar)/2 - t/2 = 0, the section-branch equation."""
    grid = psi.grid
    F = curvature(conn)
    phi = psi.phi.values[0]
    r = grid.rank
    eye = np.eye(r, dtype=complex).reshape(r, r, 1, 1, 1, 1)
    out = 1j * lambda_contract(F).values[0] + 0.5 * np.einsum(
        "i...,j...->ij...", phi, np.conj(phi)
    )
    t_arr = _as_t_array(grid, t)
    if t_arr is not None:
        out = out - 0.5 * t_arr * eye
    return _l2_of(grid, out)


def _branch_b_residual(conn, psi, t):
    """i Lambda F - (alpha alphabar)/2 - t/2 = 0 for the conjugate branch."""
    grid = psi.grid
    F = curvature(conn)
    alpha = psi.alpha.values[0]
    r = grid.rank
    eye = np.eye(r, dtype=complex).reshape(r, r, 1, 1, 1, 1)
    out = 1j * lambda_contract(F).values[0] - 0.5 * np.einsum(
        "i...,j...->ij...", alpha, np.conj(alpha)
    )
    t_arr = _as_t_array(grid, t)
    if t_arr is not None:
        out = out - 0.5 * t_arr * eye
    return _l2_of(grid, out)
