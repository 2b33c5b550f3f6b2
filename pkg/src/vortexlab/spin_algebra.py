"""Exact fiber algebra of the canonical spin-c structure on a Kahler surface.

Everything here is finite-dimensional linear algebra on the model fiber at a
point of a Kahler surface: Clifford multiplication of complexified cotangent
vectors on spinors, the induced action of (self-dual) 2-forms, and the
trace-free quadratic map of a positive spinor.  All functions are pure and
broadcast over arbitrary leading batch axes.

Convention ledger (every factor used downstream is fixed here):

* coframe           ``dz_k = dx_k + i dy_k``, ``|dz_k|^2 = 2``
* Kahler form       ``w = (i/2)(dz1^dz1b + dz2^dz2b)``, ``|w|^2 = 2``,
                    ``Lambda(w) = 2``
* positive spinors  ``Sigma+ = L^00 + L^02``, negative ``Sigma- = L^01``
* orthonormal spinor frame
                    ``(1, dz1b^dz2b/2, dz1b/sqrt2, dz2b/sqrt2)``
* cotangent vectors are stored as coefficient 4-vectors ``(a1, a2, b1, b2)``
  with respect to ``(dz1, dz2, dz1b, dz2b)``; a real covector has
  ``b = conj(a)``.
* 2-form fibers are stored in orthonormal components: ``lambda20`` multiplies
  ``dz1^dz2/2``, ``lambda02`` multiplies ``dz1b^dz2b/2`` and ``omega_coeff``
  multiplies ``w``.

With these scales the Clifford map of a real covector is skew-Hermitian with
plain conjugate-transpose adjoints, and the quadratic-map norms used by the
field modules need no hidden weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "FiberMetric",
    "SpinorFiber",
    "TwoFormFiber",
    "gamma_plus_matrix",
    "gamma_sharp_matrix",
    "gamma_matrix",
    "gamma",
    "gamma_sharp",
    "gamma_two",
    "gamma_two_commutator",
    "spinor_quadratic",
    "wedge_two_form",
    "real_covector",
]


@dataclass(frozen=True)
class FiberMetric:
    """Hermitian data of the model fiber, with the scale conventions recorded.

    ``g_complex`` is the complex-bilinear extension of the Riemannian metric,
    ``hermitian`` the associated Hermitian product (linear in the first slot).
    """

    dz_norm_sq: float = 2.0
    lambda02_norm_sq: float = 4.0  # |dz1b ^ dz2b|^2, the induced Gram norm
    omega_norm_sq: float = 2.0
    lambda_of_omega: float = 2.0

    def g_complex(self, u, v):
        u = np.asarray(u)
        v = np.asarray(v)
        return 2.0 * (
            u[..., 0] * v[..., 2]
            + u[..., 1] * v[..., 3]
            + u[..., 2] * v[..., 0]
            + u[..., 3] * v[..., 1]
        )

    def hermitian(self, u, v):
        return self.g_complex(u, np.conj(np.asarray(v)[..., [2, 3, 0, 1]]))

    def is_real(self, u, tol=1e-13):
        u = np.asarray(u)
        return bool(
            np.all(np.abs(u[..., 2:] - np.conj(u[..., :2])) <= tol)
        )


STANDARD_METRIC = FiberMetric()


def real_covector(x):
    """Coefficient 4-vector of the real 1-form with components ``x`` in the
    orthonormal real coframe ``(dx1, dy1, dx2, dy2)``."""
    x = np.asarray(x, dtype=complex)
    a1 = (x[..., 0] - 1j * x[..., 1]) / 2.0
    a2 = (x[..., 2] - 1j * x[..., 3]) / 2.0
    return np.stack([a1, a2, np.conj(a1), np.conj(a2)], axis=-1)


@dataclass(frozen=True)
class SpinorFiber:
    """A spinor value, split into its positive blocks ``phi`` (scalar part),
    ``alpha`` (orthonormal (0,2) part) and an optional negative block
    ``theta`` with shape ``(..., 2, r)`` in the orthonormal (0,1) frame.

    For a rank-``r`` twisted fiber the last axis of each block carries the
    bundle index.  Norms add across blocks.
    """

    phi: np.ndarray
    alpha: np.ndarray
    theta: np.ndarray | None = None

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=complex)
        alpha = np.asarray(self.alpha, dtype=complex)
        if phi.shape != alpha.shape:
            raise ValueError("phi and alpha blocks must have equal shapes")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "alpha", alpha)
        if self.theta is not None:
            theta = np.asarray(self.theta, dtype=complex)
            if theta.shape[-1] != phi.shape[-1] or theta.shape[-2] != 2:
                raise ValueError("theta block must have shape (..., 2, r)")
            object.__setattr__(self, "theta", theta)

    @property
    def rank(self):
        return self.phi.shape[-1]

    @property
    def plus(self):
        """Positive part stacked as ``(..., 2, r)``."""
        return np.stack([self.phi, self.alpha], axis=-2)

    def norm_sq(self):
        total = np.sum(np.abs(self.phi) ** 2, axis=-1)
        total = total + np.sum(np.abs(self.alpha) ** 2, axis=-1)
        if self.theta is not None:
            total = total + np.sum(np.abs(self.theta) ** 2, axis=(-2, -1))
        return total

    @classmethod
    def positive(cls, phi, alpha):
        return cls(np.asarray(phi, complex), np.asarray(alpha, complex))

    @classmethod
    def negative(cls, theta):
        theta = np.asarray(theta, dtype=complex)
        zero = np.zeros(theta.shape[:-2] + theta.shape[-1:], dtype=complex)
        return cls(zero, zero.copy(), theta)


def gamma_plus_matrix(u):
    """Clifford block Sigma+ -> Sigma- of ``u`` in orthonormal frames."""
    u = np.asarray(u, dtype=complex)
    a1, a2, b1, b2 = u[..., 0], u[..., 1], u[..., 2], u[..., 3]
    m = np.empty(u.shape[:-1] + (2, 2), dtype=complex)
    m[..., 0, 0] = b1
    m[..., 0, 1] = a2
    m[..., 1, 0] = b2
    m[..., 1, 1] = -a1
    return 2.0 * m


def gamma_sharp_matrix(u):
    """The sharp block Sigma- -> Sigma+; complex linear in ``u`` and equal to
    the Hermitian adjoint of ``gamma_plus_matrix(u)`` for real ``u``."""
    u = np.asarray(u, dtype=complex)
    a1, a2, b1, b2 = u[..., 0], u[..., 1], u[..., 2], u[..., 3]
    m = np.empty(u.shape[:-1] + (2, 2), dtype=complex)
    m[..., 0, 0] = a1
    m[..., 0, 1] = a2
    m[..., 1, 0] = b2
    m[..., 1, 1] = -b1
    return 2.0 * m


def gamma_matrix(u):
    """Full Clifford endomorphism of ``Sigma = Sigma+ + Sigma-`` as a 4x4
    block matrix ``[[0, -sharp], [plus, 0]]``.

    Real covectors map to trace-free skew-Hermitian matrices satisfying the
    anticommutation rule with ``-2 g_complex(u, v)``.
    """
    u = np.asarray(u, dtype=complex)
    m = np.zeros(u.shape[:-1] + (4, 4), dtype=complex)
    m[..., :2, 2:] = -gamma_sharp_matrix(u)
    m[..., 2:, :2] = gamma_plus_matrix(u)
    return m


def gamma(u, psi: SpinorFiber) -> SpinorFiber:
    """Clifford action of a complexified cotangent value on a spinor fiber.

    Acts on the spinor index only; any bundle factor rides along on the last
    axis.  Positive input blocks land in the negative block and vice versa.
    """
    gp = gamma_plus_matrix(u)
    theta_out = np.einsum("...ij,...jr->...ir", gp, psi.plus)
    if psi.theta is not None:
        gs = gamma_sharp_matrix(u)
        plus_out = -np.einsum("...ij,...jr->...ir", gs, psi.theta)
    else:
        plus_out = np.zeros_like(theta_out)
    return SpinorFiber(plus_out[..., 0, :], plus_out[..., 1, :], theta_out)


def gamma_sharp(u, theta):
    """Sharp action on a negative block ``(..., 2, r)``; returns the positive
    ``(phi, alpha)`` pair."""
    gs = gamma_sharp_matrix(u)
    plus = np.einsum("...ij,...jr->...ir", gs, np.asarray(theta, complex))
    return plus[..., 0, :], plus[..., 1, :]


@dataclass(frozen=True)
class TwoFormFiber:
    """A complex 2-form value in orthonormal components.

    ``lambda20`` multiplies ``dz1^dz2/2``, ``lambda02`` multiplies
    ``dz1b^dz2b/2``, ``omega_coeff`` multiplies the Kahler form, and ``minus``
    holds the primitive (1,1) components ``(q11, q12, q21)`` (with
    ``q22 = -q11``) spanning the anti-self-dual part.  Entries may be scalars
    or matrix blocks of equal shape.
    """

    lambda20: np.ndarray
    lambda02: np.ndarray
    omega_coeff: np.ndarray
    minus: tuple = (0.0, 0.0, 0.0)

    def is_selfdual(self, tol=1e-12):
        return all(np.max(np.abs(np.asarray(m))) <= tol for m in self.minus)

    def is_real(self, tol=1e-12):
        """A real form has ``lambda02 = -lambda20^H`` (conjugate for scalars)
        and Hermitian ``omega_coeff`` up to the factor ``i`` in ``w``."""
        l20 = np.asarray(self.lambda20, complex)
        l02 = np.asarray(self.lambda02, complex)
        f = np.asarray(self.omega_coeff, complex)
        if l20.ndim >= 2:
            # matrix blocks: reality of a u(r)-valued form
            ok1 = np.max(np.abs(l02 + np.conj(np.swapaxes(l20, -1, -2)))) <= tol
            fi = f / 1j
            ok2 = np.max(np.abs(fi - np.conj(np.swapaxes(fi, -1, -2)))) <= tol
        else:
            ok1 = np.max(np.abs(l02 - np.conj(l20))) <= tol
            ok2 = np.max(np.abs(np.imag(f))) <= tol
        return bool(ok1 and ok2)


def wedge_two_form(u, v) -> TwoFormFiber:
    """Decompose ``u ^ v`` of two cotangent values into orthonormal 2-form
    components.  Used as an independent oracle for the commutator definition
    of the 2-form Clifford action."""
    u = np.asarray(u, complex)
    v = np.asarray(v, complex)
    a, b = u[..., :2], u[..., 2:]
    ap, bp = v[..., :2], v[..., 2:]
    lam20 = 2.0 * (a[..., 0] * ap[..., 1] - a[..., 1] * ap[..., 0])
    lam02 = 2.0 * (b[..., 0] * bp[..., 1] - b[..., 1] * bp[..., 0])
    # epsilon_i ^ epsilonbar_j coefficients of the (1,1) part
    c = np.empty(u.shape[:-1] + (2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            c[..., i, j] = 2.0 * (a[..., i] * bp[..., j] - ap[..., i] * b[..., j])
    f = -0.5j * (c[..., 0, 0] + c[..., 1, 1])
    q11 = c[..., 0, 0] - 1j * f
    return TwoFormFiber(lam20, lam02, f, (q11, c[..., 0, 1], c[..., 1, 0]))


def gamma_two(form: TwoFormFiber, tol=1e-10):
    """Endomorphism of the positive spinor fiber induced by a self-dual
    2-form, as the 2x2 block matrix

        ``[[-2i f, -2 lambda20], [2 lambda02, 2i f]]``

    acting on ``(phi, alpha)``.  Blocks may carry bundle indices.  Raises on a
    nonzero anti-self-dual part: only self-dual forms act on Sigma+.
    """
    if not form.is_selfdual(tol):
        raise ValueError(
            "gamma_two: form has a nonzero anti-self-dual part; "
            "the positive-spinor action is defined for self-dual forms only"
        )
    l20 = np.asarray(form.lambda20, complex)
    l02 = np.asarray(form.lambda02, complex)
    f = np.asarray(form.omega_coeff, complex)
    shape = np.broadcast_shapes(l20.shape, l02.shape, f.shape)
    out = np.zeros((2, 2) + shape, dtype=complex)
    out[0, 0] = -2j * f
    out[0, 1] = -2.0 * l20
    out[1, 0] = 2.0 * l02
    out[1, 1] = 2j * f
    return out


def gamma_two_commutator(u, v):
    """Half-commutator ``[gamma(u), gamma(v)]/2`` on the full 4-dimensional
    spinor fiber; the reference route for the 2-form action."""
    gu = gamma_matrix(u)
    gv = gamma_matrix(v)
    return 0.5 * (gu @ gv - gv @ gu)


def spinor_quadratic(psi: SpinorFiber):
    """Trace-free quadratic endomorphism of a positive spinor.

    Returns blocks ``M[a, b]`` of shape ``(..., 2, 2, r, r)``:
    ``M[a, b] = psi_a psi_b^H - (1/2) delta_ab (phi phi^H + alpha alpha^H)``,
    i.e. the orthogonal projection of ``psi x psibar`` onto endomorphisms
    trace-free in the spinor index.  Output is Hermitian, and the quartic
    norm bound ``|M|^2 >= |psi|^4 / 2`` holds with equality when either block
    vanishes (always in rank 1).
    """
    plus = psi.plus  # (..., 2, r)
    outer = np.einsum("...ar,...bs->...abrs", plus, np.conj(plus))
    trace = outer[..., 0, 0, :, :] + outer[..., 1, 1, :, :]
    out = outer.copy()
    out[..., 0, 0, :, :] -= 0.5 * trace
    out[..., 1, 1, :, :] -= 0.5 * trace
    return out
