"""Exact integer/rational arithmetic over the cohomology lattice of a closed
oriented 4-manifold.

Characteristic classes of the spinor bundles, almost canonical classes, slopes
and stability thresholds, expected dimensions of pair moduli, and the divisor
searches that classify rank-1 monopole solutions.  Everything is computed with
``fractions.Fraction``; no floating point enters any verdict.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import pi

import numpy as np

__all__ = [
    "SurfacePresentation",
    "BundleTopology",
    "ClassReport",
    "rat",
    "spinor_chern",
    "count_spinc_lifts",
    "is_characteristic",
    "is_almost_canonical",
    "slopes",
    "expected_dimension",
    "euler_characteristic",
    "divisor_search",
    "rank1_sw_classification",
    "preset",
    "PRESETS",
]


def rat(x) -> Fraction:
    """Coerce ints, strings like ``'3/4'`` and Fractions to an exact rational."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float) and x == int(x):
        return Fraction(int(x))
    raise TypeError(f"not an exact rational: {x!r}")


def _signature_of(Q):
    """Signature of a symmetric rational matrix by congruence diagonalization."""
    n = len(Q)
    A = [[Fraction(Q[i][j]) for j in range(n)] for i in range(n)]
    pos = neg = 0
    idx = list(range(n))
    while idx:
        # find a nonzero diagonal pivot, manufacturing one if necessary
        piv = next((i for i in idx if A[i][i] != 0), None)
        if piv is None:
            pair = next(
                ((i, j) for i in idx for j in idx if i != j and A[i][j] != 0),
                None,
            )
            if pair is None:
                break  # remaining block is zero (degenerate lattice)
            i, j = pair
            for k in range(n):
                A[i][k] += A[j][k]
            for k in range(n):
                A[k][i] += A[k][j]
            piv = i
        p = A[piv][piv]
        if p > 0:
            pos += 1
        else:
            neg += 1
        idx.remove(piv)
        for i in idx:
            if A[i][piv] != 0:
                c = A[i][piv] / p
                for k in range(n):
                    A[i][k] -= c * A[piv][k]
                for k in range(n):
                    A[k][i] -= c * A[k][piv]
    return pos - neg


@dataclass(frozen=True)
class SurfacePresentation:
    """Integer intersection lattice of a closed oriented 4-manifold together
    with the classes and numbers every query here needs.

    ``omega`` is a rational vector representing the Kahler (or period) class
    used for degrees; ``volume`` the total volume; ``torsion`` the invariant
    factors of the torsion subgroup of H^2.
    """

    b2: int
    Q: tuple
    torsion: tuple = ()
    sigma: int = 0
    euler: int = 0
    K: tuple = ()
    omega: tuple = ()
    volume: Fraction = Fraction(1)
    chiO: Fraction = Fraction(0)
    kaehler: bool = True
    name: str = ""

    def __post_init__(self):
        Q = tuple(tuple(int(v) for v in row) for row in self.Q)
        object.__setattr__(self, "Q", Q)
        if len(Q) != self.b2 or any(len(r) != self.b2 for r in Q):
            raise ValueError("Q must be a b2 x b2 integer matrix")
        for i in range(self.b2):
            for j in range(self.b2):
                if Q[i][j] != Q[j][i]:
                    raise ValueError("intersection form must be symmetric")
        if _signature_of(Q) != self.sigma:
            raise ValueError("sigma does not match the signature of Q")
        K = tuple(int(v) for v in (self.K or (0,) * self.b2))
        object.__setattr__(self, "K", K)
        omega = tuple(rat(v) for v in (self.omega or ()))
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "torsion", tuple(int(v) for v in self.torsion))
        object.__setattr__(self, "volume", rat(self.volume))
        object.__setattr__(self, "chiO", rat(self.chiO))
        if omega and self.pair(omega, omega) <= 0:
            raise ValueError("omega . omega must be positive")
        if self.kaehler:
            noether = Fraction(self.pair(K, K) + self.euler, 12)
            if noether.denominator != 1:
                raise ValueError("(K.K + e)/12 is not an integer; not a Kahler lattice")
            if self.chiO != noether:
                raise ValueError("chiO disagrees with (K.K + e)/12")

    def pair(self, x, y) -> Fraction:
        """Lattice pairing x.Q.y with exact rational arithmetic."""
        total = Fraction(0)
        for i, xi in enumerate(x):
            if xi == 0:
                continue
            for j, yj in enumerate(y):
                if yj != 0 and self.Q[i][j] != 0:
                    total += rat(xi) * self.Q[i][j] * rat(yj)
        return total

    def degree(self, c1) -> Fraction:
        if not self.omega:
            raise ValueError("surface has no Kahler class recorded")
        return self.pair(c1, self.omega)

    def square(self, x) -> Fraction:
        return self.pair(x, x)


@dataclass(frozen=True)
class BundleTopology:
    rank: int
    c1: tuple
    c2: Fraction = Fraction(0)

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        object.__setattr__(self, "c1", tuple(int(v) for v in self.c1))
        object.__setattr__(self, "c2", rat(self.c2))


@dataclass
class ClassReport:
    """Named exact outputs of a topology query, in insertion order."""

    title: str
    entries: list = field(default_factory=list)

    def add(self, name, value):
        self.entries.append((name, value))
        return self

    def get(self, name):
        for key, value in self.entries:
            if key == name:
                return value
        raise KeyError(name)

    def to_text(self) -> str:
        lines = [f"[{self.title}]"]
        for key, value in self.entries:
            lines.append(f"{key} = {_fmt(value)}")
        return "\n".join(lines) + "\n"


def _fmt(value):
    if isinstance(value, Fraction):
        return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    return str(value)


# ---------------------------------------------------------------------------
# characteristic classes of the spinor bundles
# ---------------------------------------------------------------------------


def is_characteristic(surface: SurfacePresentation, L) -> bool:
    """x.x = x.L (mod 2) for all x; checking lattice basis vectors suffices
    because the defect is linear mod 2."""
    QL = [sum(surface.Q[i][j] * L[j] for j in range(surface.b2)) for i in range(surface.b2)]
    return all((surface.Q[i][i] - QL[i]) % 2 == 0 for i in range(surface.b2))


def is_almost_canonical(surface: SurfacePresentation, L) -> bool:
    target = 3 * surface.sigma + 2 * surface.euler
    return is_characteristic(surface, L) and surface.square(L) == target


def spinor_chern(surface: SurfacePresentation, L, check_characteristic=True):
    """Chern data of the two spinor bundles of the lift with determinant L.

    Returns a report with ``c1`` (= L), ``c2_plus`` and ``c2_minus`` computed
    from the lattice numbers; their difference always equals the Euler number.
    Non-integer output means L fails the lifting parity, which is reported as
    an error rather than rounded away.
    """
    if check_characteristic and not is_characteristic(surface, L):
        raise ValueError("L is not characteristic: no lift has this determinant")
    L2 = surface.square(L)
    p1 = 3 * surface.sigma
    c2_plus = Fraction(L2 - p1 - 2 * surface.euler, 4)
    c2_minus = Fraction(L2 - p1 + 2 * surface.euler, 4)
    if c2_plus.denominator != 1 or c2_minus.denominator != 1:
        raise ValueError(
            "c2 of a spinor bundle is not an integer: L fails the lifting parity"
        )
    assert c2_minus - c2_plus == surface.euler
    report = ClassReport("spinor_chern")
    report.add("c1", tuple(L))
    report.add("c2_plus", c2_plus)
    report.add("c2_minus", c2_minus)
    return report


def count_spinc_lifts(surface: SurfacePresentation, w2_lifts: bool = True) -> int:
    """Number of lifts with a fixed determinant: the 2-torsion count of H^2,
    read off the invariant factors; zero when w2 does not lift at all."""
    if not w2_lifts:
        return 0
    count = 1
    for d in surface.torsion:
        if d % 2 == 0:
            count *= 2
    return count


# ---------------------------------------------------------------------------
# slopes, thresholds, expected dimensions
# ---------------------------------------------------------------------------


def slopes(surface: SurfacePresentation, bundle: BundleTopology, t_mean=None):
    """Slope data of the twisted spinor bundle: ``mu_E``, ``mu_K``, the
    coupling degree ``J = 2 r (mu_E - mu_K / 2)`` whose sign drives the
    vanishing dichotomy, and the monopole threshold ``lambda_sw = mu_K / 2``.

    When ``t_mean`` is supplied the analytic threshold
    ``lambda_t = t_mean * volume / (4 pi)`` is included (a float: the 4 pi is
    irrational)."""
    mu_E = surface.degree(bundle.c1) / bundle.rank
    mu_K = surface.degree(surface.K)
    J = 2 * bundle.rank * (mu_E - mu_K / 2)
    report = ClassReport("slopes")
    report.add("mu_E", mu_E)
    report.add("mu_K", mu_K)
    report.add("J", J)
    report.add("lambda_sw", mu_K / 2)
    if t_mean is not None:
        report.add("lambda_t", float(t_mean) * float(surface.volume) / (4.0 * pi))
    return report


def euler_characteristic(surface: SurfacePresentation, bundle: BundleTopology) -> Fraction:
    """Riemann-Roch: chi(E) = r chi(O) + c1 (c1 - K) / 2 - c2."""
    c1 = bundle.c1
    return (
        bundle.rank * surface.chiO
        + (surface.square(c1) - surface.pair(c1, surface.K)) / 2
        - bundle.c2
    )


def expected_dimension(surface: SurfacePresentation, bundle: BundleTopology) -> Fraction:
    """Expected dimension of the pair moduli space, chi(E) - chi(End E).

    chi(End E) = r^2 chi(O) + (r - 1) c1^2 - 2 r c2 since End E has trivial
    determinant.  For rank one this is c1 (c1 - K) / 2."""
    r = bundle.rank
    c1sq = surface.square(bundle.c1)
    chi_end = r * r * surface.chiO + (r - 1) * c1sq - 2 * r * bundle.c2
    return euler_characteristic(surface, bundle) - chi_end


def twist_chern(surface: SurfacePresentation, bundle: BundleTopology, x) -> BundleTopology:
    """Chern data of E tensor L_x: c1 += r x, c2 += (r-1) c1.x + C(r,2) x^2."""
    r = bundle.rank
    c1 = tuple(bundle.c1[i] + r * x[i] for i in range(surface.b2))
    c2 = (
        bundle.c2
        + (r - 1) * surface.pair(bundle.c1, x)
        + Fraction(r * (r - 1), 2) * surface.square(x)
    )
    return BundleTopology(r, c1, c2)


# ---------------------------------------------------------------------------
# divisor searches
# ---------------------------------------------------------------------------


def _enumerate_box(b2, box):
    sizes = (2 * box + 1) ** b2
    if sizes > 5_000_000:
        raise ValueError(
            f"divisor box search of size {sizes} is too large; shrink the box or lattice"
        )
    rng = np.arange(-box, box + 1)
    grids = np.meshgrid(*([rng] * b2), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def divisor_search(surface: SurfacePresentation, H0, n: int, box: int):
    """Enumerate integer classes D with ``|coefficients| <= box`` solving
    ``D (D - K) = 0`` against the polarization ``H = H0 + n K``.

    Classes are tagged with the sign of ``L H`` for ``L = 2D - K`` and flagged
    as non-effective-candidates when ``D H < 0``.  The search is complete only
    within the box, which the report says explicitly."""
    if box < 1:
        raise ValueError("box must be >= 1")
    H = tuple(H0[i] + n * surface.K[i] for i in range(surface.b2))
    Q = np.array(surface.Q, dtype=np.int64)
    K = np.array(surface.K, dtype=np.int64)
    Hv = np.array([Fraction(h) for h in H], dtype=object)
    D = _enumerate_box(surface.b2, box).astype(np.int64)
    QD = D @ Q
    values = np.einsum("ij,ij->i", QD, D - K[None, :])
    hits = D[values == 0]
    results = []
    for row in hits:
        Dt = tuple(int(v) for v in row)
        L = tuple(2 * Dt[i] - surface.K[i] for i in range(surface.b2))
        DH = surface.pair(Dt, H)
        LH = surface.pair(L, H)
        results.append(
            {
                "D": Dt,
                "L": L,
                "DH": DH,
                "LH_sign": (LH > 0) - (LH < 0),
                "effective_candidate": DH >= 0,
            }
        )
    results.sort(key=lambda r: r["D"])
    return {
        "H": H,
        "classes": results,
        "warning": f"search complete only within the coefficient box |d_i| <= {box}",
    }


def rank1_sw_classification(surface: SurfacePresentation, L, sigma_g_nonneg=False, box: int = 4):
    """Classify the rank-1 monopole moduli content of the determinant class L.

    Requires ``L = K (mod 2)``; otherwise the lifting parity fails and an
    error names the obstruction.  The divisor class solving
    ``c1(O(2D - K)) = +/- L`` is ``D = (K + L)/2`` resp. ``(K - L)/2``; the
    branch is chosen by the sign of ``mu(L)``.  With nonnegative total scalar
    curvature every solution is reducible and the report says so."""
    diff = [(surface.K[i] - L[i]) % 2 for i in range(surface.b2)]
    if any(diff):
        raise ValueError(
            "L is not congruent to K mod 2: the lift parity fails (no lift with this determinant)"
        )
    mu_L = surface.degree(L)
    report = ClassReport("rank1_sw_classification")
    report.add("mu_L", mu_L)
    if sigma_g_nonneg:
        report.add("verdict", "reducible-only")
        report.add(
            "reason", "total scalar curvature >= 0 forces reducible solutions"
        )
        return report
    D_plus = tuple(Fraction(surface.K[i] + L[i], 2) for i in range(surface.b2))
    D_minus = tuple(Fraction(surface.K[i] - L[i], 2) for i in range(surface.b2))
    if mu_L < 0:
        report.add("branch", "i")
        report.add("equation", "2D - K = L")
        report.add("D", D_plus)
    elif mu_L > 0:
        report.add("branch", "ii")
        report.add("equation", "2D - K = -L (conjugate orientation)")
        report.add("D_conjugate", D_minus)
        report.add("D", D_plus)
    else:
        report.add("branch", "degenerate")
        report.add("D", D_plus)
        report.add("D_conjugate", D_minus)
    exp_dim = expected_dimension(
        surface, BundleTopology(1, tuple(int(d) for d in D_plus))
    ) if all(d.denominator == 1 for d in D_plus) else None
    if exp_dim is not None:
        report.add("expected_dimension", exp_dim)
    return report


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

_U = ((0, 1), (1, 0))


def _block_diag(*blocks):
    size = sum(len(b) for b in blocks)
    M = [[0] * size for _ in range(size)]
    at = 0
    for b in blocks:
        for i, row in enumerate(b):
            for j, v in enumerate(row):
                M[at + i][at + j] = v
        at += len(b)
    return tuple(tuple(r) for r in M)


def _e8_cartan():
    # Bourbaki numbering; positive definite, even, unimodular
    edges = [(1, 3), (2, 4), (3, 4), (4, 5), (5, 6), (6, 7), (7, 8)]
    M = [[0] * 8 for _ in range(8)]
    for i in range(8):
        M[i][i] = 2
    for i, j in edges:
        M[i - 1][j - 1] = M[j - 1][i - 1] = -1
    return tuple(tuple(r) for r in M)


def _neg(M):
    return tuple(tuple(-v for v in row) for row in M)


def preset(name: str) -> SurfacePresentation:
    name = name.lower()
    if name in ("torus", "t4", "four_torus"):
        Q = _block_diag(_U, _U, _U)
        return SurfacePresentation(
            b2=6, Q=Q, sigma=0, euler=0, K=(0,) * 6,
            omega=(1, 1, 0, 0, 0, 0), volume=1, chiO=0, name="torus",
        )
    if name == "k3":
        Q = _block_diag(_U, _U, _U, _neg(_e8_cartan()), _neg(_e8_cartan()))
        return SurfacePresentation(
            b2=22, Q=Q, sigma=-16, euler=24, K=(0,) * 22,
            omega=(1, 1) + (0,) * 20, volume=1, chiO=2, name="k3",
        )
    if name in ("p2", "cp2", "plane"):
        return SurfacePresentation(
            b2=1, Q=((1,),), sigma=1, euler=3, K=(-3,),
            omega=(1,), volume=1, chiO=1, name="p2",
        )
    raise KeyError(f"unknown surface preset: {name}")


PRESETS = ("torus", "k3", "p2")


def torus_for_grid(areas) -> SurfacePresentation:
    """Product-torus lattice whose Kahler class matches grid areas (a1, a2):
    a line bundle of bidegree (d1, d2) has degree d1 a2 + d2 a1."""
    a1, a2 = (rat(a) for a in areas)
    Q = _block_diag(_U, _U, _U)
    return SurfacePresentation(
        b2=6, Q=Q, sigma=0, euler=0, K=(0,) * 6,
        omega=(a1, a2, 0, 0, 0, 0), volume=a1 * a2, chiO=0, name="grid-torus",
    )
