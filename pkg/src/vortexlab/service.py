"""HTTP facade of the laboratory.

Every computation the command line exposes goes through this FastAPI app:
request and response bodies are pydantic models, exact rationals travel as
strings, and field data travels as base64-encoded dump blobs (see
``fieldio``).  Mathematical negative results (instability, nonexistence) are
ordinary responses with a verdict, never HTTP errors; malformed inputs are
HTTP 400/422.
"""

from __future__ import annotations

import base64
from fractions import Fraction

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from . import __version__
from . import field_calculus as fc
from . import spin_algebra as sa
from . import surface_topology as st
from . import sw_system as sw
from . import vortex_solver as vs
from .fieldio import dump_field, load_field

__all__ = ["app", "create_app"]


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------


class SurfaceModel(BaseModel):
    b2: int
    Q: list[list[int]]
    torsion: list[int] = []
    sigma: int
    euler: int
    K: list[int] | None = None
    omega: list[str | int] = []
    volume: str | int = 1
    chiO: str | int = 0
    kaehler: bool = True
    name: str = ""

    def build(self) -> st.SurfacePresentation:
        return st.SurfacePresentation(
            b2=self.b2,
            Q=tuple(tuple(row) for row in self.Q),
            torsion=tuple(self.torsion),
            sigma=self.sigma,
            euler=self.euler,
            K=tuple(self.K) if self.K is not None else (0,) * self.b2,
            omega=tuple(st.rat(v) for v in self.omega),
            volume=st.rat(self.volume),
            chiO=st.rat(self.chiO),
            kaehler=self.kaehler,
            name=self.name,
        )


class BundleModel(BaseModel):
    rank: int
    c1: list[int]
    c2: str | int = 0

    def build(self) -> st.BundleTopology:
        return st.BundleTopology(self.rank, tuple(self.c1), st.rat(self.c2))


class GridModel(BaseModel):
    n: int = 16
    areas: tuple[float, float] = (1.0, 1.0)
    backend: str = "spectral"
    bidegree: tuple[int, int] = (0, 0)
    rank: int = 1

    def build(self) -> fc.GridSpec:
        return fc.GridSpec(self.n, self.areas, self.backend, self.bidegree, self.rank)


class ReportModel(BaseModel):
    title: str
    entries: list[tuple[str, str]]


class TopologyRequest(BaseModel):
    surface: SurfaceModel | None = None
    preset: str | None = None
    L: list[int] | None = None
    bundle: BundleModel | None = None
    t_mean: float | None = None
    w2_lifts: bool = True


class TopologyResponse(BaseModel):
    reports: list[ReportModel]


class IdentitiesRequest(BaseModel):
    n: int = 16
    seed: int = 42
    cutoff: int = 4
    count: int = 5
    backend: str = "spectral"


class IdentityRow(BaseModel):
    name: str
    value: float
    tolerance: float
    passed: bool


class IdentitiesResponse(BaseModel):
    rows: list[IdentityRow]
    all_passed: bool


class TSpecModel(BaseModel):
    mean: float = 0.0
    modes: list[list[float]] = []
    values_b64: str | None = None  # field dump of a scalar function, overrides the rest


class SolveRequest(BaseModel):
    grid: GridModel = GridModel()
    t: TSpecModel = TSpecModel()
    phi0: str = "constant"
    seed: int = 0
    tol: float = 1e-10
    max_iter: int = 50
    emit_fields: bool = True


class FieldDumpModel(BaseModel):
    name: str
    data_b64: str


class SolveResponse(BaseModel):
    converged: bool
    verdict: str
    iterations: int
    residual_sup: float
    vortex_residuals: tuple[float, float, float] | None = None
    chain: list[tuple[str, bool, str]] = []
    trace: list[dict] = []
    report_text: str
    fields: list[FieldDumpModel] = []


class SweepRequest(BaseModel):
    grid: GridModel = GridModel()
    t_means: list[float]
    tol: float = 1e-10


class SweepRow(BaseModel):
    t_mean: float
    converged: bool
    residual: float | None
    verdict: str


class SweepResponse(BaseModel):
    rows: list[SweepRow]


class DivisorsRequest(BaseModel):
    surface: SurfaceModel | None = None
    preset: str | None = None
    H0: list[int]
    n: int = 0
    box: int = 4


class DivisorsResponse(BaseModel):
    H: list[str]
    classes: list[dict]
    warning: str


class RandomFieldRequest(BaseModel):
    grid: GridModel = GridModel()
    seed: int = 0
    cutoff: int = 4
    kind: str = "00"
    geom: str = "scalar"
    real: bool = False


class FieldBlobRequest(BaseModel):
    data_b64: str


class FieldBlobResponse(BaseModel):
    data_b64: str
    kind: str
    geom: str
    n: int


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, Fraction):
        return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    return str(value)


def _report_model(report: st.ClassReport) -> ReportModel:
    return ReportModel(title=report.title, entries=[(k, _fmt(v)) for k, v in report.entries])


def _surface_from(request) -> st.SurfacePresentation:
    if request.preset:
        try:
            return st.preset(request.preset)
        except KeyError as err:
            raise HTTPException(400, detail=str(err))
    if request.surface is None:
        raise HTTPException(400, detail="either a surface or a preset is required")
    try:
        return request.surface.build()
    except ValueError as err:
        raise HTTPException(400, detail=f"surface: {err}")


def _identities_rows(n, seed, cutoff, count, backend):
    rows = []
    rng = np.random.default_rng(seed)

    # fiber suite: vectorized over a sample of covectors
    sample = 10_000
    u = rng.standard_normal((sample, 4)) + 1j * rng.standard_normal((sample, 4))
    v = rng.standard_normal((sample, 4)) + 1j * rng.standard_normal((sample, 4))
    gu = sa.gamma_matrix(u)
    gv = sa.gamma_matrix(v)
    gc = sa.STANDARD_METRIC.g_complex(u, v)
    anti = gu @ gv + gv @ gu + 2.0 * gc[:, None, None] * np.eye(4)
    rows.append(("clifford_anticommutation", float(np.max(np.abs(anti))), 1e-12))
    sharp = np.einsum("nij,njk->nik", sa.gamma_sharp_matrix(u), sa.gamma_plus_matrix(v))
    sharp = sharp + np.einsum("nij,njk->nik", sa.gamma_sharp_matrix(v), sa.gamma_plus_matrix(u))
    sharp = sharp - 2.0 * gc[:, None, None] * np.eye(2)
    rows.append(("clifford_sharp_polarization", float(np.max(np.abs(sharp))), 1e-12))

    grid = fc.GridSpec(n, (1.0, 1.0), backend)
    weitz = energy = equiv = cor = sadj = 0.0
    for k in range(count):
        conn = fc.random_connection(grid, seed + 101 + k, cutoff, amplitude=0.4)
        phi = fc.random_band_limited(grid, seed + 201 + k, cutoff, "00", "section")
        alpha = fc.random_band_limited(grid, seed + 301 + k, cutoff, "02", "section")
        psi = sw.SpinorField(phi, alpha)
        weitz = max(weitz, sw.weitzenbock_gap(conn, psi))
        energy = max(energy, sw.energy_identity_gap(conn, psi)[2])
        equiv = max(equiv, sw.formulation_gap(sw.sw_star_residual(conn, psi, 0.5)))
        cor = max(cor, sw.cor23_gap(conn, psi))
        theta = fc.random_band_limited(grid, seed + 401 + k, cutoff, "01", "section")
        ip1 = fc.inner_product(sw.dirac(conn, psi), theta)
        neg = sw.dirac_negative(conn, theta)
        ip2 = fc.inner_product(psi.phi, neg.phi) + fc.inner_product(psi.alpha, neg.alpha)
        sadj = max(sadj, abs(ip1 - ip2) / (1.0 + abs(ip1)))
    tol = 1e-8 if backend == "spectral" else 5.0 / n ** 2
    rows.append(("weitzenbock_gap", weitz, tol))
    rows.append(("energy_identity_gap", energy, tol))
    rows.append(("formulation_equivalence_gap", equiv, 1e-10 if backend == "spectral" else tol))
    rows.append(("curvature_pairing_gap", cor, 1e-10 if backend == "spectral" else tol))
    rows.append(("dirac_self_adjointness_gap", sadj, 1e-10 if backend == "spectral" else tol))

    # gauge invariance of the residual norms under exact winding gauges
    conn = fc.random_connection(grid, seed + 7, cutoff, amplitude=0.4)
    phi = fc.random_band_limited(grid, seed + 8, cutoff, "00", "section")
    alpha = fc.random_band_limited(grid, seed + 9, cutoff, "02", "section")
    psi = sw.SpinorField(phi, alpha)
    res = sw.sw_star_residual(conn, psi, 0.3)
    g = fc.random_gauge(grid, seed + 10)
    res_g = sw.sw_star_residual(
        fc.gauge_transform(g, conn),
        sw.SpinorField(fc.gauge_transform(g, phi), fc.gauge_transform(g, alpha)),
        0.3,
    )
    gauge_gap = max(
        abs(res.dirac_norm - res_g.dirac_norm),
        abs(res.eq20_norm - res_g.eq20_norm),
        abs(res.eq02_norm - res_g.eq02_norm),
        abs(res.eqLambda_norm - res_g.eqLambda_norm),
        abs(res.gamma_gap - res_g.gamma_gap),
    ) / (1.0 + res.gamma_gap)
    rows.append(("gauge_invariance_gap", gauge_gap, 1e-10 if backend == "spectral" else tol))
    return [
        IdentityRow(name=name, value=value, tolerance=tolerance, passed=bool(value < tolerance))
        for name, value, tolerance in rows
    ]


def _build_params(grid, spec: TSpecModel) -> vs.VortexParameters:
    if spec.values_b64 is not None:
        field = load_field(base64.b64decode(spec.values_b64))
        if field.kind != "00" or field.geom != "scalar":
            raise ValueError("the parameter dump must hold a scalar function")
        if field.grid.n != grid.n:
            raise ValueError("parameter dump grid size disagrees with the solve grid")
        return vs.VortexParameters.from_spec(grid, values=field.values[0].real)
    modes = [tuple(m) for m in spec.modes]
    return vs.VortexParameters.from_spec(grid, t_mean=spec.mean, modes=modes)


def _build_phi0(grid, spec: str) -> fc.Field:
    if spec == "constant":
        return fc.Field.constant(grid, 1.0, "00", "section")
    raise HTTPException(400, detail=f"unknown phi0 spec {spec!r}; supported: constant")


# ---------------------------------------------------------------------------
# app
# ---------------------------------------------------------------------------


def create_app() -> FastAPI:
    app = FastAPI(
        title="vortexlab",
        version=__version__,
        description="Monopole/vortex equation laboratory on a flat Kahler torus",
    )

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/topology/report", response_model=TopologyResponse)
    def topology(request: TopologyRequest):
        surface = _surface_from(request)
        reports = []
        overview = st.ClassReport("surface")
        overview.add("name", surface.name or "custom")
        overview.add("b2", surface.b2)
        overview.add("sigma", surface.sigma)
        overview.add("euler", surface.euler)
        overview.add("3sigma+2e", 3 * surface.sigma + 2 * surface.euler)
        overview.add("spinc_lifts", st.count_spinc_lifts(surface, request.w2_lifts))
        reports.append(overview)
        L = tuple(request.L) if request.L is not None else surface.K
        if L is not None:
            classes = st.ClassReport("determinant_class")
            classes.add("L", L)
            if request.L is None:
                classes.add("note", "defaulted to the canonical class")
            classes.add("characteristic", st.is_characteristic(surface, L))
            classes.add("almost_canonical", st.is_almost_canonical(surface, L))
            reports.append(classes)
            try:
                reports.append(st.spinor_chern(surface, L))
            except ValueError as err:
                bad = st.ClassReport("spinor_chern")
                bad.add("error", str(err))
                reports.append(bad)
        if request.bundle is not None:
            bundle = request.bundle.build()
            reports.append(st.slopes(surface, bundle, request.t_mean))
            dim = st.ClassReport("expected_dimension")
            dim.add("value", st.expected_dimension(surface, bundle))
            reports.append(dim)
        return TopologyResponse(reports=[_report_model(r) for r in reports])

    @app.post("/identities/run", response_model=IdentitiesResponse)
    def identities(request: IdentitiesRequest):
        try:
            rows = _identities_rows(
                request.n, request.seed, request.cutoff, request.count, request.backend
            )
        except ValueError as err:
            raise HTTPException(400, detail=str(err))
        return IdentitiesResponse(rows=rows, all_passed=all(r.passed for r in rows))

    @app.post("/solve/run", response_model=SolveResponse)
    def solve(request: SolveRequest):
        try:
            grid = request.grid.build()
            params = _build_params(grid, request.t)
            phi0 = _build_phi0(grid, request.phi0)
        except ValueError as err:
            raise HTTPException(400, detail=str(err))
        conn0 = fc.Connection.trivial(grid)
        try:
            u, report = vs.kazdan_warner_solve(
                phi0, params, conn0=conn0, tol=request.tol, max_iter=request.max_iter
            )
        except vs.UnstableError as err:
            verdict = "reducible-only" if err.reducible_only else "unstable"
            text = (
                f"[solve_report]\nconverged = false\nverdict = {verdict}\n"
                f"lambda = {err.lam!r}\ndegree = {err.degree!r}\nmessage = {err}\n"
            )
            return SolveResponse(
                converged=False, verdict=verdict, iterations=0,
                residual_sup=float("nan"), report_text=text,
            )
        except vs.NotHolomorphicError as err:
            raise HTTPException(400, detail=str(err))
        except vs.NonConvergenceError as err:
            return SolveResponse(
                converged=False, verdict="nonconvergence", iterations=len(err.trace),
                residual_sup=err.trace[-1]["res"] if err.trace else float("nan"),
                report_text=f"[solve_report]\nconverged = false\nverdict = nonconvergence\nmessage = {err}\n",
            )
        pair = vs.reconstruct_pair(u, phi0, conn0)
        res = vs.vortex_residual(pair.conn, pair.phi, params)
        chain = vs.moduli_chain_check(u, phi0, params, conn0)
        report.vortex_residuals = tuple(float(r) for r in res)
        report.verdict = "stable" if chain.ok else "chain-failure"
        fields = []
        if request.emit_fields:
            phi_field = pair.phi
            pot_field = fc.Field(grid, "1r", "endo", pair.conn.potential)
            for name, fld in (("u", u), ("phi", phi_field), ("potential", pot_field)):
                fields.append(FieldDumpModel(
                    name=name,
                    data_b64=base64.b64encode(dump_field(fld)).decode("ascii"),
                ))
        return SolveResponse(
            converged=True, verdict=report.verdict, iterations=report.iterations,
            residual_sup=report.residual_sup,
            vortex_residuals=report.vortex_residuals,
            chain=[(s[0], s[1], s[2]) for s in chain.stages],
            trace=[{k: float(v) for k, v in row.items()} for row in report.trace],
            report_text=report.to_text() + chain.to_text(),
            fields=fields,
        )

    @app.post("/sweep/run", response_model=SweepResponse)
    def sweep(request: SweepRequest):
        try:
            grid = request.grid.build()
            rows = vs.sweep_t_mean(grid, request.t_means, tol=request.tol)
        except ValueError as err:
            raise HTTPException(400, detail=str(err))
        return SweepResponse(rows=[
            SweepRow(
                t_mean=r["t_mean"], converged=r["converged"],
                residual=None if np.isnan(r["residual"]) else r["residual"],
                verdict=r["verdict"],
            )
            for r in rows
        ])

    @app.post("/divisors/search", response_model=DivisorsResponse)
    def divisors(request: DivisorsRequest):
        surface = _surface_from(request)
        try:
            result = st.divisor_search(surface, tuple(request.H0), request.n, request.box)
        except ValueError as err:
            raise HTTPException(400, detail=str(err))
        classes = []
        for row in result["classes"]:
            classes.append({
                "D": list(row["D"]),
                "L": list(row["L"]),
                "DH": _fmt(row["DH"]),
                "LH_sign": row["LH_sign"],
                "effective_candidate": row["effective_candidate"],
            })
        return DivisorsResponse(
            H=[_fmt(h) for h in result["H"]], classes=classes, warning=result["warning"]
        )

    @app.post("/fields/random", response_model=FieldBlobResponse)
    def random_field(request: RandomFieldRequest):
        try:
            grid = request.grid.build()
            field = fc.random_band_limited(
                grid, request.seed, request.cutoff, request.kind, request.geom,
                real=request.real,
            )
        except (ValueError, KeyError) as err:
            raise HTTPException(400, detail=str(err))
        return FieldBlobResponse(
            data_b64=base64.b64encode(dump_field(field)).decode("ascii"),
            kind=field.kind, geom=field.geom, n=grid.n,
        )

    @app.post("/fields/roundtrip", response_model=FieldBlobResponse)
    def roundtrip(request: FieldBlobRequest):
        try:
            blob = base64.b64decode(request.data_b64)
            field = load_field(blob)
        except ValueError as err:
            raise HTTPException(400, detail=str(err))
        return FieldBlobResponse(
            data_b64=base64.b64encode(dump_field(field)).decode("ascii"),
            kind=field.kind, geom=field.geom, n=field.grid.n,
        )

    return app


app = create_app()
