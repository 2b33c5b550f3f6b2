"""Command line client of the laboratory service.

Every subcommand builds a JSON request, sends it to the HTTP service (an
in-process instance by default, a remote one with ``--server``), and writes
the response to plain-text report files, CSV tables, or binary field dumps.

Exit status: 0 on success, 2 when the mathematics says "no solution"
(instability / nonexistence verdicts, an expected negative result), 1 on
errors such as malformed configs or failed identity checks.

Solve config schema (``key = value`` lines, ``#`` comments)::

    n = 16                      # grid points per axis (even, >= 8)
    areas = [1.0, 1.0]          # areas of the two torus factors
    backend = spectral          # spectral | link
    bidegree = [0, 0]           # background line-bundle degrees
    seed = 7                    # recorded in every output
    t_mean = 0.8                # mean of the parameter function
    t_modes = [[0.3, 1, 0, 0, 0]]   # cosine modes: amplitude, k1..k4
    phi0 = constant             # background section spec
    newton_tol = 1e-10
    max_iter = 50

Surface config schema: ``b2``, ``Q`` (integer matrix), ``torsion``,
``sigma``, ``euler``, ``K``, ``omega`` (rationals), ``volume``, ``chiO``,
``kaehler``, ``name``.
"""

from __future__ import annotations

import argparse
import asyncio
import base64
import csv
import sys
from pathlib import Path

import httpx

from .fieldio import parse_keyval

OK, ERROR, NEGATIVE = 0, 1, 2


def _payload_from_solve_config(text: str, base_dir: Path | None = None) -> dict:
    config = parse_keyval(text)
    known = {"n", "areas", "backend", "bidegree", "rank", "seed", "t_mean",
             "t_modes", "t_file", "phi0", "newton_tol", "max_iter"}
    for key in config:
        if key not in known:
            raise ValueError(f"unknown solve config field {key!r}")
    grid = {
        "n": int(config.get("n", 16)),
        "areas": [float(a) for a in config.get("areas", [1.0, 1.0])],
        "backend": str(config.get("backend", "spectral")),
        "bidegree": [int(d) for d in config.get("bidegree", [0, 0])],
        "rank": int(config.get("rank", 1)),
    }
    modes = config.get("t_modes", [])
    t_spec = {"mean": float(config.get("t_mean", 0.0)),
              "modes": [[float(x) for x in m] for m in modes]}
    if "t_file" in config:
        path = Path(str(config["t_file"]))
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        t_spec["values_b64"] = base64.b64encode(path.read_bytes()).decode("ascii")
    return {
        "grid": grid,
        "t": t_spec,
        "phi0": str(config.get("phi0", "constant")),
        "seed": int(config.get("seed", 0)),
        "tol": float(config.get("newton_tol", 1e-10)),
        "max_iter": int(config.get("max_iter", 50)),
    }


def _surface_payload(args) -> dict:
    if args.preset:
        return {"preset": args.preset}
    if not args.surface:
        raise ValueError("either --preset or --surface FILE is required")
    config = parse_keyval(Path(args.surface).read_text())
    surface = {
        "b2": int(config["b2"]),
        "Q": [[int(v) for v in row] for row in config["Q"]],
        "torsion": [int(v) for v in config.get("torsion", [])],
        "sigma": int(config["sigma"]),
        "euler": int(config["euler"]),
        "K": [int(v) for v in config["K"]] if "K" in config else None,
        "omega": [str(v) for v in config.get("omega", [])],
        "volume": str(config.get("volume", 1)),
        "chiO": str(config.get("chiO", 0)),
        "kaehler": bool(config.get("kaehler", True)),
        "name": str(config.get("name", "")),
    }
    return {"surface": surface}


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.replace(",", " ").split()]


async def _post(args, path: str, payload: dict) -> httpx.Response:
    if getattr(args, "server", None):
        async with httpx.AsyncClient(base_url=args.server, timeout=600.0) as client:
            return await client.post(path, json=payload)
    from .service import app

    transport = httpx.ASGITransport(app=app)
    async with httpx.AsyncClient(
        transport=transport, base_url="http://vortexlab.internal", timeout=600.0
    ) as client:
        return await client.post(path, json=payload)


def _call(args, path: str, payload: dict) -> dict:
    response = asyncio.run(_post(args, path, payload))
    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        raise RuntimeError(f"service error {response.status_code}: {detail}")
    return response.json()


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_topology(args) -> int:
    payload = _surface_payload(args)
    if args.L:
        payload["L"] = _int_list(args.L)
    if args.bundle_c1:
        payload["bundle"] = {"rank": args.bundle_rank, "c1": _int_list(args.bundle_c1),
                             "c2": str(args.bundle_c2)}
        if args.t_mean is not None:
            payload["t_mean"] = args.t_mean
    data = _call(args, "/topology/report", payload)
    lines = []
    for report in data["reports"]:
        lines.append(f"[{report['title']}]")
        for key, value in report["entries"]:
            lines.append(f"{key} = {value}")
        lines.append("")
    text = "\n".join(lines)
    out = _outdir(args)
    (out / "topology_report.txt").write_text(text)
    sys.stdout.write(text)
    return OK


def cmd_identities(args) -> int:
    payload = {"n": args.grid, "seed": args.seed, "cutoff": args.cutoff,
               "count": args.count, "backend": args.backend}
    data = _call(args, "/identities/run", payload)
    lines = [f"# identities: grid = {args.grid}, seed = {args.seed}, "
             f"cutoff = {args.cutoff}, count = {args.count}, backend = {args.backend}"]
    lines.append(f"{'identity':36s} {'gap':>12s} {'tolerance':>12s} {'status':>7s}")
    failed = []
    for row in data["rows"]:
        status = "pass" if row["passed"] else "FAIL"
        lines.append(f"{row['name']:36s} {row['value']:12.3e} {row['tolerance']:12.1e} {status:>7s}")
        if not row["passed"]:
            failed.append(row["name"])
    text = "\n".join(lines) + "\n"
    out = _outdir(args)
    (out / "identities_report.txt").write_text(text)
    sys.stdout.write(text)
    if failed:
        sys.stderr.write(f"failed identities: {', '.join(failed)}\n")
        return ERROR
    return OK


def cmd_solve(args) -> int:
    try:
        payload = _payload_from_solve_config(Path(args.config).read_text(),
                                             base_dir=Path(args.config).parent)
    except (KeyError, ValueError) as err:
        sys.stderr.write(f"bad solve config: {err}\n")
        return ERROR
    payload["emit_fields"] = not args.no_fields
    data = _call(args, "/solve/run", payload)
    out = _outdir(args)
    meta = f"# seed = {payload['seed']}\n"
    (out / "solve_report.txt").write_text(meta + data["report_text"])
    sys.stdout.write(data["report_text"])
    for blob in data.get("fields", []):
        (out / f"{blob['name']}.field").write_bytes(base64.b64decode(blob["data_b64"]))
    if not data["converged"]:
        if data["verdict"] in ("unstable", "reducible-only"):
            return NEGATIVE
        return ERROR
    return OK


def cmd_sweep(args) -> int:
    try:
        payload = _payload_from_solve_config(Path(args.config).read_text(),
                                             base_dir=Path(args.config).parent)
    except (KeyError, ValueError) as err:
        sys.stderr.write(f"bad solve config: {err}\n")
        return ERROR
    t_means = [float(tok) for tok in args.t_means.replace(",", " ").split()]
    data = _call(args, "/sweep/run",
                 {"grid": payload["grid"], "t_means": t_means, "tol": payload["tol"]})
    out = _outdir(args)
    path = out / "sweep.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_mean", "converged", "residual", "verdict"])
        for row in data["rows"]:
            residual = "" if row["residual"] is None else f"{row['residual']:.6e}"
            writer.writerow([row["t_mean"], str(row["converged"]).lower(), residual, row["verdict"]])
    sys.stdout.write(path.read_text())
    return OK


def cmd_divisors(args) -> int:
    payload = _surface_payload(args)
    payload.update({"H0": _int_list(args.H0), "n": args.n, "box": args.box})
    data = _call(args, "/divisors/search", payload)
    lines = [f"[divisor_search] H = {data['H']}", f"# {data['warning']}"]
    for row in data["classes"]:
        lines.append(
            f"D = {row['D']}, L = {row['L']}, DH = {row['DH']}, "
            f"LH_sign = {row['LH_sign']}, effective_candidate = {str(row['effective_candidate']).lower()}"
        )
    text = "\n".join(lines) + "\n"
    out = _outdir(args)
    (out / "divisors_report.txt").write_text(text)
    sys.stdout.write(text)
    return OK


def cmd_dump(args) -> int:
    payload = {
        "grid": {"n": args.grid, "areas": [1.0, 1.0], "backend": args.backend,
                 "bidegree": [0, 0], "rank": args.rank},
        "seed": args.seed, "cutoff": args.cutoff, "kind": args.kind,
        "geom": args.geom, "real": args.real,
    }
    data = _call(args, "/fields/random", payload)
    Path(args.out).write_bytes(base64.b64decode(data["data_b64"]))
    sys.stdout.write(f"wrote {args.out}: kind {data['kind']}, geom {data['geom']}, n = {data['n']}\n")
    return OK


def cmd_load(args) -> int:
    blob = Path(args.input).read_bytes()
    data = _call(args, "/fields/roundtrip",
                 {"data_b64": base64.b64encode(blob).decode("ascii")})
    Path(args.out).write_bytes(base64.b64decode(data["data_b64"]))
    sys.stdout.write(f"wrote {args.out}: kind {data['kind']}, geom {data['geom']}, n = {data['n']}\n")
    return OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vortexlab",
        description="monopole/vortex equation laboratory on a flat Kahler torus",
    )
    parser.add_argument("--server", default=None,
                        help="URL of a running service; default runs in process")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("topology", help="lattice arithmetic reports")
    p.add_argument("--preset", choices=("torus", "k3", "p2"))
    p.add_argument("--surface", help="surface config file")
    p.add_argument("--L", help="determinant class, comma separated integers")
    p.add_argument("--bundle-rank", type=int, default=1)
    p.add_argument("--bundle-c1", help="bundle c1, comma separated integers")
    p.add_argument("--bundle-c2", default=0)
    p.add_argument("--t-mean", type=float, default=None)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_topology)

    p = sub.add_parser("identities", help="fiber and field identity suites")
    p.add_argument("--grid", type=int, default=16)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--cutoff", type=int, default=4)
    p.add_argument("--count", type=int, default=5)
    p.add_argument("--backend", default="spectral", choices=("spectral", "link"))
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_identities)

    p = sub.add_parser("solve", help="rank-1 vortex solve plus moduli chain")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=".")
    p.add_argument("--no-fields", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="phase sweep over the parameter mean")
    p.add_argument("--config", required=True)
    p.add_argument("--t-means", required=True, help="comma separated values")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("divisors", help="quadratic divisor-class search")
    p.add_argument("--preset", choices=("torus", "k3", "p2"))
    p.add_argument("--surface")
    p.add_argument("--H0", required=True, help="polarization base, comma separated")
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--box", type=int, default=4)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_divisors)

    p = sub.add_parser("dump", help="write a seeded random band-limited field")
    p.add_argument("--grid", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cutoff", type=int, default=4)
    p.add_argument("--kind", default="00")
    p.add_argument("--geom", default="scalar", choices=("scalar", "section", "endo"))
    p.add_argument("--rank", type=int, default=1)
    p.add_argument("--backend", default="spectral", choices=("spectral", "link"))
    p.add_argument("--real", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dump)

    p = sub.add_parser("load", help="validate and re-emit a field dump")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_load)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (RuntimeError, ValueError, OSError) as err:
        sys.stderr.write(f"error: {err}\n")
        return ERROR


if __name__ == "__main__":
    sys.exit(main())
