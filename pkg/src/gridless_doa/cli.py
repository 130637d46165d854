"""Benchmark CLI: a thin client of the HTTP service.

``run`` executes an experiment config and writes the aggregate CSV; every
computation goes through the service API. Without ``--server`` the requests
are dispatched in-process through the ASGI app, so no daemon is needed;
with it, they go to a remote instance. ``serve`` starts the service.

Exit codes: 0 success, 2 configuration/usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import httpx

from .bench import CSV_SCHEMA_COMMENT, SOLVER_NAMES, _ROW_FIELDS

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridless-doa",
        description="Gridless DOA estimation benchmarks over the service API",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config and write CSV")
    run.add_argument("--config", required=True, help="experiment config JSON path")
    run.add_argument("--out", required=True, help="output CSV path")
    run.add_argument("--seed", type=int, default=None, help="override config seed")
    run.add_argument("--trials", type=int, default=None,
                     help="override number of trials")
    run.add_argument("--solver", action="append", default=None,
                     help="restrict to the named solver (repeatable)")
    run.add_argument("--dump-spectrum", metavar="PATH", default=None,
                     help="write (phase_deg, value) samples of trial 0's "
                          "null spectrum")
    run.add_argument("--spectrum-points", type=int, default=3600)
    run.add_argument("--dump-residuals", metavar="PATH", default=None,
                     help="write per-iteration solver residuals on trial 0")
    run.add_argument("--dump-estimates", metavar="PATH", default=None,
                     help="write per-trial recovered DOAs")
    run.add_argument("--server", default=None,
                     help="base URL of a running service (default: in-process)")

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


class _SyncASGITransport(httpx.BaseTransport):
    """Dispatch requests to an ASGI app from a synchronous client."""

    def __init__(self, app):
        self._inner = httpx.ASGITransport(app=app)

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        import asyncio

        async def _run():
            response = await self._inner.handle_async_request(request)
            content = await response.aread()
            await response.aclose()
            return response, content

        response, content = asyncio.run(_run())
        return httpx.Response(
            status_code=response.status_code,
            headers=response.headers,
            content=content,
            request=request,
        )


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=None)
    # in-process transport: the CLI stays a pure client of the service API
    from .service import create_app

    return httpx.Client(transport=_SyncASGITransport(create_app()),
                        base_url="http://gridless-doa")


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _check(resp: httpx.Response) -> dict | None:
    """Parse a service response; None means the caller should abort."""
    if resp.status_code == 200:
        return resp.json()
    try:
        detail = resp.json().get("detail", resp.text)
    except ValueError:
        detail = resp.text
    print(f"error: service returned {resp.status_code}: {detail}",
          file=sys.stderr)
    return None


def _load_config(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        return None
    except json.JSONDecodeError as exc:
        print(f"error: invalid JSON in {path}: {exc}", file=sys.stderr)
        return None


def _apply_overrides(config: dict, args) -> dict | None:
    if args.seed is not None:
        config["seed"] = args.seed
    if args.trials is not None:
        config["n_trials"] = args.trials
    if args.solver:
        unknown = [s for s in args.solver if s not in SOLVER_NAMES]
        if unknown:
            print(f"error: unknown solver name(s): {', '.join(unknown)}",
                  file=sys.stderr)
            return None
        keep = []
        for entry in config.get("solvers", []):
            name = entry if isinstance(entry, str) else entry.get("name")
            if name in args.solver:
                keep.append(entry)
        if not keep:
            print("error: --solver filter removed every configured solver",
                  file=sys.stderr)
            return None
        config["solvers"] = keep
    return config


def _print_summary(rows: list[dict], failures: int) -> None:
    header = f"{'snr_db':>10}  {'solver':<22} {'rmse_deg':>10}  {'runtime_s':>10}"
    print(header)
    print("-" * len(header))
    for row in rows:
        snr = "inf" if row["sweep_var"] is None else f"{row['sweep_var']:g}"
        print(f"{snr:>10}  {row['solver']:<22} {row['rmse_deg']:>10.4f}  "
              f"{row['mean_runtime_s']:>10.4f}")
    if failures:
        print(f"({failures} solver run(s) failed and were scored at the cap)")


def _write_rows(path: str, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(CSV_SCHEMA_COMMENT + "\n")
        writer = csv.DictWriter(fh, fieldnames=_ROW_FIELDS)
        writer.writeheader()
        for row in rows:
            out = dict(row)
            if out["sweep_var"] is None:
                out["sweep_var"] = "inf"
            writer.writerow(out)


def _write_estimates(path: str, estimates: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(CSV_SCHEMA_COMMENT + "\n")
        writer = csv.writer(fh)
        writer.writerow(["sweep_var", "solver", "trial", "theta_true_deg",
                         "theta_hat_deg", "mse_deg2"])
        for e in estimates:
            writer.writerow([
                "inf" if e["sweep_var"] is None else e["sweep_var"],
                e["solver"],
                e["trial"],
                ";".join(f"{v:.6f}" for v in e["theta_true_deg"]),
                ";".join(f"{v:.6f}" for v in e["theta_hat_deg"]),
                f"{e['mse_deg2']:.8f}",
            ])


def _dump_spectrum(client: httpx.Client, config: dict, path: str,
                   n_points: int) -> bool:
    trial = _check(client.post("/experiment/trial", json={"config": config}))
    if trial is None:
        return False
    k = config["k"]
    payload = {"y": trial["y"], "positions": trial["positions"], "k": k,
               "n_points": n_points}
    spec = _check(client.post("/spectrum", json=payload))
    if spec is None:
        return False
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(CSV_SCHEMA_COMMENT + "\n")
        writer = csv.writer(fh)
        writer.writerow(["phase_deg", "value"])
        for p, v in zip(spec["phase_deg"], spec["value"]):
            writer.writerow([f"{p:.6f}", f"{v:.10e}"])
    return True


_ITERATIVE = ("ap_gridless", "ap_ula", "admm")


def _dump_residuals(client: httpx.Client, config: dict, path: str) -> bool:
    trial = _check(client.post("/experiment/trial", json={"config": config}))
    if trial is None:
        return False
    rows = []
    for entry in config.get("solvers", []):
        name = entry if isinstance(entry, str) else entry.get("name")
        if name not in _ITERATIVE:
            continue
        payload = {
            "y": trial["y"],
            "positions": trial["positions"],
            "k": config["k"],
            "solver": name,
            "include_residuals": True,
        }
        if isinstance(entry, dict):
            for key in ("tau", "rho"):
                if key in entry:
                    payload[key] = entry[key]
        if config.get("max_iter") is not None:
            payload["max_iter"] = config["max_iter"]
        est = _check(client.post("/estimate", json=payload))
        if est is None:
            return False
        for i, r in enumerate(est["residuals"] or [], start=1):
            rows.append((name, i, r))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(CSV_SCHEMA_COMMENT + "\n")
        writer = csv.writer(fh)
        writer.writerow(["solver", "iteration", "residual"])
        for row in rows:
            writer.writerow(row)
    return True


def _cmd_run(args) -> int:
    config = _load_config(args.config)
    if config is None:
        print("usage: gridless-doa run --config CONFIG.json --out OUT.csv",
              file=sys.stderr)
        return _fail(f"config file {args.config!r} is missing or invalid",
                     EXIT_CONFIG)
    config = _apply_overrides(config, args)
    if config is None:
        return EXIT_CONFIG

    with _client(args.server) as client:
        resp = client.post(
            "/experiment/run",
            json={"config": config,
                  "include_estimates": args.dump_estimates is not None},
        )
        if resp.status_code in (400, 422) and resp.headers.get(
                "content-type", "").startswith("application/json"):
            # pydantic validation (422 from FastAPI) and domain config errors
            # (400) are both configuration problems
            detail = resp.json().get("detail")
            if resp.status_code == 400 or isinstance(detail, list):
                _check(resp)
                return EXIT_CONFIG
        body = _check(resp)
        if body is None:
            return EXIT_NUMERICAL

        _write_rows(args.out, body["rows"])
        if args.dump_estimates is not None:
            _write_estimates(args.dump_estimates, body["estimates"] or [])
        if args.dump_spectrum is not None:
            if not _dump_spectrum(client, config, args.dump_spectrum,
                                  args.spectrum_points):
                return EXIT_NUMERICAL
        if args.dump_residuals is not None:
            if not _dump_residuals(client, config, args.dump_residuals):
                return EXIT_NUMERICAL

    _print_summary(body["rows"], body["failures"])
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    if args.command == "run":
        return _cmd_run(args)
    return _cmd_serve(args)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
