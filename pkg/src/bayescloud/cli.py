"""Command-line entry point.

Exit status: 0 success, 1 usage error, 2 input/validation error,
3 computation error (non-convergence, zero-probability evidence, cyclic arc
union, oversized state space).  Every subcommand takes ``--json`` for a
single machine-readable document on stdout; given identical arguments and
seeds the JSON output is byte-identical.  ``-`` names standard input/output
for file arguments.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import bnscript, core, corpus, integration, learning
from .errors import (
    BayesCloudError,
    CycleInUnion,
    EmptySupport,
    NotConverged,
    StateSpaceTooLarge,
    ZeroProbabilityEvidence,
)
from .inference import (
    Dataset,
    gibbs_query,
    marginals_to_json,
    posterior,
    sample_forward,
)
from .registry import Registry
from .service import ApiServer

_COMPUTATION_ERRORS = (
    ZeroProbabilityEvidence,
    NotConverged,
    CycleInUnion,
    StateSpaceTooLarge,
    EmptySupport,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        raise _UsageError(message)


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _load_network(path: str) -> core.BayesianNetwork:
    return core.compile_script(_read_text(path))


def _load_evidence(path: str | None) -> bnscript.Evidence:
    if path is None:
        return bnscript.Evidence()
    return bnscript.parse_evidence(_read_text(path))


def _emit_json(payload) -> None:
    sys.stdout.write(json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n")


def _fmt(x: float) -> str:
    return format(x, ".6g")


def _print_marginals(marginals) -> None:
    for name, post in marginals.items():
        if hasattr(post, "states"):
            pairs = ", ".join(
                f"{s}: {_fmt(p)}" for s, p in zip(post.states, post.probabilities)
            )
            print(f"{name}  {pairs}")
        else:
            pairs = "; ".join(
                f"weight {_fmt(w)}, mean {_fmt(m)}, variance {_fmt(v)}"
                for w, m, v in post.components
            )
            print(f"{name}  {pairs}")


def build_parser() -> _Parser:
    parser = _Parser(prog="bayescloud", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--json", action="store_true", help="emit one JSON document")
        return p

    p = add("validate", "parse, compile, and validate a model script")
    p.add_argument("model")

    p = add("infer", "posterior marginals given evidence")
    p.add_argument("model")
    p.add_argument("--evidence", help="evidence file (- for stdin)")
    p.add_argument("--query", nargs="+", required=True, help="variable names")
    p.add_argument("--gibbs", action="store_true", help="force Gibbs sampling")
    p.add_argument("--samples", type=int, default=50000)
    p.add_argument("--burn-in", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)

    p = add("merge", "integrate two models into one")
    p.add_argument("model1")
    p.add_argument("model2")
    p.add_argument("--method", choices=("disjoint", "optimize", "simulate"), required=True)
    p.add_argument("--samples", type=int, default=50000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--max-iterations", type=int, default=10000)
    p.add_argument("--out", help="write the merged script here (default stdout)")

    p = add("sample", "draw rows from the joint distribution")
    p.add_argument("model")
    p.add_argument("-n", type=int, required=True, help="row count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV path (default stdout)")

    p = add("learn-params", "fit parameters for a given structure from CSV data")
    p.add_argument("structure")
    p.add_argument("--data", required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--out", help="write the learned script here (default stdout)")

    p = add("learn-structure", "learn a structure (and parameters) from CSV data")
    p.add_argument("--data", required=True)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-parents", type=int, default=3)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--out", help="write the learned script here (default stdout)")

    p = add("gen-geo", "generate a zone-dangerousness pyramid model")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--k", type=float, default=0.9)
    p.add_argument("--p0", type=float, default=0.05)
    p.add_argument("--out", help="write the script here (default stdout)")

    p = add("corpus", "emit the epidemic model corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--k", type=float, default=0.9)
    p.add_argument("--p0", type=float, default=0.05)

    p = add("scenario", "rank regions by hot-zone posterior given reports")
    p.add_argument("model")
    p.add_argument("--reports", help="evidence file of region reports (- for stdin)")

    p = add("serve", "run the registry HTTP service")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--data-dir", default="./bayescloud-data")
    p.add_argument("--ui-dir", help="serve workbench assets from this directory under /ui")
    p.add_argument("--verbose", action="store_true")
    return parser


# --------------------------------------------------------------------------
# Subcommand bodies


def _cmd_validate(args) -> int:
    try:
        net = _load_network(args.model)
    except BayesCloudError as exc:
        if args.json:
            _emit_json({"ok": False, "findings": [{"code": exc.code, "message": str(exc)}]})
        else:
            print(str(exc), file=sys.stderr)
        return 2
    report = core.validate(net)
    if args.json:
        _emit_json(
            {
                "ok": report.ok,
                "findings": [
                    {"code": f.code, "variable": f.variable, "message": f.message}
                    for f in report.findings
                ],
            }
        )
    else:
        print(str(report))
    return 0 if report.ok else 2


def _cmd_infer(args) -> int:
    net = _load_network(args.model)
    evidence = _load_evidence(args.evidence)
    if args.gibbs:
        marginals = gibbs_query(
            net, evidence, args.query, n=args.samples, burn_in=args.burn_in, seed=args.seed
        )
    else:
        marginals = posterior(net, evidence, args.query)
    if args.json:
        _emit_json({"marginals": marginals_to_json(marginals)})
    else:
        _print_marginals(marginals)
    return 0


def _cmd_merge(args) -> int:
    request = integration.MergeRequest(
        bn1=_load_network(args.model1),
        bn2=_load_network(args.model2),
        method=args.method,
        tolerance=args.tolerance,
        max_iterations=args.max_iterations,
        sample_count=args.samples,
        seed=args.seed,
    )
    merged, report = integration.merge(request)
    script = core.network_to_script(merged)
    if args.out:
        _write_text(args.out, script)
    if args.json:
        payload = {"report": report.to_json(), "model": script}
        if args.out:
            payload["out"] = args.out
        _emit_json(payload)
    else:
        if not args.out:
            sys.stdout.write(script)
        print(f"method: {report.method}", file=sys.stderr)
        print(f"shared: {', '.join(report.shared) or '(none)'}", file=sys.stderr)
        if report.objective is not None:
            print(f"objective: {_fmt(report.objective)} after {report.iterations} iterations", file=sys.stderr)
        for warning in report.warnings:
            print(f"warning: {warning}", file=sys.stderr)
    return 0


def _cmd_sample(args) -> int:
    net = _load_network(args.model)
    data = sample_forward(net, args.n, seed=args.seed)
    if args.out and args.out != "-":
        data.to_csv(args.out)
    else:
        data.write_csv(sys.stdout)
    if args.json:
        _emit_json({"rows": data.n_rows, "columns": list(data.columns), "out": args.out})
    return 0


def _emit_script(args, script: str, payload: dict) -> None:
    """Write a learned/generated script to --out, stdout, or the JSON doc."""
    if args.out:
        _write_text(args.out, script)
    if args.json:
        _emit_json(payload)
    elif not args.out:
        sys.stdout.write(script)


def _cmd_learn_params(args) -> int:
    structure = _load_network(args.structure)
    data = Dataset.from_csv(args.data) if args.data != "-" else Dataset.from_csv(sys.stdin)
    opts = learning.LearnOptions(dirichlet_alpha=args.alpha)
    net = learning.learn_parameters(structure, data, opts)
    script = core.network_to_script(net)
    _emit_script(args, script, {"model": script})
    return 0


def _cmd_learn_structure(args) -> int:
    data = Dataset.from_csv(args.data) if args.data != "-" else Dataset.from_csv(sys.stdin)
    opts = learning.LearnOptions(
        dirichlet_alpha=args.alpha,
        max_parents=args.max_parents,
        restarts=args.restarts,
        seed=args.seed,
    )
    net = learning.learn_structure(data, opts)
    script = core.network_to_script(net)
    bic = learning.bic_score(net, data)
    _emit_script(args, script, {"model": script, "arcs": sorted(list(a) for a in net.arcs), "bic": bic})
    if not args.json:
        print(f"bic: {_fmt(bic)}", file=sys.stderr)
    return 0


def _cmd_gen_geo(args) -> int:
    params = corpus.GeoParams(depth=args.depth, k=args.k, root_hot_prior=args.p0)
    net = corpus.generate_geospatial(params)
    script = core.network_to_script(net)
    _emit_script(args, script, {"model": script, "nodes": len(net.variables), "arcs": len(net.arcs)})
    return 0


def _cmd_corpus(args) -> int:
    written = corpus.build_corpus(args.out, depth=args.depth, k=args.k, p0=args.p0)
    if args.json:
        _emit_json({"files": [p.name for p in written], "directory": args.out})
    else:
        for path in written:
            print(path)
    return 0


def _cmd_scenario(args) -> int:
    net = _load_network(args.model)
    reports = _load_evidence(args.reports)
    table = corpus.run_scenario(net, reports)
    if args.json:
        _emit_json({"risk": [{"region": r, "hot_probability": p} for r, p in table]})
    else:
        for region, p in table:
            print(f"{region}  {_fmt(p)}")
    return 0


def _cmd_serve(args) -> int:
    port = int(os.environ.get("BAYESCLOUD_PORT", args.port))
    data_dir = os.environ.get("BAYESCLOUD_DATA_DIR", args.data_dir)
    ui_dir = os.environ.get("BAYESCLOUD_UI_DIR", args.ui_dir)
    server = ApiServer(port, data_dir, ui_dir=ui_dir, verbose=args.verbose)
    print(f"listening on port {server.port}, data in {data_dir}", file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
    return 0


_COMMANDS = {
    "validate": _cmd_validate,
    "infer": _cmd_infer,
    "merge": _cmd_merge,
    "sample": _cmd_sample,
    "learn-params": _cmd_learn_params,
    "learn-structure": _cmd_learn_structure,
    "gen-geo": _cmd_gen_geo,
    "corpus": _cmd_corpus,
    "scenario": _cmd_scenario,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except _COMPUTATION_ERRORS as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 3
    except BayesCloudError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error [io]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
