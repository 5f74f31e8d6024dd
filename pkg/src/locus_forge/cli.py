"""Command-line driver: ``locus-forge <command> --in FILE [--out FILE] ...``.

Each command loads a problem file (see :mod:`locus_forge.problem`), prints a
readable summary to stdout and, with ``--out``, writes the machine-readable
report as canonical JSON (sorted keys, rounded floats, no timestamps).

Exit codes: 0 success (warnings allowed), 2 input validation failure,
3 internal error (closure or tolerance violation).
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Any

import numpy as np

from . import __version__
from .classical import EXACT_TOL, pca_factor_count, recover_cps
from .errors import ClosureError, LocusForgeError
from .mps import EPS_REL, mps_report, pi_over_catalog, recover_loci, separability_relation
from .numerics import EPS
from .partitions import Partition, pi_of_state
from .problem import SCHEMA_VERSION, InputError, Problem, load_problem
from .states import SeparableDecomposition, StateSet
from .tps import factorizations, local_algebra, reconstruct_qubits, svozil_partitions

COMMANDS = ("partitions", "recover", "tps", "classical", "check")
DIGITS = 10
TOP_CANDIDATES = 10


def jsonable(x: Any) -> Any:
    """Convert results to plain JSON types with rounded floats."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        v = round(float(x), DIGITS)
        return 0.0 if v == 0 else v
    if isinstance(x, (complex, np.complexfloating)):
        z = complex(x)
        return [jsonable(z.real), jsonable(z.imag)]
    if isinstance(x, Partition):
        return str(x)
    if isinstance(x, SeparableDecomposition):
        return {"terms": len(x), "error": jsonable(x.error)}
    if x is None or isinstance(x, str):
        return x
    return str(x)


def _require(prob: Problem, attr: str, field: str):
    val = getattr(prob, attr)
    if val is None or (isinstance(val, list) and not val):
        raise InputError(field, "missing field required by this command")
    return val


def cmd_partitions(prob: Problem, opts: dict) -> tuple[dict, list[str]]:
    states = _require(prob, "states", "states")
    tps = _require(prob, "tps", "tps")
    results, diags = [], []
    for st in states:
        pi = pi_of_state(st, tps, eps=opts["eps"], seed=opts["seed"], budget=opts["budget"])
        results.append({
            "state": st.name,
            "pi": [str(p) for p in pi.family],
            "maximal": [str(p) for p in pi.maximal],
            "undetermined": [str(p) for p in pi.undetermined],
            "verdicts": {str(p): v.value for p, v in pi.verdicts.items()},
        })
        diags.extend(f"{st.name}: partition {p} is undetermined" for p in pi.undetermined)
    return {"dims": list(tps.dims), "labels": list(tps.loci_labels), "states": results}, diags


def _qubits(rec) -> dict:
    return {"reason": rec.reason, "factor_dim": rec.factor_dim,
            "qubit_dims": list(rec.tps.dims) if rec else None,
            "partitions": [str(p) for p in rec.partitions.partitions] if rec else None}


def cmd_recover(prob: Problem, opts: dict) -> tuple[dict, list[str]]:
    states = _require(prob, "states", "states")
    catalog = _require(prob, "catalog", "catalog")
    mode, eps_rel = opts["mode"], opts["eps_rel"]
    pi = {st.name: [nm for nm, _ in pi_over_catalog(st, catalog, mode, eps_rel)] for st in states}
    rec = recover_loci(StateSet(states), catalog, mode, eps_rel)
    report = mps_report(rec.mps)
    for entry in report["loci"]:
        entry["qubits"] = _qubits(reconstruct_qubits(rec.mps.loci[entry["label"]]))
    return {
        "catalog": list(catalog.names),
        "pi": pi,
        "contributions": [list(c) for c in rec.contributions],
        "fallback": rec.fallback,
        "recovered": report,
        "provenance": rec.mps.provenance if not rec.fallback else "fallback",
    }, list(rec.diagnostics)


def cmd_tps(prob: Problem, opts: dict) -> tuple[dict, list[str]]:
    n = prob.n
    if n is None and prob.tps is not None:
        n = prob.tps.n
    if n is None:
        raise InputError("n", "missing field required by this command")
    facts = []
    for dims in factorizations(n):
        parts = svozil_partitions(dims)
        facts.append({"dims": list(dims),
                      "partitions": [str(p) for p in parts.partitions],
                      "independent": parts.is_independent()})
    out: dict[str, Any] = {"n": n, "factorizations": facts}
    if prob.tps is not None:
        t = prob.tps
        out["tps"] = {
            "dims": list(t.dims),
            "labels": list(t.loci_labels),
            "standard": t.is_standard,
            "loci": [{"label": t.loci_labels[i], "dim": local_algebra(t, i).dim}
                     for i in range(len(t.dims))],
        }
    return out, []


def cmd_classical(prob: Problem, opts: dict) -> tuple[dict, list[str]]:
    samples = _require(prob, "samples", "samples")
    diags = []
    out: dict[str, Any] = {"space_size": samples.space_size, "num_samples": len(samples)}
    if len(samples) >= 2:
        count, spec = pca_factor_count(samples, opts["tau"])
        out["pca"] = {"tau": opts["tau"], "count": count, "spectrum": spec}
    else:
        diags.append("PCA skipped: needs at least two samples")
    rec = recover_cps(samples, exact_tol=opts["exact_tol"], seed=opts["seed"])
    out["reason"] = rec.reason
    out["num_candidates"] = len(rec)
    out["num_exact"] = len(rec.exact)
    out["candidates"] = [{"dims": list(c.dims), "violation": c.violation,
                          "exact": c.violation <= rec.exact_tol,
                          "classes": [c.classes(f) for f in range(len(c.dims))]}
                         for c in rec.candidates[:TOP_CANDIDATES]]
    if rec.reason:
        diags.append(f"no candidate structures: {rec.reason}")
    return out, diags


def cmd_check(prob: Problem, opts: dict) -> tuple[dict, list[str]]:
    states = _require(prob, "states", "states")
    if prob.mps is not None:
        name, mps = prob.mps_name, prob.mps
    elif prob.catalog is not None:
        name, mps = prob.catalog.names[0], prob.catalog.members[0]
    else:
        raise InputError("mps", "missing field required by this command")
    want = opts.get("state")
    if want is None:
        st = states[0]
    else:
        found = [s for s in states if s.name == want]
        if not found:
            raise InputError("options.state", f"no state named {want!r}")
        st = found[0]
    res = separability_relation(st, mps, opts["mode"], opts["eps_rel"])
    return {"state": st.name, "mps": name, "mode": res.mode,
            "holds": res.holds, "verdict": "satisfied" if res.holds else "violated",
            "max_defect": res.max_defect, "witness": res.witness}, []


DRIVERS = {"partitions": cmd_partitions, "recover": cmd_recover, "tps": cmd_tps,
           "classical": cmd_classical, "check": cmd_check}


def resolve_options(prob: Problem, args: argparse.Namespace) -> dict:
    opts = {"eps": EPS, "eps_rel": EPS_REL, "tau": 0.01, "mode": "pairwise", "seed": 0,
            "budget": 200, "exact_tol": EXACT_TOL}
    opts.update(prob.options)
    for key in ("eps", "eps_rel", "tau", "mode", "seed"):
        val = getattr(args, key)
        if val is not None:
            opts[key] = val
    if not 0 < opts["tau"] < 1:
        raise InputError("options.tau", "expected a value in (0, 1)")
    return opts


def run(command: str, prob: Problem, opts: dict) -> dict:
    results, diags = DRIVERS[command](prob, opts)
    shown = {k: v for k, v in opts.items() if k != "state"}
    return jsonable({
        "schema_version": SCHEMA_VERSION,
        "tool": "locus-forge",
        "version": __version__,
        "command": command,
        "input_sha256": prob.digest,
        "options": shown,
        "results": results,
        "diagnostics": diags,
    })


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def render(report: dict) -> str:
    """Readable summary of a report."""
    cmd, res = report["command"], report["results"]
    lines = [f"locus-forge {report['version']} :: {cmd}"]
    if cmd == "partitions":
        lines.append(f"tps dims {res['dims']}")
        for s in res["states"]:
            lines.append(f"  {s['state']}: maximal {{{', '.join(s['maximal'])}}}"
                         f"  pi {{{', '.join(s['pi'])}}}")
            if s["undetermined"]:
                lines.append(f"    undetermined: {', '.join(s['undetermined'])}")
    elif cmd == "recover":
        for st, names in res["pi"].items():
            lines.append(f"  {st}: separable w.r.t. {names or 'nothing'}")
        lines.append("recovered loci:")
        for loc in res["recovered"]["loci"]:
            flag = " (degenerate)" if loc["degenerate"] else ""
            lines.append(f"  {loc['label']}: dim {loc['dim']}, centre {loc['center_dim']}, "
                         f"qubits {loc['qubits']['reason']}{flag}")
    elif cmd == "tps":
        lines.append(f"n = {res['n']}")
        for f in res["factorizations"]:
            lines.append(f"  {f['dims']}: {' ; '.join(f['partitions'])}")
        if "tps" in res:
            t = res["tps"]
            lines.append(f"tps {t['dims']} {'standard' if t['standard'] else 'twisted'}: "
                         + ", ".join(f"{l['label']} dim {l['dim']}" for l in t["loci"]))
    elif cmd == "classical":
        if "pca" in res:
            lines.append(f"pca components: {res['pca']['count']}")
        if res["reason"]:
            lines.append(f"no candidates: {res['reason']}")
        for c in res["candidates"][:3]:
            lines.append(f"  dims {c['dims']} violation {c['violation']:.3g} classes {c['classes']}")
    elif cmd == "check":
        lines.append(f"{res['state']} vs {res['mps']} ({res['mode']}): {res['verdict']}, "
                     f"max defect {res['max_defect']:.3g}")
        if res["witness"] is not None:
            lines.append("witness: " + json.dumps(res["witness"], sort_keys=True))
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="locus-forge", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--in", dest="input", required=True, help="problem file (JSON)")
    ap.add_argument("--out", help="write the machine-readable report here")
    ap.add_argument("--mode", choices=("pairwise", "multiway"))
    ap.add_argument("--eps", type=float)
    ap.add_argument("--eps-rel", dest="eps_rel", type=float)
    ap.add_argument("--tau", type=float)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        prob = load_problem(args.input)
        opts = resolve_options(prob, args)
        report = run(args.command, prob, opts)
    except OSError as exc:
        print(f"error: --in: {exc}", file=sys.stderr)
        return 2
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ClosureError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3
    except LocusForgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    sys.stdout.write(render(report))
    for d in report["diagnostics"]:
        print(f"warning: {d}", file=sys.stderr)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(dumps(report))
    return 0


if __name__ == "__main__":
    sys.exit(main())
