"""Command-line surface for the invariant / interferometry pipeline.

Subcommands:
  invariants    exact invariant families of a state file
  simulate      coincidence counts for one interferometer configuration
  nonlocality   M, f, E report via the direct, makhlin, jing, or estimated path
  verify        self-check of identities, oracle, and catalog on random states

Exit codes: 0 success, 2 bad input or usage, 3 insufficient statistics
or an unphysical estimated triple, 4 verification failure.

Every output file embeds the run manifest that produced it; wall-clock
time goes to stderr so reruns stay byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from . import catalog as catalog_mod
from . import diagrams, hom, invariants, nonlocality, pauli
from .errors import (CatalogError, InsufficientStatisticsError,
                     UnphysicalTripleError, UnresolvedTermError, ValidationError)


def _manifest(command, inputs, outputs, **extra):
    m = {"command": command,
         "package_version": __version__,
         "inputs": [str(p) for p in inputs],
         "outputs": [str(p) for p in outputs]}
    for k, v in extra.items():
        if v is not None:
            m[k] = v
    return m


def _emit(text, out_path):
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(os.fspath(out_path), "w", encoding="utf-8") as fh:
            fh.write(text)


def _load_coeffs(path):
    rho = pauli.read_state_file(path)
    return rho, pauli.coeffs_from_density(rho, validate=False)


# --- invariants -------------------------------------------------------------

_CANON_NAMES = {"makhlin": invariants.MAKHLIN_NAMES, "jing": invariants.JING_NAMES}


def cmd_invariants(args):
    _, t = _load_coeffs(args.state)
    families = ("makhlin", "jing") if args.family == "both" else (args.family,)
    vecs = {}
    for fam in families:
        fn = invariants.makhlin_invariants if fam == "makhlin" else invariants.jing_invariants
        vecs[fam] = fn(t)

    outputs = ["-"] if args.out is None else [args.out + ".json", args.out + ".csv"]
    manifest = _manifest("invariants", [args.state], outputs, family=args.family)
    if len(vecs) == 1:
        payload = {**next(iter(vecs.values())).to_json(), "manifest": manifest}
    else:
        payload = {"family": "both", "manifest": manifest}
        payload.update({fam: vec.to_json() for fam, vec in vecs.items()})

    csv_lines = ["# manifest: " + json.dumps(manifest, sort_keys=True), "family,name,value"]
    for fam, vec in vecs.items():
        for name in _CANON_NAMES[fam]:
            csv_lines.append(f"{fam},{name},{vec.values[name]!r}")

    if args.out is None:
        sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    else:
        _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out + ".json")
        _emit("\n".join(csv_lines) + "\n", args.out + ".csv")
    return 0


# --- simulate ---------------------------------------------------------------

def cmd_simulate(args):
    cat = catalog_mod.load_catalog(args.catalog)
    configs = hom.build_configs(cat)
    rho, _ = _load_coeffs(args.state)
    table = hom.sample_events(configs[args.config], rho, args.events, args.seed,
                              state_id=os.path.basename(args.state))
    outputs = ["-"] if args.out is None else [args.out]
    table.manifest.update(_manifest("simulate", [args.state], outputs,
                                    seed=args.seed, events=args.events,
                                    catalog_version=cat.version))
    _emit(hom.format_count_table(table), args.out)
    return 0


# --- nonlocality ------------------------------------------------------------

def _infer_family(tables):
    names = {t.config for t in tables}
    local_only = "fig6" in names
    nonlocal_trio = any(n.startswith("fig7") for n in names)
    if local_only and not nonlocal_trio:
        return "jing"
    if nonlocal_trio and not local_only:
        return "makhlin"
    raise ValidationError(
        "cannot infer the invariant family from these configurations; pass --family")


def cmd_nonlocality(args):
    outputs = ["-"] if args.out is None else [args.out]
    if args.path == "estimated":
        if not args.counts:
            raise ValidationError("the estimated path needs count-table CSV files as arguments")
        cat = catalog_mod.load_catalog(args.catalog)
        tables = [hom.read_count_table(p) for p in args.counts]
        family = args.family if args.family in ("makhlin", "jing") else _infer_family(tables)
        vec = hom.estimated_invariants(tables, family, cat)
        triple_names = ("I1", "I2", "I3") if family == "makhlin" else ("J1", "J2", "J3")
        missing = [n for n in triple_names if n not in vec.values]
        if missing:
            raise ValidationError(
                f"count tables do not determine {', '.join(missing)}; "
                f"the {family} path needs "
                + ("fig5-top, fig5-bottom and the fig7 configurations"
                   if family == "makhlin" else "fig5-top, fig5-bottom and fig6"))
        state_ids = {t.manifest.get("state_id") for t in tables}
        state_id = state_ids.pop() if len(state_ids) == 1 else None
        report = nonlocality.report_from_invariants(vec, state_id=state_id)
        manifest = _manifest("nonlocality", list(args.counts), outputs,
                             path="estimated", family=family, catalog_version=cat.version)
    else:
        if args.state is None:
            raise ValidationError(f"the {args.path} path needs --state")
        _, t = _load_coeffs(args.state)
        state_id = os.path.basename(args.state)
        if args.path == "direct":
            report = nonlocality.report_from_coeffs(t, state_id=state_id)
        else:
            fn = (invariants.makhlin_invariants if args.path == "makhlin"
                  else invariants.jing_invariants)
            report = nonlocality.report_from_invariants(fn(t), state_id=state_id)
        manifest = _manifest("nonlocality", [args.state], outputs, path=args.path)
    report["manifest"] = manifest
    _emit(json.dumps(report, indent=2, sort_keys=True) + "\n", args.out)
    return 0


# --- verify -----------------------------------------------------------------

def cmd_verify(args):
    failures = []
    cat = catalog_mod.load_catalog(args.catalog)
    n = args.n_states
    print(f"identity residuals over {n} states (seed {args.seed}):")
    rhos = [pauli.random_state(args.seed, "mixed-ginibre", stream=k) for k in range(n)]
    coeffs = [pauli.coeffs_from_density(r) for r in rhos]
    worst = {name: 0.0 for name in invariants.IDENTITIES}
    for t in coeffs:
        labels = catalog_mod.evaluate_catalog(cat, t)
        direct = {**invariants.makhlin_invariants(t).values,
                  **invariants.jing_invariants(t).values}
        for name in invariants.IDENTITIES:
            res = abs(invariants.identity_value(name, labels) - direct[name])
            worst[name] = max(worst[name], res)
    for name, res in worst.items():
        ok = res <= 1e-9
        print(f"  {name:>4s}  {res:.3e}" + ("" if ok else "  FAIL"))
        if not ok:
            lab = ", ".join(invariants.IDENTITIES[name].labels)
            failures.append(f"identity {name} (labels {lab}) residual {res:.3e}")

    small = [lab for lab in catalog_mod.LABELS if cat[lab].n_copies <= 4]
    n_oracle = min(n, 20)
    worst_oracle = 0.0
    for rho, t in zip(rhos[:n_oracle], coeffs[:n_oracle]):
        for lab in small:
            d = cat[lab]
            worst_oracle = max(worst_oracle, abs(diagrams.contract(d, t) - diagrams.dense_value(d, rho)))
    print(f"oracle equivalence ({len(small)} diagrams <= 4 copies, {n_oracle} states): "
          f"worst {worst_oracle:.3e}")
    if worst_oracle > 1e-10:
        failures.append(f"contraction vs dense oracle residual {worst_oracle:.3e}")

    n_lu = min(n, 50)
    worst_lu = 0.0
    for k, (rho, t) in enumerate(zip(rhos[:n_lu], coeffs[:n_lu])):
        ua, ub = pauli.random_local_unitary(args.seed + 1, stream=k)
        t2 = pauli.coeffs_from_density(pauli.apply_local_unitary(rho, ua, ub), validate=False)
        v1 = {**invariants.makhlin_invariants(t).values, **invariants.jing_invariants(t).values}
        v2 = {**invariants.makhlin_invariants(t2).values, **invariants.jing_invariants(t2).values}
        worst_lu = max(worst_lu, max(abs(v1[k2] - v2[k2]) for k2 in v1))
    print(f"local-unitary invariance ({n_lu} pairs): worst {worst_lu:.3e}")
    if worst_lu > 1e-10:
        failures.append(f"local-unitary invariance residual {worst_lu:.3e}")

    w_sum = sum(hom.w_config_operator(i) for i in range(3))
    w_assembly = float(np.max(np.abs(hom.w_levi_civita() - w_sum)))
    w_sq = hom.w_squared_residual()
    xyz = hom.w_observable_direct(hom.product_state(*np.eye(3)))
    print(f"W assembly residual {w_assembly:.3e}; W^2 - 8 sum(P-) residual {w_sq:.3e}; "
          f"<W> on (x,y,z) product {xyz:+.3f}")
    if w_assembly > 1e-12 or w_sq > 1e-12 or abs(xyz - 1) > 1e-12:
        failures.append("W observable structure checks failed")

    if failures:
        print("FAIL:")
        for f in failures:
            print("  " + f)
        return 4
    print("PASS")
    return 0


# --- parser -----------------------------------------------------------------

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="hominv",
        description="Two-qubit local-unitary invariants via simulated "
                    "Hong-Ou-Mandel interferometry.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_inv = sub.add_parser("invariants", help="exact invariant families of a state file")
    p_inv.add_argument("--state", required=True, help="state JSON file")
    p_inv.add_argument("--family", choices=("makhlin", "jing", "both"), default="both")
    p_inv.add_argument("--out", help="output basename; writes <out>.json and <out>.csv")
    p_inv.set_defaults(func=cmd_invariants)

    p_sim = sub.add_parser("simulate", help="sample coincidence counts for one configuration")
    p_sim.add_argument("--state", required=True, help="state JSON file")
    p_sim.add_argument("--config", required=True, choices=hom.CONFIG_ORDER)
    p_sim.add_argument("--events", type=int, default=100_000)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", help="count-table CSV path (default stdout)")
    p_sim.add_argument("--catalog", help="catalog JSON path (else HOMINV_CATALOG, else packaged)")
    p_sim.set_defaults(func=cmd_simulate)

    p_non = sub.add_parser("nonlocality", help="M, f, E report for a state or count tables")
    p_non.add_argument("counts", nargs="*", help="count-table CSVs (estimated path)")
    p_non.add_argument("--path", choices=("direct", "makhlin", "jing", "estimated"),
                       default="direct")
    p_non.add_argument("--state", help="state JSON file (direct/makhlin/jing paths)")
    p_non.add_argument("--family", choices=("makhlin", "jing"),
                       help="triple family for the estimated path (default: infer)")
    p_non.add_argument("--out", help="report JSON path (default stdout)")
    p_non.add_argument("--catalog", help="catalog JSON path (else HOMINV_CATALOG, else packaged)")
    p_non.set_defaults(func=cmd_nonlocality)

    p_ver = sub.add_parser("verify", help="run the identity / oracle / catalog self-checks")
    p_ver.add_argument("n_states", nargs="?", type=int, default=200)
    p_ver.add_argument("--seed", type=int, default=7)
    p_ver.add_argument("--catalog", help="catalog JSON path (else HOMINV_CATALOG, else packaged)")
    p_ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "verify" and args.n_states <= 0:
        parser.error("n_states must be positive")
    t0 = time.perf_counter()
    try:
        return args.func(args)
    except InsufficientStatisticsError as exc:
        print(f"error: insufficient statistics: {exc}", file=sys.stderr)
        return 3
    except UnphysicalTripleError as exc:
        print(f"error: unphysical invariant triple: {exc}", file=sys.stderr)
        return 3
    except (ValidationError, CatalogError, UnresolvedTermError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    finally:
        print(f"wall-clock: {time.perf_counter() - t0:.3f} s", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
