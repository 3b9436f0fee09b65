"""The catalogue of named diagram shapes and its resolution.

Eighteen singlet-projection diagrams carry names used throughout the
package: open chains of same-side projectors c1..c9 (1..6 projectors),
closed loops l1, l2, l3 (2, 4, 6 projectors), the one-copy loop l0, and
the crossed variants cbar1..cbar3 (chains of A-to-B projectors) and
lbar1, lbar2 (closed crossed chains).

Which concrete edge list belongs to which name is not hardcoded: it is
*resolved* by demanding that the registered invariant identities hold
on a battery of validation states.  Within each shape family only a few
candidates exist (e.g. the two endpoint orientations of a chain), and
each resolution step pins one label using previously pinned ones.  The
result ships as ``data/catalog.json``; ``resolve_catalog`` reproduces
it from scratch and the test suite checks that it does.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import diagrams, invariants, pauli
from .diagrams import Diagram
from .errors import CatalogError, ValidationError

__all__ = [
    "LABELS",
    "Catalog",
    "resolve_catalog",
    "default_validation_states",
    "load_catalog",
    "save_catalog",
    "evaluate_catalog",
]

LABELS = ("c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8", "c9",
          "l0", "l1", "l2", "l3",
          "cbar1", "cbar2", "cbar3", "lbar1", "lbar2")

ENV_VAR = "HOMINV_CATALOG"
FORMAT = "hominv-catalog"
VERSION = 1


@dataclass
class Catalog:
    diagrams: dict
    pinned_by: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)
    version: int = VERSION

    def __post_init__(self):
        missing = [lab for lab in LABELS if lab not in self.diagrams]
        if missing:
            raise CatalogError(f"catalog is missing labels {missing}")

    def __getitem__(self, label):
        try:
            return self.diagrams[label]
        except KeyError:
            raise CatalogError(f"unknown diagram label {label!r}") from None


def evaluate_catalog(catalog, t, *, clamp=True):
    """Contract every catalogued diagram on one coefficient matrix."""
    return {lab: diagrams.contract(catalog[lab], t, clamp=clamp) for lab in LABELS}


# --- resolution ---------------------------------------------------------

def _chain_candidates(n_edges):
    if n_edges == 1:
        return [diagrams.chain("A"), diagrams.chain("B")]
    return [diagrams.chain(diagrams.alternating_sides(n_edges, first))
            for first in ("A", "B")]


def _loop_candidates(n_edges):
    return [diagrams.loop(diagrams.alternating_sides(n_edges, first))
            for first in ("A", "B")]


def _cross_chain_candidates(n_edges):
    return [diagrams.cross_chain(n_edges), diagrams.cross_chain(n_edges, flipped=True)]


def _cross_loop_candidates(n_edges):
    return [diagrams.cross_loop(n_edges), diagrams.cross_loop(n_edges, flipped=True)]


_CANDIDATES = {
    "c1": lambda: _chain_candidates(1), "c2": lambda: _chain_candidates(1),
    "c3": lambda: _chain_candidates(2),
    "c4": lambda: _chain_candidates(3), "c5": lambda: _chain_candidates(3),
    "c6": lambda: _chain_candidates(4),
    "c7": lambda: _chain_candidates(5), "c8": lambda: _chain_candidates(5),
    "c9": lambda: _chain_candidates(6),
    "l0": lambda: _cross_loop_candidates(1),
    "l1": lambda: _loop_candidates(2),
    "l2": lambda: _loop_candidates(4),
    "l3": lambda: _loop_candidates(6),
    "cbar1": lambda: _cross_chain_candidates(1),
    "cbar2": lambda: _cross_chain_candidates(2),
    "cbar3": lambda: _cross_chain_candidates(3),
    "lbar1": lambda: _cross_loop_candidates(2),
    "lbar2": lambda: _cross_loop_candidates(3),
}

# one label pinned per step; later steps read earlier assignments
_STEPS = [
    ("c2", "I4"), ("c1", "I7"), ("l1", "I2"), ("c3", "I12"),
    ("c5", "I5"), ("c4", "I8"), ("l2", "I3"), ("c6", "I13"),
    ("c8", "I6"), ("c7", "I9"), ("l3", "J3"), ("c9", "J12"),
    # the crossed family enters only through I1 and I14; resolve the
    # labels I1 reads jointly, then cbar3 from I14
    (("l0", "cbar1", "cbar2", "lbar1", "lbar2"), "I1"),
    ("cbar3", "I14"),
]


def default_validation_states(count=60, seed=515):
    """Mixed bag of generic and structured states for pinning the catalog."""
    if count < 50:
        raise ValidationError(f"need at least 50 validation states, got {count}")
    rhos = [pauli.random_state(seed, "mixed-ginibre", stream=i) for i in range(count - 10)]
    rhos += [pauli.random_state(seed, "pure-haar", stream=1000 + i) for i in range(7)]
    rhos += [pauli.singlet(), pauli.maximally_mixed(), pauli.werner(0.5)]
    return rhos


def _invariant_lhs(name, t):
    vec = invariants.makhlin_invariants(t) if name.startswith("I") else invariants.jing_invariants(t)
    return vec.values[name]


def _pick_canonical(survivors):
    keyed = sorted(survivors, key=lambda d: d.canonical_key())
    return keyed[0]


def resolve_catalog(validation_states=None, *, tol=1e-9):
    """Pin every catalogue label by identity constraints.

    validation_states: >= 50 density matrices.  Every candidate diagram
    for a label is kept only if the label's pinning identity holds on
    all of them within ``tol``; several surviving candidates must agree
    as polynomials (checked on probe states), otherwise the constraint
    system is inconsistent and a :class:`CatalogError` is raised.
    """
    if validation_states is None:
        validation_states = default_validation_states()
    if len(validation_states) < 50:
        raise ValidationError(f"need at least 50 validation states, got {len(validation_states)}")

    coeffs = [pauli.coeffs_from_density(r) for r in validation_states]
    probes = diagrams.probe_coeffs()
    resolved = {}
    pinned_by = {}
    notes = {}

    def values_for(diagram):
        return [diagrams.contract(diagram, t, clamp=False) for t in coeffs]

    cache = {}

    def cached_values(diagram):
        key = diagram.canonical_key()
        if key not in cache:
            cache[key] = values_for(diagram)
        return cache[key]

    for labels, identity_name in _STEPS:
        single = isinstance(labels, str)
        group = (labels,) if single else labels
        ident = invariants.IDENTITIES[identity_name]
        lhs = [_invariant_lhs(identity_name, t) for t in coeffs]

        candidate_lists = [_CANDIDATES[lab]() for lab in group]
        # cartesian product over the group (tiny: at most 2^5 combos)
        combos = [()]
        for cl in candidate_lists:
            combos = [c + (d,) for c in combos for d in cl]

        missing = [lab for lab in ident.labels if lab not in group and lab not in resolved]
        if missing:
            raise CatalogError(f"identity {identity_name} needs {missing} before step for {group}")
        fixed_series = {lab: cached_values(resolved[lab])
                        for lab in ident.labels if lab in resolved}

        survivors = []
        for combo in combos:
            series = dict(fixed_series)
            series.update((lab, cached_values(d)) for lab, d in zip(group, combo))
            ok = True
            for k in range(len(coeffs)):
                env = {lab: series[lab][k] for lab in ident.labels}
                if abs(lhs[k] - ident.rhs(env)) > tol:
                    ok = False
                    break
            if ok:
                survivors.append(combo)

        if not survivors:
            raise CatalogError(
                f"no candidate assignment for {group} satisfies identity {identity_name}")
        # all surviving assignments must be the same polynomials
        first = survivors[0]
        for other in survivors[1:]:
            for d1, d2 in zip(first, other):
                if not diagrams.same_value(d1, d2, probes):
                    raise CatalogError(
                        f"identity {identity_name} leaves {group} ambiguous between "
                        f"inequivalent diagrams {d1} and {d2}")
        for idx, lab in enumerate(group):
            variants = {c[idx] for c in survivors}
            resolved[lab] = _pick_canonical(variants)
            pinned_by[lab] = identity_name
            if len(variants) > 1:
                notes[lab] = (f"{len(variants)} equivalent orientations satisfy "
                              f"{identity_name}; canonical edge order kept")
    return Catalog(resolved, pinned_by, notes)


# --- persistence --------------------------------------------------------

def _diagram_to_json(d):
    return {"n_copies": d.n_copies,
            "edges": [[[c, s] for (c, s) in e] for e in d.edges]}


def _diagram_from_json(obj, label):
    try:
        edges = tuple(tuple((int(c), str(s)) for (c, s) in e) for e in obj["edges"])
        return Diagram(int(obj["n_copies"]), edges)
    except (KeyError, TypeError, ValueError, ValidationError) as exc:
        raise CatalogError(f"catalog entry for {label!r} is malformed: {exc}") from exc


def save_catalog(path, catalog):
    payload = {
        "format": FORMAT,
        "version": catalog.version,
        "labels": {
            lab: dict(_diagram_to_json(catalog.diagrams[lab]),
                      pinned_by=catalog.pinned_by.get(lab),
                      note=catalog.notes.get(lab))
            for lab in LABELS
        },
    }
    with open(os.fspath(path), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_catalog(payload, origin):
    if not isinstance(payload, dict) or payload.get("format") != FORMAT:
        raise CatalogError(f"{origin} is not a diagram catalog file")
    if payload.get("version") != VERSION:
        raise CatalogError(f"{origin} has unsupported catalog version {payload.get('version')!r}")
    labels = payload.get("labels")
    if not isinstance(labels, dict):
        raise CatalogError(f"{origin} carries no labels table")
    diags = {}
    pinned = {}
    notes = {}
    for lab, obj in labels.items():
        diags[lab] = _diagram_from_json(obj, lab)
        if obj.get("pinned_by"):
            pinned[lab] = obj["pinned_by"]
        if obj.get("note"):
            notes[lab] = obj["note"]
    return Catalog(diags, pinned, notes, version=payload["version"])


def load_catalog(path=None):
    """Load a catalog: explicit path, else $HOMINV_CATALOG, else packaged."""
    if path is None:
        path = os.environ.get(ENV_VAR) or None
    if path is not None:
        try:
            with open(os.fspath(path), "r", encoding="utf-8") as fh:
                payload = json.load(fh)
        except OSError as exc:
            raise CatalogError(f"cannot read catalog {path!r}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise CatalogError(f"catalog {path!r} is not valid JSON: {exc}") from exc
        return _parse_catalog(payload, f"catalog {path!r}")
    ref = resources.files("hominv").joinpath("data/catalog.json")
    try:
        payload = json.loads(ref.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise CatalogError("packaged catalog data/catalog.json is missing") from exc
    except json.JSONDecodeError as exc:
        raise CatalogError(f"packaged catalog is not valid JSON: {exc}") from exc
    return _parse_catalog(payload, "packaged catalog")
