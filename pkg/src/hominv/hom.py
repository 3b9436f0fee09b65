"""Interferometric measurement of diagram values by coincidence counting.

Copies of a polarization-encoded two-qubit state enter a fixed optical
network; photon pairs meet pairwise on beam splitters, one beam splitter
per diagram edge, each watched by a detector module that reports
anticoalescence ('a': one photon in each output, the singlet component)
or coalescence ('c').  A run of n_events independent state preparations
therefore yields counts over the 2^m joint patterns; the probability of
"all of subset S anticoalesced, the rest anything" equals the value of
the sub-diagram with edges S, which is how the catalogued chain and
loop values are estimated from marginal count fractions.

The module also carries the handedness observable W: the three-qubit
operator sum_{ijk} e_{ijk} sigma_i x sigma_j x sigma_k whose expectation
on product states is the determinant of the three Bloch vectors.  It
splits exactly into three two-body-plus-sigma_z pieces
w_{(k,l),m} = (sigma_x^k sigma_y^l - sigma_y^k sigma_x^l) sigma_z^m,
each with spectrum {+2, -2, 0}, measured here as a three-outcome POVM;
W^2 equals 8 times the sum of the three pairwise singlet projectors.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import catalog as catalog_mod
from . import diagrams, invariants, pauli
from .errors import (InsufficientStatisticsError, ValidationError)

__all__ = [
    "MeasurementConfig",
    "CONFIG_ORDER",
    "build_configs",
    "CountTable",
    "sample_events",
    "format_count_table",
    "write_count_table",
    "read_count_table",
    "interpret_config",
    "LabelEstimate",
    "estimate_diagram_values",
    "estimated_invariants",
    "w_levi_civita",
    "w_config_operator",
    "W_CONFIGS",
    "W_DETECTION_TRIPLES",
    "product_state",
    "w_observable_direct",
    "w_squared_residual",
    "WCircuitResult",
    "w_via_circuit",
]

_CONFIG_SPECS = (
    ("fig5-top", "l1", ("Da1", "Db1")),
    ("fig5-bottom", "l2", ("Da2", "Da3", "Db2", "Db3")),
    ("fig6", "l3", ("Da1", "Da2", "Da3", "Db1", "Db2", "Db3")),
    ("fig7-l0", "l0", ("D01",)),
    ("fig7-lbar1", "lbar1", ("D11", "D12")),
    ("fig7-lbar2", "lbar2", ("D21", "D22", "D23")),
)

CONFIG_ORDER = tuple(name for name, _, _ in _CONFIG_SPECS)

_CONFIG_STREAM = {name: i + 1 for i, (name, _, _) in enumerate(_CONFIG_SPECS)}


@dataclass(frozen=True)
class MeasurementConfig:
    """One interferometer: a diagram whose edges follow detector order."""

    name: str
    diagram: diagrams.Diagram
    detectors: tuple
    label: str

    def __post_init__(self):
        if len(self.detectors) != self.diagram.n_edges:
            raise ValidationError(
                f"config {self.name}: {len(self.detectors)} detectors for "
                f"{self.diagram.n_edges} beam splitters")


def _detector_edge_order(diagram):
    # same-side networks list Alice's beam splitters first, then Bob's;
    # crossed networks keep the catalogued order
    if any(e[0][1] != e[1][1] for e in diagram.edges):
        return diagram.edges
    a = sorted(e for e in diagram.edges if e[0][1] == "A")
    b = sorted(e for e in diagram.edges if e[0][1] == "B")
    return tuple(a + b)


def build_configs(cat=None):
    """Measurement configurations over a diagram catalog (default packaged)."""
    if cat is None:
        cat = catalog_mod.load_catalog()
    out = {}
    for name, label, detectors in _CONFIG_SPECS:
        base = cat[label]
        ordered = diagrams.Diagram(base.n_copies, _detector_edge_order(base))
        out[name] = MeasurementConfig(name, ordered, detectors, label)
    return out


@dataclass
class CountTable:
    """Joint anticoalescence/coalescence counts for one configuration."""

    config: str
    detectors: tuple
    counts: dict
    seed: Optional[int] = None
    manifest: dict = field(default_factory=dict)

    def __post_init__(self):
        m = len(self.detectors)
        want = {self.pattern_string(mask, m) for mask in range(2 ** m)}
        got = set(self.counts)
        if got != want:
            raise ValidationError(
                f"count table for {self.config} must list all {2 ** m} patterns; "
                f"missing {sorted(want - got)[:4]}, extra {sorted(got - want)[:4]}")
        for k, v in self.counts.items():
            if not isinstance(v, int) or v < 0:
                raise ValidationError(f"count for pattern {k!r} must be a nonnegative integer, got {v!r}")

    @staticmethod
    def pattern_string(mask, m):
        return "".join("a" if mask >> i & 1 else "c" for i in range(m))

    @property
    def n_events(self):
        return sum(self.counts.values())

    def anti_fraction(self, positions):
        """Fraction of events where every listed detector saw anticoalescence."""
        z = self.n_events
        if z == 0:
            raise InsufficientStatisticsError(f"count table for {self.config} holds no events")
        hits = sum(v for k, v in self.counts.items()
                   if all(k[i] == "a" for i in positions))
        return hits / z, z


def sample_events(config, rho, n_events, seed, *, state_id=None):
    """Simulate one run: multinomial counts over all joint patterns.

    Reproducible by construction: one counter-based generator keyed on
    (seed, configuration), one multinomial draw.
    """
    if not isinstance(n_events, int) or n_events < 0:
        raise ValidationError(f"n_events must be a nonnegative integer, got {n_events!r}")
    t = pauli.coeffs_from_density(rho)
    probs = diagrams.pattern_probabilities(config.diagram, t)
    probs = probs / probs.sum()
    key = np.array([seed, _CONFIG_STREAM.get(config.name, 101)], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    draws = rng.multinomial(n_events, probs)
    m = config.diagram.n_edges
    counts = {CountTable.pattern_string(mask, m): int(draws[mask]) for mask in range(2 ** m)}
    manifest = {
        "config": config.name,
        "detectors": list(config.detectors),
        "n_events": n_events,
        "seed": int(seed),
        "version": 1,
    }
    if state_id is not None:
        manifest["state_id"] = str(state_id)
    return CountTable(config.name, config.detectors, counts, int(seed), manifest)


def format_count_table(table) -> str:
    lines = ["# manifest: " + json.dumps(table.manifest, sort_keys=True)]
    lines.append(",".join(table.detectors) + ",count")
    for pattern in sorted(table.counts):
        lines.append(",".join(pattern) + f",{table.counts[pattern]}")
    return "\n".join(lines) + "\n"


def write_count_table(path, table):
    with open(os.fspath(path), "w", encoding="utf-8") as fh:
        fh.write(format_count_table(table))


def read_count_table(path):
    with open(os.fspath(path), "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("# manifest:"):
        raise ValidationError(f"{path}: first line must be the '# manifest:' header")
    try:
        manifest = json.loads(lines[0].split(":", 1)[1])
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: manifest is not valid JSON: {exc}") from exc
    header = lines[1].split(",")
    if header[-1] != "count" or len(header) < 2:
        raise ValidationError(f"{path}: header must end with a 'count' column")
    detectors = tuple(header[:-1])
    counts = {}
    for ln in lines[2:]:
        cells = ln.split(",")
        if len(cells) != len(header):
            raise ValidationError(f"{path}: row {ln!r} does not match the header")
        pattern = "".join(cells[:-1])
        if set(pattern) - {"a", "c"}:
            raise ValidationError(f"{path}: pattern cells must be 'a' or 'c', got {pattern!r}")
        try:
            counts[pattern] = int(cells[-1])
        except ValueError as exc:
            raise ValidationError(f"{path}: count {cells[-1]!r} is not an integer") from exc
    config = manifest.get("config")
    if not isinstance(config, str):
        raise ValidationError(f"{path}: manifest lacks the configuration name")
    return CountTable(config, detectors, counts, manifest.get("seed"), manifest)


# --- reading diagram values out of count tables --------------------------

def _connected(diagram):
    edges = diagram.edges
    if not edges:
        return False
    adj = {}
    for (p, q) in edges:
        adj.setdefault(p[0], set()).add(q[0])
        adj.setdefault(q[0], set()).add(p[0])
    seen = set()
    stack = [edges[0][0][0]]
    while stack:
        c = stack.pop()
        if c in seen:
            continue
        seen.add(c)
        stack.extend(adj.get(c, ()))
    return seen == set(adj)


def _components(diagram):
    adj = {}
    for (p, q) in diagram.edges:
        adj.setdefault(p[0], set()).add(q[0])
        adj.setdefault(q[0], set()).add(p[0])
    seen = set()
    comps = []
    for start in sorted(adj):
        if start in seen:
            continue
        comp = set()
        stack = [start]
        while stack:
            c = stack.pop()
            if c in comp:
                continue
            comp.add(c)
            stack.extend(adj[c])
        seen |= comp
        comps.append(comp)
    return comps


_interpret_cache = {}


def interpret_config(config, cat):
    """Name the marginal watched by every detector subset.

    Returns {mask: tuple of catalog labels}, one label per connected
    component of the sub-diagram (a single-label tuple is a direct
    estimate of that diagram; several labels mean the marginal measures
    their product and serves as a consistency check).
    """
    fingerprint = (config.name, config.diagram.canonical_key(),
                   tuple(sorted((lab, cat[lab].canonical_key()) for lab in catalog_mod.LABELS)))
    if fingerprint in _interpret_cache:
        return _interpret_cache[fingerprint]
    probes = diagrams.probe_coeffs()
    by_count = {}
    for lab in catalog_mod.LABELS:
        by_count.setdefault(cat[lab].n_edges, []).append(lab)
    out = {}
    m = config.diagram.n_edges
    for mask in range(1, 2 ** m):
        sub = config.diagram.subdiagram(mask)
        names = []
        for comp in _components(sub):
            comp_edges = tuple(e for e in sub.edges if e[0][0] in comp)
            comp_diag = diagrams.Diagram(sub.n_copies, comp_edges)
            found = None
            for lab in by_count.get(len(comp_edges), ()):
                if diagrams.same_value(comp_diag, cat[lab], probes):
                    found = lab
                    break
            names.append(found if found else "?")
        out[mask] = tuple(sorted(names))
    _interpret_cache[fingerprint] = out
    return out


@dataclass
class LabelEstimate:
    label: str
    value: float
    sigma: float
    config: str
    detectors: tuple
    n_events: int


def estimate_diagram_values(tables, cat=None):
    """Estimate every catalogued value reachable from the given count tables.

    For each label the first configuration (in CONFIG_ORDER) carrying a
    connected detector subset whose sub-diagram equals that label's
    polynomial is used; the estimate is the marginal anticoalescence
    fraction with its binomial standard error.
    """
    if cat is None:
        cat = catalog_mod.load_catalog()
    configs = build_configs(cat)
    by_name = {}
    for table in tables:
        if table.config not in configs:
            raise ValidationError(f"unknown configuration {table.config!r} in count table")
        if table.config in by_name:
            raise ValidationError(f"two count tables given for configuration {table.config!r}")
        want = configs[table.config].detectors
        if tuple(table.detectors) != want:
            raise ValidationError(
                f"count table for {table.config} lists detectors {table.detectors}, expected {want}")
        by_name[table.config] = table

    out = {}
    for name in CONFIG_ORDER:
        if name not in by_name:
            continue
        table = by_name[name]
        config = configs[name]
        meaning = interpret_config(config, cat)
        m = config.diagram.n_edges
        for mask in sorted(range(1, 2 ** m), key=lambda x: (x.bit_count(), x)):
            labels = meaning[mask]
            if len(labels) != 1 or labels[0] == "?":
                continue
            lab = labels[0]
            if lab in out:
                continue
            positions = [i for i in range(m) if mask >> i & 1]
            value, z = table.anti_fraction(positions)
            sigma = (value * (1 - value) / z) ** 0.5
            out[lab] = LabelEstimate(lab, value, sigma, name,
                                     tuple(config.detectors[i] for i in positions), z)
    return out


def estimated_invariants(tables, family, cat=None):
    """Invariant vector assembled from count tables via the identities.

    Only invariants whose identity labels were all estimated appear in
    the result; uncertainties are propagated label-wise.
    """
    if family not in ("makhlin", "jing"):
        raise ValidationError(f"family must be 'makhlin' or 'jing', got {family!r}")
    estimates = estimate_diagram_values(tables, cat)
    values = {lab: e.value for lab, e in estimates.items()}
    sigmas = {lab: e.sigma for lab, e in estimates.items()}
    names = invariants.MAKHLIN_NAMES if family == "makhlin" else invariants.JING_NAMES
    vals = {}
    uncs = {}
    for name in names:
        ident = invariants.IDENTITIES.get(name)
        if ident is None or any(lab not in values for lab in ident.labels):
            continue
        vals[name] = invariants.identity_value(name, values)
        uncs[name] = invariants.identity_sigma(name, values, sigmas)
    return invariants.InvariantVector(family, vals, source="estimated", uncertainty=uncs)


# --- the handedness observable W -----------------------------------------

W_CONFIGS = (((0, 1), 2), ((1, 2), 0), ((2, 0), 1))

# Detector triples of the two-channel polarization analysis that register
# each sign of w_{(k,l),m}; the third-qubit analyzer is labelled m.
W_DETECTION_TRIPLES = {
    +1: (("DV,k", "DH,k", "DV,m"), ("DV,l", "DH,l", "DV,m"),
         ("DV,k", "DH,l", "DH,m"), ("DH,k", "DV,l", "DV,m")),
    -1: (("DV,k", "DH,k", "DH,m"), ("DV,l", "DH,l", "DH,m"),
         ("DV,k", "DH,l", "DV,m"), ("DH,k", "DV,l", "DH,m")),
}


def _kron3(m0, m1, m2):
    return np.kron(np.kron(m0, m1), m2)


def w_config_operator(index):
    """The 8x8 piece w_{(k,l),m} for cyclic configuration ``index``."""
    (k, l), m = W_CONFIGS[index]
    x, y, z = pauli.SIGMA[1], pauli.SIGMA[2], pauli.SIGMA[3]
    slots = [None, None, None]
    slots[k], slots[l], slots[m] = x, y, z
    term1 = _kron3(*slots)
    slots[k], slots[l] = y, x
    term2 = _kron3(*slots)
    return term1 - term2


def w_levi_civita():
    """sum_{ijk} e_{ijk} sigma_i x sigma_j x sigma_k, assembled term by
    term from the permutation signs; equal to the sum of the three
    configuration pieces, which is checked rather than assumed."""
    out = np.zeros((8, 8), dtype=complex)
    for (i, j, k), sign in (((1, 2, 3), 1), ((2, 3, 1), 1), ((3, 1, 2), 1),
                            ((1, 3, 2), -1), ((3, 2, 1), -1), ((2, 1, 3), -1)):
        out += sign * _kron3(pauli.SIGMA[i], pauli.SIGMA[j], pauli.SIGMA[k])
    return out


def product_state(a, b, c):
    """Three-qubit product density matrix from three Bloch vectors."""
    out = np.array([[1.0]], dtype=complex)
    for v in (a, b, c):
        v = np.asarray(v, dtype=float)
        if v.shape != (3,):
            raise ValidationError(f"Bloch vector must have 3 components, got shape {v.shape}")
        if v @ v > 1 + 1e-12:
            raise ValidationError(f"Bloch vector must have length <= 1, got |v| = {(v @ v) ** 0.5:.6f}")
        rho1 = (pauli.SIGMA[0] + v[0] * pauli.SIGMA[1] + v[1] * pauli.SIGMA[2] + v[2] * pauli.SIGMA[3]) / 2
        out = np.kron(out, rho1)
    return out


def _check_rho3(rho3):
    rho3 = np.asarray(rho3, dtype=complex)
    if rho3.shape != (8, 8):
        raise ValidationError(f"three-qubit state must be 8x8, got shape {rho3.shape}")
    if np.max(np.abs(rho3 - rho3.conj().T)) > 1e-10 or abs(np.trace(rho3) - 1) > 1e-10:
        raise ValidationError("three-qubit state must be Hermitian with unit trace")
    return rho3


def w_observable_direct(rho3):
    """Exact expectation of the handedness observable."""
    return float(np.trace(w_levi_civita() @ _check_rho3(rho3)).real)


def w_squared_residual():
    """max |W^2 - 8 (P12 + P13 + P23)| over matrix entries.

    The square of the handedness observable is eight times the sum of
    the pairwise singlet projectors (each pair of the three qubits).
    """
    w = w_levi_civita()
    p_minus = pauli.singlet()
    total = np.zeros((8, 8), dtype=complex)
    for (k, l), _ in W_CONFIGS:
        total += diagrams._embed_two_qubit(p_minus, k, l, 3)
    return float(np.max(np.abs(w @ w - 8 * total)))


@dataclass
class WCircuitResult:
    """Counts and estimates from the three-outcome measurements of w."""

    counts: list           # per configuration: {+1: n, -1: n, 0: n}
    estimates: list        # per configuration: 2 (p+ - p-)
    sigmas: list
    total: float
    total_sigma: float
    n_events: int
    seed: int
    detection_triples: dict = field(default_factory=lambda: W_DETECTION_TRIPLES)


def w_via_circuit(rho3, n_events, seed):
    """Estimate <W> by simulating the three sign measurements.

    Each configuration is drawn n_events times from the three-outcome
    distribution (+, -, 0) given by the eigenprojectors of its piece
    w_{(k,l),m} onto eigenvalues +2, -2, 0; the registered outcome is
    the sign, the estimate weights it by the eigenvalue magnitude 2.
    """
    rho3 = _check_rho3(rho3)
    if not isinstance(n_events, int) or n_events <= 0:
        raise ValidationError(f"n_events must be a positive integer, got {n_events!r}")
    counts = []
    estimates = []
    sigmas = []
    for i in range(3):
        op = w_config_operator(i)
        evals, evecs = np.linalg.eigh(op)
        probs = []
        for target in (2.0, -2.0, 0.0):
            sel = np.abs(evals - target) < 1e-9
            proj = evecs[:, sel] @ evecs[:, sel].conj().T
            probs.append(max(float(np.trace(proj @ rho3).real), 0.0))
        probs = np.asarray(probs)
        probs = probs / probs.sum()
        rng = np.random.Generator(np.random.Philox(key=np.array([seed, 11 + i], dtype=np.uint64)))
        n_plus, n_minus, n_zero = (int(x) for x in rng.multinomial(n_events, probs))
        counts.append({+1: n_plus, -1: n_minus, 0: n_zero})
        p_hat = n_plus / n_events
        q_hat = n_minus / n_events
        estimates.append(2.0 * (p_hat - q_hat))
        var = p_hat * (1 - p_hat) + q_hat * (1 - q_hat) + 2 * p_hat * q_hat
        sigmas.append(2.0 * (var / n_events) ** 0.5)
    total = float(sum(estimates))
    total_sigma = float(sum(s ** 2 for s in sigmas) ** 0.5)
    return WCircuitResult(counts, estimates, sigmas, total, total_sigma, n_events, int(seed))
