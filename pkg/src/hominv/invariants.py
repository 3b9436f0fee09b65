"""Local-unitary invariants of a two-qubit state.

Two complete families are computed from the Pauli coefficients
(s = first-qubit Bloch vector, p = second-qubit Bloch vector,
beta = correlation block):

* "makhlin": 18 polynomial invariants I1..I18.  I1..I9 and I12..I14 are
  even under local time reversal; I10, I11, I15..I18 are triple products
  that fix the handedness of the Bloch data.
* "jing": 12 polynomial invariants J1..J12, equivalent to the Makhlin
  set for deciding local-unitary equivalence.  J1..J11 coincide with
  Makhlin combinations; J12 = s (beta beta^T)^2 beta p.

``IDENTITIES`` expresses every invariant reachable by singlet
projections as a polynomial in the catalogued diagram values (the c/l
chain and loop families plus their crossed variants).  Each identity
was fixed by exact rational linear algebra against the contraction
engine and is unique over its monomial basis; the frozen forms are
locked in by the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import UnresolvedTermError, ValidationError

__all__ = [
    "InvariantVector",
    "makhlin_invariants",
    "jing_invariants",
    "MAKHLIN_NAMES",
    "JING_NAMES",
    "Identity",
    "IDENTITIES",
    "identity_value",
    "identity_sigma",
    "equivalence_check",
]

MAKHLIN_NAMES = tuple(f"I{k}" for k in range(1, 19))
JING_NAMES = tuple(f"J{k}" for k in range(1, 13))

_EPS3 = np.zeros((3, 3, 3))
for (_i, _j, _k), _sgn in (((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1),
                           ((0, 2, 1), -1), ((2, 1, 0), -1), ((1, 0, 2), -1)):
    _EPS3[_i, _j, _k] = _sgn


@dataclass
class InvariantVector:
    """A named family of invariant values for one state."""

    family: str
    values: dict
    source: str = "exact"
    uncertainty: Optional[dict] = None

    def triple(self):
        """The three invariants that determine the correlation spectrum.

        Both families carry the power sums of beta beta^T in different
        clothing: ("I1", "I2", "I3") with e3 = I1^2, or the direct power
        sums ("J1", "J2", "J3").
        """
        names = ("I1", "I2", "I3") if self.family == "makhlin" else ("J1", "J2", "J3")
        vals = tuple(self.values[n] for n in names)
        sigs = None
        if self.uncertainty is not None:
            sigs = tuple(self.uncertainty.get(n) for n in names)
        return names, vals, sigs

    def to_json(self):
        out = {"family": self.family,
               "values": {k: float(v) for k, v in self.values.items()},
               "source": self.source}
        if self.uncertainty is not None:
            out["uncertainty"] = {k: (None if v is None else float(v))
                                  for k, v in self.uncertainty.items()}
        return out


def _blocks(t):
    t = np.asarray(t, dtype=float)
    if t.shape != (4, 4):
        raise ValidationError(f"coefficient matrix must be 4x4, got shape {t.shape}")
    return t[1:, 0], t[0, 1:], t[1:, 1:]


def _triple_product(u, v, w):
    return float(np.linalg.det(np.array([u, v, w])))


def makhlin_invariants(t):
    s, p, b = _blocks(t)
    bt = b.T
    bbt = b @ bt
    btb = bt @ b
    vals = {
        "I1": float(np.linalg.det(b)),
        "I2": float(np.trace(bbt)),
        "I3": float(np.trace(btb @ btb)),
        "I4": float(s @ s),
        "I5": float(s @ bbt @ s),
        "I6": float(s @ bbt @ bbt @ s),
        "I7": float(p @ p),
        "I8": float(p @ btb @ p),
        "I9": float(p @ btb @ btb @ p),
        "I10": _triple_product(s, bbt @ s, bbt @ bbt @ s),
        "I11": _triple_product(p, btb @ p, btb @ btb @ p),
        "I12": float(s @ b @ p),
        "I13": float(s @ bbt @ b @ p),
        "I14": float(np.einsum("ijk,lmn,i,l,jm,kn->", _EPS3, _EPS3, s, p, b, b)),
        "I15": _triple_product(s, bbt @ s, b @ p),
        "I16": _triple_product(bt @ s, p, btb @ p),
        "I17": _triple_product(bt @ s, btb @ bt @ s, p),
        "I18": _triple_product(s, b @ p, bbt @ b @ p),
    }
    return InvariantVector("makhlin", vals)


def jing_invariants(t):
    s, p, b = _blocks(t)
    bt = b.T
    btb = bt @ b
    bbt = b @ bt
    vals = {
        "J1": float(np.trace(btb)),
        "J2": float(np.trace(btb @ btb)),
        "J3": float(np.trace(btb @ btb @ btb)),
        "J4": float(s @ s),
        "J5": float(s @ bbt @ s),
        "J6": float(s @ bbt @ bbt @ s),
        "J7": float(p @ p),
        "J8": float(p @ btb @ p),
        "J9": float(p @ btb @ btb @ p),
        "J10": float(s @ b @ p),
        "J11": float(s @ bbt @ b @ p),
        "J12": float(s @ bbt @ bbt @ b @ p),
    }
    return InvariantVector("jing", vals)


@dataclass(frozen=True)
class Identity:
    """invariant == rhs(diagram values); labels lists what rhs reads."""

    invariant: str
    labels: tuple
    rhs: Callable[[dict], float]


def _rhs_I1(d):
    l0, cb1, cb2, lb1, lb2 = d["l0"], d["cbar1"], d["cbar2"], d["lbar1"], d["lbar2"]
    return -8.0 / 3.0 * (l0 * (l0 * (4 * l0 - 3) + 6 * (cb1 - 2 * lb1))
                         + 3 * lb1 - 6 * cb2 + 8 * lb2)


def _rhs_I2(d):
    return 1 + 16 * d["l1"] - 4 * (d["c2"] + d["c1"])


def _rhs_I3(d):
    c1, c2 = d["c1"], d["c2"]
    return (1 - 8 * (c1 + c2) + 16 * (c1 ** 2 + c2 ** 2)
            + 64 * d["c3"] - 128 * (d["c4"] + d["c5"]) + 256 * d["l2"])


def _rhs_I4(d):
    return 1 - 4 * d["c2"]


def _rhs_I5(d):
    return -4 * d["c1"] + 32 * d["c3"] - 64 * d["c5"] + (1 - 4 * d["c2"]) ** 2


def _rhs_I6(d):
    c1, c2, c3, c4, c5, c6, c8 = (d[k] for k in ("c1", "c2", "c3", "c4", "c5", "c6", "c8"))
    return (1 - 1024 * c8 - 4 * (3 * c2 + 2 * c1)
            + 16 * (3 * c2 ** 2 + 4 * c3 + 2 * c2 * c1 + c1 ** 2)
            - 64 * (c2 ** 3 + 4 * c2 * c3 + 2 * c5 + 2 * c3 * c1 + c4)
            + 256 * (c3 ** 2 + 2 * c2 * c5 + 2 * c6))


def _rhs_I7(d):
    return 1 - 4 * d["c1"]


def _rhs_I8(d):
    return -4 * d["c2"] + 32 * d["c3"] - 64 * d["c4"] + (1 - 4 * d["c1"]) ** 2


def _rhs_I9(d):
    c1, c2, c3, c4, c5, c6, c7 = (d[k] for k in ("c1", "c2", "c3", "c4", "c5", "c6", "c7"))
    return (1 - 1024 * c7 - 4 * (2 * c2 + 3 * c1)
            + 16 * (c2 ** 2 + 4 * c3 + 2 * c2 * c1 + 3 * c1 ** 2)
            - 64 * (2 * c2 * c3 + c5 + 4 * c3 * c1 + c1 ** 3 + 2 * c4)
            + 256 * (c3 ** 2 + 2 * c6 + 2 * c1 * c4))


def _rhs_I12(d):
    return 1 + 16 * d["c3"] - 4 * (d["c2"] + d["c1"])


def _rhs_I13(d):
    c1, c2, c3, c4, c5, c6 = (d[k] for k in ("c1", "c2", "c3", "c4", "c5", "c6"))
    return (1 + 256 * c6 - 8 * (c2 + c1)
            + 16 * (c2 ** 2 + 3 * c3 + c2 * c1 + c1 ** 2)
            - 64 * (c5 + c3 * (c2 + c1) + c4))


def _rhs_I14(d):
    l0, cb1, cb2, cb3, lb1 = d["l0"], d["cbar1"], d["cbar2"], d["cbar3"], d["lbar1"]
    return 16 * (l0 ** 2 * (1 - 4 * cb1) + 2 * l0 * (4 * cb2 - cb1)
                 - lb1 + 4 * cb1 * lb1 + 2 * cb2 - 8 * cb3)


def _rhs_J3(d):
    c1, c2, c3, c4, c5, c6, c7, c8 = (d[k] for k in ("c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8"))
    return (4096 * d["l3"] - 3072 * (c7 + c8)
            + 768 * (2 * c6 + c4 * c1 + c5 * c2 + c3 ** 2)
            - 64 * (3 * c4 + 3 * c5 + 6 * c3 * (c1 + c2) + c1 ** 3 + c2 ** 3)
            + 48 * (2 * c3 + c1 ** 2 + c2 ** 2 + c1 * c2)
            - 12 * (c1 + c2) + 1)


def _rhs_J12(d):
    c1, c2, c3, c4, c5, c6, c7, c8, c9 = (d[k] for k in ("c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8", "c9"))
    return (4096 * c9 - 1024 * (c7 + c8) - 1024 * c6 * (c1 + c2) + 768 * c6
            - 1024 * c3 * (c4 + c5) + 768 * c3 ** 2
            + 512 * (c1 * c4 + c2 * c5) + 256 * (c1 * c5 + c2 * c4) - 128 * (c4 + c5)
            + 256 * c3 * (c1 ** 2 + c1 * c2 + c2 ** 2) - 384 * c3 * (c1 + c2) + 80 * c3
            - 64 * (c1 + c2) * (c1 ** 2 + c2 ** 2)
            + 48 * (c1 ** 2 + c2 ** 2) + 64 * c1 * c2 - 12 * (c1 + c2) + 1)


IDENTITIES = {
    "I1": Identity("I1", ("l0", "cbar1", "cbar2", "lbar1", "lbar2"), _rhs_I1),
    "I2": Identity("I2", ("c1", "c2", "l1"), _rhs_I2),
    "I3": Identity("I3", ("c1", "c2", "c3", "c4", "c5", "l2"), _rhs_I3),
    "I4": Identity("I4", ("c2",), _rhs_I4),
    "I5": Identity("I5", ("c1", "c2", "c3", "c5"), _rhs_I5),
    "I6": Identity("I6", ("c1", "c2", "c3", "c4", "c5", "c6", "c8"), _rhs_I6),
    "I7": Identity("I7", ("c1",), _rhs_I7),
    "I8": Identity("I8", ("c1", "c2", "c3", "c4"), _rhs_I8),
    "I9": Identity("I9", ("c1", "c2", "c3", "c4", "c5", "c6", "c7"), _rhs_I9),
    "I12": Identity("I12", ("c1", "c2", "c3"), _rhs_I12),
    "I13": Identity("I13", ("c1", "c2", "c3", "c4", "c5", "c6"), _rhs_I13),
    "I14": Identity("I14", ("l0", "cbar1", "cbar2", "cbar3", "lbar1"), _rhs_I14),
    "J1": Identity("J1", ("c1", "c2", "l1"), _rhs_I2),
    "J2": Identity("J2", ("c1", "c2", "c3", "c4", "c5", "l2"), _rhs_I3),
    "J3": Identity("J3", ("c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8", "l3"), _rhs_J3),
    "J4": Identity("J4", ("c2",), _rhs_I4),
    "J5": Identity("J5", ("c1", "c2", "c3", "c5"), _rhs_I5),
    "J6": Identity("J6", ("c1", "c2", "c3", "c4", "c5", "c6", "c8"), _rhs_I6),
    "J7": Identity("J7", ("c1",), _rhs_I7),
    "J8": Identity("J8", ("c1", "c2", "c3", "c4"), _rhs_I8),
    "J9": Identity("J9", ("c1", "c2", "c3", "c4", "c5", "c6", "c7"), _rhs_I9),
    "J10": Identity("J10", ("c1", "c2", "c3"), _rhs_I12),
    "J11": Identity("J11", ("c1", "c2", "c3", "c4", "c5", "c6"), _rhs_I13),
    "J12": Identity("J12", ("c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8", "c9"), _rhs_J12),
}


def identity_value(name, label_values):
    """Evaluate one registered identity's right-hand side."""
    ident = IDENTITIES[name]
    missing = [lab for lab in ident.labels if lab not in label_values]
    if missing:
        raise UnresolvedTermError(f"identity {name} needs diagram values for {missing}")
    return float(ident.rhs(label_values))


def identity_sigma(name, label_values, label_sigmas, *, step=1e-6):
    """1-sigma of an identity value under independent label uncertainties.

    Linear propagation with central finite differences.  Labels coming
    from one count table are weakly correlated, so this is an
    approximation, adequate for the few-percent regime the estimators
    work in.
    """
    ident = IDENTITIES[name]
    var = 0.0
    work = dict(label_values)
    for lab in ident.labels:
        sig = label_sigmas.get(lab, 0.0) if label_sigmas else 0.0
        if not sig:
            continue
        base = work[lab]
        work[lab] = base + step
        hi = ident.rhs(work)
        work[lab] = base - step
        lo = ident.rhs(work)
        work[lab] = base
        var += ((hi - lo) / (2 * step) * sig) ** 2
    return var ** 0.5


def equivalence_check(t1, t2, *, tol=1e-8):
    """Compare two states' full Makhlin vectors.

    Returns (verdict, max_abs_difference) with verdict "equivalent"
    (all 18 agree within tol), "inequivalent" (some differ by at least
    10*tol), or "borderline" in between.
    """
    v1 = makhlin_invariants(t1).values
    v2 = makhlin_invariants(t2).values
    dev = max(abs(v1[k] - v2[k]) for k in MAKHLIN_NAMES)
    if dev <= tol:
        return "equivalent", dev
    if dev >= 10 * tol:
        return "inequivalent", dev
    return "borderline", dev
