"""Nonlocality figures of merit from the spectrum of R = beta beta^T.

The three eigenvalues r1 >= r2 >= r3 of R are themselves local-unitary
invariants.  They come either from direct access to the correlation
matrix or from a measured invariant triple, (J1, J2, J3) being the power
sums (Tr R, Tr R^2, Tr R^3) and (I1, I2, I3) = (det beta, Tr R, Tr R^2)
supplying the third power sum through det R = I1^2.  Newton's identities
turn the power sums p1, p2, p3 into the characteristic polynomial

    r^3 - p1 r^2 + (p1^2 - p2)/2 r - (p1^3 - 3 p1 p2 + 2 p3)/6 = 0,

solved here by the trigonometric method, which keeps triple and double
roots exact instead of scattering them by eps^(1/3).  From the roots:

    M = r1 + r2 - 1            positive iff some CHSH inequality is violated
    f = (1 + sum_n sqrt(r_n))/4   fully-entangled fraction
    E = (Tr R - 1)/2           entanglement witness when the two reduced
                               states have equal purity
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import pauli
from .errors import UnphysicalTripleError, ValidationError

__all__ = [
    "RSpectrum",
    "spectrum_direct",
    "spectrum_from_invariants",
    "bell_M",
    "fef",
    "EntropicResult",
    "entropic_E",
    "propagate_through",
    "report_from_coeffs",
    "report_from_invariants",
    "ResourceRow",
    "resource_table",
    "resource_table_markdown",
    "resource_table_csv",
]

_METHODS = ("direct", "from-makhlin", "from-jing")


@dataclass(frozen=True)
class RSpectrum:
    """Eigenvalues of beta beta^T, sorted descending, each in [0, 1]."""

    r1: float
    r2: float
    r3: float
    method: str

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ValidationError(f"method must be one of {_METHODS}, got {self.method!r}")
        r = (self.r1, self.r2, self.r3)
        if not r[0] >= r[1] >= r[2]:
            raise ValidationError(f"spectrum must be sorted descending, got {r}")
        if r[2] < 0 or r[0] > 1 + 1e-10 or sum(r) > 3 + 1e-9:
            raise ValidationError(f"eigenvalues of beta beta^T must lie in [0, 1], got {r}")

    @property
    def roots(self):
        return (self.r1, self.r2, self.r3)


def _finalize(roots, method, tol):
    r = sorted((float(x) for x in roots), reverse=True)
    if r[2] < -tol:
        raise UnphysicalTripleError(f"negative eigenvalue {r[2]:.3e} below -{tol:.1e}")
    if r[0] > 1 + tol:
        raise UnphysicalTripleError(f"eigenvalue {r[0]:.6f} exceeds 1 by more than {tol:.1e}")
    r = [min(max(x, 0.0), 1.0) for x in r]
    return RSpectrum(r[0], r[1], r[2], method)


def spectrum_direct(t) -> RSpectrum:
    """Eigenvalues of beta beta^T straight from the state coefficients."""
    pauli.validate_coeffs(t)
    beta = pauli.beta_matrix(t)
    r = np.linalg.eigvalsh(beta @ beta.T)
    return _finalize(r[::-1], "direct", 1e-10)


def _cubic_roots(e1, e2, e3, tol):
    # depressed form y^3 + p y + q via r = y + e1/3; a symmetric-matrix
    # characteristic polynomial has p <= 0, anything else is noise
    p = e2 - e1 * e1 / 3.0
    q = -2.0 * e1 ** 3 / 27.0 + e1 * e2 / 3.0 - e3
    shift = e1 / 3.0
    eps64 = 64.0 * np.finfo(float).eps * max(1.0, e1 * e1)
    if abs(p) <= eps64 and abs(q) <= eps64 * max(1.0, abs(e1)):
        return (shift, shift, shift)
    u = math.sqrt(max(-p, 0.0) / 3.0)
    if u ** 3 <= abs(q) * np.finfo(float).eps:
        # p negligible against q: one real root and a near-double pair
        y1 = float(np.cbrt(-q))
        imag = math.sqrt(max(p, 0.0) + 0.75 * y1 * y1)
        if imag > tol:
            raise UnphysicalTripleError(
                f"complex eigenvalue pair, imaginary part ~{imag:.3e} beyond {tol:.1e}")
        return (shift + y1, shift - y1 / 2.0, shift - y1 / 2.0)
    if p > 0:
        # complex pair with imaginary part at least sqrt(p)
        if math.sqrt(p) > tol:
            raise UnphysicalTripleError(
                f"complex eigenvalue pair, imaginary part ~{math.sqrt(p):.3e} beyond {tol:.1e}")
        u = 0.0
        y1 = float(np.cbrt(-q))
        return (shift + y1, shift - y1 / 2.0, shift - y1 / 2.0)
    c = -q / (2.0 * u ** 3)
    if abs(c) > 1.0:
        # outside the three-real-root window; close to it the pair is
        # nearly degenerate, far from it the triple was not physical
        imag = math.sqrt(3.0) * u * math.sinh(math.acosh(abs(c)) / 3.0)
        if imag > tol:
            raise UnphysicalTripleError(
                f"complex eigenvalue pair, imaginary part ~{imag:.3e} beyond {tol:.1e}")
        c = 1.0 if c > 0 else -1.0
    theta = math.acos(c) / 3.0
    return tuple(shift + 2.0 * u * math.cos(theta - 2.0 * math.pi * k / 3.0) for k in range(3))


def _power_sums(triple, family):
    if len(triple) != 3:
        raise ValidationError(f"need exactly three invariants, got {len(triple)}")
    v1, v2, v3 = (float(x) for x in triple)
    if family == "makhlin":
        # det R = I1^2 closes the third power sum
        return v2, v3, (6.0 * v1 * v1 - v2 ** 3 + 3.0 * v2 * v3) / 2.0
    if family == "jing":
        return v1, v2, v3
    raise ValidationError(f"family must be 'makhlin' or 'jing', got {family!r}")


def spectrum_from_invariants(triple, family, tol: float = 1e-8) -> RSpectrum:
    """Spectrum of beta beta^T from a measured invariant triple.

    ``triple`` is (I1, I2, I3) or (J1, J2, J3) according to ``family``.
    ``tol`` bounds how far roots may stray into the complex plane or out
    of [0, 1] before the triple is rejected as unphysical; estimated
    triples need it loosened to a few standard errors.
    """
    p1, p2, p3 = _power_sums(triple, family)
    e1 = p1
    e2 = (p1 * p1 - p2) / 2.0
    e3 = (p1 ** 3 - 3.0 * p1 * p2 + 2.0 * p3) / 6.0
    roots = _cubic_roots(e1, e2, e3, tol)
    return _finalize(roots, f"from-{family}", tol)


def _noise_tol(values, sigmas, family, tol):
    """Root-acceptance tolerance consistent with the triple's noise.

    Noise of size sigma in the cubic coefficients moves roots of a
    degenerate spectrum (Werner states) by O(sigma^(1/3)), possibly into
    the complex plane; the acceptance window has to scale the same way
    or every near-degenerate estimate would be rejected as unphysical.
    """
    def q_of(x):
        p1, p2, p3 = _power_sums(x, family)
        e1, e2 = p1, (p1 * p1 - p2) / 2.0
        e3 = (p1 ** 3 - 3.0 * p1 * p2 + 2.0 * p3) / 6.0
        return -2.0 * e1 ** 3 / 27.0 + e1 * e2 / 3.0 - e3

    _, s_q = propagate_through(q_of, values, sigmas)
    if s_q <= 0:
        return tol
    return max(tol, 2.0 * (4.0 * s_q) ** (1.0 / 3.0))


def bell_M(spec: RSpectrum) -> float:
    """CHSH nonlocality measure; positive iff some CHSH setting violates."""
    return spec.r1 + spec.r2 - 1.0


def fef(spec: RSpectrum) -> float:
    """Fully-entangled fraction (1 + sum sqrt(r_n))/4."""
    return (1.0 + math.sqrt(spec.r1) + math.sqrt(spec.r2) + math.sqrt(spec.r3)) / 4.0


@dataclass(frozen=True)
class EntropicResult:
    """Witness value (None when the purity precondition fails) plus the
    two reduced-state purities."""

    value: Optional[float]
    purity_a: float
    purity_b: float


def entropic_E(spec: RSpectrum, t, tol: float = 1e-9) -> EntropicResult:
    """Entropic entanglement witness (Tr R - 1)/2.

    Meaningful only when the reduced states have equal purity, i.e. the
    Bloch vectors have equal length; otherwise the value is None and the
    caller gets the two purities to report.
    """
    s = pauli.s_vector(t)
    p = pauli.p_vector(t)
    s_sq = float(s @ s)
    p_sq = float(p @ p)
    purity_a = (1.0 + s_sq) / 2.0
    purity_b = (1.0 + p_sq) / 2.0
    if abs(s_sq - p_sq) > tol:
        return EntropicResult(None, purity_a, purity_b)
    return EntropicResult((spec.r1 + spec.r2 + spec.r3 - 1.0) / 2.0, purity_a, purity_b)


def propagate_through(func: Callable, x, sigma, step: float = 1e-6):
    """Forward finite-difference propagation of independent errors.

    Returns (func(x), sigma_out) for a scalar-valued ``func`` of a
    vector argument with componentwise standard errors ``sigma``.
    """
    x = np.asarray(x, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    f0 = float(func(x))
    var = 0.0
    for i in range(x.size):
        if sigma[i] == 0:
            continue
        xp = x.copy()
        xp[i] += step
        var += ((float(func(xp)) - f0) / step) ** 2 * sigma[i] ** 2
    return f0, math.sqrt(var)


def report_from_coeffs(t, state_id=None, witness_tol: float = 1e-9) -> dict:
    """Exact nonlocality report for a state given by its coefficients."""
    spec = spectrum_direct(t)
    ent = entropic_E(spec, t, witness_tol)
    return {
        "state-id": state_id,
        "method": spec.method,
        "r": list(spec.roots),
        "M": bell_M(spec),
        "f": fef(spec),
        "E": ent.value,
        "purities": {"a": ent.purity_a, "b": ent.purity_b},
        "uncertainties": None,
    }


def report_from_invariants(vec, state_id=None, tol: float = 1e-8,
                           witness_tol: Optional[float] = None) -> dict:
    """Nonlocality report from an invariant vector (exact or estimated).

    Uncertainties, when the vector carries them, are pushed through the
    root map by finite differences; the equal-purity check for the
    witness defaults to four combined standard errors on estimated
    input, and the root-acceptance tolerance widens with the noise as
    described at _noise_tol.
    """
    names, values, sigmas = vec.triple()
    if sigmas is not None and all(s is not None for s in sigmas):
        tol = _noise_tol(values, sigmas, vec.family, tol)
    spec = spectrum_from_invariants(values, vec.family, tol)
    report = {
        "state-id": state_id,
        "method": spec.method,
        "r": list(spec.roots),
        "M": bell_M(spec),
        "f": fef(spec),
        "E": None,
        "purities": None,
        "uncertainties": None,
    }

    tr_r = values[1] if vec.family == "makhlin" else values[0]
    s_name, p_name = ("I4", "I7") if vec.family == "makhlin" else ("J4", "J7")
    s_sq = vec.values.get(s_name)
    p_sq = vec.values.get(p_name)
    if s_sq is not None and p_sq is not None:
        wtol = witness_tol
        if wtol is None:
            wtol = 1e-9
            if vec.uncertainty:
                ss = vec.uncertainty.get(s_name) or 0.0
                sp = vec.uncertainty.get(p_name) or 0.0
                wtol = max(wtol, 4.0 * math.hypot(ss, sp))
        report["purities"] = {"a": (1.0 + s_sq) / 2.0, "b": (1.0 + p_sq) / 2.0}
        if abs(s_sq - p_sq) <= wtol:
            report["E"] = (tr_r - 1.0) / 2.0

    if sigmas is not None and all(s is not None for s in sigmas):
        def root(i):
            return lambda x: spectrum_from_invariants(x, vec.family, tol).roots[i]

        r_sig = [propagate_through(root(i), values, sigmas)[1] for i in range(3)]
        _, m_sig = propagate_through(
            lambda x: bell_M(spectrum_from_invariants(x, vec.family, tol)), values, sigmas)
        _, f_sig = propagate_through(
            lambda x: fef(spectrum_from_invariants(x, vec.family, tol)), values, sigmas)
        unc = {"triple": dict(zip(names, sigmas)), "r": r_sig, "M": m_sig, "f": f_sig}
        if report["E"] is not None:
            tr_sig = sigmas[1] if vec.family == "makhlin" else sigmas[0]
            unc["E"] = tr_sig / 2.0
        report["uncertainties"] = unc
    return report


# --- resource comparison ---------------------------------------------------

@dataclass(frozen=True)
class ResourceRow:
    method: str
    copies: int
    measurements: Optional[int]   # None means unbounded
    procedure: str
    realized_by: str


_ROWS = (
    ResourceRow("direct", 1, None, "all CHSH inequalities",
                "not implemented; the spectral formula replaces the angle search"),
    ResourceRow("beta matrix", 1, 9, "local",
                "spectrum_direct on exact state coefficients"),
    ResourceRow("R matrix", 2, 6, "local",
                "spectrum_direct on beta beta^T"),
    ResourceRow("I1,I2,I3", 4, 3, "nonlocal",
                "simulate fig5-top + fig5-bottom + fig7-* then the estimated makhlin triple"),
    ResourceRow("I1,I2,I3", 6, 2, "nonlocal",
                "same estimates, runs grouped into two parallel settings"),
    ResourceRow("I1,I2,I3", 12, 1, "nonlocal",
                "same estimates, all circuits in one 12-copy setting"),
    ResourceRow("J1,J2,J3", 6, 2, "local",
                "simulate fig5-top + fig5-bottom + fig6 then the estimated jing triple"),
    ResourceRow("J1,J2,J3", 12, 1, "local",
                "same estimates, all circuits in one 12-copy setting"),
)


def resource_table():
    """Fixed comparison of strategies for reaching the spectrum of R.

    For every method that goes through eigenvalues of R the product
    copies x measurements is 12, independent of the split.
    """
    for row in _ROWS:
        if row.method in ("R matrix", "I1,I2,I3", "J1,J2,J3"):
            assert row.copies * row.measurements == 12
    return _ROWS


def resource_table_markdown() -> str:
    lines = ["| method | copies | measurements | procedure | realized by |",
             "| --- | --- | --- | --- | --- |"]
    for row in resource_table():
        meas = "inf" if row.measurements is None else str(row.measurements)
        lines.append(f"| {row.method} | {row.copies} | {meas} | {row.procedure} | {row.realized_by} |")
    return "\n".join(lines) + "\n"


def resource_table_csv() -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["method", "copies", "measurements", "procedure", "realized_by"])
    for row in resource_table():
        meas = "inf" if row.measurements is None else row.measurements
        writer.writerow([row.method, row.copies, meas, row.procedure, row.realized_by])
    return buf.getvalue()
