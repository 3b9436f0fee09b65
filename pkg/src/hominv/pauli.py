"""Two-qubit states in the Pauli (Hilbert-Schmidt) representation.

A two-qubit density matrix rho is encoded by the real 4x4 coefficient
matrix

    t[mu, nu] = Tr[rho (sigma_mu (x) sigma_nu)],      t[0, 0] = 1,

with sigma_0..sigma_3 = (identity, x, y, z) and computational basis
|HH>, |HV>, |VH>, |VV| (H = +z eigenstate).  Row 0 and column 0 carry
the single-qubit Bloch vectors, the lower-right 3x3 block the
correlation matrix:

    s_i = t[i, 0]   (first qubit),
    p_j = t[0, j]   (second qubit),
    beta[i, j] = t[i, j],  i, j >= 1.

All converters are exact linear maps; validation raises
:class:`ValidationError` naming the violated invariant.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import ValidationError

__all__ = [
    "SIGMA",
    "ETA",
    "PSI_MINUS",
    "singlet",
    "maximally_mixed",
    "werner",
    "ket",
    "pure_density",
    "validate_density",
    "coeffs_from_density",
    "density_from_coeffs",
    "s_vector",
    "p_vector",
    "beta_matrix",
    "apply_local_unitary",
    "random_local_unitary",
    "random_state",
    "state_to_json",
    "state_from_json",
    "read_state_file",
    "write_state_file",
]

SIGMA = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

# Metric of the singlet projector: Tr[P_minus (sigma_mu (x) sigma_nu)]
# equals ETA[mu] * delta_{mu,nu}.
ETA = np.array([1, -1, -1, -1], dtype=float)

_KET = {"H": np.array([1.0, 0.0], dtype=complex), "V": np.array([0.0, 1.0], dtype=complex)}

PSI_MINUS = np.array([0.0, 1.0, -1.0, 0.0], dtype=complex) / np.sqrt(2.0)


def ket(label):
    """Product basis ket from a string of H/V letters, e.g. ``"HV"``."""
    vec = np.array([1.0], dtype=complex)
    for ch in label:
        if ch not in _KET:
            raise ValidationError(f"ket labels use H/V letters, got {ch!r}")
        vec = np.kron(vec, _KET[ch])
    return vec


def pure_density(vec):
    """Density matrix |v><v| of a (normalised) state vector."""
    vec = np.asarray(vec, dtype=complex)
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise ValidationError("pure state vector must be nonzero")
    vec = vec / norm
    return np.outer(vec, vec.conj())


def singlet():
    """The two-qubit singlet |Psi-><Psi-|."""
    return pure_density(PSI_MINUS)


def maximally_mixed():
    return np.eye(4, dtype=complex) / 4.0


def werner(p):
    """Werner state p |Psi-><Psi-| + (1-p)/4 identity, p in [0, 1]."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"werner mixing parameter must lie in [0, 1], got {p}")
    return p * singlet() + (1.0 - p) * maximally_mixed()


def validate_density(rho, *, herm_tol=1e-12, trace_tol=1e-12, eig_tol=1e-10):
    """Check Hermiticity, unit trace and positivity of a 4x4 density matrix.

    Returns the validated matrix as a complex ndarray; raises
    :class:`ValidationError` naming the first violated invariant.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValidationError(f"density matrix must be 4x4, got shape {rho.shape}")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > herm_tol:
        raise ValidationError(f"density matrix not Hermitian: max |rho - rho^dag| = {herm:.3e}")
    tr = abs(rho.trace() - 1.0)
    if tr > trace_tol:
        raise ValidationError(f"density matrix trace differs from 1 by {tr:.3e}")
    eigmin = float(np.linalg.eigvalsh(rho)[0])
    if eigmin < -eig_tol:
        raise ValidationError(f"density matrix not positive semidefinite: min eigenvalue {eigmin:.3e}")
    return rho


def coeffs_from_density(rho, *, validate=True):
    """Pauli coefficient matrix t[mu, nu] = Tr[rho sigma_mu (x) sigma_nu]."""
    if validate:
        rho = validate_density(rho)
    else:
        rho = np.asarray(rho, dtype=complex)
    t = np.empty((4, 4), dtype=float)
    for mu in range(4):
        for nu in range(4):
            t[mu, nu] = np.einsum("ij,ji->", rho, np.kron(SIGMA[mu], SIGMA[nu])).real
    return t


def density_from_coeffs(t, *, validate=True):
    """Inverse map rho = (1/4) sum_{mu,nu} t[mu,nu] sigma_mu (x) sigma_nu."""
    t = validate_coeffs(t) if validate else np.asarray(t, dtype=float)
    rho = np.zeros((4, 4), dtype=complex)
    for mu in range(4):
        for nu in range(4):
            rho += t[mu, nu] * np.kron(SIGMA[mu], SIGMA[nu])
    return rho / 4.0


def validate_coeffs(t, *, tol=1e-12):
    t = np.asarray(t, dtype=float)
    if t.shape != (4, 4):
        raise ValidationError(f"coefficient matrix must be 4x4, got shape {t.shape}")
    if abs(t[0, 0] - 1.0) > tol:
        raise ValidationError(f"coefficient t[0,0] must equal 1, got {t[0, 0]!r}")
    bound = np.max(np.abs(t))
    if bound > 1.0 + tol:
        raise ValidationError(f"coefficients must satisfy |t| <= 1, max is {bound:.6f}")
    return t


def s_vector(t):
    """Bloch vector of the first qubit (column-0 tail)."""
    return np.asarray(t, dtype=float)[1:, 0].copy()


def p_vector(t):
    """Bloch vector of the second qubit (row-0 tail)."""
    return np.asarray(t, dtype=float)[0, 1:].copy()


def beta_matrix(t):
    """3x3 correlation block."""
    return np.asarray(t, dtype=float)[1:, 1:].copy()


def _check_unitary(u, name):
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise ValidationError(f"{name} must be a 2x2 matrix, got shape {u.shape}")
    dev = np.max(np.abs(u.conj().T @ u - np.eye(2)))
    if dev > 1e-12:
        raise ValidationError(f"{name} not unitary: max |u^dag u - 1| = {dev:.3e}")
    return u


def apply_local_unitary(rho, u_a, u_b):
    """Conjugate rho by u_a (x) u_b, validating unitarity of both factors."""
    u_a = _check_unitary(u_a, "u_a")
    u_b = _check_unitary(u_b, "u_b")
    u = np.kron(u_a, u_b)
    return u @ np.asarray(rho, dtype=complex) @ u.conj().T


def _generator(seed, stream=0):
    # Counter-based generator: independent streams are keyed, not jumped.
    key = np.array([seed, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def random_local_unitary(seed, stream=0):
    """Haar-random pair of single-qubit unitaries (u_a, u_b)."""
    rng = _generator(seed, stream)
    out = []
    for _ in range(2):
        g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        q, r = np.linalg.qr(g)
        q = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
        out.append(q)
    return out[0], out[1]


def random_state(seed, ensemble="mixed-ginibre", *, p=None, stream=0):
    """Seeded random two-qubit density matrix.

    ensemble:
        "pure-haar"     normalised complex-Gaussian 4-vector,
        "mixed-ginibre" G G^dag / Tr[G G^dag] with complex-Gaussian G,
        "werner"        requires mixing parameter ``p`` in [0, 1].
    """
    rng = _generator(seed, stream)
    if ensemble == "pure-haar":
        vec = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        return pure_density(vec)
    if ensemble == "mixed-ginibre":
        g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        rho = g @ g.conj().T
        return rho / rho.trace().real
    if ensemble == "werner":
        if p is None:
            raise ValidationError("werner ensemble requires the mixing parameter p")
        return werner(p)
    raise ValidationError(f"unknown ensemble {ensemble!r}")


def state_to_json(rho):
    """JSON-ready dict carrying both the matrix and its coefficients."""
    rho = validate_density(rho)
    t = coeffs_from_density(rho, validate=False)
    return {
        "rho": [[[float(z.real), float(z.imag)] for z in row] for row in rho],
        "t": [[float(x) for x in row] for row in t],
    }


def state_from_json(obj):
    """Reconstruct a density matrix from a dict with "rho" and/or "t"."""
    if not isinstance(obj, dict):
        raise ValidationError("state JSON must be an object with a 'rho' or 't' key")
    if "rho" in obj:
        raw = np.asarray(obj["rho"], dtype=float)
        if raw.shape != (4, 4, 2):
            raise ValidationError(f"state JSON 'rho' must be 4x4 [re, im] pairs, got shape {raw.shape}")
        rho = raw[..., 0] + 1j * raw[..., 1]
        rho = validate_density(rho)
        if "t" in obj:
            t = validate_coeffs(np.asarray(obj["t"], dtype=float))
            dev = np.max(np.abs(t - coeffs_from_density(rho, validate=False)))
            if dev > 1e-9:
                raise ValidationError(f"state JSON 'rho' and 't' disagree by {dev:.3e}")
        return rho
    if "t" in obj:
        t = validate_coeffs(np.asarray(obj["t"], dtype=float))
        return validate_density(density_from_coeffs(t, validate=False))
    raise ValidationError("state JSON must contain a 'rho' or 't' key")


def read_state_file(path):
    with open(os.fspath(path), "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"state file is not valid JSON: {exc}") from exc
    return state_from_json(obj)


def write_state_file(path, rho):
    with open(os.fspath(path), "w", encoding="utf-8") as fh:
        json.dump(state_to_json(rho), fh, indent=2, sort_keys=True)
        fh.write("\n")
