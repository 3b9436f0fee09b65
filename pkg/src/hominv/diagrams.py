"""Singlet-projection diagrams over copies of a two-qubit state.

A diagram places n copies of the same state side by side (copy c owns
qubits (c, "A") and (c, "B")) and projects chosen qubit pairs onto the
two-qubit singlet.  Its value is

    value = Tr[ (prod_edges P_minus) rho^(x n) ],

a degree-n polynomial in the Pauli coefficients of the state.  Because
every qubit is touched by at most one projector, the Pauli sum
factorises over the connected components of the copy graph, and each
component is a simple path or cycle:

    isolated copy  ->  4 * t[0,0]
    path           ->  4 * [T_1 D T_2 D ... T_k]_{0,0}
    cycle          ->  Tr[D T_1 D T_2 ... D T_k]

with D = diag(1,-1,-1,-1), T_i = t when the walk enters copy i on its
"A" qubit and t^T when it enters on "B", and an overall factor 4^{-n}.
The walk products use ``np.dot`` so coefficient matrices of dtype
object (e.g. ``fractions.Fraction``) are contracted exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, ValidationError
from . import pauli

__all__ = [
    "Diagram",
    "contract",
    "subset_values",
    "pattern_probabilities",
    "dense_value",
    "chain",
    "loop",
    "cross_chain",
    "cross_loop",
    "alternating_sides",
    "probe_coeffs",
    "same_value",
]

SIDES = ("A", "B")

_ETA_COL = np.array([1, -1, -1, -1]).reshape(4, 1)


def _other(side):
    return "B" if side == "A" else "A"


def _norm_edge(edge):
    try:
        (c1, s1), (c2, s2) = edge
    except (TypeError, ValueError):
        raise ValidationError(f"edge must be a pair of (copy, side) endpoints, got {edge!r}")
    a, b = (int(c1), str(s1)), (int(c2), str(s2))
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class Diagram:
    """n copies plus a set of singlet projectors on disjoint qubit pairs.

    Edge order is preserved as given (it carries labelling information,
    e.g. which detector pair watches which projector); the contraction
    value does not depend on it.
    """

    n_copies: int
    edges: tuple = field(default=())

    def __post_init__(self):
        if not isinstance(self.n_copies, int) or self.n_copies < 1:
            raise ValidationError(f"n_copies must be a positive integer, got {self.n_copies!r}")
        edges = tuple(_norm_edge(e) for e in self.edges)
        object.__setattr__(self, "edges", edges)
        seen = set()
        for (p, q) in edges:
            for copy, side in (p, q):
                if side not in SIDES:
                    raise ValidationError(f"qubit side must be 'A' or 'B', got {side!r}")
                if not 1 <= copy <= self.n_copies:
                    raise ValidationError(f"copy index {copy} outside 1..{self.n_copies}")
                if (copy, side) in seen:
                    raise ValidationError(f"qubit ({copy}, {side!r}) used by more than one projector")
                seen.add((copy, side))
            if p == q:
                raise ValidationError(f"edge endpoints coincide: {p}")

    @property
    def n_edges(self):
        return len(self.edges)

    def subdiagram(self, mask):
        """Same copies, keeping edge i iff bit i of ``mask`` is set."""
        kept = tuple(e for i, e in enumerate(self.edges) if mask >> i & 1)
        return Diagram(self.n_copies, kept)

    def canonical_key(self):
        """Order-insensitive identity of the edge set (copies as labelled)."""
        return (self.n_copies, tuple(sorted(self.edges)))


def contract(diagram, t, *, clamp=True):
    """Value of a diagram on coefficient matrix t.

    With ``clamp=True`` (float inputs only) the result is checked to be
    a probability and trimmed of rounding dust; values outside
    [0 - 1e-8, 1 + 1e-8] raise :class:`ValidationError`.  Object-dtype
    inputs (exact arithmetic) are returned untouched.
    """
    t = np.asarray(t)
    if t.shape != (4, 4):
        raise ValidationError(f"coefficient matrix must be 4x4, got shape {t.shape}")
    exact = t.dtype == object

    match = {}
    for (p, q) in diagram.edges:
        match[p] = q
        match[q] = p
    touched = {port[0] for port in match}

    t_t = t.T
    factors = []
    visited = set()
    # paths first: an interior copy has no free qubit, so it must not seed a walk
    for start in sorted(touched):
        if start in visited:
            continue
        free = [s for s in SIDES if (start, s) not in match]
        if not free:
            continue
        walk = []
        cur, enter = start, free[0]
        while True:
            visited.add(cur)
            walk.append(t if enter == "A" else t_t)
            nxt = match.get((cur, _other(enter)))
            if nxt is None:
                break
            cur, enter = nxt
        prod = walk[0]
        for mat in walk[1:]:
            prod = np.dot(prod, mat * _ETA_COL)
        factors.append(4 * prod[0, 0])
    # whatever remains lies on cycles: one eta per edge, the trace closes the walk
    for start in sorted(touched):
        if start in visited:
            continue
        begin = (start, "A")
        walk = []
        cur, enter = begin
        while True:
            visited.add(cur)
            walk.append((t if enter == "A" else t_t) * _ETA_COL)
            nxt = match[(cur, _other(enter))]
            if nxt == begin:
                break
            cur, enter = nxt
        prod = walk[0]
        for mat in walk[1:]:
            prod = np.dot(prod, mat)
        factors.append(prod.trace())

    value = 1
    for f in factors:
        value = value * f
    untouched = diagram.n_copies - len(touched)
    if untouched:
        value = value * (4 * t[0, 0]) ** untouched
    value = value / 4 ** diagram.n_copies

    if exact or not clamp:
        return value
    value = float(value)
    if not -1e-8 <= value <= 1 + 1e-8:
        raise ValidationError(
            f"contraction value {value!r} is not a probability; coefficient matrix is not a physical state"
        )
    return min(max(value, 0.0), 1.0)


def subset_values(diagram, t):
    """Values of every edge-subset diagram, indexed by bitmask.

    Entry S of the returned array keeps edge i iff bit i of S is set.
    """
    m = diagram.n_edges
    if m > 16:
        raise CapacityError(f"subset enumeration supports at most 16 projectors, got {m}")
    q = np.empty(2 ** m, dtype=float)
    for mask in range(2 ** m):
        q[mask] = contract(diagram.subdiagram(mask), t, clamp=False)
    return q


def pattern_probabilities(diagram, t, *, atol=1e-9):
    """Probability of each anticoalescence/coalescence pattern.

    Bit i of the pattern index means projector i fired (the photon pair
    at beam splitter i anticoalesced).  Inclusion-exclusion over the
    coalesced projectors:

        P(pattern) = sum_{T subset of coalesced} (-1)^|T| q(pattern | T)

    The distribution is checked to sum to 1 within ``atol``.
    """
    m = diagram.n_edges
    q = subset_values(diagram, t)
    full = 2 ** m - 1
    probs = np.zeros(2 ** m)
    for pattern in range(2 ** m):
        comp = full & ~pattern
        sub = comp
        acc = 0.0
        while True:
            acc += (-1) ** sub.bit_count() * q[pattern | sub]
            if sub == 0:
                break
            sub = (sub - 1) & comp
        probs[pattern] = acc
    low = probs.min()
    if low < -atol:
        raise ValidationError(f"pattern probability fell to {low:.3e}; coefficient matrix is not a physical state")
    np.clip(probs, 0.0, None, out=probs)
    total = probs.sum()
    if abs(total - 1.0) > atol:
        raise ValidationError(f"pattern probabilities sum to {total!r}, expected 1")
    return probs


# independent dense check: explicit projectors on the full 4^n space

_SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)
_P_MINUS = (np.eye(4) - _SWAP) / 2.0


def _qubit_index(port):
    copy, side = port
    return 2 * (copy - 1) + (0 if side == "A" else 1)


def _embed_two_qubit(op, qa, qb, n_qubits):
    dim = 2 ** n_qubits
    full = np.kron(op, np.eye(2 ** (n_qubits - 2))).reshape((2,) * (2 * n_qubits))
    order = [qa, qb] + [p for p in range(n_qubits) if p not in (qa, qb)]
    perm = [order.index(p) for p in range(n_qubits)]
    full = full.transpose(perm + [n_qubits + i for i in perm])
    return full.reshape(dim, dim)


def dense_value(diagram, rho):
    """Evaluate a diagram by explicit matrix algebra on rho^(x n).

    Deliberately shares no code with :func:`contract`; limited to 4
    copies (a 256-dimensional space) by :class:`CapacityError`.
    """
    if diagram.n_copies > 4:
        raise CapacityError(f"dense evaluation supports at most 4 copies, got {diagram.n_copies}")
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValidationError(f"density matrix must be 4x4, got shape {rho.shape}")
    n_qubits = 2 * diagram.n_copies
    proj = np.eye(2 ** n_qubits, dtype=complex)
    for (p, q) in diagram.edges:
        proj = proj @ _embed_two_qubit(_P_MINUS, _qubit_index(p), _qubit_index(q), n_qubits)
    state = np.array([[1.0]], dtype=complex)
    for _ in range(diagram.n_copies):
        state = np.kron(state, rho)
    return float(np.trace(proj @ state).real)


# shape generators for the catalogued topologies

def alternating_sides(length, first):
    if first not in SIDES:
        raise ValidationError(f"side must be 'A' or 'B', got {first!r}")
    out = []
    side = first
    for _ in range(length):
        out.append(side)
        side = _other(side)
    return "".join(out)


def chain(sides):
    """Open chain of same-side projectors, e.g. "ABA"; sides must alternate."""
    sides = str(sides).upper()
    if not sides:
        raise ValidationError("chain needs at least one projector")
    for a, b in zip(sides, sides[1:]):
        if a == b:
            raise ValidationError(f"chain sides must alternate, got {sides!r}")
    edges = tuple(((i + 1, s), (i + 2, s)) for i, s in enumerate(sides))
    return Diagram(len(sides) + 1, edges)


def loop(sides):
    """Closed chain of same-side projectors; alternation forces even length."""
    sides = str(sides).upper()
    k = len(sides)
    if k < 2 or k % 2:
        raise ValidationError(f"same-side loop needs an even number of projectors, got {k}")
    for a, b in zip(sides, sides[1:] + sides[0]):
        if a == b:
            raise ValidationError(f"loop sides must alternate cyclically, got {sides!r}")
    edges = tuple(((i + 1, s), ((i + 1) % k + 1, s)) for i, s in enumerate(sides))
    return Diagram(k, edges)


def cross_chain(n_edges, *, flipped=False):
    """Open chain of cross projectors (each ties an "A" qubit to a "B")."""
    if n_edges < 1:
        raise ValidationError("cross chain needs at least one projector")
    lead, tail = ("B", "A") if flipped else ("A", "B")
    edges = tuple(((i + 1, lead), (i + 2, tail)) for i in range(n_edges))
    return Diagram(n_edges + 1, edges)


def cross_loop(n_edges, *, flipped=False):
    """Closed chain of cross projectors; one projector gives the 1-copy loop."""
    if n_edges < 1:
        raise ValidationError("cross loop needs at least one projector")
    lead, tail = ("B", "A") if flipped else ("A", "B")
    edges = tuple(((i + 1, lead), ((i + 1) % n_edges + 1, tail)) for i in range(n_edges))
    return Diagram(n_edges, edges)


def probe_coeffs(count=8, seed=20260822):
    """Deterministic generic states used to compare diagram polynomials."""
    return [
        pauli.coeffs_from_density(pauli.random_state(seed, "mixed-ginibre", stream=i), validate=False)
        for i in range(count)
    ]


def same_value(d1, d2, probes=None, *, tol=1e-10):
    """True when two diagrams agree on every probe state (same polynomial)."""
    if probes is None:
        probes = probe_coeffs()
    return all(
        abs(contract(d1, t, clamp=False) - contract(d2, t, clamp=False)) <= tol
        for t in probes
    )
