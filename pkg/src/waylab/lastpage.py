"""Sector bookkeeping for spin-1/2 measurements that conserve S_z + J_z.

The system carries shifted spin values 0 and 1 (basis psi_0, psi_1).  The
apparatus is written in a J_z eigenbasis with integer labels.  A composite
basis vector psi_i (x) e_j carries i + j units of the conserved quantity.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import Operator, complete_unitary

DEFAULT_LABELS = (-1, 0, 1)
TRACE_TOL = 1e-12
ZERO_TOL = 1e-9


class DecompositionError(AssertionError):
    """The trace and its three-term decomposition disagree."""


def _project(v, labels, k) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    mask = np.asarray(labels) == k
    return np.where(mask, v, 0.0)


def probe_states(phi0p, phi1p, chi_m1p, chi0p, labels=DEFAULT_LABELS):
    """Unnormalized reduced apparatus states for the inputs psi_0 +- psi_1.

    Each vector is first projected onto its J_z sector (labels 0, 1, -1, 0
    in argument order).  Returns ``(rho_plus, rho_minus, vectors)``.
    """
    a = _project(phi0p, labels, 0)
    b = _project(phi1p, labels, 1)
    d = _project(chi_m1p, labels, -1)
    c = _project(chi0p, labels, 0)
    n = len(labels)
    psi0, psi1 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    Psi_p = np.kron(psi0, a + b) + np.kron(psi1, c + d)
    Psi_m = np.kron(psi0, a - b) + np.kron(psi1, d - c)

    def reduce(v):
        t = v.reshape(2, n)
        return t.T @ t.conj()   # sum_i |v_i><v_i| over the system index

    return reduce(Psi_p), reduce(Psi_m), (a, b, c, d)


def distinguishability_trace(phi0p, phi1p, chi_m1p, chi0p, labels=DEFAULT_LABELS):
    """tr(rho+ rho-) and its three nonnegative contributions.

    Returns ``(trace, (t1, t2, t3))`` with t1 = (|phi0'|^2 - |phi1'|^2)^2,
    t2 = (|chi-1'|^2 - |chi0'|^2)^2 and t3 = 2|<phi0'|chi0'>|^2.  Raises
    DecompositionError if the two routes disagree by more than 1e-12
    (relative to the input scale).
    """
    rp, rm, (a, b, c, d) = probe_states(phi0p, phi1p, chi_m1p, chi0p, labels)
    trace = float(np.trace(rp @ rm).real)
    na, nb, nc, nd = (float(np.vdot(x, x).real) for x in (a, b, c, d))
    terms = ((na - nb) ** 2, (nd - nc) ** 2, 2 * abs(np.vdot(a, c)) ** 2)
    scale = max(1.0, (na + nb + nc + nd) ** 2)
    if abs(trace - sum(terms)) > TRACE_TOL * scale:
        raise DecompositionError(f"trace {trace!r} != term sum {sum(terms)!r}")
    return trace, tuple(float(t) for t in terms)


def zero_trace_scenario(phi0p, phi1p, chi_m1p, chi0p, labels=DEFAULT_LABELS,
                        tol: float = ZERO_TOL) -> int | None:
    """Classify a perfectly distinguishing configuration.

    Returns 1 when the chi vectors vanish (final system state psi_0), 2 when
    the phi vectors vanish (final system state psi_1), 0 for a zero trace
    that is neither (possible only with degenerate sectors), and None when
    the trace is nonzero.
    """
    trace, _ = distinguishability_trace(phi0p, phi1p, chi_m1p, chi0p, labels)
    if trace > tol:
        return None
    _, _, (a, b, c, d) = probe_states(phi0p, phi1p, chi_m1p, chi0p, labels)
    small = lambda x: np.linalg.norm(x) <= np.sqrt(tol)
    if small(c) and small(d) and not small(a):
        return 1
    if small(a) and small(b) and not small(c):
        return 2
    return 0


# four-case analysis of product-form final states

CASES = {
    # (psi'_1 != 0, phi'_1 != 0, psi''_1 != 0, phi''_1 != 0)
    1: (True, False, True, False),
    2: (True, False, False, True),
    3: (False, True, True, False),
    4: (False, True, False, True),
}


@dataclass(frozen=True, eq=False)
class CaseReport:
    case_id: int
    feasible: bool
    obstruction: str
    apparatus_labels: tuple[int, ...]
    U: Operator | None = None
    conservation_defect: float = float("nan")
    evolution_residual: float = float("nan")
    pointer_distinguishable: bool | None = None
    components: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "feasible": self.feasible,
            "obstruction": self.obstruction,
            "apparatus_labels": list(self.apparatus_labels),
            "conservation_defect": self.conservation_defect,
            "evolution_residual": self.evolution_residual,
            "pointer_distinguishable": self.pointer_distinguishable,
        }


def _support(first_nonzero: bool) -> list[int]:
    return [0, 1] if first_nonzero else [0]


def sector_complete(images: dict[int, np.ndarray], labels_sys, labels_app) -> np.ndarray:
    """Build a unitary on C^2 (x) C^n from prescribed images of basis columns.

    ``images`` maps composite column indices to target vectors; each target
    must lie in the sector of its source column.  The rest of every sector
    is completed with an orthonormal basis so the result is block-diagonal
    in the total-charge decomposition.
    """
    T = np.add.outer(np.asarray(labels_sys), np.asarray(labels_app)).reshape(-1)
    dim = T.size
    U = np.zeros((dim, dim), dtype=complex)
    for t in np.unique(T):
        idx = np.flatnonzero(T == t)
        src = [k for k in idx if k in images]
        free = [k for k in idx if k not in images]
        sub = np.eye(dim)[:, idx]
        cols = np.array([images[k] for k in src]).T if src else np.zeros((dim, 0))
        full = complete_unitary(cols.reshape(dim, len(src)), sub)
        for j, k in enumerate(src + free):
            U[:, k] = full[:, j]
    return U


def lastpage_case_analysis(case_id: int, ground_floor: bool = True) -> CaseReport:
    """Feasibility of one of the four product-form patterns.

    The final states for inputs (psi_0 +- psi_1) (x) e_0 are written as
    x (x) y and u (x) v.  Conservation says U(psi_0 e_0) = (x y + u v)/2 has
    charge 0 and U(psi_1 e_0) = (x y - u v)/2 has charge 1, so on every
    composite basis vector of charge T the two products must agree (T = 0),
    be opposite (T = 1), or both vanish (otherwise).  A basis vector in one
    support but not the other therefore obstructs the case.
    """
    if case_id not in CASES:
        raise ValueError(f"case id must be one of 1..4, got {case_id!r}")
    labels = (0, 1, 2) if ground_floor else (-1, 0, 1, 2)
    n = len(labels)
    p1, f1, pp1, ff1 = CASES[case_id]
    sx, sy, su, sv = _support(p1), _support(f1), _support(pp1), _support(ff1)
    S1 = {(i, j) for i in sx for j in sy}
    S2 = {(i, j) for i in su for j in sv}
    for (i, j) in sorted(S1 ^ S2):
        T = i + j
        if T in (0, 1):
            where = "first" if (i, j) in S1 else "second"
            return CaseReport(case_id, False,
                              f"component psi_{i} e_{j} (charge {T}) is nonzero only in the "
                              f"{where} final state, but conservation requires the two to "
                              f"{'agree' if T == 0 else 'cancel'} there", labels)
    for (i, j) in sorted(S1 | S2):
        if i + j not in (0, 1):
            return CaseReport(case_id, False,
                              f"component psi_{i} e_{j} carries charge {i + j}, "
                              f"which neither input has", labels)
    # witness: all-ones magnitudes, second product = (-1)^(i+j) times the first
    x = np.zeros(2); x[sx] = 1.0
    y = np.zeros(n); y[[labels.index(j) for j in sy]] = 1.0
    u = x * np.array([1.0, -1.0])
    v = y * np.array([(-1.0) ** j for j in labels])
    Phi1, Phi2 = np.kron(x, y), np.kron(u, v)
    e0 = labels.index(0)
    col0, col1 = 0 * n + e0, 1 * n + e0
    U = sector_complete({col0: (Phi1 + Phi2) / 2, col1: (Phi1 - Phi2) / 2}, (0, 1), labels)
    L = np.kron(np.diag([0.0, 1.0]), np.eye(n)) + np.kron(np.eye(2), np.diag(labels))
    cons = float(np.linalg.norm(U @ L - L @ U, 2))
    # evolution forms built from the product components
    psi0, psi1 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    ep = np.zeros(n); ep[e0] = 1.0
    in_p, in_m = np.kron(psi0 + psi1, ep), np.kron(psi0 - psi1, ep)
    ps0, ps1 = x[0] * psi0, x[1] * psi1
    f0 = np.zeros(n); f0[e0] = y[e0]
    f1v = y - f0
    if case_id == 1:
        form_p, form_m = np.kron(ps0 + ps1, f0), np.kron(ps0 - ps1, f0)
    else:
        form_p, form_m = np.kron(ps0, f0 + f1v), np.kron(ps0, f0 - f1v)
    resid = max(np.linalg.norm(U @ in_p - form_p), np.linalg.norm(U @ in_m - form_m))
    # are the two final apparatus states perfectly distinguishable?
    out_p, out_m = (U @ in_p).reshape(2, n), (U @ in_m).reshape(2, n)
    rp, rm = out_p.T @ out_p.conj(), out_m.T @ out_m.conj()
    dist = bool(abs(np.trace(rp @ rm)) <= TRACE_TOL)
    comps = {"psi_prime": x, "phi_prime": y, "psi_dprime": u, "phi_dprime": v}
    return CaseReport(case_id, True, "", labels, Operator(U, (2, n)), cons,
                      float(resid), dist, comps)
