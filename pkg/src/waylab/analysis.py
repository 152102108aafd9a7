"""Quantitative trade-offs for measurements under an additive conservation law.

Noise and repeatability measures with their commutator lower bounds, the
Yanase malfunction bound, the theorem verdict, and a generator of random
conservation-respecting schemes used to hunt for counterexamples.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize

from .linalg import (DimensionError, Operator, StateVector, as_operator, as_state,
                     commutator, commutator_norm, eig_hermitian, identity,
                     mat_exp, random_state, tensor)
from .scheme import (ConservedQuantity, DiscretePOVM, MeasurementScheme,
                     accuracy_error, conservation_defect, induced_povm,
                     repeatability_defect, yanase_defect)

DELTA = 1e-3        # gate for "accurate", "repeatable", "Yanase"
DELTA_COMM = 1e-2   # gate for a genuinely noncommuting target
VAR_FLOOR = 1e-14
NUM_FLOOR = 1e-12


class BoundUndefined(ValueError):
    """Zero-variance denominator with a nonzero commutator expectation."""


@dataclass(frozen=True)
class NoiseReport:
    epsilon_sq_state: float
    epsilon_sq_global: float
    ozawa_bound: float
    slack: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RepeatabilityReport:
    mu_sq_state: float
    mu_sq_global: float
    bound: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class WayReport:
    conservation_defect: float
    accuracy_error: float
    repeatability_defect: float
    yanase_defect: float
    commutator_L1_M: float
    theorem_consistent: bool

    def to_dict(self) -> dict:
        return asdict(self)

    def gate(self, delta: float = DELTA) -> bool:
        """True when the scheme looks conserving, accurate and (repeatable or Yanase)."""
        return (self.conservation_defect <= delta and self.accuracy_error <= delta
                and (self.repeatability_defect <= delta or self.yanase_defect <= delta))


def theorem_consistent(cons, acc, rep, yan, comm,
                       delta: float = DELTA, delta_comm: float = DELTA_COMM) -> bool:
    premises = cons <= delta and acc <= delta and (rep <= delta or yan <= delta)
    return not (premises and comm > delta_comm)


# Heisenberg-picture operators

def evolved_pointer(s: MeasurementScheme) -> Operator:
    """Z(tau) = U^dag (1 (x) f(Z)) U."""
    U = s.U.entries
    fz = np.kron(np.eye(s.system_dim), s.scaled_pointer().entries)
    return Operator(U.conj().T @ fz @ U, s.dims)


def evolved_system(s: MeasurementScheme, M) -> Operator:
    """M(tau) = U^dag (M (x) 1) U."""
    U = s.U.entries
    mt = np.kron(as_operator(M).entries, np.eye(s.apparatus_dim))
    return Operator(U.conj().T @ mt @ U, s.dims)


def _check_M(s: MeasurementScheme, M) -> Operator:
    M = as_operator(M)
    if M.shape != (s.system_dim, s.system_dim):
        raise DimensionError("target observable does not act on the system")
    if not M.is_hermitian():
        raise ValueError("target observable must be hermitian")
    return M


def noise_operator(s: MeasurementScheme, M) -> Operator:
    """N = U^dag (1 (x) f(Z)) U - M (x) 1."""
    M = _check_M(s, M)
    return evolved_pointer(s) - tensor(M, identity(s.apparatus_dim))


def repeatability_operator(s: MeasurementScheme, M) -> Operator:
    """M(tau) - Z(tau)."""
    M = _check_M(s, M)
    return evolved_system(s, M) - evolved_pointer(s)


def _product(s: MeasurementScheme, psi) -> np.ndarray:
    psi = as_state(psi)
    return np.kron(psi.amplitudes, s.phi.amplitudes)


def _sq_expect(A: Operator, v: np.ndarray) -> float:
    w = A.entries @ v
    return float(np.vdot(w, w).real)


def _sq_global(s: MeasurementScheme, A: Operator) -> float:
    W = A.entries @ s.isometry()
    comp = W.conj().T @ W
    return float(np.linalg.eigvalsh(0.5 * (comp + comp.conj().T))[-1])


def _variance(A: Operator, v: np.ndarray) -> float:
    m = np.vdot(v, A.entries @ v).real
    m2 = np.vdot(A.entries @ v, A.entries @ v).real
    return max(float(m2 - m * m), 0.0)


def commutator_bound(s: MeasurementScheme, A: Operator, c: ConservedQuantity, psi) -> float:
    """(1/4)|<[A, L]>|^2 / ((Delta_psi L1)^2 + (Delta_phi L2)^2) in psi (x) phi."""
    psi = as_state(psi)
    v = _product(s, psi)
    num = abs(np.vdot(v, commutator(A, c.total()).entries @ v))
    den = _variance(c.L1, psi.amplitudes) + _variance(c.L2, s.phi.amplitudes)
    if num <= NUM_FLOOR:
        return 0.0
    if den < VAR_FLOOR:
        raise BoundUndefined("conserved quantity has zero variance but the "
                             "commutator expectation does not vanish")
    return 0.25 * num * num / den


def commutator_numerator(s: MeasurementScheme, A: Operator, c: ConservedQuantity, psi) -> float:
    """|<[A, L]>| in psi (x) phi."""
    v = _product(s, psi)
    return float(abs(np.vdot(v, commutator(A, c.total()).entries @ v)))


def epsilon_sq(s: MeasurementScheme, M, psi) -> float:
    """<N^2> in psi (x) phi."""
    return _sq_expect(noise_operator(s, M), _product(s, psi))


def epsilon_sq_global(s: MeasurementScheme, M) -> float:
    """Supremum of epsilon_sq over system states (top compression eigenvalue)."""
    return _sq_global(s, noise_operator(s, M))


def ozawa_bound(s: MeasurementScheme, M, c: ConservedQuantity, psi) -> float:
    return commutator_bound(s, noise_operator(s, M), c, psi)


def mu_sq(s: MeasurementScheme, M, psi) -> float:
    """<(M(tau) - Z(tau))^2> in psi (x) phi."""
    return _sq_expect(repeatability_operator(s, M), _product(s, psi))


def mu_sq_global(s: MeasurementScheme, M) -> float:
    return _sq_global(s, repeatability_operator(s, M))


def mu_bound(s: MeasurementScheme, M, c: ConservedQuantity, psi) -> float:
    return commutator_bound(s, repeatability_operator(s, M), c, psi)


def noise_report(s: MeasurementScheme, M, c: ConservedQuantity, psi) -> NoiseReport:
    e = epsilon_sq(s, M, psi)
    b = ozawa_bound(s, M, c, psi)
    return NoiseReport(e, epsilon_sq_global(s, M), b, e - b)


def repeatability_report(s: MeasurementScheme, M, c: ConservedQuantity, psi) -> RepeatabilityReport:
    return RepeatabilityReport(mu_sq(s, M, psi), mu_sq_global(s, M), mu_bound(s, M, c, psi))


def yanase_bound(phi, J_z) -> float:
    """1 / (8 <phi|J_z^2|phi>), the malfunction-probability floor."""
    phi = as_state(phi)
    J_z = as_operator(J_z)
    w = J_z.entries @ phi.amplitudes
    m2 = float(np.vdot(w, w).real)
    if m2 <= 0:
        raise ValueError("second moment of J_z vanishes; bound is infinite")
    return 1.0 / (8.0 * m2)


def way_verdict(s: MeasurementScheme, M, c: ConservedQuantity,
                target: DiscretePOVM | None = None, seed: int = 0) -> WayReport:
    M = _check_M(s, M)
    target = DiscretePOVM.spectral(M) if target is None else target
    cons = conservation_defect(s, c)
    acc = accuracy_error(s, target)
    rep = repeatability_defect(s, target, seed=seed)
    yan = yanase_defect(s, c)
    comm = commutator_norm(c.L1, M)
    return WayReport(cons, acc, rep, yan, comm,
                     theorem_consistent(cons, acc, rep, yan, comm))


# random conserving schemes

def sector_projectors(c: ConservedQuantity) -> list[np.ndarray]:
    """Orthonormal bases (columns) of the eigenspaces of the total L."""
    out = []
    for _, P in eig_hermitian(c.total()):
        w, v = np.linalg.eigh(P.entries)
        out.append(v[:, w > 0.5])
    return out


def conserving_generator(c: ConservedQuantity, params: np.ndarray) -> np.ndarray:
    """Hermitian H = sum_k B_k R_k B_k^dag with R_k built from ``params``.

    Each sector of size m consumes m*m reals (diagonal, then real and
    imaginary strict upper parts).
    """
    sectors = sector_projectors(c)
    n = sectors[0].shape[0]
    H = np.zeros((n, n), dtype=complex)
    pos = 0
    for B in sectors:
        m = B.shape[1]
        R = np.zeros((m, m), dtype=complex)
        R[np.diag_indices(m)] = params[pos:pos + m]
        pos += m
        iu = np.triu_indices(m, 1)
        k = len(iu[0])
        R[iu] = params[pos:pos + k] + 1j * params[pos + k:pos + 2 * k]
        pos += 2 * k
        R = R + np.triu(R, 1).conj().T
        H += B @ R @ B.conj().T
    return H


def generator_size(c: ConservedQuantity) -> int:
    return sum(B.shape[1] ** 2 for B in sector_projectors(c))


def _pointer(rng, da: int, values, L2: Operator, yanase: bool) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.size != da:
        raise ValueError("need one pointer value per apparatus dimension")
    vals = rng.permutation(values)
    if yanase:
        # eigenbasis of L2, rotated only inside its degenerate eigenspaces
        V = np.zeros((da, da), dtype=complex)
        for _, P in eig_hermitian(L2):
            w, v = np.linalg.eigh(P.entries)
            B = v[:, w > 0.5]
            m = B.shape[1]
            q, _ = np.linalg.qr(rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m)))
            V += (B @ q) @ B.conj().T
    else:
        z = rng.normal(size=(da, da)) + 1j * rng.normal(size=(da, da))
        V, _ = np.linalg.qr(z)
    Z = V @ np.diag(vals) @ V.conj().T
    return 0.5 * (Z + Z.conj().T)


def random_conserving_scheme(seed: int, dims, c: ConservedQuantity,
                             pointer_values=None, yanase: bool = False,
                             scale: float = np.pi) -> MeasurementScheme:
    """Random scheme whose coupling U = exp(-iH) commutes with L.

    H is drawn block-wise inside the eigensectors of L1 (x) 1 + 1 (x) L2.
    The apparatus state is random; the pointer has the given eigenvalues
    (default: evenly spaced) in a random eigenbasis, or in an eigenbasis of
    L2 when ``yanase`` is set.  Deterministic in ``seed``.
    """
    ds, da = int(dims[0]), int(dims[1])
    if c.L1.shape[0] != ds or c.L2.shape[0] != da:
        raise ValueError("conserved quantity does not match dims")
    rng = np.random.default_rng(seed)
    params = scale * rng.normal(size=generator_size(c))
    H = conserving_generator(c, params)
    U = mat_exp(Operator(H, (ds, da)), 1.0)
    phi = random_state(rng, da)
    if pointer_values is None:
        pointer_values = np.arange(da, dtype=float)
    Z = _pointer(rng, da, pointer_values, c.L2, yanase)
    return MeasurementScheme(ds, da, U, phi, Operator(Z))


def _smooth_accuracy(s_dims, c, H_params, phi_params, Z, M_proj):
    ds, da = s_dims
    H = conserving_generator(c, H_params)
    w, v = np.linalg.eigh(H)
    U = (v * np.exp(-1j * w)) @ v.conj().T
    phi = phi_params[:da] + 1j * phi_params[da:]
    phi = phi / np.linalg.norm(phi)
    V = np.kron(np.eye(ds), phi.reshape(-1, 1))
    W = U @ V
    total = 0.0
    for Pz, Pm in zip(Z, M_proj):
        E = W.conj().T @ np.kron(np.eye(ds), Pz) @ W
        total += np.sum(np.abs(E - Pm) ** 2)
    return total


@dataclass(frozen=True)
class CounterexampleSearch:
    """Outcome of an optimizer run trying to beat the theorem."""

    best_accuracy_error: float
    best_params: np.ndarray
    start_values: tuple[float, ...]
    found: bool


def search_counterexample(c: ConservedQuantity, M, pointer_values, seed: int = 0,
                          n_starts: int = 8, maxiter: int = 400) -> CounterexampleSearch:
    """Minimize the accuracy error of a Yanase-compatible conserving scheme.

    The pointer is fixed to the eigenbasis of L2 with the given values, so
    the Yanase condition holds exactly and the only question is how close
    the induced observable can get to the spectral measure of M.  Returns
    the best operator-norm accuracy error found over seeded multi-starts.
    """
    M = as_operator(M)
    ds, da = M.shape[0], c.L2.shape[0]
    target_M = DiscretePOVM.spectral(M)
    w2, v2 = np.linalg.eigh(c.L2.entries)
    pv = np.asarray(pointer_values, dtype=float)
    Zp, Mp = [], []
    for lab in np.unique(pv):
        cols = v2[:, np.abs(pv - lab) < 1e-12]
        Zp.append(cols @ cols.conj().T)
        Mp.append(target_M.effect(lab).entries)
    rng = np.random.default_rng(seed)
    nH = generator_size(c)
    best, best_x, starts = np.inf, None, []

    def obj(x):
        return _smooth_accuracy((ds, da), c, x[:nH], x[nH:], Zp, Mp)

    for _ in range(n_starts):
        x0 = np.concatenate([np.pi * rng.normal(size=nH), rng.normal(size=2 * da)])
        res = minimize(obj, x0, method="BFGS", options={"maxiter": maxiter, "gtol": 1e-9})
        starts.append(float(res.fun))
        if res.fun < best:
            best, best_x = float(res.fun), res.x
    # report in operator norm from the best parameters
    H = conserving_generator(c, best_x[:nH])
    U = mat_exp(Operator(H, (ds, da)), 1.0)
    phi = best_x[nH:nH + da] + 1j * best_x[nH + da:]
    Z = v2 @ np.diag(pv) @ v2.conj().T
    s = MeasurementScheme(ds, da, U, StateVector(phi / np.linalg.norm(phi)), Operator(Z))
    acc = accuracy_error(s, target_M)
    return CounterexampleSearch(acc, best_x, tuple(starts), acc <= DELTA)


def sample_inequality_slacks(s: MeasurementScheme, M, c: ConservedQuantity,
                             n_states: int, seed: int = 0) -> tuple[float, float]:
    """Minimum of eps^2 - ozawa and mu^2 - mu_bound over seeded random inputs."""
    rng = np.random.default_rng(seed)
    N = noise_operator(s, M)
    R = repeatability_operator(s, M)
    LN = commutator(N, c.total()).entries
    LR = commutator(R, c.total()).entries
    var2 = _variance(c.L2, s.phi.amplitudes)
    worst_e = worst_m = np.inf
    for _ in range(n_states):
        psi = random_state(rng, s.system_dim)
        v = np.kron(psi.amplitudes, s.phi.amplitudes)
        den = _variance(c.L1, psi.amplitudes) + var2
        for A, LA, slot in ((N, LN, 0), (R, LR, 1)):
            num = abs(np.vdot(v, LA @ v))
            if num <= NUM_FLOOR:
                bound = 0.0
            elif den < VAR_FLOOR:
                raise BoundUndefined("zero variance with nonzero commutator")
            else:
                bound = 0.25 * num * num / den
            slack = _sq_expect(A, v) - bound
            if slot == 0:
                worst_e = min(worst_e, slack)
            else:
                worst_m = min(worst_m, slack)
    return float(worst_e), float(worst_m)


__all__ = [
    "DELTA", "DELTA_COMM", "BoundUndefined", "NoiseReport", "RepeatabilityReport",
    "WayReport", "theorem_consistent", "evolved_pointer", "evolved_system",
    "noise_operator", "repeatability_operator", "commutator_bound",
    "commutator_numerator", "epsilon_sq", "epsilon_sq_global", "ozawa_bound",
    "mu_sq", "mu_sq_global", "mu_bound", "noise_report", "repeatability_report",
    "yanase_bound", "way_verdict", "sector_projectors", "conserving_generator",
    "generator_size", "random_conserving_scheme", "search_counterexample",
    "CounterexampleSearch", "sample_inequality_slacks", "induced_povm",
]
