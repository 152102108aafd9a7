"""Measurement schemes and the observables they induce.

A scheme couples a system (dimension ``system_dim``) to an apparatus
(``apparatus_dim``) through a unitary ``U``.  The apparatus starts in
``phi`` and is read out by the spectral projections of the pointer ``Z``;
the raw pointer value ``z`` is reported as ``f(z)``.  Composite vectors are
ordered system (x) apparatus throughout.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .linalg import (ATOL, NORM_TOL, DimensionError, Operator, StateVector,
                     as_operator, as_state, commutator_norm, eig_hermitian,
                     identity, partial_trace, random_state, tensor)

LABEL_TOL = 1e-9
PROB_FLOOR = 1e-9
N_RANDOM_STATES = 100


class SchemeError(ValueError):
    """Raised when a scheme violates its structural invariants."""


class LabelMismatch(ValueError):
    """Raised when a target observable uses outcome labels the scheme lacks."""


@dataclass(frozen=True)
class AffineMap:
    """Outcome scaling z -> a*z + b with a != 0."""

    a: float = 1.0
    b: float = 0.0

    def __post_init__(self):
        if self.a == 0 or not np.isfinite(self.a) or not np.isfinite(self.b):
            raise SchemeError("scaling map needs finite a != 0 and finite b")

    def __call__(self, z):
        return self.a * z + self.b

    def inverse(self, x):
        return (x - self.b) / self.a

    def to_dict(self) -> dict:
        return {"a": float(self.a), "b": float(self.b)}


IDENTITY_MAP = AffineMap()


@dataclass(frozen=True)
class ConservedQuantity:
    """Additive conserved quantity L = L1 (x) 1 + 1 (x) L2."""

    L1: Operator
    L2: Operator

    def __post_init__(self):
        object.__setattr__(self, "L1", as_operator(self.L1))
        object.__setattr__(self, "L2", as_operator(self.L2))
        if not (self.L1.is_hermitian() and self.L2.is_hermitian()):
            raise SchemeError("conserved quantity parts must be hermitian")

    def total(self) -> Operator:
        d1, d2 = self.L1.shape[0], self.L2.shape[0]
        return tensor(self.L1, identity(d2)) + tensor(identity(d1), self.L2)


@dataclass(frozen=True, eq=False)
class DiscretePOVM:
    """Finitely many (label, effect) pairs summing to the identity."""

    outcomes: tuple[tuple[float, Operator], ...]

    def __init__(self, outcomes: Iterable[tuple[float, Operator]], check: bool = True):
        items = tuple(sorted(((float(x), as_operator(e)) for x, e in outcomes),
                             key=lambda t: t[0]))
        object.__setattr__(self, "outcomes", items)
        if check:
            self.validate()

    def validate(self, tol: float = ATOL) -> None:
        if not self.outcomes:
            raise SchemeError("a POVM needs at least one outcome")
        labels = self.labels
        if np.any(np.diff(labels) <= LABEL_TOL):
            raise SchemeError("POVM labels must be distinct")
        for x, e in self.outcomes:
            if not e.is_effect(tol):
                raise SchemeError(f"effect for outcome {x} is not in [0, 1]")
        if np.linalg.norm(self.total().entries - np.eye(self.dim), 2) > tol:
            raise SchemeError("effects do not sum to the identity")

    @property
    def dim(self) -> int:
        return self.outcomes[0][1].shape[0]

    @property
    def labels(self) -> np.ndarray:
        return np.array([x for x, _ in self.outcomes])

    def total(self) -> Operator:
        acc = np.zeros((self.dim, self.dim), dtype=complex)
        for _, e in self.outcomes:
            acc = acc + e.entries
        return Operator(acc, self.outcomes[0][1].dims)

    def find(self, label: float, tol: float = LABEL_TOL) -> Operator | None:
        for x, e in self.outcomes:
            if abs(x - label) <= tol:
                return e
        return None

    def effect(self, label: float, tol: float = LABEL_TOL) -> Operator:
        """Effect for ``label``; labels the POVM does not use map to zero."""
        e = self.find(label, tol)
        if e is None:
            return Operator(np.zeros((self.dim, self.dim)), self.outcomes[0][1].dims)
        return e

    def probabilities(self, psi) -> np.ndarray:
        return np.array([e.expect(psi).real for _, e in self.outcomes])

    def __iter__(self):
        return iter(self.outcomes)

    def __len__(self):
        return len(self.outcomes)

    @classmethod
    def spectral(cls, M) -> "DiscretePOVM":
        """Spectral measure of a hermitian operator, labelled by eigenvalues."""
        return cls([(w, p) for w, p in eig_hermitian(M)])


@dataclass(frozen=True, eq=False)
class OutcomeState:
    """Unnormalized post-measurement system state for one pointer outcome."""

    label: float
    unnormalized_state: Operator
    probability: float

    def normalized(self) -> Operator:
        if self.probability <= 0:
            raise ValueError("outcome has zero probability")
        return self.unnormalized_state / self.probability


@dataclass(frozen=True, eq=False)
class MeasurementScheme:
    """The coupling data (apparatus dim, U, phi, Z, f) of a measurement."""

    system_dim: int
    apparatus_dim: int
    U: Operator
    phi: StateVector
    Z: Operator
    f: AffineMap = field(default=IDENTITY_MAP)

    def __post_init__(self):
        ds, da = int(self.system_dim), int(self.apparatus_dim)
        object.__setattr__(self, "system_dim", ds)
        object.__setattr__(self, "apparatus_dim", da)
        U = Operator(np.asarray(self.U, dtype=complex), (ds, da))
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "phi", as_state(self.phi))
        object.__setattr__(self, "Z", as_operator(self.Z))
        if not isinstance(self.f, AffineMap):
            object.__setattr__(self, "f", AffineMap(*self.f))
        self.validate()

    def validate(self) -> None:
        ds, da = self.system_dim, self.apparatus_dim
        if self.U.shape != (ds * da, ds * da):
            raise SchemeError("U does not act on system (x) apparatus")
        if not self.U.is_unitary():
            raise SchemeError("U is not unitary to 1e-10")
        if self.phi.dim != da:
            raise SchemeError("phi does not live on the apparatus")
        if abs(self.phi.norm() ** 2 - 1) > NORM_TOL:
            raise SchemeError("phi is not normalized to 1e-12")
        if self.Z.shape != (da, da) or not self.Z.is_hermitian():
            raise SchemeError("Z must be a hermitian apparatus operator")

    @property
    def dims(self) -> tuple[int, int]:
        return (self.system_dim, self.apparatus_dim)

    def isometry(self) -> np.ndarray:
        """V = 1 (x) |phi>, mapping system vectors into the composite space."""
        return np.kron(np.eye(self.system_dim), self.phi.amplitudes.reshape(-1, 1))

    def pointer_spectrum(self):
        return eig_hermitian(self.Z)

    def scaled_pointer(self) -> Operator:
        """f(Z) through the spectral calculus (exact for affine f)."""
        return self.f.a * self.Z + self.f.b * identity(self.apparatus_dim)

    def compress(self, A) -> Operator:
        """(1 (x) <phi|) A (1 (x) |phi>) for a composite operator A."""
        V = self.isometry()
        return Operator(V.conj().T @ np.asarray(A) @ V)

    def with_phi(self, phi) -> "MeasurementScheme":
        return MeasurementScheme(self.system_dim, self.apparatus_dim, self.U, phi, self.Z, self.f)


# formalism

def induced_povm(s: MeasurementScheme) -> DiscretePOVM:
    """Effects E(f(z)) = (1 (x) <phi|) U^dag (1 (x) P_z) U (1 (x) |phi>)."""
    V = s.isometry()
    W = s.U.entries @ V
    out = []
    for z, P in s.pointer_spectrum():
        Pc = np.kron(np.eye(s.system_dim), P.entries)
        E = W.conj().T @ Pc @ W
        out.append((float(s.f(z)), Operator(0.5 * (E + E.conj().T))))
    return DiscretePOVM(out)


def final_state(s: MeasurementScheme, psi) -> StateVector:
    """U (psi (x) phi)."""
    psi = as_state(psi)
    if psi.dim != s.system_dim:
        raise DimensionError("input state does not live on the system")
    return s.U @ tensor(StateVector(psi.amplitudes), s.phi)


def pointer_probabilities(s: MeasurementScheme, psi) -> list[tuple[float, float]]:
    """Outcome probabilities read directly off the coupled final state."""
    out = final_state(s, psi).amplitudes
    res = []
    for z, P in s.pointer_spectrum():
        Pc = np.kron(np.eye(s.system_dim), P.entries)
        res.append((float(s.f(z)), float(np.vdot(out, Pc @ out).real)))
    return res


def outcome_states(s: MeasurementScheme, psi) -> list[OutcomeState]:
    """One unnormalized conditional system state per pointer outcome."""
    out = final_state(s, psi).amplitudes
    res = []
    for z, P in s.pointer_spectrum():
        v = np.kron(np.eye(s.system_dim), P.entries) @ out
        pv = np.outer(v, v.conj())
        rho = partial_trace(Operator(pv, s.dims), keep=[0])
        rho = Operator(0.5 * (rho.entries + rho.entries.conj().T))
        res.append(OutcomeState(float(s.f(z)), rho, float(rho.trace().real)))
    return res


def check_labels(s_labels: Sequence[float], target: DiscretePOVM) -> None:
    for x in target.labels:
        if not np.any(np.abs(np.asarray(s_labels) - x) <= LABEL_TOL):
            raise LabelMismatch(f"target label {x} is not produced by the scheme")


def sample_states(target: DiscretePOVM, n_random: int = N_RANDOM_STATES,
                  seed: int = 0) -> list[StateVector]:
    """Eigenvectors of every target effect followed by seeded random states."""
    states = []
    for _, e in target:
        w, v = np.linalg.eigh(e.entries)
        for k in range(len(w)):
            if w[k] > PROB_FLOOR:
                states.append(StateVector(v[:, k]))
    rng = np.random.default_rng(seed)
    states.extend(random_state(rng, target.dim) for _ in range(n_random))
    return states


def repeatability_defect(s: MeasurementScheme, target: DiscretePOVM,
                         states: Sequence | None = None, seed: int = 0) -> float:
    """Worst value of 1 - tr[rho_X E(X)] over outcomes and sampled inputs.

    ``rho_X`` is the normalized post-measurement state for outcome ``X``;
    outcomes with probability below 1e-9 are skipped.  Scheme outcomes the
    target does not name are compared against a zero effect.
    """
    povm = induced_povm(s)
    check_labels(povm.labels, target)
    if states is None:
        states = sample_states(target, seed=seed)
    worst = 0.0
    for psi in states:
        for os_ in outcome_states(s, psi):
            if os_.probability <= PROB_FLOOR:
                continue
            E = target.effect(os_.label)
            val = 1.0 - float(np.trace(os_.normalized().entries @ E.entries).real)
            worst = max(worst, val)
    return worst


def yanase_defect(s: MeasurementScheme, c: ConservedQuantity) -> float:
    """||[Z, L2]|| / (||Z|| ||L2||); zero when either operator vanishes."""
    nz, nl = s.Z.norm(), c.L2.norm()
    if nz == 0 or nl == 0:
        return 0.0
    return commutator_norm(s.Z, c.L2) / (nz * nl)


def conservation_defect(s: MeasurementScheme, c: ConservedQuantity) -> float:
    """||[U, L1 (x) 1 + 1 (x) L2]||."""
    return commutator_norm(s.U, c.total())


def accuracy_error(s: MeasurementScheme, target: DiscretePOVM) -> float:
    """Largest per-outcome operator-norm gap between induced and target effects."""
    povm = induced_povm(s)
    check_labels(povm.labels, target)
    worst = 0.0
    for x, e in povm:
        worst = max(worst, (e - target.effect(x)).norm())
    return worst


# serialization

def _pairs(a) -> list[list[float]]:
    flat = np.asarray(a, dtype=complex).reshape(-1)
    return [[float(z.real), float(z.imag)] for z in flat]


def _unpairs(p, shape) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise SchemeError("complex entries must be [re, im] pairs")
    z = arr[:, 0] + 1j * arr[:, 1]
    if z.size != int(np.prod(shape)):
        raise SchemeError(f"expected {int(np.prod(shape))} entries, got {z.size}")
    return z.reshape(shape)


def scheme_to_dict(s: MeasurementScheme) -> dict:
    return {
        "system_dim": s.system_dim,
        "apparatus_dim": s.apparatus_dim,
        "U": _pairs(s.U.entries),
        "phi": _pairs(s.phi.amplitudes),
        "Z": _pairs(s.Z.entries),
        "f": s.f.to_dict(),
    }


def scheme_from_dict(d: dict) -> MeasurementScheme:
    try:
        ds, da = int(d["system_dim"]), int(d["apparatus_dim"])
        n = ds * da
        return MeasurementScheme(
            ds, da,
            Operator(_unpairs(d["U"], (n, n)), (ds, da)),
            StateVector(_unpairs(d["phi"], (da,))),
            Operator(_unpairs(d["Z"], (da, da))),
            AffineMap(float(d["f"]["a"]), float(d["f"]["b"])),
        )
    except KeyError as exc:
        raise SchemeError(f"missing key {exc}") from None


def dumps_scheme(s: MeasurementScheme, **extra) -> str:
    doc = dict(extra)
    doc.update(scheme_to_dict(s))
    return json.dumps(doc, indent=1, sort_keys=True)


def loads_scheme(text: str) -> MeasurementScheme:
    return scheme_from_dict(json.loads(text))
