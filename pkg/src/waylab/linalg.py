"""Dense complex linear algebra over explicitly dimensioned tensor spaces.

Everything here is a thin, immutable layer over numpy arrays.  Operators and
states carry their tensor-factor dimensions so that partial traces and
embeddings can be checked instead of guessed.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence, Union

import numpy as np

ATOL = 1e-10
DEGENERACY_TOL = 1e-9
NORM_TOL = 1e-12


class DimensionError(ValueError):
    """Raised when tensor-factor dimensions do not line up."""


class NotHermitianError(ValueError):
    """Raised when a hermitian operator was required."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.flags.writeable = False
    return a


def _dims(dims: Union[int, Sequence[int]]) -> tuple[int, ...]:
    if np.isscalar(dims):
        dims = (int(dims),)
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise DimensionError(f"invalid dimension list {dims}")
    return dims


@dataclass(frozen=True, eq=False)
class StateVector:
    """A ket over a tensor product of spaces with the given factor dims."""

    dims: tuple[int, ...]
    amplitudes: np.ndarray

    def __init__(self, amplitudes, dims=None):
        amp = np.asarray(amplitudes, dtype=complex).reshape(-1)
        dims = (amp.size,) if dims is None else _dims(dims)
        if int(np.prod(dims)) != amp.size:
            raise DimensionError(
                f"{amp.size} amplitudes do not fit dims {dims}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", _frozen(amp))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def normalized(self) -> bool:
        return abs(self.norm() ** 2 - 1.0) <= NORM_TOL

    def normalize(self) -> "StateVector":
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / n, self.dims)

    def inner(self, other: "StateVector") -> complex:
        """Return <self|other>."""
        return complex(np.vdot(self.amplitudes, _vec(other)))

    def projector(self) -> "Operator":
        v = self.amplitudes
        return Operator(np.outer(v, v.conj()), self.dims)

    def __add__(self, other):
        return StateVector(self.amplitudes + _vec(other), self.dims)

    def __sub__(self, other):
        return StateVector(self.amplitudes - _vec(other), self.dims)

    def __mul__(self, c):
        return StateVector(self.amplitudes * c, self.dims)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return StateVector(self.amplitudes / c, self.dims)

    def __neg__(self):
        return StateVector(-self.amplitudes, self.dims)

    def __array__(self, dtype=None, copy=None):
        return self.amplitudes if dtype is None else self.amplitudes.astype(dtype)

    def __repr__(self):
        return f"StateVector(dims={self.dims}, norm={self.norm():.6g})"


@dataclass(frozen=True, eq=False)
class Operator:
    """A linear map between tensor spaces, stored as a dense matrix.

    ``dims_out`` defaults to ``dims_in`` (square case).
    """

    dims_in: tuple[int, ...]
    dims_out: tuple[int, ...]
    entries: np.ndarray

    def __init__(self, entries, dims_in=None, dims_out=None):
        m = np.asarray(entries, dtype=complex)
        if m.ndim != 2:
            raise DimensionError("operator entries must be a matrix")
        dims_in = (m.shape[1],) if dims_in is None else _dims(dims_in)
        dims_out = dims_in if dims_out is None else _dims(dims_out)
        if int(np.prod(dims_in)) != m.shape[1] or int(np.prod(dims_out)) != m.shape[0]:
            raise DimensionError(
                f"matrix of shape {m.shape} does not fit dims {dims_out}<-{dims_in}")
        object.__setattr__(self, "dims_in", dims_in)
        object.__setattr__(self, "dims_out", dims_out)
        object.__setattr__(self, "entries", _frozen(m))

    # basic structure
    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @property
    def dims(self) -> tuple[int, ...]:
        if self.dims_in != self.dims_out:
            raise DimensionError("dims is only defined for square operators")
        return self.dims_in

    @property
    def is_square(self) -> bool:
        return self.dims_in == self.dims_out

    def dag(self) -> "Operator":
        return Operator(self.entries.conj().T, self.dims_out, self.dims_in)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def norm(self) -> float:
        """Spectral norm."""
        if self.entries.size == 0:
            return 0.0
        return float(np.linalg.norm(self.entries, 2))

    # predicates
    def is_hermitian(self, tol: float = ATOL) -> bool:
        return self.is_square and bool(
            np.max(np.abs(self.entries - self.entries.conj().T), initial=0.0) <= tol)

    def is_unitary(self, tol: float = ATOL) -> bool:
        if not self.is_square:
            return False
        eye = np.eye(self.shape[0])
        return bool(np.linalg.norm(self.entries.conj().T @ self.entries - eye, 2) <= tol)

    def is_projection(self, tol: float = ATOL) -> bool:
        m = self.entries
        return self.is_hermitian(tol) and bool(np.max(np.abs(m @ m - m), initial=0.0) <= tol)

    def is_effect(self, tol: float = ATOL) -> bool:
        if not self.is_hermitian(tol):
            return False
        w = np.linalg.eigvalsh(_herm(self.entries))
        return bool(w.min() >= -tol and w.max() <= 1 + tol)

    def is_positive(self, tol: float = ATOL) -> bool:
        if not self.is_hermitian(tol):
            return False
        return bool(np.linalg.eigvalsh(_herm(self.entries)).min() >= -tol)

    # arithmetic
    def __matmul__(self, other):
        if isinstance(other, StateVector):
            if other.dim != self.shape[1]:
                raise DimensionError("operator and state dimensions differ")
            return StateVector(self.entries @ other.amplitudes, self.dims_out)
        other = as_operator(other)
        if other.shape[0] != self.shape[1]:
            raise DimensionError(f"cannot compose {self.shape} with {other.shape}")
        return Operator(self.entries @ other.entries, other.dims_in, self.dims_out)

    def __add__(self, other):
        other = as_operator(other)
        _same_shape(self, other)
        return Operator(self.entries + other.entries, self.dims_in, self.dims_out)

    __radd__ = __add__

    def __sub__(self, other):
        other = as_operator(other)
        _same_shape(self, other)
        return Operator(self.entries - other.entries, self.dims_in, self.dims_out)

    def __rsub__(self, other):
        return as_operator(other) - self

    def __mul__(self, c):
        if isinstance(c, (Operator, StateVector)):
            raise TypeError("use @ for operator products")
        return Operator(self.entries * c, self.dims_in, self.dims_out)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return Operator(self.entries / c, self.dims_in, self.dims_out)

    def __neg__(self):
        return Operator(-self.entries, self.dims_in, self.dims_out)

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def expect(self, psi) -> complex:
        v = _vec(psi)
        return complex(np.vdot(v, self.entries @ v))

    def __repr__(self):
        return f"Operator(dims_out={self.dims_out}, dims_in={self.dims_in})"


OpLike = Union[Operator, np.ndarray]


def _herm(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def _vec(v) -> np.ndarray:
    if isinstance(v, StateVector):
        return v.amplitudes
    return np.asarray(v, dtype=complex).reshape(-1)


def _same_shape(a: Operator, b: Operator) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")


def as_operator(a, dims=None) -> Operator:
    """Wrap a matrix as an Operator; existing Operators pass through.

    Explicit ``dims`` override (and are validated against) the recorded ones.
    """
    if isinstance(a, Operator):
        return a if dims is None else Operator(a.entries, dims)
    return Operator(a, dims)


def as_state(v, dims=None) -> StateVector:
    if isinstance(v, StateVector):
        return v
    return StateVector(v, dims)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Distinct eigenvalues (ascending) of a hermitian operator with projectors."""

    eigenvalues: np.ndarray
    projectors: tuple[Operator, ...]

    def __iter__(self):
        return iter(zip(self.eigenvalues, self.projectors))

    def __len__(self):
        return len(self.projectors)

    def ranks(self) -> list[int]:
        return [int(round(p.trace().real)) for p in self.projectors]

    def reconstruct(self) -> Operator:
        return reduce(lambda a, b: a + b,
                      (float(w) * p for w, p in self))

    def apply(self, func) -> Operator:
        """Spectral calculus: sum_i func(w_i) P_i."""
        return reduce(lambda a, b: a + b,
                      (complex(func(float(w))) * p for w, p in self))


# constructors

def identity(dims) -> Operator:
    dims = _dims(dims)
    return Operator(np.eye(int(np.prod(dims))), dims)


def zeros(dims) -> Operator:
    dims = _dims(dims)
    n = int(np.prod(dims))
    return Operator(np.zeros((n, n)), dims)


def diag(values, dims=None) -> Operator:
    values = np.asarray(values, dtype=complex)
    return Operator(np.diag(values), dims)


def basis(dim: int, k: int) -> StateVector:
    v = np.zeros(dim, dtype=complex)
    v[k] = 1.0
    return StateVector(v)


def ket(*components) -> StateVector:
    return StateVector(np.asarray(components, dtype=complex))


def random_state(rng: np.random.Generator, dims) -> StateVector:
    dims = _dims(dims)
    n = int(np.prod(dims))
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return StateVector(v / np.linalg.norm(v), dims)


def random_hermitian(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (a + a.conj().T)


def random_unitary(rng: np.random.Generator, n: int) -> Operator:
    """Haar-distributed unitary via QR with phase correction."""
    z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return Operator(q * (d / np.abs(d)))


def random_density(rng: np.random.Generator, dims, rank: int | None = None) -> Operator:
    dims = _dims(dims)
    n = int(np.prod(dims))
    rank = n if rank is None else rank
    g = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = g @ g.conj().T
    return Operator(rho / np.trace(rho).real, dims)


# spin and qubit helpers

def spin_ops(j: float) -> tuple[Operator, Operator, Operator]:
    """Spin-j matrices (J_x, J_y, J_z), basis ordered m = j, j-1, ..., -j."""
    d = int(round(2 * j + 1))
    if d < 1 or abs(d - (2 * j + 1)) > 1e-12:
        raise ValueError(f"invalid spin {j}")
    m = j - np.arange(d)
    jp = np.zeros((d, d), dtype=complex)
    for k in range(1, d):
        jp[k - 1, k] = np.sqrt(j * (j + 1) - m[k] * (m[k] + 1))
    jx = 0.5 * (jp + jp.conj().T)
    jy = -0.5j * (jp - jp.conj().T)
    return Operator(jx), Operator(jy), Operator(np.diag(m))


def pauli() -> tuple[Operator, Operator, Operator]:
    sx, sy, sz = spin_ops(0.5)
    return 2 * sx, 2 * sy, 2 * sz


def swap(d: int) -> Operator:
    """SWAP on C^d (x) C^d: a (x) b -> b (x) a."""
    s = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            s[j * d + i, i * d + j] = 1.0
    return Operator(s, (d, d))


# core operations

def tensor(*factors):
    """Kronecker product of operators or of states, keeping factor dims."""
    if len(factors) == 1 and isinstance(factors[0], (list, tuple)):
        factors = tuple(factors[0])
    if not factors:
        raise ValueError("tensor() needs at least one factor")
    if all(isinstance(f, StateVector) for f in factors):
        amp = reduce(np.kron, (f.amplitudes for f in factors))
        return StateVector(amp, sum((f.dims for f in factors), ()))
    ops = [as_operator(f) for f in factors]
    m = reduce(np.kron, (o.entries for o in ops))
    return Operator(m, sum((o.dims_in for o in ops), ()),
                    sum((o.dims_out for o in ops), ()))


def partial_trace(op: OpLike, keep: Iterable[int], dims=None) -> Operator:
    """Trace out every factor not listed in ``keep``.

    The kept factors stay in their original order.  Keeping nothing
    returns a 1x1 operator holding the full trace.
    """
    op = as_operator(op, dims)
    if not op.is_square:
        raise DimensionError("partial trace needs a square operator")
    dims = op.dims
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise IndexError(f"factor index out of range for dims {dims}")
    n = len(dims)
    t = op.entries.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # contract the highest indices first so positions stay valid
    for count, i in enumerate(sorted(traced, reverse=True)):
        cur = n - count
        t = np.trace(t, axis1=i, axis2=i + cur)
    kd = tuple(dims[k] for k in keep) or (1,)
    d = int(np.prod(kd))
    return Operator(t.reshape(d, d), kd)


def heisenberg(U: OpLike, A: OpLike) -> Operator:
    """Return U^dagger A U."""
    U, A = as_operator(U), as_operator(A)
    if U.shape != A.shape:
        raise DimensionError(f"unitary {U.shape} and observable {A.shape} differ")
    return Operator(U.entries.conj().T @ A.entries @ U.entries, A.dims_in, A.dims_out)


def eig_hermitian(A: OpLike, tol: float = DEGENERACY_TOL) -> Spectrum:
    """Spectral decomposition with eigenvalues closer than ``tol`` merged."""
    A = as_operator(A)
    if not A.is_hermitian():
        raise NotHermitianError("eig_hermitian requires a hermitian operator")
    w, v = np.linalg.eigh(_herm(A.entries))
    groups: list[list[int]] = []
    for k in range(len(w)):
        if groups and w[k] - w[groups[-1][-1]] < tol:
            groups[-1].append(k)
        else:
            groups.append([k])
    vals, projs = [], []
    for g in groups:
        vg = v[:, g]
        vals.append(float(np.mean(w[g])))
        projs.append(Operator(vg @ vg.conj().T, A.dims))
    return Spectrum(np.array(vals), tuple(projs))


def mat_exp(H: OpLike, t: float = 1.0) -> Operator:
    """exp(-i t H) for hermitian H, via eigendecomposition."""
    H = as_operator(H)
    if not H.is_hermitian():
        raise NotHermitianError("mat_exp requires a hermitian generator")
    w, v = np.linalg.eigh(_herm(H.entries))
    return Operator((v * np.exp(-1j * t * w)) @ v.conj().T, H.dims)


def commutator(A: OpLike, B: OpLike) -> Operator:
    A, B = as_operator(A), as_operator(B)
    if A.shape != B.shape:
        raise DimensionError(f"shapes {A.shape} and {B.shape} differ")
    return A @ B - B @ A


def commutator_norm(A: OpLike, B: OpLike) -> float:
    """Spectral norm of AB - BA."""
    return commutator(A, B).norm()


def embed_system(A: OpLike, apparatus_dim: int) -> Operator:
    """A (x) 1."""
    return tensor(as_operator(A), identity(apparatus_dim))


def embed_apparatus(B: OpLike, system_dim: int) -> Operator:
    """1 (x) B."""
    return tensor(identity(system_dim), as_operator(B))


def equal_up_to_phase(a, b, tol: float = ATOL) -> bool:
    """Compare two states (or operators) modulo a global unit phase."""
    return phase_residual(a, b) <= tol


def phase_residual(a, b) -> float:
    """min over |c| = 1 of ||a - c b|| (max-abs entry norm for operators)."""
    x = np.asarray(a, dtype=complex).reshape(-1)
    y = np.asarray(b, dtype=complex).reshape(-1)
    ov = np.vdot(y, x)
    c = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.max(np.abs(x - c * y), initial=0.0))


def allclose(a, b, tol: float = ATOL, phase: bool = False) -> bool:
    """Entrywise comparison; ``phase=True`` ignores a global phase."""
    if phase:
        return equal_up_to_phase(a, b, tol)
    x = np.asarray(a, dtype=complex)
    y = np.asarray(b, dtype=complex)
    return x.shape == y.shape and bool(np.max(np.abs(x - y), initial=0.0) <= tol)


def complete_unitary(columns: np.ndarray, subspace: np.ndarray | None = None) -> np.ndarray:
    """Extend orthonormal ``columns`` to a unitary on the span of ``subspace``.

    ``columns`` (n x k) must be orthonormal and lie in the column span of
    ``subspace`` (n x m, orthonormal, m >= k).  Returns an n x m matrix whose
    first k columns are ``columns``; the rest is an orthonormal basis of the
    remaining part of the subspace.
    """
    n = columns.shape[0]
    subspace = np.eye(n) if subspace is None else subspace
    k, m = columns.shape[1], subspace.shape[1]
    if k == m:
        return columns.astype(complex)
    resid = subspace - columns @ (columns.conj().T @ subspace)
    u, s, _ = np.linalg.svd(resid, full_matrices=False)
    return np.hstack([columns, u[:, : m - k]]).astype(complex)
