"""Momentum-conserving position measurement on a uniform grid.

The system position q is left untouched by the coupling while the apparatus
coordinate y flows to (1 - e^-lam) q + e^-lam y.  Rescaling the pointer by
1/(1 - e^-lam) gives the outcome z = q + kappa*y with
kappa = 1/(e^lam - 1).  Everything below follows from that flow: the
smearing density e, the calibration margin alpha, the repeatability margin
beta and the noise of the rescaled pointer.

Grids are cell-centred: N cells of width h on [-extent, extent], with
values sampled at the cell centres and integrals taken by the midpoint
rule.  The automatic extent is twice the relevant support half-width, so
the support edges fall on cell boundaries whenever N is a multiple of 4.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

PROFILES = ("box", "raised_cosine")
TAIL = 1e-9
MIN_SUPPORT_POINTS = 32
MIN_GRID = 512


class GridResolutionError(ValueError):
    """The grid has too few points across the support it must resolve."""


@dataclass(frozen=True)
class Grid:
    """Cell-centred uniform grid {x0 + (k + 1/2) h}."""

    x0: float
    h: float
    n: int

    @classmethod
    def symmetric(cls, extent: float, n: int) -> "Grid":
        return cls(-float(extent), 2.0 * extent / n, int(n))

    @property
    def points(self) -> np.ndarray:
        return self.x0 + (np.arange(self.n) + 0.5) * self.h

    @property
    def edges(self) -> np.ndarray:
        return self.x0 + np.arange(self.n + 1) * self.h

    @property
    def extent(self) -> float:
        return -self.x0


@dataclass(frozen=True, eq=False)
class Wavefunction1D:
    grid: Grid
    values: np.ndarray
    support: tuple[float, float] | None = None

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.h)

    @property
    def normalized(self) -> bool:
        return abs(self.norm_sq() - 1.0) <= 1e-6

    def normalize(self) -> "Wavefunction1D":
        return Wavefunction1D(self.grid, self.values / np.sqrt(self.norm_sq()), self.support)


@dataclass(frozen=True)
class PositionModelConfig:
    lam: float
    ell: float = 1.0
    profile: str = "box"
    grid_extent: float | None = None   # half-width of the smearing grid; None = auto
    grid_n: int = 4096

    def __post_init__(self):
        if not (self.lam > 0 and np.isfinite(self.lam)):
            raise ValueError("lambda must be a positive finite number")
        if not (self.ell > 0 and np.isfinite(self.ell)):
            raise ValueError("ell must be a positive finite number")
        if self.profile not in PROFILES:
            raise ValueError(f"profile must be one of {PROFILES}")
        if int(self.grid_n) < MIN_GRID:
            raise ValueError(f"grid needs at least {MIN_GRID} points")
        if self.grid_extent is not None and not self.grid_extent > 0:
            raise ValueError("grid extent must be positive")

    @property
    def kappa(self) -> float:
        """Outcome coefficient of y: e^-lam / (1 - e^-lam) = 1/(e^lam - 1)."""
        return 1.0 / np.expm1(self.lam)

    @property
    def delta(self) -> float:
        """Half-width of the smearing density's support, ell/(e^lam - 1)."""
        return self.ell * self.kappa

    @property
    def pointer_scale(self) -> float:
        """f^-1(x) = (1 - e^-lam) x."""
        return -np.expm1(-self.lam)

    def smearing_grid(self) -> Grid:
        ext = 2 * self.delta if self.grid_extent is None else self.grid_extent
        return Grid.symmetric(ext, self.grid_n)

    def apparatus_grid(self) -> Grid:
        return Grid.symmetric(2 * self.ell, self.grid_n)

    def with_profile(self, profile: str) -> "PositionModelConfig":
        return PositionModelConfig(self.lam, self.ell, profile, self.grid_extent, self.grid_n)


def apparatus_amplitude(profile: str, ell: float, y) -> np.ndarray:
    """Normalized apparatus wavefunction supported on [-ell, ell]."""
    y = np.asarray(y, dtype=float)
    inside = np.abs(y) <= ell
    if profile == "box":
        return np.where(inside, 1.0 / np.sqrt(2 * ell), 0.0)
    if profile == "raised_cosine":
        return np.where(inside, np.cos(np.pi * y / (2 * ell)) / np.sqrt(ell), 0.0)
    raise ValueError(f"unknown profile {profile!r}")


def apparatus_state(cfg: PositionModelConfig) -> Wavefunction1D:
    g = cfg.apparatus_grid()
    return Wavefunction1D(g, apparatus_amplitude(cfg.profile, cfg.ell, g.points).astype(complex),
                          (-cfg.ell, cfg.ell))


def _support_points(grid: Grid, half_width: float) -> int:
    return int(np.count_nonzero(np.abs(grid.points) <= half_width))


@dataclass(frozen=True, eq=False)
class SmearingDensity:
    """Probability density e on a grid, with helpers for its CDF."""

    grid: Grid
    values: np.ndarray
    delta: float

    def integral(self) -> float:
        return float(np.sum(self.values) * self.grid.h)

    def cdf_at_edges(self) -> np.ndarray:
        """Mass to the left of each cell edge (length n + 1)."""
        return np.concatenate([[0.0], np.cumsum(self.values) * self.grid.h])

    def lower_edge(self, tail: float = TAIL) -> float:
        """Largest cell edge with no more than ``tail`` mass to its left."""
        F = self.cdf_at_edges()
        return float(self.grid.edges[np.flatnonzero(F <= tail)[-1]])

    def upper_edge(self, tail: float = TAIL) -> float:
        """Smallest cell edge with no more than ``tail`` mass to its right."""
        F = self.cdf_at_edges()
        total = F[-1]
        return float(self.grid.edges[np.flatnonzero(total - F <= tail)[0]])

    def support_half_width(self) -> float:
        nz = np.flatnonzero(self.values > 0)
        return float(max(-self.grid.edges[nz[0]], self.grid.edges[nz[-1] + 1]))


def density_e(cfg: PositionModelConfig) -> SmearingDensity:
    """e(q) = (e^lam - 1) |phi(-q (e^lam - 1))|^2 on the smearing grid."""
    g = cfg.smearing_grid()
    if _support_points(g, cfg.delta) < MIN_SUPPORT_POINTS:
        raise GridResolutionError(
            f"only {_support_points(g, cfg.delta)} grid points across [-delta, delta]; "
            f"need {MIN_SUPPORT_POINTS}")
    scale = np.expm1(cfg.lam)
    amp = apparatus_amplitude(cfg.profile, cfg.ell, -g.points * scale)
    return SmearingDensity(g, scale * np.abs(amp) ** 2, cfg.delta)


def pointer_flow(cfg: PositionModelConfig, q, y):
    """Coordinates after the coupling: (q, (1 - e^-lam) q + e^-lam y)."""
    return q, -np.expm1(-cfg.lam) * np.asarray(q) + np.exp(-cfg.lam) * np.asarray(y)


def pointer_map_sample(cfg: PositionModelConfig, q, y):
    """Rescaled pointer outcome z = f(q_A(1)) = q + kappa y."""
    _, qa = pointer_flow(cfg, q, y)
    return qa / cfg.pointer_scale


def sample_apparatus(cfg: PositionModelConfig, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw y from |phi|^2 by inverting the CDF on a fine grid."""
    g = Grid.symmetric(cfg.ell, 1 << 14)
    p = np.abs(apparatus_amplitude(cfg.profile, cfg.ell, g.points)) ** 2
    F = np.concatenate([[0.0], np.cumsum(p) * g.h])
    F /= F[-1]
    return np.interp(rng.uniform(size=size), F, g.edges)


def smeared_effect(cfg: PositionModelConfig, density: SmearingDensity, q, lo, hi) -> np.ndarray:
    """(chi_[lo,hi) * e)(q): probability of an outcome in [lo, hi) at position q.

    The outcome is z = q - v with v distributed by e.
    """
    F = density.cdf_at_edges()
    edges = density.grid.edges
    q = np.asarray(q, dtype=float)
    # z in [lo, hi)  <=>  v in (q - hi, q - lo]
    Fv = lambda v: np.interp(v, edges, F, left=0.0, right=F[-1])
    return Fv(q - lo) - Fv(q - hi)


def calibration_error(cfg: PositionModelConfig, mirrored: bool = False) -> float:
    """Smallest alpha with outcome in [-alpha, inf) for every state on [0, inf).

    In rescaled outcome units the worst input sits at q = 0 and needs
    alpha' = -(lower edge of e); the raw pointer margin is
    alpha = (1 - e^-lam) alpha'.  ``mirrored`` treats states on (-inf, 0]
    and the outcome set (-inf, alpha].
    """
    d = density_e(cfg)
    a_prime = d.upper_edge() if mirrored else -d.lower_edge()
    return cfg.pointer_scale * max(a_prime, 0.0)


def repeatability_error(cfg: PositionModelConfig, negative: bool = False) -> float:
    """Smallest beta so that an R+ outcome leaves the position in [-beta, inf).

    P(q < -beta and z >= 0) vanishes for all states iff e carries no mass
    below -beta.  ``negative`` gives the mirrored statement for R-.
    """
    d = density_e(cfg)
    b = d.upper_edge() if negative else -d.lower_edge()
    return max(b, 0.0)


def spectral_derivative(values: np.ndarray, h: float) -> np.ndarray:
    k = 2 * np.pi * np.fft.fftfreq(values.size, d=h)
    return np.fft.ifft(1j * k * np.fft.fft(values))


def moments(psi: Wavefunction1D) -> dict:
    """Position and momentum means and variances (momentum via FFT)."""
    x, h, v = psi.grid.points, psi.grid.h, psi.values
    n2 = np.sum(np.abs(v) ** 2) * h
    mx = np.sum(x * np.abs(v) ** 2) * h / n2
    vx = np.sum((x - mx) ** 2 * np.abs(v) ** 2) * h / n2
    dv = spectral_derivative(v, h)
    mp = float(np.real(np.sum(np.conj(v) * (-1j) * dv) * h / n2))
    p2 = float(np.sum(np.abs(dv) ** 2) * h / n2)
    return {"mean_q": float(mx), "var_q": float(vx), "second_q": float(vx + mx * mx),
            "mean_p": mp, "var_p": p2 - mp * mp}


def commutator_qp(psi: Wavefunction1D) -> complex:
    """<[Q, P]> = 2i Im<Q psi | P psi> on the grid (ideally i)."""
    x, h, v = psi.grid.points, psi.grid.h, psi.values
    pv = -1j * spectral_derivative(v, h)
    return 2j * float(np.imag(np.sum(np.conj(x * v) * pv) * h))


def gaussian_state(grid: Grid, center: float, width: float, kick: float = 0.0) -> Wavefunction1D:
    x = grid.points
    v = np.exp(-((x - center) ** 2) / (4 * width ** 2) + 1j * kick * x)
    return Wavefunction1D(grid, v.astype(complex)).normalize()


def random_system_states(rng: np.random.Generator, n: int, grid: Grid) -> list[Wavefunction1D]:
    ext = grid.extent
    out = []
    for _ in range(n):
        w = ext * rng.uniform(0.03, 0.12)
        c = rng.uniform(-0.4, 0.4) * ext
        out.append(gaussian_state(grid, c, w, rng.normal(scale=2.0)))
    return out


@dataclass(frozen=True)
class PositionOzawaReport:
    epsilon_sq: float
    bound: float
    second_moment_qa: float
    momentum_var_pa: float
    commutator_expectation: float
    universal_min_slack: float
    n_states: int
    yanase_condition: bool = False
    note: str = field(default="pointer Q_A does not commute with P_A; only the "
                              "universal commutator inequality is asserted")

    def to_dict(self) -> dict:
        from dataclasses import asdict
        return asdict(self)


def position_ozawa_check(cfg: PositionModelConfig, n_states: int = 100, seed: int = 0) -> PositionOzawaReport:
    """Noise of the rescaled pointer against momentum-variance bounds.

    The noise operator is N = z - Q = kappa Q_A, so eps^2 = kappa^2 <Q_A^2>
    for every input.  ``bound`` is the Yanase-form 1/(4 Var P_A); the
    universal bound (1/4)|<[N, P + P_A]>|^2 / (Var P + Var P_A) is checked on
    seeded system states.
    """
    if cfg.profile != "raised_cosine":
        raise ValueError("momentum variance of the box profile diverges; "
                         "use the raised_cosine profile")
    phi = apparatus_state(cfg)
    mo = moments(phi)
    if not np.isfinite(mo["var_p"]):
        raise ValueError("apparatus momentum variance is not finite")
    k = cfg.kappa
    eps = k * k * mo["second_q"]
    comm = abs(k * commutator_qp(phi))
    rng = np.random.default_rng(seed)
    sys_grid = Grid.symmetric(8.0 * cfg.ell, cfg.grid_n)
    worst = np.inf
    for psi in random_system_states(rng, n_states, sys_grid):
        vp = moments(psi)["var_p"]
        ub = 0.25 * comm ** 2 / (vp + mo["var_p"])
        worst = min(worst, eps - ub)
    return PositionOzawaReport(float(eps), float(0.25 / mo["var_p"]), mo["second_q"],
                               mo["var_p"], float(comm), float(worst), n_states)


def grid_yanase_defect(n: int = 64, extent: float = 1.0) -> float:
    """||[Q_A, P_A]|| / (||Q_A|| ||P_A||) for dense grid operators."""
    g = Grid.symmetric(extent, n)
    Q = np.diag(g.points)
    F = np.fft.fft(np.eye(n), axis=0)
    k = 2 * np.pi * np.fft.fftfreq(n, d=g.h)
    P = np.fft.ifft(k[:, None] * F, axis=0)
    P = 0.5 * (P + P.conj().T)
    C = Q @ P - P @ Q
    return float(np.linalg.norm(C, 2) / (np.linalg.norm(Q, 2) * np.linalg.norm(P, 2)))


@dataclass(frozen=True)
class SteinShimonyRow:
    lam: float
    alpha: float
    beta: float
    epsilon_sq: float
    bound: float


CSV_HEADER = ("lambda", "alpha", "beta", "epsilon_sq", "bound")


def stein_shimony_row(ell: float, lam: float, grid_n: int = 4096,
                      grid_extent: float | None = None) -> SteinShimonyRow:
    box = PositionModelConfig(lam, ell, "box", grid_extent, grid_n)
    rc = box.with_profile("raised_cosine")
    oz = position_ozawa_check(rc, n_states=0)
    return SteinShimonyRow(float(lam), calibration_error(box), repeatability_error(box),
                           oz.epsilon_sq, oz.bound)


def stein_shimony_report(ell: float, lambdas, grid_n: int = 4096,
                         grid_extent: float | None = None,
                         threads: int | None = None) -> list[SteinShimonyRow]:
    """(lambda, alpha, beta, eps^2, bound) rows; alpha and beta use the box profile."""
    from .parallel import ordered_map
    return ordered_map(lambda lam: stein_shimony_row(ell, lam, grid_n, grid_extent),
                       list(lambdas), threads)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([repr(float(r.lam)), repr(float(r.alpha)), repr(float(r.beta)),
                    repr(float(r.epsilon_sq)), repr(float(r.bound))])
    return buf.getvalue()
