"""Entropy bias and one-letter coherent information."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .channels import LAMBDA_0, ChannelPair, Side, build_b, build_b1, _side
from .qmath import DensityOperator, entropy, entropy_of_eigenvalues

REPORTED_ZERO = 1e-9
TIE_TOL = 1e-14


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 20
    max_iterations: int = 2000
    convergence_tol: float = 1e-10
    rng_seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.convergence_tol > 0:
            raise ValueError("convergence_tol must be positive")

    def rng(self, *stream: int) -> np.random.Generator:
        """Independent generator for a sub-task, e.g. one grid index."""
        return np.random.default_rng(np.random.SeedSequence([self.rng_seed, *stream]))


@dataclass(frozen=True)
class DiagonalAnsatz:
    """Input ``u[0] + (1-u)[1]`` embedded in a ``dim``-dimensional input space."""

    u: float
    dim: int = 2

    def __post_init__(self):
        if not 0.0 <= self.u <= 1.0:
            raise ValueError(f"u must lie in [0, 1], got {self.u}")

    def matrix(self) -> np.ndarray:
        m = np.zeros((self.dim, self.dim), dtype=complex)
        m[0, 0] = self.u
        m[1, 1] = 1.0 - self.u
        return m


@dataclass(frozen=True, eq=False)
class TriangularFactor:
    """Upper-triangular ``A`` with real diagonal; the state is ``AA^dag / Tr(AA^dag)``."""

    dim: int
    diag: np.ndarray
    offdiag: np.ndarray

    @property
    def n_params(self) -> int:
        return self.dim * self.dim

    @classmethod
    def from_vector(cls, x: np.ndarray, dim: int) -> "TriangularFactor":
        x = np.asarray(x, dtype=float)
        m = dim * (dim - 1) // 2
        if x.size != dim + 2 * m:
            raise ValueError(f"expected {dim + 2 * m} parameters for dim {dim}, got {x.size}")
        return cls(dim, x[:dim].copy(), x[dim:dim + m] + 1j * x[dim + m:])

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.diag, self.offdiag.real, self.offdiag.imag])

    def factor(self) -> np.ndarray:
        a = np.diag(self.diag.astype(complex))
        a[np.triu_indices(self.dim, 1)] = self.offdiag
        return a

    def density(self) -> np.ndarray:
        a = self.factor()
        rho = a @ a.conj().T
        tr = np.trace(rho).real
        if tr <= 0:
            raise ValueError("factor is zero; no density operator")
        return rho / tr


@dataclass
class CoherentInfoResult:
    value: float
    argmax: np.ndarray
    converged: bool
    evaluations: int
    diagonal_value: float | None = None
    improved_on_diagonal: bool = False

    def argmax_state(self) -> DensityOperator:
        m = 0.5 * (self.argmax + self.argmax.conj().T)
        return DensityOperator(m / np.trace(m).real)


def _bias(pair: ChannelPair, mat: np.ndarray) -> float:
    out_b, out_c = pair.outputs(mat)
    return entropy(out_b) - entropy(out_c)


def entropy_bias(pair: ChannelPair, rho, side: Side = "direct") -> float:
    """``S(B(rho)) - S(C(rho))`` in bits; ``side='complement'`` swaps the roles."""
    mat = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    if mat.shape != (pair.dim_a, pair.dim_a):
        raise ValueError(f"input shape {mat.shape} does not match channel input {pair.dim_a}")
    value = _bias(pair, mat)
    return value if _side(side) == "direct" else -value


def _diag_bias(pair: ChannelPair, u: float, sign: float) -> float:
    return sign * _bias(pair, DiagonalAnsatz(min(1.0, max(0.0, u)), pair.dim_a).matrix())


def q1_diagonal(pair: ChannelPair, side: Side = "direct", coarse_points: int = 1001) -> CoherentInfoResult:
    """Maximise the bias over inputs diagonal on span{|0>, |1>}.

    A coarse scan locates the best grid point; a bounded scalar search then
    refines inside the neighbouring grid cells.
    """
    sign = 1.0 if _side(side) == "direct" else -1.0
    grid = np.linspace(0.0, 1.0, coarse_points)
    vals = np.array([_diag_bias(pair, u, sign) for u in grid])
    # ties (a flat bias, as at lambda = 1/3) resolve to the smallest u
    k = int(np.flatnonzero(vals >= vals.max() - TIE_TOL)[0])
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, coarse_points - 1)]
    res = minimize_scalar(
        lambda u: -_diag_bias(pair, u, sign),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-12, "maxiter": 500},
    )
    best_u, best = grid[k], vals[k]
    if -res.fun > best + TIE_TOL:
        best_u, best = float(res.x), float(-res.fun)
    evaluations = coarse_points + int(res.nfev)
    return CoherentInfoResult(
        value=float(best),
        argmax=DiagonalAnsatz(float(best_u), pair.dim_a).matrix(),
        converged=bool(res.success),
        evaluations=evaluations,
        diagonal_value=float(best),
    )


def _random_factor_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    m = dim * (dim - 1) // 2
    return np.concatenate([rng.uniform(0.0, 1.0, dim), rng.uniform(-1.0, 1.0, 2 * m)])


def q1_general(pair: ChannelPair, config: OptimizerConfig | None = None) -> CoherentInfoResult:
    """Multi-start Nelder-Mead over upper-triangular factors of the input state.

    Restart 0 starts from the best diagonal input on span{|0>, |1>}, so the
    result never falls below that ansatz.
    """
    config = config or OptimizerConfig()
    dim = pair.dim_a
    if dim * dim > 200:
        raise ValueError(f"input dimension {dim} needs {dim * dim} parameters (limit 200)")
    diag = q1_diagonal(pair)
    rng = config.rng()

    upper = np.triu_indices(dim, 1)
    m = len(upper[0])
    diag_idx = np.diag_indices(dim)

    def objective(x):
        a = np.zeros((dim, dim), dtype=complex)
        a[diag_idx] = x[:dim]
        a[upper] = x[dim:dim + m] + 1j * x[dim + m:]
        rho = a @ a.conj().T
        tr = rho.trace().real
        if tr <= 0.0:
            return 0.0
        return -_bias(pair, rho / tr)

    x_diag = np.zeros(dim * dim)
    x_diag[0] = math.sqrt(diag.argmax[0, 0].real)
    x_diag[1] = math.sqrt(diag.argmax[1, 1].real)

    best_val, best_x = diag.value, None
    best_converged = diag.converged
    evaluations = diag.evaluations
    for k in range(config.restarts):
        x0 = x_diag if k == 0 else _random_factor_vector(dim, rng)
        res = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            options={
                "maxiter": config.max_iterations,
                "maxfev": 2 * config.max_iterations,
                "fatol": config.convergence_tol,
                "xatol": 1e-6,
                "adaptive": dim > 2,
            },
        )
        evaluations += int(res.nfev)
        if k == 0:
            # restart 0 owns the diagonal value whether or not it improves on it
            best_converged = bool(res.success)
        if -res.fun > best_val:
            best_val, best_x, best_converged = float(-res.fun), res.x, bool(res.success)

    if best_x is None:
        argmax = diag.argmax
    else:
        argmax = TriangularFactor.from_vector(best_x, dim).density()
    return CoherentInfoResult(
        value=float(best_val),
        argmax=argmax,
        converged=best_converged,
        evaluations=evaluations,
        diagonal_value=diag.value,
        improved_on_diagonal=best_val > diag.value + 1e-12,
    )


@dataclass
class SweepRecord:
    lam: float
    q1_b1: float
    q1_c1: float
    q1_b: float
    q1_b1_raw: float
    q1_c1_raw: float
    q1_b_raw: float
    q1_b_converged: bool
    q1_b_improved_on_diagonal: bool = False

    def as_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d


@dataclass
class Q1Curve:
    records: list[SweepRecord]
    b1_nonincreasing: bool
    c1_nondecreasing: bool
    extras: dict = field(default_factory=dict)


def _reported(value: float) -> float:
    return 0.0 if value < REPORTED_ZERO else value


def q1_point(lam: float, n: int, config: OptimizerConfig, index: int = 0) -> SweepRecord:
    b1 = build_b1(lam)
    vb1 = q1_diagonal(b1, "direct").value
    vc1 = q1_diagonal(b1, "complement").value
    point_cfg = OptimizerConfig(
        config.restarts, config.max_iterations, config.convergence_tol,
        int(config.rng(index).integers(2**31)),
    )
    gb = q1_general(build_b(lam, n), point_cfg)
    return SweepRecord(
        lam=float(lam),
        q1_b1=_reported(vb1),
        q1_c1=_reported(vc1),
        q1_b=_reported(gb.value),
        q1_b1_raw=vb1,
        q1_c1_raw=vc1,
        q1_b_raw=gb.value,
        q1_b_converged=gb.converged,
        q1_b_improved_on_diagonal=gb.improved_on_diagonal,
    )


def _q1_point_args(args):
    return q1_point(*args)


def q1_curve(
    lambda_grid,
    n: int = 3,
    config: OptimizerConfig | None = None,
    workers: int = 1,
    slack: float = 1e-8,
) -> Q1Curve:
    """One-letter coherent information of B1, C1 and B over a lambda grid.

    Grid points are independent; each draws its random restarts from a stream
    keyed by its index, so ``workers > 1`` gives identical numbers.
    """
    config = config or OptimizerConfig()
    grid = [float(x) for x in lambda_grid]
    for lam in grid:
        if not 0.0 <= lam <= 1.0:
            raise ValueError(f"lambda {lam} outside [0, 1]")
    tasks = [(lam, n, config, i) for i, lam in enumerate(grid)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            records = list(pool.map(_q1_point_args, tasks))
    else:
        records = [q1_point(*t) for t in tasks]
    records.sort(key=lambda r: r.lam)
    b1 = [r.q1_b1_raw for r in records]
    c1 = [r.q1_c1_raw for r in records]
    return Q1Curve(
        records=records,
        b1_nonincreasing=all(b <= a + slack for a, b in zip(b1, b1[1:])),
        c1_nondecreasing=all(b >= a - slack for a, b in zip(c1, c1[1:])),
    )


def binary_entropy(x: float) -> float:
    return entropy_of_eigenvalues(np.array([x, 1.0 - x]))


__all__ = [
    "LAMBDA_0",
    "OptimizerConfig",
    "DiagonalAnsatz",
    "TriangularFactor",
    "CoherentInfoResult",
    "SweepRecord",
    "Q1Curve",
    "entropy_bias",
    "q1_diagonal",
    "q1_general",
    "q1_point",
    "q1_curve",
    "binary_entropy",
]
