"""Two-letter coherent information of B: the three-state ansatz, log-singularity
rates along a perturbation ray, positivity witnesses and small-gap asymptotics.

Two conventions for the superposition weight appear here. ``TwoLetterAnsatz.p``
is the weight of ``|11>`` in ``|n1> = sqrt(p)|11> + sqrt(1-p)|02>``. The ray,
rate, witness and asymptotic functions instead take ``q``-style arguments named
``p`` that are the weight of ``|02>``; the closed-form rates and ``p_max`` are
stated in that variable. ``PerturbationRay.ansatz()`` converts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from functools import lru_cache

import mpmath as mp
import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .capacity import REPORTED_ZERO, OptimizerConfig, entropy_bias, q1_general
from .channels import LAMBDA_0, LAMBDA_1, ChannelPair, build_b, parallel
from .qmath import entropy, mp_entropy

LN2 = math.log(2.0)
ASYMPTOTIC_SWITCH = 1e-3
ONSET_THRESHOLD = 1e-6
WITNESS_START = 1e-2
WITNESS_FLOAT_FLOOR = 1e-9
WITNESS_DIGITS_LIMIT = 2000
MP_EPSILON_SWITCH = 1e-4
FLOAT_TRUST = 1e-9
RATE_GRID = tuple(np.logspace(-7, -4, 13))
DEGENERATE_FIT = 1e-14


# --- ansatz ---------------------------------------------------------------


@dataclass(frozen=True)
class TwoLetterAnsatz:
    """``r0[n0] + r1[n1] + r2[n2]`` with ``|n0>=|10>``, ``|n2>=|00>`` and
    ``|n1> = sqrt(p)|11> + sqrt(1-p)|02>`` on the doubled three-level input."""

    r0: float
    r1: float
    r2: float
    p: float

    def __post_init__(self):
        rs = (self.r0, self.r1, self.r2)
        if any(not r >= -1e-15 for r in rs):
            raise ValueError(f"weights must be nonnegative, got {rs}")
        if abs(sum(rs) - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {sum(rs)!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")

    @property
    def weights(self) -> tuple[float, float, float]:
        return (self.r0, self.r1, self.r2)

    def vectors(self) -> np.ndarray:
        """Rows are ``|n0>, |n1>, |n2>`` in the 9-dimensional product basis."""
        v = np.zeros((3, 9), dtype=complex)
        v[0, 3] = 1.0
        v[1, 4] = math.sqrt(self.p)
        v[1, 2] = math.sqrt(1.0 - self.p)
        v[2, 0] = 1.0
        return v

    def density(self) -> np.ndarray:
        v = self.vectors()
        w = np.array(self.weights, dtype=float)
        w = np.clip(w, 0.0, None)
        return (v.T * w) @ v.conj()

    def as_dict(self) -> dict:
        return asdict(self)


@lru_cache(maxsize=256)
def doubled_b(lam: float) -> ChannelPair:
    """Two parallel uses of B with n=3."""
    return parallel(build_b(float(lam), 3), 2)


def two_letter_bias(lam: float, ansatz: TwoLetterAnsatz) -> float:
    return entropy_bias(doubled_b(lam), ansatz.density())


def p_max(lam: float) -> float:
    """Largest ``|02>`` weight for which the output singularity beats the environment's."""
    return 2.0 * (1.0 - 2.0 * lam) / ((1.0 - lam) * (2.0 - 3.0 * lam))


def _check_gap(lam: float) -> None:
    if not LAMBDA_0 - 1e-15 <= lam < LAMBDA_1:
        raise ValueError(f"lambda {lam} outside [1/3, 1/2)")


@dataclass(frozen=True)
class PerturbationRay:
    """``eps[n0] + (1-eps)[n1]`` where ``p`` weights ``|02>`` inside ``|n1>``."""

    epsilon: float
    p: float

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must lie in (0, 1), got {self.p}")

    def ansatz(self) -> TwoLetterAnsatz:
        return TwoLetterAnsatz(self.epsilon, 1.0 - self.epsilon, 0.0, 1.0 - self.p)


# --- extended-precision ray ------------------------------------------------


def _ansatz_vectors_mp(lam, p11):
    """Images of ``|n0>, |n1>, |n2>`` under J(x)J as sparse dicts keyed (b1, b2, c1, c2).

    ``p11`` is the ``|11>`` weight in ``|n1>``.
    """
    lam = mp.mpf(lam)
    p11 = mp.mpf(p11)
    sl, sh = mp.sqrt(lam), mp.sqrt((1 - lam) / 2)
    cols = {
        0: {(0, 0): sl, (1, 1): sh, (2, 2): sh},
        1: {(0, 1): mp.mpf(1)},
        2: {(0, 2): mp.mpf(1)},
    }

    def add(out, i, j, amp):
        for (b1, c1), x in cols[i].items():
            for (b2, c2), y in cols[j].items():
                key = (b1, b2, c1, c2)
                out[key] = out.get(key, 0) + amp * x * y

    w0, w1, w2 = {}, {}, {}
    add(w0, 1, 0, mp.mpf(1))
    add(w1, 1, 1, mp.sqrt(p11))
    add(w1, 0, 2, mp.sqrt(1 - p11))
    add(w2, 0, 0, mp.mpf(1))
    return w0, w1, w2


def _reduce_mp(vectors, weights, keep_b: bool):
    m = mp.zeros(9, 9)
    for w, r in zip(vectors, weights):
        if r == 0:
            continue
        items = list(w.items())
        for k1, x in items:
            for k2, y in items:
                if keep_b:
                    if k1[2:] == k2[2:]:
                        m[3 * k1[0] + k1[1], 3 * k2[0] + k2[1]] += r * x * y
                elif k1[:2] == k2[:2]:
                    m[3 * k1[2] + k1[3], 3 * k2[2] + k2[3]] += r * x * y
    return m


def _outputs_mp(lam, p11, weights):
    vecs = _ansatz_vectors_mp(lam, p11)
    weights = [mp.mpf(w) for w in weights]
    return _reduce_mp(vecs, weights, True), _reduce_mp(vecs, weights, False)


def two_letter_bias_mp(lam, ansatz: TwoLetterAnsatz, digits: int | None = None):
    """The two-letter bias evaluated in extended precision, returned as an mpf.

    The default precision resolves the smallest nonzero weight with 30 spare digits.
    """
    if digits is None:
        small = min((w for w in ansatz.weights if w > 0), default=1.0)
        digits = max(40, int(-math.log10(small)) + 40)
    with mp.workdps(digits):
        rho_bb, rho_cc = _outputs_mp(lam, ansatz.p, ansatz.weights)
        return +(mp_entropy(rho_bb) - mp_entropy(rho_cc))


def ray_outputs_mp(lam, p, eps):
    """Doubled output and environment states along the ray, at the current mp precision."""
    eps = mp.mpf(eps)
    return _outputs_mp(lam, 1 - mp.mpf(p), (eps, 1 - eps, 0))


def ray_entropies_mp(lam, p, eps):
    rho_bb, rho_cc = ray_outputs_mp(lam, p, eps)
    return mp_entropy(rho_bb), mp_entropy(rho_cc)


def ray_bias_mp(lam, p, eps):
    s_bb, s_cc = ray_entropies_mp(lam, p, eps)
    return s_bb - s_cc


def _digits_for(ln_eps: float) -> int:
    return max(30, int(-ln_eps / math.log(10.0)) + 30)


def ray_log_bias(lam: float, p: float, ln_eps: float) -> float:
    """Natural log of the bias at ``eps = exp(ln_eps)``, or ``-inf`` if the bias is not positive.

    Works at whatever precision the size of ``eps`` demands, so values far below
    the float range are handled.
    """
    if ln_eps > math.log(MP_EPSILON_SWITCH):
        value = two_letter_bias(lam, PerturbationRay(math.exp(ln_eps), p).ansatz())
        if abs(value) > FLOAT_TRUST:
            return math.log(value) if value > 0 else -math.inf
        # too close to the float noise floor to trust the sign
    with mp.workdps(_digits_for(ln_eps)):
        value = ray_bias_mp(lam, p, mp.exp(mp.mpf(ln_eps)))
        return float(mp.log(value)) if value > 0 else -math.inf


# --- singularity rates -----------------------------------------------------


@dataclass(frozen=True)
class SingularityRates:
    lam: float
    p: float
    x_bb: float
    x_cc: float
    p_max: float

    @property
    def output_dominates(self) -> bool:
        return self.x_bb > self.x_cc


def singularity_rates(lam: float, p: float) -> SingularityRates:
    """Closed-form ``eps log(1/eps)`` rates of the output and environment entropies."""
    _check_gap(lam)
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    t = p * (1.0 - lam)
    return SingularityRates(
        lam=lam,
        p=p,
        x_bb=1.0 - lam,
        x_cc=lam * (1.0 + t / (2.0 - 2.0 * t)),
        p_max=p_max(lam),
    )


@dataclass(frozen=True)
class RateEstimate:
    rate: float
    offset: float
    degenerate: bool

    def __float__(self) -> float:
        return self.rate


def fit_log_rate(eps, delta_s) -> RateEstimate:
    """Least squares of ``delta_s`` on ``eps*log2(1/eps)`` and ``eps``.

    The second regressor absorbs the linear term that accompanies the
    singular one; its coefficient is returned as ``offset``.
    """
    eps = np.asarray(eps, dtype=float)
    ds = np.asarray(delta_s, dtype=float)
    if np.all(np.abs(ds) < DEGENERATE_FIT):
        return RateEstimate(0.0, 0.0, True)
    design = np.column_stack([eps * np.log2(1.0 / eps), eps])
    # scale columns so the normal equations are well conditioned
    scale = np.abs(design).max(axis=0)
    coef, *_ = np.linalg.lstsq(design / scale, ds, rcond=None)
    coef = coef / scale
    return RateEstimate(float(coef[0]), float(coef[1]), False)


def estimate_rate(lam: float, p: float, side: str = "bb", epsilon_grid=RATE_GRID) -> RateEstimate:
    """Fit the singular growth rate of ``S_side`` along the ray with ``|02>`` weight ``p``."""
    if side not in ("bb", "cc"):
        raise ValueError(f"side must be 'bb' or 'cc', got {side!r}")
    grid = np.asarray(epsilon_grid, dtype=float)
    if grid.size < 3 or grid.min() < 1e-7 * (1 - 1e-9) or grid.max() > 1e-4 * (1 + 1e-9):
        raise ValueError("epsilon grid needs at least 3 points inside [1e-7, 1e-4]")
    idx = 0 if side == "bb" else 1
    with mp.workdps(40):
        s0 = ray_entropies_mp(lam, p, 0)[idx]
        ds = [float(ray_entropies_mp(lam, p, mp.mpf(float(e)))[idx] - s0) for e in grid]
    return fit_log_rate(grid, ds)


# --- positivity witness -----------------------------------------------------


@dataclass
class WitnessRecord:
    lam: float
    p: float
    found: bool
    epsilon: float
    log10_epsilon: float
    bias: float
    ln_bias: float
    evaluations: int
    digits: int

    def as_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d


def _witness_schedule(limit_digits: int):
    """ln(eps) values: halving from 1e-2 to 1e-9, then 10% steps in ln(1/eps)."""
    ln_eps = math.log(WITNESS_START)
    while ln_eps >= math.log(WITNESS_FLOAT_FLOOR):
        yield ln_eps
        ln_eps -= LN2
    limit = limit_digits * math.log(10.0)
    while -ln_eps <= limit:
        yield ln_eps
        ln_eps *= 1.1


def positivity_witness(lam: float, digits_limit: int = WITNESS_DIGITS_LIMIT) -> WitnessRecord:
    """Find ``eps`` with positive two-letter bias on the ray with ``p = p_max/2``.

    Every evaluation runs in extended precision sized to ``eps``; the scan stops
    once ``eps`` would need more than ``digits_limit`` decimal digits.
    """
    _check_gap(lam)
    p = p_max(lam) / 2.0
    evaluations = 0
    for ln_eps in _witness_schedule(digits_limit):
        digits = _digits_for(ln_eps)
        with mp.workdps(digits):
            eps = mp.exp(mp.mpf(ln_eps))
            value = ray_bias_mp(lam, p, eps)
            evaluations += 1
            if value > 0:
                return WitnessRecord(
                    lam=lam, p=p, found=True,
                    epsilon=float(eps), log10_epsilon=ln_eps / math.log(10.0),
                    bias=float(value), ln_bias=float(mp.log(value)),
                    evaluations=evaluations, digits=digits,
                )
    return WitnessRecord(
        lam=lam, p=p, found=False, epsilon=math.nan, log10_epsilon=math.nan,
        bias=math.nan, ln_bias=math.nan, evaluations=evaluations, digits=0,
    )


# --- asymptotics near lambda = 1/2 ------------------------------------------


@dataclass(frozen=True)
class AsymptoticCoefficients:
    r: float
    delta_lambda: float
    alpha0: float
    alpha1: float
    beta0: float
    beta1: float
    beta2: float
    beta3: float
    alpha: float
    beta: float
    ln_epsilon_star: float
    ln_g: float

    @property
    def epsilon_star(self) -> float:
        return math.exp(self.ln_epsilon_star)


def asymptotic_coefficients(r: float, delta_lambda: float) -> AsymptoticCoefficients:
    """Series coefficients of the bias along the ray at ``lambda = 1/2 - delta_lambda``.

    ``r`` is the ``|02>`` weight as a fraction of ``p_max``. Natural logarithms
    throughout; the bias itself is in bits.
    """
    if not 0.0 < r < 1.0:
        raise ValueError(f"r must lie in (0, 1), got {r}")
    if not delta_lambda > 0:
        raise ValueError("delta_lambda must be positive")
    dl = delta_lambda
    a0 = 2.0 * (1.0 - r) / LN2
    a1 = 8.0 * r * a0
    alpha = a0 * dl + a1 * dl * dl
    if not alpha > 0:
        raise ValueError(f"alpha = {alpha} is not positive at r = {r}")
    b0 = 1.0 + math.log(r) / (4.0 * LN2)
    b1 = 1.0 / (4.0 * LN2)
    b2 = (2.0 * r + 0.5) / LN2
    b3 = (-1.5 - 9.0 * r * LN2 + 8.0 * r * math.log(16.0 * r) + math.log(256.0 * r) / 2.0) / LN2
    ldl = math.log(dl)
    beta = b0 + b1 * ldl + b2 * dl * ldl + b3 * dl
    ln_eps = -(1.0 - beta / alpha)
    return AsymptoticCoefficients(
        r=r, delta_lambda=dl,
        alpha0=a0, alpha1=a1, beta0=b0, beta1=b1, beta2=b2, beta3=b3,
        alpha=alpha, beta=beta,
        ln_epsilon_star=ln_eps,
        ln_g=math.log(alpha) + ln_eps,
    )


def _best_asymptotic_r(dl: float) -> AsymptoticCoefficients:
    res = minimize_scalar(
        lambda r: -asymptotic_coefficients(r, dl).ln_g,
        bounds=(1e-9, 1.0 - 1e-9),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return asymptotic_coefficients(float(res.x), dl)


# --- records ----------------------------------------------------------------


@dataclass
class NonAdditivityRecord:
    """One lambda point. ``delta_star`` already includes the product point
    ``2*q1_b``; ``delta_star_ansatz`` is the ansatz maximum alone."""

    lam: float
    delta_star: float
    q1_b: float
    gap: float
    argmax: TwoLetterAnsatz
    method: str
    delta_star_ansatz: float
    ln_delta_star: float
    ln_gap: float
    ln_epsilon: float = math.nan
    converged: bool = True
    extras: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = {
            "lambda": self.lam,
            "delta_star": self.delta_star,
            "q1_b": self.q1_b,
            "gap": self.gap,
            "method": self.method,
            "r0": self.argmax.r0,
            "r1": self.argmax.r1,
            "r2": self.argmax.r2,
            "p": self.argmax.p,
            "delta_star_ansatz": self.delta_star_ansatz,
            "ln_delta_star": self.ln_delta_star,
            "ln_gap": self.ln_gap,
            "ln_epsilon": self.ln_epsilon,
            "converged": self.converged,
        }
        d.update(self.extras)
        return d


def _safe_ln(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def _record(lam, ansatz_value, ln_ansatz, q1_b, argmax, method, ln_eps, converged):
    product = 2.0 * q1_b
    if product > ansatz_value:
        delta, ln_delta = product, _safe_ln(product)
    else:
        delta, ln_delta = ansatz_value, ln_ansatz
    gap = delta / 2.0 - q1_b
    if q1_b == 0.0:
        ln_gap = ln_delta - LN2
    else:
        ln_gap = _safe_ln(gap)
    return NonAdditivityRecord(
        lam=float(lam), delta_star=delta, q1_b=q1_b, gap=gap, argmax=argmax,
        method=method, delta_star_ansatz=ansatz_value, ln_delta_star=ln_delta,
        ln_gap=ln_gap, ln_epsilon=ln_eps, converged=converged,
    )


def asymptotic_delta_star(delta_lambda: float, config: OptimizerConfig | None = None) -> NonAdditivityRecord:
    """Delta* from the series, maximised over ``r``; Q1(B) is zero this close to 1/2."""
    if not 0.0 < delta_lambda <= 1e-2:
        raise ValueError(f"delta_lambda must lie in (0, 1e-2], got {delta_lambda}")
    coef = _best_asymptotic_r(delta_lambda)
    lam = LAMBDA_1 - delta_lambda
    eps = math.exp(coef.ln_epsilon_star)
    argmax = TwoLetterAnsatz(eps, 1.0 - eps, 0.0, 1.0 - coef.r * p_max(lam))
    rec = _record(lam, math.exp(coef.ln_g), coef.ln_g, 0.0, argmax, "asymptotic",
                  coef.ln_epsilon_star, True)
    rec.extras["asymptotic_r"] = coef.r
    return rec


# --- direct maximisation ---------------------------------------------------


def _sigmoid(x: float) -> float:
    return 0.5 * (1.0 + math.tanh(0.5 * x))


def _logit(y: float) -> float:
    return math.log(y / (1.0 - y))


def _ansatz_from_params(x) -> TwoLetterAnsatz:
    z = np.array([0.0, x[0], x[1]])
    w = np.exp(z - z.max())
    w /= w.sum()
    return TwoLetterAnsatz(float(w[1]), float(w[0]), float(w[2]), _sigmoid(float(x[2])))


def _full_search(lam: float, config: OptimizerConfig, rng: np.random.Generator):
    """Simplex weights via softmax over (r1 -> 0, r0, r2) and p via a logistic map."""
    pair = doubled_b(lam)

    def objective(x):
        return -entropy_bias(pair, _ansatz_from_params(x).density())

    best_val, best_x, best_conv = -math.inf, None, False
    evaluations = 0
    for k in range(config.restarts):
        if k == 0:
            x0 = np.array([math.log(0.3 / 0.7), -8.0, _logit(0.6)])
        else:
            x0 = rng.normal(0.0, 2.0, 3)
        res = minimize(
            objective, x0, method="Nelder-Mead",
            options={
                "maxiter": config.max_iterations,
                "maxfev": 2 * config.max_iterations,
                "fatol": config.convergence_tol,
                "xatol": 1e-7,
            },
        )
        evaluations += int(res.nfev)
        if -res.fun > best_val:
            best_val, best_x, best_conv = float(-res.fun), res.x, bool(res.success)
    return best_val, _ansatz_from_params(best_x), best_conv, evaluations


def _ray_start_grid(lam: float):
    """Coarse (p, ln eps) grid for the reduced search; p is the ``|02>`` weight."""
    pm = min(p_max(lam), 1.0)
    ps = pm * np.linspace(0.05, 0.95, 10)
    dl = LAMBDA_1 - lam
    ln_hi = 400.0
    if dl <= 2e-2:
        ln_hi = max(ln_hi, -4.0 * _best_asymptotic_r(dl).ln_epsilon_star)
    lns = -np.geomspace(0.1, ln_hi, 24)
    return ps, lns


def _ray_search(lam: float, config: OptimizerConfig):
    """Maximise ln Delta over (|02> weight, ln eps) with r2 = 0."""
    pm = min(p_max(lam), 1.0)
    ps, lns = _ray_start_grid(lam)
    best = (-math.inf, None, None)
    for p in ps:
        for ln_eps in lns:
            v = ray_log_bias(lam, float(p), float(ln_eps))
            if v > best[0]:
                best = (v, float(p), float(ln_eps))
    if best[1] is None:
        return -math.inf, None, math.nan, False, len(ps) * len(lns)

    def unpack(x):
        return pm * _sigmoid(x[0]), -math.exp(x[1])

    def objective(x):
        p, ln_eps = unpack(x)
        if not 0.0 < p < 1.0:
            return math.inf
        v = ray_log_bias(lam, p, ln_eps)
        return -v if v > -math.inf else math.inf

    x0 = np.array([_logit(best[1] / pm), math.log(-best[2])])
    res = minimize(
        objective, x0, method="Nelder-Mead",
        options={"maxiter": 400, "fatol": 1e-10, "xatol": 1e-8},
    )
    p, ln_eps = unpack(res.x)
    ln_val = -float(res.fun)
    if ln_val < best[0]:
        ln_val, p, ln_eps = best
    return ln_val, p, ln_eps, bool(res.success), len(ps) * len(lns) + int(res.nfev)


def maximize_delta_star(
    lam: float,
    config: OptimizerConfig | None = None,
    q1_b: float | None = None,
    index: int = 0,
    q1_config: OptimizerConfig | None = None,
) -> NonAdditivityRecord:
    """Largest two-letter bias over the ansatz, then ``delta* = Delta*/2 - Q1(B)``.

    Above lambda = 1/3 a reduced search along ``r2 = 0, r0 = eps`` runs as well,
    in extended precision when ``eps`` is tiny. ``Delta*`` never falls below
    the product value ``2*Q1(B)``.
    """
    if not 0.0 <= lam < 1.0:
        raise ValueError(f"lambda {lam} outside [0, 1)")
    config = config or OptimizerConfig()
    if q1_b is None:
        q1_b = q1_general(build_b(lam, 3), q1_config or config).value
    q1_b = 0.0 if q1_b < REPORTED_ZERO else q1_b

    value, ansatz, converged, evaluations = _full_search(lam, config, config.rng(index))
    # float eigenvalue noise can fake tiny positive values; recheck the optimum
    exact = two_letter_bias_mp(lam, ansatz)
    value = float(exact)
    ln_value, method, ln_eps = (float(mp.log(exact)) if exact > 0 else -math.inf), "full", math.nan
    if ansatz.r2 < 1e-12 and ansatz.r0 > 0:
        ln_eps = math.log(ansatz.r0)

    if LAMBDA_0 < lam < LAMBDA_1:
        ln_ray, p, ray_ln_eps, ray_conv, n_ray = _ray_search(lam, config)
        evaluations += n_ray
        if ln_ray > ln_value:
            ln_value, method, ln_eps, converged = ln_ray, "two-param", ray_ln_eps, ray_conv
            value = math.exp(ln_ray)
            eps = math.exp(ray_ln_eps)
            ansatz = TwoLetterAnsatz(eps, 1.0 - eps, 0.0, 1.0 - p)

    rec = _record(lam, value, ln_value, q1_b, ansatz, method, ln_eps, converged)
    rec.extras["evaluations"] = evaluations
    return rec


# --- curve -------------------------------------------------------------------


def default_nonadd_grid(points: int = 101) -> list[float]:
    """``points`` evenly spaced values on [0, 1/2) plus lambda = 1/3."""
    grid = np.linspace(0.0, LAMBDA_1, points)[:-1]
    return sorted(set(float(x) for x in grid) | {LAMBDA_0})


@dataclass
class DeltaStarCurve:
    records: list[NonAdditivityRecord]
    onset: float
    onset_bracket: tuple[float, float]
    peak_lambda: float
    peak_gap: float


def _point(lam, config, index, q1_config, q1_b=None):
    if LAMBDA_1 - lam < ASYMPTOTIC_SWITCH:
        return asymptotic_delta_star(LAMBDA_1 - lam, config)
    return maximize_delta_star(lam, config, q1_b=q1_b, index=index, q1_config=q1_config)


def _locate_onset(records, config, q1_config, width: float = 1e-3):
    """Bisection on ``gap > ONSET_THRESHOLD`` between the last off and first on grid points."""
    on = [r.gap > ONSET_THRESHOLD for r in records]
    if not any(on):
        return math.nan, (math.nan, math.nan)
    k = on.index(True)
    if k == 0:
        return records[0].lam, (records[0].lam, records[0].lam)
    lo, hi = records[k - 1].lam, records[k].lam
    probe = 10_000
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        rec = _point(mid, config, probe, q1_config)
        probe += 1
        if rec.gap > ONSET_THRESHOLD:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi), (lo, hi)


def delta_star_curve(
    lambda_grid=None,
    config: OptimizerConfig | None = None,
    q1_config: OptimizerConfig | None = None,
) -> DeltaStarCurve:
    """``delta*`` over a grid in [0, 1/2), with onset and peak located.

    Points closer than ``ASYMPTOTIC_SWITCH`` to 1/2 use the series instead of
    direct maximisation.
    """
    config = config or OptimizerConfig()
    grid = default_nonadd_grid() if lambda_grid is None else sorted(float(x) for x in lambda_grid)
    for lam in grid:
        if not 0.0 <= lam < LAMBDA_1:
            raise ValueError(f"lambda {lam} outside [0, 1/2)")
    records = [_point(lam, config, i, q1_config) for i, lam in enumerate(grid)]
    onset, bracket = _locate_onset(records, config, q1_config)
    peak = max(records, key=lambda r: r.gap)
    return DeltaStarCurve(records, onset, bracket, peak.lam, peak.gap)


def inset_grid(points: int = 20) -> list[float]:
    return [float(x) for x in np.geomspace(1e-3, 1e-2, points)]


def inset_comparison(delta_lambdas=None, config: OptimizerConfig | None = None) -> list[dict]:
    """Direct versus asymptotic ln Delta* close to lambda = 1/2."""
    config = config or OptimizerConfig()
    rows = []
    for dl in (inset_grid() if delta_lambdas is None else delta_lambdas):
        lam = LAMBDA_1 - dl
        asym = asymptotic_delta_star(dl, config)
        ln_direct, p, ln_eps, conv, _ = _ray_search(lam, config)
        rows.append({
            "delta_lambda": dl,
            "lambda": lam,
            "ln_delta_star_direct": ln_direct,
            "ln_delta_star_asymptotic": asym.ln_delta_star,
            "relative_difference": abs(asym.ln_delta_star - ln_direct) / abs(ln_direct),
            "p_direct": p,
            "ln_epsilon_direct": ln_eps,
            "r_asymptotic": asym.extras["asymptotic_r"],
            "ln_epsilon_asymptotic": asym.ln_epsilon,
            "converged": conv,
        })
    return rows
