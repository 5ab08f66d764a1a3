"""Isometry-defined channel pairs, Choi matrices and degradability certificates.

Every channel here comes from an isometry ``J : H_a -> H_b (x) H_c``. Rows of
``J`` are indexed by ``|b c>`` with the output factor ``b`` first, so
``J[b * dim_c + c, a]`` is the amplitude of ``|b c>`` in ``J|a>``. The direct
channel traces out ``c`` and the complementary channel traces out ``b``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal

import numpy as np

from .qmath import DEFAULT_TOL, DensityOperator, dagger

Side = Literal["direct", "complement"]
SIDES = ("direct", "complement")

ISOMETRY_TOL = 1e-12
CHOI_TOL = 1e-10
LAMBDA_0 = 1.0 / 3.0
LAMBDA_1 = 0.5
DEFAULT_MAX_DIM = 4096


@dataclass(frozen=True, eq=False)
class IsometrySpec:
    matrix: np.ndarray
    dim_a: int
    dim_b: int
    dim_c: int

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (self.dim_b * self.dim_c, self.dim_a):
            raise ValueError(
                f"isometry shape {m.shape} does not match "
                f"(dim_b*dim_c, dim_a) = ({self.dim_b * self.dim_c}, {self.dim_a})"
            )
        err = np.max(np.abs(dagger(m) @ m - np.eye(self.dim_a)))
        if err > ISOMETRY_TOL:
            raise ValueError(f"J^dag J differs from identity by {err:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def tensor(self) -> np.ndarray:
        """The isometry as a ``(dim_b, dim_c, dim_a)`` array."""
        return self.matrix.reshape(self.dim_b, self.dim_c, self.dim_a)

    def to_json(self) -> str:
        entries = [[float(z.real), float(z.imag)] for z in self.matrix.reshape(-1)]
        return json.dumps(
            {"dim_a": self.dim_a, "dim_b": self.dim_b, "dim_c": self.dim_c, "entries": entries}
        )

    @classmethod
    def from_json(cls, text: str) -> "IsometrySpec":
        doc = json.loads(text)
        da, db, dc = int(doc["dim_a"]), int(doc["dim_b"]), int(doc["dim_c"])
        flat = np.array([complex(re, im) for re, im in doc["entries"]])
        if flat.size != da * db * dc:
            raise ValueError(f"expected {da * db * dc} entries, got {flat.size}")
        return cls(flat.reshape(db * dc, da), da, db, dc)


@dataclass(frozen=True, eq=False)
class ChannelPair:
    """A channel and its complement, generated by one isometry."""

    iso: IsometrySpec
    labels: tuple[str, str] = ("b", "c")

    @property
    def dim_a(self) -> int:
        return self.iso.dim_a

    @property
    def dim_b(self) -> int:
        return self.iso.dim_b

    @property
    def dim_c(self) -> int:
        return self.iso.dim_c

    def dim_out(self, side: Side) -> int:
        return self.dim_b if _side(side) == "direct" else self.dim_c

    @property
    def direct(self) -> "Channel":
        return Channel(self, "direct")

    @property
    def complement(self) -> "Channel":
        return Channel(self, "complement")

    def outputs(self, op: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Direct and complementary images of any operator on ``H_a``."""
        j = self.iso.matrix
        db, dc = self.dim_b, self.dim_c
        full = (j @ op @ j.conj().T).reshape(db, dc, db, dc)
        return np.trace(full, axis1=1, axis2=3), np.trace(full, axis1=0, axis2=2)

    def output(self, op: np.ndarray, side: Side) -> np.ndarray:
        out_b, out_c = self.outputs(op)
        return out_b if _side(side) == "direct" else out_c


@dataclass(frozen=True, eq=False)
class Channel:
    """One side of a :class:`ChannelPair`, usable as a linear map on arrays."""

    pair: ChannelPair
    side: Side

    @property
    def dim_in(self) -> int:
        return self.pair.dim_a

    @property
    def dim_out(self) -> int:
        return self.pair.dim_out(self.side)

    def __call__(self, op: np.ndarray) -> np.ndarray:
        return self.pair.output(np.asarray(op), self.side)


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    """Normalised Choi matrix on ``H_in (x) H_out`` (trace one)."""

    matrix: np.ndarray
    dim_in: int
    dim_out: int

    def distance(self, other: "ChoiMatrix") -> float:
        return choi_distance(self, other)


def _side(side: str) -> str:
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")
    return side


def _as_channel(ch) -> Channel:
    if isinstance(ch, Channel):
        return ch
    pair, side = ch
    return Channel(pair, _side(side))


# --- constructors ---------------------------------------------------------


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    return lam


def build_b1(lam: float) -> ChannelPair:
    """Qubit-input pair with qutrit output and environment."""
    lam = _check_lambda(lam)
    j = np.zeros((9, 2))
    j[0 * 3 + 0, 0] = math.sqrt(lam)
    j[1 * 3 + 1, 0] = math.sqrt((1 - lam) / 2)
    j[2 * 3 + 2, 0] = math.sqrt((1 - lam) / 2)
    j[0 * 3 + 1, 1] = 1.0
    return ChannelPair(IsometrySpec(j, 2, 3, 3))


@lru_cache(maxsize=256)
def build_b(lam: float, n: int = 3) -> ChannelPair:
    """The extended pair: ``B1`` plus ``n - 2`` inputs leaked perfectly to ``c``."""
    lam = _check_lambda(lam)
    if int(n) != n or n < 3:
        raise ValueError(f"n must be an integer >= 3, got {n}")
    n = int(n)
    j = np.zeros((3 * n, n))
    j[0 * n + 0, 0] = math.sqrt(lam)
    j[1 * n + 1, 0] = math.sqrt((1 - lam) / 2)
    j[2 * n + 2, 0] = math.sqrt((1 - lam) / 2)
    j[0 * n + 1, 1] = 1.0
    for i in range(2, n):
        j[0 * n + i, i] = 1.0
    return ChannelPair(IsometrySpec(j, n, 3, n))


def identity_pair(dim: int) -> ChannelPair:
    """Noiseless channel: ``J = I (x) |0>_c`` with a one-dimensional environment."""
    return ChannelPair(IsometrySpec(np.eye(dim), dim, dim, 1))


def trace_and_replace_pair(dim_in: int, dim_out: int = 1) -> ChannelPair:
    """Direct channel ``A -> Tr(A) [0]``; the complement is the identity."""
    j = np.zeros((dim_out * dim_in, dim_in))
    for i in range(dim_in):
        j[0 * dim_in + i, i] = 1.0
    return ChannelPair(IsometrySpec(j, dim_in, dim_out, dim_in))


def parallel(pair: ChannelPair, copies: int, max_dim: int = DEFAULT_MAX_DIM) -> ChannelPair:
    """``copies`` parallel uses, with outputs grouped as ``(b...b)(c...c)``."""
    if copies < 1:
        raise ValueError("copies must be at least 1")
    if copies == 1:
        return pair
    da, db, dc = pair.dim_a**copies, pair.dim_b**copies, pair.dim_c**copies
    if max(da, db * dc) > max_dim:
        raise ValueError(
            f"{copies} copies need a {db * dc} x {da} isometry, above the cap of {max_dim}"
        )
    t = pair.iso.tensor
    letters = "ijklmnopqrstuvwxyz"
    bs, cs, as_ = letters[0:copies], letters[copies:2 * copies], letters[2 * copies:3 * copies]
    spec = ",".join(b + c + a for b, c, a in zip(bs, cs, as_)) + "->" + bs + cs + as_
    big = np.einsum(spec, *([t] * copies))
    return ChannelPair(IsometrySpec(big.reshape(db * dc, da), da, db, dc), pair.labels)


def apply(pair: ChannelPair, rho: DensityOperator, side: Side = "direct") -> DensityOperator:
    if rho.dim != pair.dim_a:
        raise ValueError(f"input dimension {rho.dim} does not match channel input {pair.dim_a}")
    return DensityOperator(pair.output(rho.matrix, side))


# --- Choi matrices --------------------------------------------------------


def _choi_of_map(fn, dim_in: int, dim_out: int) -> ChoiMatrix:
    c = np.zeros((dim_in * dim_out, dim_in * dim_out), dtype=complex)
    for i in range(dim_in):
        for j in range(dim_in):
            unit = np.zeros((dim_in, dim_in), dtype=complex)
            unit[i, j] = 1.0
            c[i * dim_out:(i + 1) * dim_out, j * dim_out:(j + 1) * dim_out] = fn(unit)
    return ChoiMatrix(c / dim_in, dim_in, dim_out)


def choi(pair: ChannelPair, side: Side = "direct") -> ChoiMatrix:
    ch = Channel(pair, _side(side))
    return _choi_of_map(ch, ch.dim_in, ch.dim_out)


def compose(outer, inner) -> ChoiMatrix:
    """Choi matrix of ``outer o inner``; each argument is a Channel or (pair, side)."""
    outer, inner = _as_channel(outer), _as_channel(inner)
    if outer.dim_in != inner.dim_out:
        raise ValueError(
            f"cannot compose: outer input {outer.dim_in} != inner output {inner.dim_out}"
        )
    return _choi_of_map(lambda a: outer(inner(a)), inner.dim_in, outer.dim_out)


def choi_distance(a: ChoiMatrix, b: ChoiMatrix) -> float:
    """Frobenius distance between two Choi matrices of equal shape."""
    if (a.dim_in, a.dim_out) != (b.dim_in, b.dim_out):
        raise ValueError(
            f"Choi shapes differ: {(a.dim_in, a.dim_out)} vs {(b.dim_in, b.dim_out)}"
        )
    return float(np.linalg.norm(a.matrix - b.matrix))


# --- subchannels ----------------------------------------------------------


def _support_basis(op: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal columns spanning the support of a PSD operator.

    Standard basis vectors are used when the support projector is diagonal.
    """
    w, v = np.linalg.eigh(op)
    cols = v[:, w > tol]
    proj = cols @ dagger(cols)
    if np.max(np.abs(proj - np.diag(np.diag(proj)))) < 1e-9:
        idx = np.flatnonzero(np.diag(proj).real > 0.5)
        return np.eye(op.shape[0], dtype=complex)[:, idx]
    return cols


def subchannel(pair: ChannelPair, proj: np.ndarray, tol: float = DEFAULT_TOL) -> ChannelPair:
    """Restrict the input to the range of an orthogonal projector.

    The output and environment are shrunk to the supports of the image; if the
    image does not lie in the product of those supports the restriction is not
    a subchannel of the declared split and ``ValueError`` is raised.
    """
    proj = np.asarray(proj, dtype=complex)
    if proj.shape != (pair.dim_a, pair.dim_a):
        raise ValueError(f"projector shape {proj.shape} does not match input dim {pair.dim_a}")
    if np.max(np.abs(proj @ proj - proj)) > tol or np.max(np.abs(proj - dagger(proj))) > tol:
        raise ValueError("not an orthogonal projector")
    in_basis = _support_basis(proj, 0.5)
    j2 = pair.iso.matrix @ in_basis
    k = in_basis.shape[1]
    t = j2.reshape(pair.dim_b, pair.dim_c, k)
    gram = np.einsum("bca,Bca->bB", t, t.conj())
    gram_c = np.einsum("bca,bCa->cC", t, t.conj())
    ub = _support_basis(gram, tol)
    uc = _support_basis(gram_c, tol)
    reduced = np.einsum("bB,cC,bca->BCa", ub.conj(), uc.conj(), t)
    back = np.einsum("bB,cC,BCa->bca", ub, uc, reduced)
    if np.max(np.abs(back - t)) > tol:
        raise ValueError("image of the projector is not a product subspace")
    db, dc = ub.shape[1], uc.shape[1]
    return ChannelPair(IsometrySpec(reduced.reshape(db * dc, k), k, db, dc), pair.labels)


def leak_projector(n: int) -> np.ndarray:
    """Projector onto span{|1>, ..., |n-1>}, the inputs of the B2/C2 subchannel."""
    p = np.eye(n, dtype=complex)
    p[0, 0] = 0.0
    return p


# --- degrading maps -------------------------------------------------------


class DegradingFamily(str, enum.Enum):
    K1_DEGRADING = "K1-degrading"
    L1_ANTIDEGRADING = "L1-antidegrading"
    L_ANTIDEGRADING = "L-antidegrading"
    T2_TRACE_AND_REPLACE = "T2-trace-and-replace"


@dataclass(frozen=True)
class DegradingMapSpec:
    """A degrading-map family with an optional explicit parameter.

    When ``parameter`` is ``None`` the family's substitution in terms of
    lambda is used: ``2l/(1-l)`` for K1, ``(1-l)/(2l)`` for L1 and ``(1-l)/l``
    for L.
    """

    family: DegradingFamily
    parameter: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", DegradingFamily(self.family))
        if self.parameter is not None and not 0.0 <= self.parameter <= 1.0:
            raise ValueError(f"parameter must lie in [0, 1], got {self.parameter}")


def substituted_parameter(family: DegradingFamily, lam: float) -> float:
    """The family parameter as a function of lambda (may fall outside [0, 1])."""
    family = DegradingFamily(family)
    lam = float(lam)
    if family is DegradingFamily.K1_DEGRADING:
        return math.inf if lam == 1.0 else 2 * lam / (1 - lam)
    if family is DegradingFamily.L1_ANTIDEGRADING:
        return math.inf if lam == 0.0 else (1 - lam) / (2 * lam)
    if family is DegradingFamily.L_ANTIDEGRADING:
        return math.inf if lam == 0.0 else (1 - lam) / lam
    return 0.0


def _k1(delta: float) -> np.ndarray:
    # H_b1 -> H_c1 (x) H_d1
    k = np.zeros((9, 3))
    k[1 * 3 + 0, 0] = 1.0
    k[0 * 3 + 0, 1] = math.sqrt(delta)
    k[1 * 3 + 1, 1] = math.sqrt(1 - delta)
    k[2 * 3 + 2, 2] = 1.0
    return k


def _l1(eta: float) -> np.ndarray:
    # H_c1 -> H_b1 (x) H_e1
    k = np.zeros((9, 3))
    k[0 * 3 + 0, 0] = math.sqrt(1 - eta)
    k[1 * 3 + 1, 0] = math.sqrt(eta)
    k[0 * 3 + 1, 1] = 1.0
    k[2 * 3 + 2, 2] = 1.0
    return k


def _l(zeta: float, n: int) -> np.ndarray:
    # H_c -> H_b (x) H_e with dim e = n
    k = np.zeros((3 * n, n))
    k[0 * n + 0, 0] = math.sqrt(1 - zeta)
    k[1 * n + 1, 0] = math.sqrt(zeta / 2)
    k[2 * n + 2, 0] = math.sqrt(zeta / 2)
    for i in range(1, n):
        k[0 * n + i, i] = 1.0
    return k


def build_degrading(spec: DegradingMapSpec, lam: float, n: int = 3) -> ChannelPair:
    """Pair whose direct channel is the requested degrading map.

    Raises ``ValueError`` when the substituted parameter leaves [0, 1]; pass an
    explicit ``parameter`` to build the map outside its window.
    """
    lam = _check_lambda(lam)
    family = spec.family
    if family is DegradingFamily.T2_TRACE_AND_REPLACE:
        return trace_and_replace_pair(n - 1, 1)
    param = spec.parameter if spec.parameter is not None else substituted_parameter(family, lam)
    if not 0.0 <= param <= 1.0:
        raise ValueError(
            f"{family.value} parameter {param:.6g} at lambda={lam} lies outside [0, 1]"
        )
    if family is DegradingFamily.K1_DEGRADING:
        return ChannelPair(IsometrySpec(_k1(param), 3, 3, 3), ("c1", "d1"))
    if family is DegradingFamily.L1_ANTIDEGRADING:
        return ChannelPair(IsometrySpec(_l1(param), 3, 3, 3), ("b1", "e1"))
    return ChannelPair(IsometrySpec(_l(param, n), n, 3, n), ("b", "e"))


# --- certificates ---------------------------------------------------------


@dataclass
class DegradabilityVerdict:
    lam: float
    n: int
    b1_degradable: bool
    b1_antidegradable: bool
    b_antidegradable: bool
    b2_antidegradable: bool
    c2_identity: bool
    distances: dict[str, float] = field(default_factory=dict)
    parameters: dict[str, float] = field(default_factory=dict)
    tol: float = CHOI_TOL

    @property
    def q_equals_p_for_b1(self) -> bool:
        """(Anti)degradable B1 has Q1 = Q = P = P1."""
        return self.b1_degradable or self.b1_antidegradable

    @property
    def q_b1_zero(self) -> bool:
        return self.b1_antidegradable

    @property
    def q_b_zero(self) -> bool:
        return self.b_antidegradable

    @property
    def q_c_lower_bound_bits(self) -> float | None:
        return math.log2(self.n - 1) if self.c2_identity else None

    @property
    def q_c_upper_bound_bits(self) -> float:
        return math.log2(self.n)

    def as_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "n": self.n,
            "b1_degradable": self.b1_degradable,
            "b1_antidegradable": self.b1_antidegradable,
            "b_antidegradable": self.b_antidegradable,
            "b2_antidegradable": self.b2_antidegradable,
            "c2_identity": self.c2_identity,
            "q_equals_p_for_b1": self.q_equals_p_for_b1,
            "q_b1_zero": self.q_b1_zero,
            "q_b_zero": self.q_b_zero,
            "q_c_lower_bound_bits": self.q_c_lower_bound_bits,
            "q_c_upper_bound_bits": self.q_c_upper_bound_bits,
            "distances": dict(self.distances),
            "parameters": dict(self.parameters),
            "tol": self.tol,
        }


def _clamped(family: DegradingFamily, lam: float) -> float:
    return min(1.0, max(0.0, substituted_parameter(family, lam)))


def degradability_distances(lam: float, n: int = 3) -> tuple[dict[str, float], dict[str, float]]:
    """Choi distances of the four identities, with the parameters used.

    Parameters follow the lambda substitutions, clamped into [0, 1] outside
    their windows so the distance there measures how badly the identity fails.
    """
    lam = _check_lambda(lam)
    b1 = build_b1(lam)
    b = build_b(lam, n)
    params = {fam.value: _clamped(fam, lam) for fam in list(DegradingFamily)[:3]}
    d1 = build_degrading(DegradingMapSpec(DegradingFamily.K1_DEGRADING, params["K1-degrading"]), lam)
    e1 = build_degrading(DegradingMapSpec(DegradingFamily.L1_ANTIDEGRADING, params["L1-antidegrading"]), lam)
    e = build_degrading(DegradingMapSpec(DegradingFamily.L_ANTIDEGRADING, params["L-antidegrading"]), lam, n)
    sub = subchannel(b, leak_projector(n))
    t2 = build_degrading(DegradingMapSpec(DegradingFamily.T2_TRACE_AND_REPLACE), lam, n)
    dist = {
        "b1_degradable": choi_distance(compose(d1.direct, b1.direct), choi(b1, "complement")),
        "b1_antidegradable": choi_distance(compose(e1.direct, b1.complement), choi(b1, "direct")),
        "b_antidegradable": choi_distance(compose(e.direct, b.complement), choi(b, "direct")),
        "b2_antidegradable": choi_distance(compose(t2.direct, sub.complement), choi(sub, "direct")),
        "c2_identity": choi_distance(choi(sub, "complement"), choi(identity_pair(n - 1))),
    }
    return dist, params


def certify_degradability(lam: float, n: int = 3, tol: float = CHOI_TOL) -> DegradabilityVerdict:
    dist, params = degradability_distances(lam, n)
    return DegradabilityVerdict(
        lam=float(lam),
        n=int(n),
        b1_degradable=dist["b1_degradable"] < tol,
        b1_antidegradable=dist["b1_antidegradable"] < tol,
        b_antidegradable=dist["b_antidegradable"] < tol,
        b2_antidegradable=dist["b2_antidegradable"] < tol,
        c2_identity=dist["c2_identity"] < tol,
        distances=dist,
        parameters=params,
        tol=tol,
    )
