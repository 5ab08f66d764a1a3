"""Partial-transpose entanglement tests on the two-letter states."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import apply
from .nonadd import TwoLetterAnsatz, doubled_b
from .qmath import DensityOperator, Spectrum, hermitian_eig, partial_transpose

NEGATIVITY_TOL = 1e-10
DIAGONAL_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PptVerdict:
    min_eigenvalue: float
    entangled: bool
    spectrum: Spectrum
    diagonal: bool
    offdiagonal_mass: float

    @property
    def label(self) -> str:
        if self.entangled:
            return "entangled"
        return "separable-diagonal" if self.diagonal else "ppt"

    def as_dict(self) -> dict:
        return {
            "min_eigenvalue": self.min_eigenvalue,
            "entangled": self.entangled,
            "diagonal": self.diagonal,
            "offdiagonal_mass": self.offdiagonal_mass,
            "verdict": self.label,
            "eigenvalues": [float(x) for x in self.spectrum.eigenvalues],
        }


@dataclass(frozen=True, eq=False)
class TauStates:
    tau_aa: DensityOperator
    tau_bb: DensityOperator
    tau_cc: DensityOperator


def tau_states(lam: float, p: float) -> TauStates:
    """Equal mixture of ``[n0]`` and ``[n1]`` and its images under two uses of B and C.

    ``p`` is the ``|11>`` weight of ``|n1>``.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda {lam} outside [0, 1]")
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    tau = DensityOperator(TwoLetterAnsatz(0.5, 0.5, 0.0, p).density(), (3, 3))
    pair = doubled_b(lam)
    bb = apply(pair, tau, "direct")
    cc = apply(pair, tau, "complement")
    return TauStates(tau, DensityOperator(bb.matrix, (3, 3)), DensityOperator(cc.matrix, (3, 3)))


def ppt_test(rho: DensityOperator, factor: int = 1) -> PptVerdict:
    """Partial transpose on ``factor``; negative spectrum means entangled.

    A state that is diagonal in the product basis is a mixture of product
    states and is flagged as such.
    """
    if not isinstance(rho, DensityOperator) or len(rho.dims) != 2:
        raise ValueError("ppt_test needs a DensityOperator with two tensor factors")
    spec = hermitian_eig(partial_transpose(rho, factor))
    wmin = float(spec.eigenvalues[-1])
    m = rho.matrix
    off = float(np.sum(np.abs(m - np.diag(np.diag(m)))))
    return PptVerdict(
        min_eigenvalue=wmin,
        entangled=wmin < -NEGATIVITY_TOL,
        spectrum=spec,
        diagonal=off < DIAGONAL_TOL,
        offdiagonal_mass=off,
    )
