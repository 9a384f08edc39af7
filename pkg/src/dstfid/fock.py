"""Brute-force oracle in a truncated number basis.

Builds the displaced squeezed thermal density matrix rho = D S rho_th S^dag
D^dag as a dense cutoff-N matrix and evaluates the Uhlmann/Bures fidelity
F = (tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))^2 by Hermitian eigendecomposition.
An adaptive cutoff ladder (grow by x1.5 until two successive values agree)
certifies convergence.

The oracle is deliberately independent of the 2x2 reduction: it never touches
the conjugation matrices, so agreement between the two is evidence, not
circularity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .algebra import StateParams

__all__ = [
    "ConvergenceError",
    "ContractViolationError",
    "FockMatrix",
    "OracleResult",
    "annihilation",
    "matrix_exp",
    "displacement_op",
    "squeeze_op",
    "thermal_state",
    "dst_state",
    "uhlmann_fidelity",
    "fidelity_oracle",
    "DEFAULT_CUTOFF_CEILING",
]

# Dense complex square matrix over the truncated number basis; the cutoff is
# its dimension.
FockMatrix = np.ndarray

DEFAULT_CUTOFF_CEILING = 1024

# How hermitian / normalized a density matrix must be before we trust it.
_HERMITICITY_TOL = 1e-10
_TRACE_TOL = 1e-8

# exp(-beta * N) <= 1e-12 keeps the truncated thermal tail (and hence the
# trace deficit) below 1e-12.
_THERMAL_TAIL_LOG = 12.0 * math.log(10.0)


class ConvergenceError(RuntimeError):
    """Cutoff ladder hit its ceiling before successive fidelities agreed."""

    def __init__(self, message: str, gaps: list[tuple[int, float]]):
        super().__init__(message)
        self.gaps = gaps


class ContractViolationError(ValueError):
    """An input that was promised to be a density matrix is not one."""


def annihilation(cutoff: int) -> FockMatrix:
    """Ladder operator a with entries a[n-1, n] = sqrt(n), zero elsewhere."""
    if cutoff < 2:
        raise ValueError(f"cutoff must be >= 2, got {cutoff!r}")
    return np.diagflat(np.sqrt(np.arange(1, cutoff, dtype=float)), 1).astype(complex)


def matrix_exp(m: FockMatrix) -> FockMatrix:
    """Dense matrix exponential (scaling-and-squaring core).

    Inputs must be finite; a result that overflows double precision raises
    instead of returning infs.
    """
    m = np.asarray(m, dtype=complex)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix_exp requires finite entries")
    out = scipy.linalg.expm(m)
    if not np.all(np.isfinite(out)):
        raise OverflowError(
            "matrix exponential overflowed double precision; the generator's "
            "norm is too large for this scaling"
        )
    return out


def displacement_op(k: complex, cutoff: int) -> FockMatrix:
    """D(k) = exp(k a^dag - conj(k) a); unitary up to truncation."""
    a = annihilation(cutoff)
    k = complex(k)
    return matrix_exp(k * a.conj().T - k.conjugate() * a)


def squeeze_op(r: float, cutoff: int) -> FockMatrix:
    """S(r) = exp((r/2)(a^2 - a^dag^2)); unitary up to truncation."""
    a = annihilation(cutoff)
    adag = a.conj().T
    return matrix_exp(0.5 * float(r) * (a @ a - adag @ adag))


def thermal_cutoff_requirement(beta: float) -> int:
    """Smallest cutoff keeping the truncated thermal tail below 1e-12."""
    return max(2, math.ceil(_THERMAL_TAIL_LOG / beta))


def thermal_state(beta: float, cutoff: int) -> FockMatrix:
    """Normalized thermal state diag((1 - e^-beta) e^-beta*n).

    The cutoff must keep the discarded tail (= trace deficit) below 1e-12;
    otherwise the call refuses and names the cutoff that would suffice.
    """
    beta = float(beta)
    if not math.isfinite(beta) or beta <= 0.0:
        raise ValueError(f"beta must be finite and > 0, got {beta!r}")
    needed = thermal_cutoff_requirement(beta)
    if cutoff < needed:
        raise ValueError(
            f"cutoff {cutoff} leaves a thermal tail above 1e-12 at beta="
            f"{beta:g}; need at least {needed}"
        )
    n = np.arange(cutoff, dtype=float)
    pops = -math.expm1(-beta) * np.exp(-beta * n)
    return np.diag(pops).astype(complex)


def dst_state(s: StateParams, cutoff: int) -> FockMatrix:
    """rho = D S rho_thermal S^dag D^dag at the given cutoff."""
    rho = thermal_state(s.beta, cutoff)
    sq = squeeze_op(s.r, cutoff)
    disp = displacement_op(s.k, cutoff)
    u = disp @ sq
    return u @ rho @ u.conj().T


def _check_density(rho: FockMatrix, name: str) -> None:
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    if herm > _HERMITICITY_TOL:
        raise ContractViolationError(
            f"{name} is not Hermitian within {_HERMITICITY_TOL:g} "
            f"(max deviation {herm:.3e})"
        )
    tr = float(np.real(np.trace(rho)))
    if abs(tr - 1.0) > _TRACE_TOL:
        raise ContractViolationError(
            f"{name} has trace {tr!r}, more than {_TRACE_TOL:g} away from 1"
        )


def _psd_sqrt(rho: FockMatrix) -> tuple[FockMatrix, float]:
    """Hermitian square root via eigendecomposition; returns (root, floor).

    floor is the most negative eigenvalue encountered (0.0 if none); negative
    eigenvalues are clamped to zero before the square root.
    """
    vals, vecs = np.linalg.eigh(rho)
    floor = float(min(vals[0], 0.0))
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T, floor


def uhlmann_fidelity(rho1: FockMatrix, rho2: FockMatrix) -> float:
    """F = (tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))^2 for two density matrices."""
    fid, _ = _uhlmann_with_floor(rho1, rho2)
    return fid


def _uhlmann_with_floor(rho1: FockMatrix, rho2: FockMatrix) -> tuple[float, float]:
    rho1 = np.asarray(rho1, dtype=complex)
    rho2 = np.asarray(rho2, dtype=complex)
    _check_density(rho1, "rho1")
    _check_density(rho2, "rho2")
    root1, floor1 = _psd_sqrt(rho1)
    inner = root1 @ rho2 @ root1
    # inner is Hermitian PSD up to rounding; evaluate tr sqrt by eigenvalues.
    vals = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    floor2 = float(min(vals[0], 0.0))
    vals = np.clip(vals, 0.0, None)
    fid = float(np.sum(np.sqrt(vals)) ** 2)
    return fid, min(floor1, floor2)


@dataclass(frozen=True)
class OracleResult:
    """Converged brute-force fidelity plus how it converged."""

    fidelity: float
    cutoff_used: int
    convergence_gap: float
    spectrum_floor: float


def _starting_cutoff(s1: StateParams, s2: StateParams) -> int:
    """Heuristic first rung: covers displacement, squeeze, and thermal spread,
    bumped so the thermal-tail contract holds on the first try."""
    spread = math.ceil(
        30.0
        + 8.0 * (abs(s1.k) ** 2 + abs(s2.k) ** 2)
        + 10.0 * math.sinh(max(abs(s1.r), abs(s2.r))) ** 2
        + 10.0 * max(s1.nbar, s2.nbar)
    )
    return max(
        spread,
        thermal_cutoff_requirement(s1.beta),
        thermal_cutoff_requirement(s2.beta),
    )


def fidelity_oracle(
    s1: StateParams,
    s2: StateParams,
    tol: float = 1e-8,
    start: int | None = None,
    ceiling: int = DEFAULT_CUTOFF_CEILING,
) -> OracleResult:
    """Adaptive-cutoff Uhlmann fidelity between two parameterized states.

    Evaluates at a starting cutoff, grows by x1.5 (rounded) and stops when two
    successive fidelities differ by at most tol.  Raises ConvergenceError
    with the gap trace if the ceiling is reached first.
    """
    if tol < 1e-10:
        raise ValueError(f"tol must be >= 1e-10, got {tol!r}")
    cutoff = start if start is not None else _starting_cutoff(s1, s2)
    cutoff = max(2, min(cutoff, ceiling))

    gaps: list[tuple[int, float]] = []
    prev: float | None = None
    floor = 0.0
    while True:
        fid, fl = _uhlmann_with_floor(dst_state(s1, cutoff), dst_state(s2, cutoff))
        floor = min(floor, fl)
        if prev is not None:
            gap = abs(fid - prev)
            gaps.append((cutoff, gap))
            if gap <= tol:
                return OracleResult(fid, cutoff, gap, floor)
        prev = fid
        if cutoff >= ceiling:
            trace = ", ".join(f"N={n}: {g:.3e}" for n, g in gaps) or "no rungs"
            raise ConvergenceError(
                f"fidelity did not stabilize to {tol:g} by cutoff {ceiling} "
                f"(gap trace: {trace})",
                gaps,
            )
        cutoff = min(ceiling, int(round(cutoff * 1.5)))
