"""Propagation and transfer matrices, Lyapunov exponents, spectral regions.

Everything here works with plain 2x2 complex numpy arrays.  Long products are
never formed directly: the running product is rescaled at every step and the
scale is accumulated as a sum of logs, so chains of length 10^4 and more stay
inside floating point range.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from .capacitance import gauge_weight
from .chains import Block, Chain, ResonatorParams

__all__ = [
    "SpectralRegion",
    "RegionLabel",
    "FixedPoints",
    "ScaledMatrix",
    "LyapunovExponents",
    "propagation_matrix",
    "symmetrised_propagation",
    "block_propagation",
    "total_propagation",
    "total_lyapunov",
    "lyapunov_grid",
    "classify",
    "fixed_points",
    "saxon_hutner",
    "spectral_residual",
    "residual_grid",
    "count_sign_changes",
    "symmetrised_transfer",
    "basis_change",
]

HYPERBOLIC_TOL = 1e-9


class SpectralRegion(Enum):
    SHARED_PASS_BAND = "shared_pass_band"
    BANDGAP = "bandgap"
    HYBRIDISATION = "hybridisation"


@dataclass(frozen=True)
class RegionLabel:
    region: SpectralRegion
    block_passes: tuple[bool, ...]


@dataclass(frozen=True)
class FixedPoints:
    """Source and sink directions of a hyperbolic matrix on the projective
    line, as angles in [0, pi)."""

    source: float
    sink: float


@dataclass(frozen=True, eq=False)
class ScaledMatrix:
    """A 2x2 matrix stored as exp(log_scale) times a unit-norm direction."""

    log_scale: float
    direction: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return np.exp(self.log_scale) * self.direction


class LyapunovExponents(NamedTuple):
    total: float
    symmetrised: float
    decay: float


def propagation_matrix(r: ResonatorParams, lam: complex) -> np.ndarray:
    """Matrix moving exterior value/derivative data across one resonator and
    the following gap; its determinant is exp(-gamma*ell)."""
    w = gauge_weight(r.gamma * r.ell)
    c = r.ell * lam / (w * r.v**2)
    damp = np.exp(-r.gamma * r.ell)
    return np.array(
        [[1.0 - r.s * c, damp * r.s], [-c, damp]],
        dtype=complex,
    )


def symmetrised_propagation(r: ResonatorParams, lam: complex) -> np.ndarray:
    """Propagation matrix with the nonreciprocal decay factored out; its
    determinant is 1."""
    return np.exp(r.gamma * r.ell / 2.0) * propagation_matrix(r, lam)


def block_propagation(block: Block, lam: complex, symmetrised: bool = True) -> np.ndarray:
    """Ordered product over the block's resonators, first resonator applied
    first."""
    factory = symmetrised_propagation if symmetrised else propagation_matrix
    out = np.eye(2, dtype=complex)
    for r in block.resonators:
        out = factory(r, lam) @ out
    return out


def _propagate_entries(v, ell, s, gamma, lams, symmetrised=True):
    """Renormalized product of per-resonator matrices for a batch of lams.

    Returns the four entry arrays of the unit-scaled direction and the
    accumulated log of the max-abs rescaling factors (stride 1).
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    k = lams.shape[0]
    a11 = np.ones(k, complex)
    a12 = np.zeros(k, complex)
    a21 = np.zeros(k, complex)
    a22 = np.ones(k, complex)
    log_scale = np.zeros(k)
    gl = gamma * ell
    w = gauge_weight(gl)
    damp = np.exp(-gl)
    lift = np.exp(gl / 2.0) if symmetrised else np.ones_like(gl)
    coef = ell / (w * v**2)
    for i in range(len(v)):
        p11 = lift[i] * (1.0 - s[i] * coef[i] * lams)
        p12 = lift[i] * damp[i] * s[i]
        p21 = -lift[i] * coef[i] * lams
        p22 = lift[i] * damp[i]
        b11 = p11 * a11 + p12 * a21
        b12 = p11 * a12 + p12 * a22
        b21 = p21 * a11 + p22 * a21
        b22 = p21 * a12 + p22 * a22
        scale = np.maximum(
            np.maximum(np.abs(b11), np.abs(b12)),
            np.maximum(np.abs(b21), np.abs(b22)),
        )
        a11, a12, a21, a22 = b11 / scale, b12 / scale, b21 / scale, b22 / scale
        log_scale += np.log(scale)
    return (a11, a12, a21, a22), log_scale


def _spectral_norm(a11, a12, a21, a22):
    # Largest singular value of a 2x2 matrix in closed form.
    t = np.abs(a11) ** 2 + np.abs(a12) ** 2 + np.abs(a21) ** 2 + np.abs(a22) ** 2
    d = np.abs(a11 * a22 - a12 * a21) ** 2
    return np.sqrt((t + np.sqrt(np.maximum(t * t - 4.0 * d, 0.0))) / 2.0)


def total_propagation(chain: Chain, lam: complex, symmetrised: bool = True) -> ScaledMatrix:
    """Product of all per-resonator matrices along the chain, renormalized."""
    entries, log_scale = _propagate_entries(
        chain.v, chain.ell, chain.s, chain.gamma, lam, symmetrised
    )
    direction = np.array(
        [[entries[0][0], entries[1][0]], [entries[2][0], entries[3][0]]], dtype=complex
    )
    norm = float(_spectral_norm(*(e[0] for e in entries)))
    return ScaledMatrix(
        log_scale=float(log_scale[0]) + np.log(norm), direction=direction / norm
    )


def lyapunov_grid(
    chain: Chain, lams
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(total, symmetrised, decay) Lyapunov data for an array of frequencies.

    The symmetrised exponent is log of the spectral norm of the renormalized
    symmetrised product divided by the chain length; the decay term
    sum(gamma*ell)/(2N) is frequency independent; the total is their
    difference by construction.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    entries, log_scale = _propagate_entries(chain.v, chain.ell, chain.s, chain.gamma, lams)
    n = chain.num_resonators
    lsym = (log_scale + np.log(_spectral_norm(*entries))) / n
    decay = np.full(lams.shape, chain.gamma_length_total() / (2.0 * n))
    return lsym - decay, lsym, decay


def total_lyapunov(chain: Chain, lam: complex) -> LyapunovExponents:
    """Lyapunov exponent at one frequency, split into symmetrised growth and
    nonreciprocal decay: total = symmetrised - decay."""
    total, lsym, decay = lyapunov_grid(chain, [lam])
    return LyapunovExponents(float(total[0]), float(lsym[0]), float(decay[0]))


def classify(blocks: Sequence[Block], lam: float) -> RegionLabel:
    """Tripartite region label at a real frequency from the per-block trace
    criterion |trace| <= 2 (boundary counts as pass)."""
    passes = tuple(
        bool(abs(np.trace(block_propagation(b, complex(lam))).real) <= 2.0) for b in blocks
    )
    if all(passes):
        region = SpectralRegion.SHARED_PASS_BAND
    elif not any(passes):
        region = SpectralRegion.BANDGAP
    else:
        region = SpectralRegion.HYBRIDISATION
    return RegionLabel(region=region, block_passes=passes)


def fixed_points(m: np.ndarray, tolerance: float = HYPERBOLIC_TOL) -> FixedPoints:
    """Source and sink of a real hyperbolic 2x2 matrix on the projective line.

    The sink is the eigendirection of the eigenvalue with modulus above 1
    (every line converges to it under iteration), the source the other one.
    """
    m = np.asarray(m)
    if np.iscomplexobj(m) and np.max(np.abs(m.imag)) > 1e-12:
        raise ValueError("fixed points are defined for real matrices")
    m = m.real.astype(float)
    if abs(np.trace(m)) <= 2.0 + tolerance:
        raise ValueError("matrix is not hyperbolic within tolerance")
    vals, vecs = np.linalg.eig(m)
    order = np.argsort(np.abs(vals))
    angles = np.arctan2(vecs[1].real, vecs[0].real) % np.pi
    return FixedPoints(source=float(angles[order[0]]), sink=float(angles[order[1]]))


def saxon_hutner(blocks: Sequence[Block], lam: float) -> bool:
    """Certificate that a real frequency is in the spectral gap of every
    mixed chain built from `blocks`.

    True iff every block is in its bandgap at lam and, cutting the projective
    circle at all the source directions, every sink direction falls in the
    same arc.
    """
    mats = [block_propagation(b, complex(lam)).real for b in blocks]
    if any(abs(np.trace(m)) <= 2.0 + HYPERBOLIC_TOL for m in mats):
        return False
    points = [fixed_points(m) for m in mats]
    sources = sorted(p.source for p in points)

    def arc_index(angle: float) -> int:
        return (bisect.bisect_right(sources, angle) - 1) % len(sources)

    arcs = {arc_index(p.sink) for p in points}
    return len(arcs) == 1


def residual_grid(chain: Chain, lams) -> np.ndarray:
    """Renormalized boundary-mismatch residual over an array of frequencies.

    The vector (1, 0) is pushed through the symmetrised matrices with L2
    renormalisation at every step; a frequency belongs to the spectrum exactly
    when the result stays parallel to (1, 0), so the second component (first
    for a single-resonator chain, where the two boundary rows coincide and the
    roles flip) vanishes precisely on the spectrum.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    k = lams.shape[0]
    w1 = np.ones(k, complex)
    w2 = np.zeros(k, complex)
    gl = chain.gamma * chain.ell
    w = gauge_weight(gl)
    damp = np.exp(-gl)
    lift = np.exp(gl / 2.0)
    coef = chain.ell / (w * chain.v**2)
    s = chain.s
    for i in range(chain.num_resonators):
        n1 = lift[i] * ((1.0 - s[i] * coef[i] * lams) * w1 + damp[i] * s[i] * w2)
        n2 = lift[i] * (-coef[i] * lams * w1 + damp[i] * w2)
        scale = np.sqrt(np.abs(n1) ** 2 + np.abs(n2) ** 2)
        w1, w2 = n1 / scale, n2 / scale
    out = w2 if chain.num_resonators > 1 else w1
    return out.real if np.all(np.isreal(lams)) else out


def spectral_residual(chain: Chain, lam) -> float:
    return float(residual_grid(chain, [lam])[0].real)


def count_sign_changes(chain: Chain, grid) -> int:
    """Number of sign changes of the residual along a real frequency grid;
    with a grid bracketing every eigenvalue once this counts the spectrum."""
    vals = residual_grid(chain, np.asarray(grid, dtype=float)).real
    return int(np.sum(vals[:-1] * vals[1:] < 0))


def symmetrised_transfer(
    prev: ResonatorParams, cur: ResonatorParams, nxt: ResonatorParams, lam: complex
) -> np.ndarray:
    """Transfer matrix advancing consecutive symmetrised eigenvector entries
    by one site, with the periodic-extension convention supplying the
    neighbours of the first and last site."""
    wc_p = gauge_weight(cur.gamma * cur.ell)
    wc_m = gauge_weight(-cur.gamma * cur.ell)
    diag = wc_m / prev.s + wc_p / cur.s
    off_prev = np.sqrt(gauge_weight(prev.gamma * prev.ell) * wc_m) / prev.s
    off_cur = np.sqrt(wc_p * gauge_weight(-nxt.gamma * nxt.ell)) / cur.s
    return np.array(
        [
            [(diag - cur.ell * lam / cur.v**2) / off_cur, -off_prev / off_cur],
            [1.0, 0.0],
        ],
        dtype=complex,
    )


def basis_change(cur: ResonatorParams, nxt: ResonatorParams) -> np.ndarray:
    """Change of basis from symmetrised eigenvector pairs to exterior
    value/derivative data; conjugating the transfer matrix with consecutive
    ones yields the symmetrised propagation matrix."""
    a = np.sqrt(gauge_weight(-nxt.gamma * nxt.ell))
    b = np.exp(cur.gamma * cur.ell / 2.0) * np.sqrt(gauge_weight(-cur.gamma * cur.ell))
    return np.array([[a, 0.0], [a / cur.s, -b / cur.s]], dtype=complex)
