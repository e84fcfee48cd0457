"""Gauge capacitance matrices, their symmetrisation and the eigenproblem.

The resonance problem of a finite chain reduces to the generalised eigenvalue
problem V C u = lambda u where C is a nonsymmetric tridiagonal matrix built
from the weight function z / (1 - exp(-z)) and V is the diagonal matrix of
v_i^2 / ell_i.  A positive diagonal similarity turns V C into a symmetric
tridiagonal matrix, which is what we actually diagonalise; the similarity
transform carries the exponential skin decay and is therefore kept in log
domain throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .chains import Chain

__all__ = [
    "NumericalError",
    "gauge_weight",
    "TridiagonalMatrix",
    "gauge_capacitance",
    "material_matrix",
    "SymmetrisedSystem",
    "symmetrise",
    "SpectralData",
    "spectrum",
    "eigenvalues",
    "ModeProfile",
    "mode_profile",
]

_SERIES_CUTOFF = 1e-4


class NumericalError(RuntimeError):
    """A numerical routine failed to deliver the promised accuracy."""


def gauge_weight(z):
    """The coupling weight z / (1 - exp(-z)), positive for all real z.

    The singularity at z = 0 is removable; below |z| < 1e-4 we evaluate the
    Taylor series 1 + z/2 + z^2/12 - z^4/720 instead of the direct quotient,
    which keeps the relative error around 1e-15 across the switch point
    (the direct branch uses expm1, the series truncation error is ~z^6/30240).
    """
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < _SERIES_CUTOFF
    safe = np.where(small, 1.0, z)
    direct = safe / (-np.expm1(-safe))
    series = 1.0 + z / 2.0 + z * z / 12.0 - z**4 / 720.0
    out = np.where(small, series, direct)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class TridiagonalMatrix:
    diag: np.ndarray
    lower: np.ndarray  # entries (i+1, i)
    upper: np.ndarray  # entries (i, i+1)

    def to_dense(self) -> np.ndarray:
        n = len(self.diag)
        m = np.diag(self.diag)
        if n > 1:
            m += np.diag(self.upper, 1) + np.diag(self.lower, -1)
        return m


def gauge_capacitance(chain: Chain) -> TridiagonalMatrix:
    """Tridiagonal gauge capacitance matrix of a finite chain.

    Diagonal entries are w(gamma_i ell_i)/s_i + w(-gamma_i ell_i)/s_{i-1} with
    the first (last) row missing its left (right) term; off-diagonals are
    negative, -w(gamma_i ell_i)/s_i above and -w(-gamma_i ell_i)/s_{i-1}
    below, which is the sign forced by similarity to the symmetrised matrix.
    """
    n = chain.num_resonators
    if n < 1:
        raise ValueError("chain must contain at least one resonator")
    gl = chain.gamma * chain.ell
    wp = gauge_weight(gl)
    wm = gauge_weight(-gl)
    s = chain.s
    diag = np.zeros(n)
    diag[0] = wp[0] / s[0]
    if n > 1:
        diag[-1] = wm[-1] / s[-2]
        diag[1:-1] = wm[1:-1] / s[:-2] + wp[1:-1] / s[1:-1]
    upper = -wp[:-1] / s[:-1]
    lower = -wm[1:] / s[:-1]
    return TridiagonalMatrix(diag=diag, lower=lower, upper=upper)


def material_matrix(chain: Chain) -> np.ndarray:
    """Diagonal of the material matrix, v_i^2 / ell_i."""
    return chain.v**2 / chain.ell


@dataclass(frozen=True, eq=False)
class SymmetrisedSystem:
    """Symmetric form of the capacitance problem.

    `diag` and `offdiag` are the bands of the symmetrised matrix (off-diagonal
    magnitudes; the matrix entries are their negatives), `material` is the
    diagonal of V and `log_transform` holds the logs of the diagonal
    similarity that maps the symmetrised eigenvectors back to the gauge ones.
    """

    diag: np.ndarray
    offdiag: np.ndarray
    material: np.ndarray
    log_transform: np.ndarray

    def tridiagonal_bands(self) -> tuple[np.ndarray, np.ndarray]:
        """Bands (diagonal, subdiagonal) of V^(1/2) J V^(1/2)."""
        d = self.material * self.diag
        e = -np.sqrt(self.material[:-1] * self.material[1:]) * self.offdiag
        return d, e

    def to_dense(self) -> np.ndarray:
        n = len(self.diag)
        m = np.diag(self.diag)
        if n > 1:
            m -= np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)
        return m


def symmetrise(chain: Chain) -> SymmetrisedSystem:
    """Bands of the symmetrised matrix plus the log-domain transform.

    The transform obeys log r_{i+1} - log r_i = (log w(-g ell)_{i+1}
    - log w(g ell)_i) / 2; expanding the recursion gives the closed form
    log r_i = log(w(-gamma_i ell_i))/2 - sum_{k<i} gamma_k ell_k / 2, which is
    validated here to 1e-10 as a cheap internal consistency check.
    """
    gl = chain.gamma * chain.ell
    wp = gauge_weight(gl)
    wm = gauge_weight(-gl)
    cap = gauge_capacitance(chain)
    offdiag = np.sqrt(wp[:-1] * wm[1:]) / chain.s[:-1]
    steps = 0.5 * (np.log(wm[1:]) - np.log(wp[:-1]))
    log_transform = 0.5 * np.log(wm[0]) + np.concatenate([[0.0], np.cumsum(steps)])
    closed = 0.5 * np.log(wm) - 0.5 * np.concatenate([[0.0], np.cumsum(gl[:-1])])
    if not np.allclose(log_transform, closed, rtol=0.0, atol=1e-10):
        raise NumericalError("transform recursion disagrees with its closed form")
    return SymmetrisedSystem(
        diag=cap.diag,
        offdiag=offdiag,
        material=material_matrix(chain),
        log_transform=log_transform,
    )


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Eigenvalues plus eigenvectors in two representations.

    `symvectors` are the orthonormal eigenvectors of the symmetric tridiagonal
    matrix (one per column).  The gauge eigenvectors u = R V^(1/2) w decay
    through thousands of orders of magnitude for long chains, so they are
    stored per entry as a sign and a natural-log magnitude, each column
    shifted to sup-norm 1.
    """

    eigenvalues: np.ndarray
    symvectors: np.ndarray
    signs: np.ndarray
    log_magnitude: np.ndarray

    @property
    def count(self) -> int:
        return len(self.eigenvalues)

    def gauge_vector(self, k: int) -> np.ndarray:
        """Gauge eigenvector k in linear scale; entries below the floating
        point range underflow to 0."""
        return self.signs[:, k] * np.exp(self.log_magnitude[:, k])


def _solve_tridiagonal(d, e, lambda_max=None, vectors=True):
    try:
        if lambda_max is None:
            return scipy.linalg.eigh_tridiagonal(d, e, eigvals_only=not vectors)
        lo = float(np.min(d) - 2.0 * np.max(np.abs(e), initial=0.0) - 1.0)
        return scipy.linalg.eigh_tridiagonal(
            d, e, eigvals_only=not vectors, select="v", select_range=(lo, float(lambda_max))
        )
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:  # pragma: no cover
        raise NumericalError(f"tridiagonal eigensolver failed: {exc}") from exc


def eigenvalues(chain: Chain, lambda_max: float | None = None) -> np.ndarray:
    """Sorted eigenvalues only, skipping the eigenvector work."""
    sym = symmetrise(chain)
    if chain.num_resonators == 1:
        lam = sym.material * sym.diag
        return lam if lambda_max is None else lam[lam <= lambda_max]
    d, e = sym.tridiagonal_bands()
    return _solve_tridiagonal(d, e, lambda_max, vectors=False)


def spectrum(chain: Chain, lambda_max: float | None = None) -> SpectralData:
    """Solve the symmetrised eigenproblem and recover the gauge eigenvectors.

    With `lambda_max` given, only the eigenpairs up to that value are
    computed.  Eigenvalues come back sorted ascending; eigensolver failures
    raise NumericalError rather than returning silently wrong data.
    """
    sym = symmetrise(chain)
    n = chain.num_resonators
    if n == 1:
        lam = sym.material * sym.diag
        if lambda_max is not None and lam[0] > lambda_max:
            lam = lam[:0]
        w = np.ones((1, len(lam)))
    else:
        d, e = sym.tridiagonal_bands()
        lam, w = _solve_tridiagonal(d, e, lambda_max, vectors=True)
    with np.errstate(divide="ignore"):
        log_mag = (
            sym.log_transform[:, None]
            + 0.5 * np.log(sym.material)[:, None]
            + np.log(np.abs(w))
        )
    if log_mag.shape[1]:
        log_mag = log_mag - np.max(log_mag, axis=0, keepdims=True)
    signs = np.sign(w).astype(np.int8)
    return SpectralData(eigenvalues=lam, symvectors=w, signs=signs, log_magnitude=log_mag)


@dataclass(frozen=True, eq=False)
class ModeProfile:
    """A sampled eigenmode profile on the line: constant on resonators,
    affine across gaps, constant outside the array."""

    x: np.ndarray
    values: np.ndarray


def mode_profile(
    chain: Chain,
    data: SpectralData,
    k: int,
    margin: float = 1.0,
    num_points: int = 2001,
) -> ModeProfile:
    """Continuum profile of gauge eigenmode k over the chain plus a margin."""
    if not 0 <= k < data.count:
        raise IndexError("eigenmode index out of range")
    left, right = chain.coordinates()
    entries = data.gauge_vector(k)
    # Interleaved breakpoints make np.interp reproduce the piecewise shape
    # exactly: flat on [left_j, right_j], affine across each gap, clamped
    # constant beyond the ends.
    xp = np.empty(2 * chain.num_resonators)
    xp[0::2] = left
    xp[1::2] = right
    fp = np.repeat(entries, 2)
    x = np.linspace(left[0] - margin, right[-1] + margin, num_points)
    x = np.sort(np.concatenate([x, xp]))
    return ModeProfile(x=x, values=np.interp(x, xp, fp))
