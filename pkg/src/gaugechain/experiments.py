"""Experiment layer: spectral statistics, winding regions and localisation.

These routines assemble seeded chains, run the eigensolver and the
renormalized matrix products from the lower modules, and reduce the results
deterministically so that repeated runs are bit identical.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .capacitance import gauge_weight, eigenvalues, spectrum
from .chains import Block, BlockLibrary, Chain, assemble_chain, sample_sequence
from .propagation import block_propagation, lyapunov_grid

__all__ = [
    "EmpiricalCDF",
    "empirical_cdf",
    "kolmogorov_distance",
    "DosConvergence",
    "dos_convergence",
    "lyapunov_estimate",
    "WindingCurve",
    "winding_curve",
    "point_in_winding",
    "curve_distance",
    "ContourSet",
    "edge_contour",
    "contours_from_grid",
    "Envelope",
    "envelope",
    "CriticalGamma",
    "critical_gamma",
    "decay_per_gamma",
    "uniform_gamma",
]

LOG10_E = float(np.log10(np.e))


# ---------------------------------------------------------------------------
# density of states


@dataclass(frozen=True, eq=False)
class EmpiricalCDF:
    """Right-continuous step function of a sorted sample, range [0, 1]."""

    samples: np.ndarray

    def evaluate(self, x):
        idx = np.searchsorted(self.samples, np.asarray(x, dtype=float), side="right")
        return idx / len(self.samples)


def empirical_cdf(values) -> EmpiricalCDF:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("empirical CDF of an empty sample is undefined")
    return EmpiricalCDF(samples=np.sort(values))


def kolmogorov_distance(a: EmpiricalCDF, b: EmpiricalCDF) -> float:
    """Sup distance between two empirical CDFs (the two-sample KS statistic)."""
    points = np.concatenate([a.samples, b.samples])
    return float(np.max(np.abs(a.evaluate(points) - b.evaluate(points))))


@dataclass(frozen=True, eq=False)
class DosConvergence:
    """Kolmogorov distances across seeds and along growing chain sizes."""

    num_blocks_list: tuple[int, ...]
    seeds: tuple[int, ...]
    cross_seed: dict  # num_blocks -> (n_seeds, n_seeds) distance matrix
    successive: dict  # seed -> distances between consecutive num_blocks

    def mean_cross_seed(self, num_blocks: int) -> float:
        m = self.cross_seed[num_blocks]
        n = m.shape[0]
        off = m[~np.eye(n, dtype=bool)]
        return float(off.mean())


def _seeded_cdf(library: BlockLibrary, num_blocks: int, seed: int) -> EmpiricalCDF:
    chain = assemble_chain(library, sample_sequence(library, num_blocks, seed))
    return empirical_cdf(eigenvalues(chain))


def dos_convergence(
    library: BlockLibrary,
    num_blocks_list: Sequence[int],
    seeds: Sequence[int],
    threads: int = 1,
) -> DosConvergence:
    """Cross-seed and consecutive-size Kolmogorov distances of the empirical
    cumulative density of states."""
    if len(seeds) < 2:
        raise ValueError("need at least two seeds to compare")
    work = [(m, s) for m in num_blocks_list for s in seeds]
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda ms: _seeded_cdf(library, *ms), work))
    else:
        results = [_seeded_cdf(library, m, s) for m, s in work]
    cdfs = dict(zip(work, results))
    cross = {}
    for m in num_blocks_list:
        mat = np.zeros((len(seeds), len(seeds)))
        for (i, si), (j, sj) in itertools.combinations(enumerate(seeds), 2):
            d = kolmogorov_distance(cdfs[(m, si)], cdfs[(m, sj)])
            mat[i, j] = mat[j, i] = d
        cross[int(m)] = mat
    successive = {}
    for s in seeds:
        successive[int(s)] = np.array(
            [
                kolmogorov_distance(cdfs[(m1, s)], cdfs[(m2, s)])
                for m1, m2 in zip(num_blocks_list[:-1], num_blocks_list[1:])
            ]
        )
    return DosConvergence(
        num_blocks_list=tuple(int(m) for m in num_blocks_list),
        seeds=tuple(int(s) for s in seeds),
        cross_seed=cross,
        successive=successive,
    )


# ---------------------------------------------------------------------------
# Lyapunov estimate from block statistics


def lyapunov_estimate(library: BlockLibrary, lam: complex) -> float:
    """Mixture estimate of the total Lyapunov exponent at one frequency.

    Per block: log spectral radius of the symmetrised block propagation minus
    half the block's gamma*ell budget; the probability-weighted sum is divided
    by the expected block length.
    """
    num = 0.0
    for p, b in zip(library.probabilities, library.blocks):
        rho = np.max(np.abs(np.linalg.eigvals(block_propagation(b, complex(lam)))))
        num += p * (np.log(rho) - 0.5 * b.gamma_length_sum)
    return float(num / library.expected_block_length())


# ---------------------------------------------------------------------------
# winding curves from quasiperiodic boundary conditions


@dataclass(frozen=True, eq=False)
class WindingCurve:
    """Closed eigenvalue loops of the periodically repeated block under a
    quasiperiodic phase.

    Without braiding there is one loop per resonator in the block.  When the
    complex bands exchange over a phase period (as the standard dimer does at
    order-one gauge potential) the exchanged sheets are concatenated into a
    single closed loop, so every entry of `bands` is always a closed curve.
    """

    thetas: np.ndarray
    bands: tuple[np.ndarray, ...]


def _bloch_matrix(block: Block, theta: float) -> np.ndarray:
    v, ell, s, gamma = block.arrays()
    k = len(v)
    gl = gamma * ell
    wp = gauge_weight(gl)
    wm = gauge_weight(-gl)
    s_prev = np.roll(s, 1)  # spacing to the left neighbour; site 0 wraps
    mat = np.zeros((k, k), dtype=complex)
    fwd = np.exp(1j * theta)
    bwd = np.exp(-1j * theta)
    for i in range(k):
        mat[i, i] += wm[i] / s_prev[i] + wp[i] / s[i]
        j = (i + 1) % k
        phase = fwd if i == k - 1 else 1.0
        mat[i, j] += -wp[i] / s[i] * phase
        jm = (i - 1) % k
        phase = bwd if i == 0 else 1.0
        mat[i, jm] += -wm[i] / s_prev[i] * phase
    return (v**2 / ell)[:, None] * mat


def _match(vals: np.ndarray, prev: np.ndarray) -> tuple[int, ...]:
    best, best_cost = None, np.inf
    for perm in itertools.permutations(range(len(prev))):
        cost = float(np.sum(np.abs(vals[list(perm)] - prev)))
        if cost < best_cost:
            best, best_cost = perm, cost
    return best


def winding_curve(block: Block, theta_samples: int = 256) -> WindingCurve:
    """Trace the quasiperiodic eigenvalue bands of one block over a full
    phase period, matched between consecutive phases by nearest neighbour."""
    if theta_samples < 16:
        raise ValueError("need at least 16 phase samples")
    thetas = np.linspace(0.0, 2.0 * np.pi, theta_samples, endpoint=False)
    k = len(block)
    bands = np.empty((theta_samples, k), dtype=complex)
    prev = np.sort_complex(np.linalg.eigvals(_bloch_matrix(block, thetas[0])))
    bands[0] = prev
    for t in range(1, theta_samples):
        vals = np.linalg.eigvals(_bloch_matrix(block, thetas[t]))
        perm = _match(vals, prev)
        prev = vals[list(perm)]
        bands[t] = prev
    # Sheets may braid: band b ends (at theta = 2 pi) on the starting value of
    # band closure[b].  Concatenating each permutation cycle closes the loops.
    closure = _match(bands[0], prev)
    loops = []
    seen = set()
    for start in range(k):
        if start in seen:
            continue
        cycle = []
        b = start
        while b not in seen:
            seen.add(b)
            cycle.append(b)
            b = closure[b]
        loops.append(np.concatenate([bands[:, b] for b in cycle]))
    return WindingCurve(thetas=thetas, bands=tuple(loops))


def _inside_loop(loop: np.ndarray, z: complex) -> bool:
    # Even-odd ray crossing with half-open edges; points on the boundary are
    # not counted as inside.
    x, y = z.real, z.imag
    px, py = loop.real, loop.imag
    qx, qy = np.roll(px, -1), np.roll(py, -1)
    crosses = ((py <= y) & (qy > y)) | ((py > y) & (qy <= y))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (y - py) / (qy - py)
        xs = px + t * (qx - px)
    return bool(np.sum(crosses & (xs > x)) % 2)


def point_in_winding(curve: WindingCurve, lam: complex) -> bool:
    """Even-odd membership of a frequency in any of the band loops."""
    return any(_inside_loop(band, complex(lam)) for band in curve.bands)


def curve_distance(curve: WindingCurve, lam: complex) -> float:
    """Distance from a point to the closed band polylines."""
    z = complex(lam)
    best = np.inf
    for band in curve.bands:
        a = band
        b = np.roll(band, -1)
        d = b - a
        denom = np.abs(d) ** 2
        t = np.clip(((z - a) * np.conj(d)).real / np.where(denom == 0, 1.0, denom), 0.0, 1.0)
        best = min(best, float(np.min(np.abs(a + t * d - z))))
    return best


# ---------------------------------------------------------------------------
# edge contour (zero level set of the Lyapunov exponent)


@dataclass(frozen=True, eq=False)
class ContourSet:
    """Zero-level polylines of the Lyapunov exponent on a complex grid."""

    polylines: tuple[np.ndarray, ...]
    re_values: np.ndarray
    im_values: np.ndarray
    values: np.ndarray  # total Lyapunov exponent, shape (n_im, n_re)


def _cell_segments(x, y, f):
    # Marching squares on one row pair; emits line segments per sign cell.
    segments = []
    n_im, n_re = f.shape
    for j in range(n_im - 1):
        for i in range(n_re - 1):
            corners = (f[j, i], f[j, i + 1], f[j + 1, i + 1], f[j + 1, i])
            case = sum(1 << c for c, val in enumerate(corners) if val > 0.0)
            if case in (0, 15):
                continue
            xs = (x[i], x[i + 1], x[i + 1], x[i])
            ys = (y[j], y[j], y[j + 1], y[j + 1])

            def interp(a, b):
                fa, fb = corners[a], corners[b]
                t = fa / (fa - fb)
                return (xs[a] + t * (xs[b] - xs[a]), ys[a] + t * (ys[b] - ys[a]))

            edges = {"b": (0, 1), "r": (1, 2), "t": (2, 3), "l": (3, 0)}
            table = {
                1: [("l", "b")], 2: [("b", "r")], 3: [("l", "r")],
                4: [("r", "t")], 6: [("b", "t")], 7: [("l", "t")],
                8: [("t", "l")], 9: [("t", "b")], 11: [("t", "r")],
                12: [("r", "l")], 13: [("r", "b")], 14: [("b", "l")],
            }
            if case in (5, 10):
                # Saddle: disambiguate with the cell-center average.
                center = sum(corners) / 4.0
                if case == 5:
                    pairs = [("l", "t"), ("b", "r")] if center > 0 else [("l", "b"), ("r", "t")]
                else:
                    pairs = [("b", "l"), ("t", "r")] if center > 0 else [("l", "t"), ("r", "b")]
            else:
                pairs = table[case]
            for ea, eb in pairs:
                pa, pb = interp(*edges[ea]), interp(*edges[eb])
                if pa != pb:  # level set through a grid node gives a degenerate segment
                    segments.append((pa, pb))
    return segments


def _chain_segments(segments):
    # Merge segments into polylines by matching endpoints.
    def key(p):
        return (round(p[0], 12), round(p[1], 12))

    segments = [s for s in segments if key(s[0]) != key(s[1])]
    adjacency = {}
    for seg in segments:
        for end in seg:
            adjacency.setdefault(key(end), []).append(seg)
    unused = set(range(len(segments)))
    seg_index = {id(s): i for i, s in enumerate(segments)}
    polylines = []
    while unused:
        i = min(unused)
        unused.discard(i)
        a, b = segments[i]
        line = [a, b]
        for grow_end in (True, False):
            while True:
                tip = line[-1] if grow_end else line[0]
                nxt = None
                for seg in adjacency.get(key(tip), []):
                    j = seg_index[id(seg)]
                    if j not in unused:
                        continue
                    p, q = seg
                    if key(p) == key(tip):
                        nxt, j2 = q, j
                    elif key(q) == key(tip):
                        nxt, j2 = p, j
                    else:
                        continue
                    break
                if nxt is None:
                    break
                unused.discard(j2)
                if grow_end:
                    line.append(nxt)
                else:
                    line.insert(0, nxt)
        polylines.append(np.array([complex(px, py) for px, py in line]))
    return polylines


def contours_from_grid(re_values, im_values, values) -> ContourSet:
    """Extract the zero level set from precomputed Lyapunov grid values."""
    segs = _cell_segments(np.asarray(re_values), np.asarray(im_values), np.asarray(values))
    return ContourSet(
        polylines=tuple(_chain_segments(segs)),
        re_values=np.asarray(re_values),
        im_values=np.asarray(im_values),
        values=np.asarray(values),
    )


def edge_contour(
    chain: Chain,
    re_range: tuple[float, float],
    im_range: tuple[float, float],
    grid_shape: tuple[int, int] = (96, 64),
) -> ContourSet:
    """Marching-squares zero contour of the total Lyapunov exponent on a
    rectangular complex frequency grid (grid_shape = (n_re, n_im))."""
    n_re, n_im = grid_shape
    if n_re < 8 or n_im < 8:
        raise ValueError("grid must be at least 8x8")
    res = np.linspace(re_range[0], re_range[1], n_re)
    ims = np.linspace(im_range[0], im_range[1], n_im)
    lams = (res[None, :] + 1j * ims[:, None]).ravel()
    total, _, _ = lyapunov_grid(chain, lams)
    return contours_from_grid(res, ims, total.reshape(n_im, n_re))


# ---------------------------------------------------------------------------
# eigenvector envelopes and the critical gauge potential


@dataclass(frozen=True, eq=False)
class Envelope:
    """Per-site maximum of the selected sup-normalised gauge eigenvectors,
    in log10; values are <= 0 by construction."""

    log10_values: np.ndarray
    lambda_cut: float
    modes_used: int


_KERNEL_TOL = 1e-9


def envelope(chain: Chain, lambda_cut: float) -> Envelope:
    """Envelope over all gauge eigenvectors with eigenvalue <= lambda_cut.

    The capacitance matrix annihilates constants, so every chain carries a
    trivial uniform mode at eigenvalue 0.  Its gauge eigenvector is flat and
    would pin the envelope at 1 everywhere, hence it is excluded.
    """
    data = spectrum(chain, lambda_max=lambda_cut)
    keep = data.eigenvalues > _KERNEL_TOL
    if not np.any(keep):
        raise ValueError("no eigenvalue at or below the cut")
    env = np.max(data.log_magnitude[:, keep], axis=1) * LOG10_E
    return Envelope(
        log10_values=env, lambda_cut=float(lambda_cut), modes_used=int(np.sum(keep))
    )


def uniform_gamma(library: BlockLibrary) -> float:
    """The common gauge potential of a uniform-gamma library."""
    gammas = {r.gamma for b in library.blocks for r in b.resonators}
    if len(gammas) != 1:
        raise ValueError("library does not carry a uniform gauge potential")
    return gammas.pop()


def decay_per_gamma(library: BlockLibrary) -> float:
    """Expected nonreciprocal decay per site and per unit gauge potential for
    a uniform-gamma library: sum_d p_d sum_k ell_k / (2 sum_d p_d len_d)."""
    uniform_gamma(library)
    num = sum(
        p * sum(r.ell for r in b.resonators)
        for p, b in zip(library.probabilities, library.blocks)
    )
    return float(num / (2.0 * library.expected_block_length()))


@dataclass(frozen=True, eq=False)
class CriticalGamma:
    gamma_c: float
    max_symmetrised: float
    decay_ratio: float
    reference_gamma: float
    per_seed_max: np.ndarray


def _max_symmetrised_exponent(library, lambda_cut, num_blocks, seed, lambda_floor=_KERNEL_TOL):
    # The uniform kernel mode at eigenvalue 0 (and, at larger gauge
    # potentials, its near-zero neighbours) has a symmetrised exponent equal
    # to the decay term by construction and can never balance it, so a floor
    # keeps it out of the maximum.
    chain = assemble_chain(library, sample_sequence(library, num_blocks, seed))
    lams = eigenvalues(chain, lambda_max=lambda_cut)
    lams = lams[lams > lambda_floor]
    if len(lams) == 0:
        raise ValueError("no eigenvalue at or below the cut")
    _, lsym, _ = lyapunov_grid(chain, lams.astype(complex))
    return float(np.max(lsym))


def critical_gamma(
    library: BlockLibrary,
    lambda_cut: float,
    num_blocks: int,
    seeds: Sequence[int],
    reference_gamma: float = 1e-3,
    exact: bool = False,
    threads: int = 1,
) -> CriticalGamma:
    """Gauge potential at which nonreciprocal decay balances bulk growth.

    The symmetrised exponent is measured at a small reference gamma on the
    eigenvalues below the cut (it is empirically insensitive to gamma in this
    regime), averaged over per-seed maxima, and equated with the library's
    linear decay law.  With exact=True the balance is instead solved by
    bisection, re-evaluating the exponent at every trial gamma.
    """
    ratio = decay_per_gamma(library)

    def mean_max(gamma_value, floor=_KERNEL_TOL):
        lib = library.with_gamma(gamma_value)
        if threads > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=threads) as pool:
                vals = list(
                    pool.map(
                        lambda s: _max_symmetrised_exponent(
                            lib, lambda_cut, num_blocks, s, floor
                        ),
                        seeds,
                    )
                )
        else:
            vals = [
                _max_symmetrised_exponent(lib, lambda_cut, num_blocks, s, floor)
                for s in seeds
            ]
        return np.array(vals)

    per_seed = mean_max(reference_gamma)
    m = float(per_seed.mean())
    gamma_c = m / ratio
    if exact:
        # Re-evaluating at trial gammas needs a wider floor: eigenvalues below
        # ~1/N inherit the kernel mode's decay-tracking exponent once the
        # trial gamma is of order gamma_c.
        floor = 0.02 * lambda_cut
        lo, hi = reference_gamma / 10.0, max(10.0 * gamma_c, reference_gamma)
        for _ in range(30):
            mid = 0.5 * (lo + hi)
            if ratio * mid - float(mean_max(mid, floor).mean()) > 0.0:
                hi = mid
            else:
                lo = mid
        gamma_c = 0.5 * (lo + hi)
    return CriticalGamma(
        gamma_c=float(gamma_c),
        max_symmetrised=m,
        decay_ratio=ratio,
        reference_gamma=float(reference_gamma),
        per_seed_max=per_seed,
    )
