"""Block-disordered chains of one-dimensional subwavelength resonators.

A chain is assembled by sampling building blocks i.i.d. from a finite library
and concatenating their resonators on a line.  Each resonator carries a wave
speed, a length, a spacing to the next resonator and an imaginary gauge
potential (a directional damping coefficient that breaks reciprocity).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "ResonatorParams",
    "Block",
    "BlockLibrary",
    "BlockSequence",
    "Chain",
    "standard_blocks",
    "sample_sequence",
    "assemble_chain",
    "subseed_rng",
]

_PROB_TOL = 1e-12


def subseed_rng(seed: int, *key: int) -> np.random.Generator:
    """PCG64 generator keyed by (seed, *key) through numpy's SeedSequence.

    Sub-seeding by hashing the full key makes parallel work items independent
    of execution order.
    """
    entropy = (int(seed),) + tuple(int(k) for k in key)
    return np.random.default_rng(np.random.SeedSequence(entropy))


@dataclass(frozen=True)
class ResonatorParams:
    """One resonator: wave speed v, length ell, spacing s to the next
    resonator and imaginary gauge potential gamma."""

    v: float
    ell: float
    s: float
    gamma: float

    def __post_init__(self):
        if not (self.v > 0 and self.ell > 0 and self.s > 0):
            raise ValueError("v, ell and s must be positive")


@dataclass(frozen=True)
class Block:
    """An ordered group of resonators sampled as a unit."""

    resonators: tuple[ResonatorParams, ...]

    def __post_init__(self):
        if len(self.resonators) == 0:
            raise ValueError("a block needs at least one resonator")
        object.__setattr__(self, "resonators", tuple(self.resonators))

    def __len__(self) -> int:
        return len(self.resonators)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Parameter arrays (v, ell, s, gamma) over the block's resonators."""
        v = np.array([r.v for r in self.resonators])
        ell = np.array([r.ell for r in self.resonators])
        s = np.array([r.s for r in self.resonators])
        gamma = np.array([r.gamma for r in self.resonators])
        return v, ell, s, gamma

    @property
    def gamma_length_sum(self) -> float:
        """Sum of gamma_k * ell_k over the block, the per-block decay budget."""
        return float(sum(r.gamma * r.ell for r in self.resonators))


@dataclass(frozen=True)
class BlockLibrary:
    """Blocks together with their sampling probabilities."""

    blocks: tuple[Block, ...]
    probabilities: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        object.__setattr__(self, "probabilities", tuple(float(p) for p in self.probabilities))
        if len(self.blocks) == 0:
            raise ValueError("library needs at least one block")
        if len(self.probabilities) != len(self.blocks):
            raise ValueError("need one probability per block")
        if any(p < 0 for p in self.probabilities):
            raise ValueError("probabilities must be nonnegative")
        if abs(sum(self.probabilities) - 1.0) > _PROB_TOL:
            raise ValueError("probabilities must sum to 1")

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)

    def with_probabilities(self, probabilities: Sequence[float]) -> "BlockLibrary":
        return BlockLibrary(self.blocks, tuple(probabilities))

    def with_gamma(self, gamma: float) -> "BlockLibrary":
        """Same geometry with every resonator's gauge potential replaced."""
        blocks = tuple(
            Block(tuple(replace(r, gamma=float(gamma)) for r in b.resonators))
            for b in self.blocks
        )
        return BlockLibrary(blocks, self.probabilities)

    def expected_block_length(self) -> float:
        return float(sum(p * len(b) for p, b in zip(self.probabilities, self.blocks)))


@dataclass(frozen=True, eq=False)
class BlockSequence:
    """A realised i.i.d. draw of block indices (0-based into the library)."""

    indices: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "indices", np.asarray(self.indices, dtype=np.int64))

    def __len__(self) -> int:
        return len(self.indices)


def standard_blocks(gamma: float, monomer_probability: float = 0.5) -> BlockLibrary:
    """Monomer/dimer library with equal decay budget per block.

    The monomer is a single resonator with ell = s = 2; the dimer has two unit
    length resonators with spacings 1 and 2.  All wave speeds are 1 and every
    resonator carries the same gauge potential, so gamma * ell sums to 2*gamma
    for both blocks.
    """
    monomer = Block((ResonatorParams(1.0, 2.0, 2.0, gamma),))
    dimer = Block((
        ResonatorParams(1.0, 1.0, 1.0, gamma),
        ResonatorParams(1.0, 1.0, 2.0, gamma),
    ))
    p = float(monomer_probability)
    return BlockLibrary((monomer, dimer), (p, 1.0 - p))


def sample_sequence(library: BlockLibrary, num_blocks: int, seed: int) -> BlockSequence:
    """Draw `num_blocks` block indices i.i.d. with the library probabilities.

    Inverse-CDF sampling on uniforms in (0, 1]; ties on the cumulative
    boundaries resolve toward the lower index.  The same (library, num_blocks,
    seed) always reproduces the same sequence.
    """
    if num_blocks < 1:
        raise ValueError("num_blocks must be >= 1")
    rng = subseed_rng(seed, 0)
    u = 1.0 - rng.random(num_blocks)  # in (0, 1], so zero-probability blocks never fire
    cum = np.cumsum(library.probabilities)
    cum[-1] = 1.0
    indices = np.searchsorted(cum, u, side="left")
    return BlockSequence(indices=indices, seed=int(seed))


@dataclass(frozen=True, eq=False)
class Chain:
    """A finite realised chain: block view plus flattened resonator arrays.

    Boundary values follow the periodic-extension convention: resonator 0 is a
    copy of resonator N (with s_0 equal to the last resonator's spacing) and
    resonator N+1 is a copy of resonator 1.
    """

    library: BlockLibrary
    sequence: BlockSequence
    v: np.ndarray
    ell: np.ndarray
    s: np.ndarray
    gamma: np.ndarray
    block_offsets: np.ndarray  # first resonator index of each block, length M+1

    @property
    def num_resonators(self) -> int:
        return len(self.v)

    @property
    def num_blocks(self) -> int:
        return len(self.sequence)

    def resonator(self, i: int) -> ResonatorParams:
        """Resonator at 0-based position i, including the boundary copies at
        i = -1 (alias of the last resonator) and i = N (alias of the first)."""
        n = self.num_resonators
        if i == n:
            i = 0
        return ResonatorParams(
            float(self.v[i]), float(self.ell[i]), float(self.s[i]), float(self.gamma[i])
        )

    def block_slice(self, j: int) -> slice:
        return slice(int(self.block_offsets[j]), int(self.block_offsets[j + 1]))

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """Left and right endpoints of every resonator, with x_1^L = 0."""
        left = np.concatenate([[0.0], np.cumsum(self.ell[:-1] + self.s[:-1])])
        return left, left + self.ell

    def gamma_length_total(self) -> float:
        return float(np.sum(self.gamma * self.ell))

    @classmethod
    def from_resonators(cls, resonators: Iterable[ResonatorParams]) -> "Chain":
        """Chain made of one ad-hoc block; handy for tests and direct builds."""
        block = Block(tuple(resonators))
        library = BlockLibrary((block,), (1.0,))
        return assemble_chain(library, BlockSequence(np.array([0])))


def assemble_chain(library: BlockLibrary, sequence: BlockSequence) -> Chain:
    """Concatenate the blocks selected by `sequence` into a flat chain."""
    indices = sequence.indices
    if indices.min(initial=0) < 0 or indices.max(initial=0) >= library.num_blocks:
        raise ValueError("block index out of range for this library")
    v, ell, s, gamma = [], [], [], []
    offsets = [0]
    for idx in indices:
        for r in library.blocks[idx].resonators:
            v.append(r.v)
            ell.append(r.ell)
            s.append(r.s)
            gamma.append(r.gamma)
        offsets.append(len(v))
    return Chain(
        library=library,
        sequence=sequence,
        v=np.array(v),
        ell=np.array(ell),
        s=np.array(s),
        gamma=np.array(gamma),
        block_offsets=np.array(offsets, dtype=np.int64),
    )
