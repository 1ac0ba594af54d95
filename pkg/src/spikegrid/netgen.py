"""Deterministic, partition-independent synapse and input generation.

Generation is receiver-side: whoever owns a column builds the incoming
synapses of that column's neurons, so the connectome is a pure function of
(grid spec, seed) and never of the worker layout.

For every (source neuron, target column) pair a dedicated counter-based
stream is seeded with ``stream_tag(synapse, source gid, column index)``.
Draw 1 decides how many targets the source hits in that column (binomial
via a tabulated inverse CDF); draws 2..k+1 pick which ones, by a partial
Fisher-Yates shuffle on the same stream.  Intra-column connections are
drawn for all source neurons with probability ``p_local``; lateral
connections only for excitatory sources, with the stencil probability.
On a torus smaller than the stencil box, offsets wrapping onto the same
source column are merged by adding their probabilities before the draw.

External input is one aggregated Poisson process per neuron with per-step
mean ``c_ext * nu_ext * dt``; counts come from
``stream_tag(external, gid, step)`` by inverse-CDF over the cumulative
product of Poisson terms, so a draw costs one uniform and is reproducible
anywhere.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import stats

from .errors import ConfigError
from .model import NeuronParams
from .rng import (
    GOLDEN_GAMMA,
    KIND_EXTERNAL,
    KIND_SYNAPSE,
    MASK64,
    RandomStream,
    finalize_vector,
    mix_vector,
    splitmix64_mix,
    stream_tag,
    u64_to_unit,
)
from .topology import ColumnId, GridSpec, column_from_linear, columns_in_reach

DUMP_MAGIC = b"DPSC"
DUMP_VERSION = 1

# Hard cap for the Poisson inverse-CDF walk; at any usable rate the CDF
# reaches 1.0 (in float64) long before this.
_POISSON_KMAX = 512


def neuron_gid(col_linear: int, local: int, spec: GridSpec) -> int:
    return col_linear * spec.neurons_per_column + local


def is_excitatory(gid: int, spec: GridSpec) -> bool:
    return gid % spec.neurons_per_column < spec.excitatory_per_column


@lru_cache(maxsize=256)
def binomial_cdf(n: int, p: float) -> np.ndarray:
    """CDF table of Binomial(n, p); draw k = first index with u < cdf[k]."""
    return stats.binom.cdf(np.arange(n + 1), n, p)


@lru_cache(maxsize=64)
def poisson_cdf(lam: float) -> np.ndarray:
    """Poisson CDF by the cumulative-product recurrence, in draw order.

    Entries are the exact partial sums the sequential sampler would visit,
    so table lookup and the reference loop in ``external_arrival_count``
    return identical counts for identical uniforms.
    """
    import math

    terms = []
    p = math.exp(-lam)
    cum = p
    terms.append(cum)
    k = 0
    while cum < 1.0 and k < _POISSON_KMAX:
        k += 1
        p *= lam / k
        new = cum + p
        if new == cum:
            break
        cum = new
        terms.append(cum)
    return np.array(terms)


def external_arrival_count(
    gid: int, step: int, spec: GridSpec, params: NeuronParams, seed: int, dt: float
) -> int:
    """External Poisson arrivals for one neuron in one step (reference path).

    dt is in ms; the per-step mean is c_ext * nu_ext * dt / 1000.
    """
    import math

    if dt <= 0:
        raise ConfigError("dt must be positive")
    lam = spec.c_ext * params.nu_ext_hz * (dt * 1e-3)
    u = RandomStream(stream_tag(KIND_EXTERNAL, gid, step, seed)).next_double()
    p = math.exp(-lam)
    cum = p
    k = 0
    while u >= cum and k < _POISSON_KMAX:
        k += 1
        p *= lam / k
        new = cum + p
        if new == cum:
            break
        cum = new
    return k


def external_counts_vector(tags_mixed: np.ndarray, step: int, lam: float) -> np.ndarray:
    """Arrival counts for many neurons at one step, bit-equal to the scalar
    path.  ``tags_mixed`` is mix(mix(seed + external) + gid) per neuron."""
    tag = mix_vector(tags_mixed + np.uint64(step))
    u = u64_to_unit(mix_vector(tag))  # draw 1 of each stream
    return np.searchsorted(poisson_cdf(lam), u, side="right").astype(np.int64)


def external_tag_bases(gids: np.ndarray, seed: int) -> np.ndarray:
    """Per-neuron partial tags, reusable across steps."""
    t1 = np.uint64(splitmix64_mix((seed + KIND_EXTERNAL) & MASK64))
    return mix_vector(t1 + gids.astype(np.uint64))


@dataclass(frozen=True)
class SourceBlock:
    """Synapses from one source column's eligible neurons into one column.

    ``starts[i]:starts[i+1]`` slices ``targets`` (local indices in the
    target column) for eligible source ``lo_local + i``.  All synapses of a
    block share one weight; with the constant-delay policy they also share
    the table's delay.
    """

    src_col: int          # linear index of the source column
    lo_local: int         # first eligible local source index
    hi_local: int         # one past the last
    probability: float    # per-pair connection probability used for draws
    weight: float         # mV, already rounded through IEEE-754 binary32
    starts: np.ndarray    # uint64, len = hi_local - lo_local + 1
    targets: np.ndarray   # uint32 local target indices, concatenated

    @property
    def n_synapses(self) -> int:
        return int(self.starts[-1])


@dataclass(frozen=True)
class IncomingTable:
    """All recurrent synapses terminating in one column."""

    post_col: int
    neurons_per_column: int
    delay_steps: int
    blocks: tuple[SourceBlock, ...]

    @property
    def n_synapses(self) -> int:
        return sum(b.n_synapses for b in self.blocks)

    def in_degrees(self) -> np.ndarray:
        """Realized recurrent in-degree per local target neuron."""
        deg = np.zeros(self.neurons_per_column, dtype=np.int64)
        for b in self.blocks:
            deg += np.bincount(b.targets, minlength=self.neurons_per_column)
        return deg

    def target_records(self, local: int, spec: GridSpec) -> list[tuple[int, int, float]]:
        """(delay, source gid, weight) records of one target neuron, sorted
        by (delay, source)."""
        recs = []
        for b in self.blocks:
            hits = np.nonzero(b.targets == local)[0]
            if hits.size == 0:
                continue
            src_locals = np.searchsorted(b.starts, hits, side="right") - 1
            for sl in src_locals:
                gid = neuron_gid(b.src_col, b.lo_local + int(sl), spec)
                recs.append((self.delay_steps, gid, b.weight))
        recs.sort(key=lambda r: (r[0], r[1]))
        return recs

    def nbytes(self) -> int:
        """Structural bytes of the stored synapse arrays."""
        return sum(b.starts.nbytes + b.targets.nbytes for b in self.blocks)


def _merged_reach(post: ColumnId, spec: GridSpec) -> list[tuple[int, float]]:
    """Lateral source columns for ``post`` with image probabilities summed,
    in first-occurrence stencil order."""
    merged: dict[int, float] = {}
    order: list[int] = []
    for source, p in columns_in_reach(post, spec)[1:]:
        idx = source.linear(spec)
        if idx not in merged:
            merged[idx] = 0.0
            order.append(idx)
        merged[idx] += p
    return [(idx, min(merged[idx], 1.0)) for idx in order]


def _draw_block(
    src_col: int,
    lo: int,
    hi: int,
    p: float,
    weight: float,
    post_linear: int,
    spec: GridSpec,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw targets for eligible sources ``lo..hi-1`` of one source column.

    Returns (starts, targets).  One stream per source: draw 1 is the
    binomial count through the inverse CDF, draws 2..k+1 drive the partial
    Fisher-Yates that picks the k distinct targets.
    """
    n = spec.neurons_per_column
    n_src = hi - lo
    gids = np.arange(
        neuron_gid(src_col, lo, spec), neuron_gid(src_col, hi, spec), dtype=np.uint64
    )
    t1 = np.uint64(splitmix64_mix((seed + KIND_SYNAPSE) & MASK64))
    tags = mix_vector(mix_vector(t1 + gids) + np.uint64(post_linear))
    u1 = u64_to_unit(mix_vector(tags))  # draw 1 of each stream
    ks = np.searchsorted(binomial_cdf(n, p), u1, side="right")
    np.clip(ks, 0, n, out=ks)

    starts = np.zeros(n_src + 1, dtype=np.uint64)
    np.cumsum(ks, out=starts[1:])
    targets = np.empty(int(starts[-1]), dtype=np.uint32)

    max_k = int(ks.max()) if n_src else 0
    if max_k:
        # Draws 2..max_k+1 of every stream at once, then the per-source swap
        # loop only has to index into precomputed positions.
        idx = np.arange(2, max_k + 2, dtype=np.uint64)
        draws = (
            (tags[:, None] + idx[None, :] * np.uint64(0x9E3779B97F4A7C15))
        )
        z = draws
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
        divisors = (n - np.arange(max_k, dtype=np.uint64)).astype(np.uint64)
        positions = (z % divisors[None, :]) + np.arange(max_k, dtype=np.uint64)[None, :]

        pool = list(range(n))
        for s in range(n_src):
            k = int(ks[s])
            if k == 0:
                continue
            row = positions[s]
            swapped: list[int] = []
            for i in range(k):
                j = int(row[i])
                pool[i], pool[j] = pool[j], pool[i]
                swapped.append(j)
            targets[int(starts[s]) : int(starts[s + 1])] = pool[:k]
            # restore the shared pool (reverse order undoes the swaps)
            for i in range(k - 1, -1, -1):
                j = swapped[i]
                pool[i], pool[j] = pool[j], pool[i]

    return starts, targets


def generate_incoming(
    post_col: ColumnId,
    spec: GridSpec,
    params: NeuronParams,
    seed: int,
    delay_steps: int = 10,
) -> IncomingTable:
    """Build the incoming synapse table of one column.

    Pure function of (spec, params, seed); identical no matter which worker
    calls it.  ``delay_steps`` applies uniformly (constant-delay policy).
    """
    if delay_steps < 1:
        raise ConfigError("delay_steps must be >= 1")
    if delay_steps > 0xFFFF:
        raise ConfigError("delay_steps must fit in 16 bits")
    n = spec.neurons_per_column
    n_exc = spec.excitatory_per_column
    post_linear = post_col.linear(spec)
    w_exc = float(np.float32(params.j_exc))
    w_inh = float(np.float32(params.j_inh))

    blocks = []
    # Intra-column: every neuron projects locally; weight by source type.
    for lo, hi, w in ((0, n_exc, w_exc), (n_exc, n, w_inh)):
        if lo == hi:
            continue
        starts, targets = _draw_block(
            post_linear, lo, hi, spec.p_local, w, post_linear, spec, seed
        )
        blocks.append(
            SourceBlock(post_linear, lo, hi, spec.p_local, w, starts, targets)
        )
    # Lateral: excitatory sources of each in-reach column.
    for src_col, p in _merged_reach(post_col, spec):
        starts, targets = _draw_block(src_col, 0, n_exc, p, w_exc, post_linear, spec, seed)
        blocks.append(SourceBlock(src_col, 0, n_exc, p, w_exc, starts, targets))

    return IncomingTable(
        post_col=post_linear,
        neurons_per_column=n,
        delay_steps=delay_steps,
        blocks=tuple(blocks),
    )


def generate_network(
    spec: GridSpec, params: NeuronParams, seed: int, delay_steps: int = 10
) -> list[IncomingTable]:
    """Incoming tables for every column, in linear column order."""
    return [
        generate_incoming(column_from_linear(i, spec), spec, params, seed, delay_steps)
        for i in range(spec.n_columns)
    ]


def dump_connectome(
    tables: list[IncomingTable], spec: GridSpec, seed: int, path: str
) -> None:
    """Write the connectome in the binary interchange layout.

    Little-endian: magic "DPSC", version u8, width u32, height u32,
    neurons/column u32, seed u64; then per target neuron (gid order) an
    in-degree u32 followed by (source u32, weight f32, delay u16) records
    sorted by (delay, source).
    """
    if len(tables) != spec.n_columns:
        raise ConfigError("need one table per column, in linear order")
    with open(path, "wb") as fh:
        fh.write(
            struct.pack(
                "<4sBIIIQ",
                DUMP_MAGIC,
                DUMP_VERSION,
                spec.width,
                spec.height,
                spec.neurons_per_column,
                seed & MASK64,
            )
        )
        for table in tables:
            # Invert source-major blocks to target-major record lists.
            per_target_src: list[list] = [[] for _ in range(spec.neurons_per_column)]
            for b in table.blocks:
                src_locals = (
                    np.searchsorted(
                        b.starts, np.arange(len(b.targets), dtype=np.uint64), side="right"
                    )
                    - 1
                )
                base = neuron_gid(b.src_col, b.lo_local, spec)
                src_gids = (base + src_locals).astype(np.uint64)
                for t, s in zip(b.targets.tolist(), src_gids.tolist()):
                    per_target_src[t].append((table.delay_steps, s, b.weight))
            for recs in per_target_src:
                recs.sort(key=lambda r: (r[0], r[1]))
                fh.write(struct.pack("<I", len(recs)))
                for delay, src, w in recs:
                    fh.write(struct.pack("<IfH", src, w, delay))


def load_connectome(path: str):
    """Read a connectome dump; returns (header dict, per-neuron record lists)."""
    with open(path, "rb") as fh:
        head = fh.read(struct.calcsize("<4sBIIIQ"))
        magic, version, width, height, npc, seed = struct.unpack("<4sBIIIQ", head)
        if magic != DUMP_MAGIC:
            raise ConfigError(f"bad connectome magic {magic!r}")
        if version != DUMP_VERSION:
            raise ConfigError(f"unsupported connectome version {version}")
        header = {
            "width": width,
            "height": height,
            "neurons_per_column": npc,
            "seed": seed,
        }
        neurons = []
        rec_size = struct.calcsize("<IfH")
        for _ in range(width * height * npc):
            (deg,) = struct.unpack("<I", fh.read(4))
            recs = []
            for _ in range(deg):
                src, w, delay = struct.unpack("<IfH", fh.read(rec_size))
                recs.append((delay, src, w))
            neurons.append(recs)
        return header, neurons
