"""Column-grid geometry, connection probabilities, and expected counts.

A network is a ``width x height`` grid of cortical columns, each holding
``neurons_per_column`` point neurons (80% excitatory by default).  Any two
neurons of the same column are connected with probability ``p_local``.
Across columns the connection probability falls off with the squared
center-to-center distance ``d2`` (measured in grid steps, so the physical
spacing cancels):

    p(d2) = lateral_amplitude * exp(-d2 / 2)

Probabilities below ``p_cutoff`` are zeroed, which with the defaults
confines lateral connections to a bounded stencil of column offsets.
Lateral connections originate from excitatory neurons only; this is what
keeps the expected in-degree inside the 1239-1245 per-neuron band that
the default parameterization is built around.

Everything in this module is a pure function of the spec; nothing here
materializes synapses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError

BOUNDARY_OPEN = "open"
BOUNDARY_TORUS = "torus"

# Lateral offsets are generated inside a fixed bounding box of column
# offsets; with the default cutoff the surviving set is strictly smaller.
STENCIL_RADIUS = 3


@dataclass(frozen=True)
class GridSpec:
    """Grid dimensions plus column composition and connectivity parameters."""

    width: int
    height: int
    neurons_per_column: int = 1240
    excitatory_fraction: float = 0.8
    p_local: float = 0.8
    lateral_amplitude: float = 0.05
    grid_step_um: float = 100.0  # documentation only; cancels in p(d2)
    p_cutoff: float = 1e-3
    c_ext: int = 540
    boundary: str = BOUNDARY_OPEN

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ConfigError(f"grid must be at least 1x1, got {self.width}x{self.height}")
        if self.neurons_per_column < 1:
            raise ConfigError("neurons_per_column must be >= 1")
        if not 0.0 < self.excitatory_fraction < 1.0:
            raise ConfigError("excitatory_fraction must lie strictly between 0 and 1")
        if not 0.0 <= self.p_local <= 1.0:
            raise ConfigError("p_local must lie in [0, 1]")
        if not 0.0 <= self.lateral_amplitude <= 1.0:
            raise ConfigError("lateral_amplitude must lie in [0, 1]")
        if self.p_cutoff <= 0.0:
            raise ConfigError("p_cutoff must be positive")
        if self.c_ext < 0:
            raise ConfigError("c_ext must be >= 0")
        if self.boundary not in (BOUNDARY_OPEN, BOUNDARY_TORUS):
            raise ConfigError(f"boundary must be 'open' or 'torus', got {self.boundary!r}")

    @property
    def n_columns(self) -> int:
        return self.width * self.height

    @property
    def n_neurons(self) -> int:
        return self.n_columns * self.neurons_per_column

    @property
    def excitatory_per_column(self) -> int:
        """992 with the defaults; local indices below this are excitatory."""
        return round(self.neurons_per_column * self.excitatory_fraction)


@dataclass(frozen=True)
class ColumnId:
    """Grid coordinates of one column; linear index is row-major."""

    x: int
    y: int

    def linear(self, spec: GridSpec) -> int:
        return self.y * spec.width + self.x


def column_from_linear(index: int, spec: GridSpec) -> ColumnId:
    return ColumnId(index % spec.width, index // spec.width)


@dataclass(frozen=True)
class StencilOffset:
    """One lateral column offset and its connection probability."""

    dx: int
    dy: int
    p: float


@dataclass(frozen=True)
class CountsReport:
    """Closed-form expected structural counts for a spec."""

    n_columns: int
    n_neurons: int
    expected_recurrent_synapses: float
    expected_total_equivalent_synapses: float
    expected_synapses_per_neuron: float


def lateral_probability(d_squared: float, spec: GridSpec) -> float:
    """Connection probability for columns at squared distance ``d_squared``
    (grid-step units).  Returns 0 below the cutoff; total function."""
    p = spec.lateral_amplitude * math.exp(-0.5 * d_squared)
    return p if p >= spec.p_cutoff else 0.0


def stencil(spec: GridSpec) -> list[StencilOffset]:
    """Lateral offsets surviving the cutoff, sorted by (dy, dx).

    (0, 0) is excluded; intra-column connectivity is handled by p_local.
    """
    out = []
    for dy in range(-STENCIL_RADIUS, STENCIL_RADIUS + 1):
        for dx in range(-STENCIL_RADIUS, STENCIL_RADIUS + 1):
            if dx == 0 and dy == 0:
                continue
            p = lateral_probability(float(dx * dx + dy * dy), spec)
            if p > 0.0:
                out.append(StencilOffset(dx, dy, p))
    return out


def columns_in_reach(col: ColumnId, spec: GridSpec) -> list[tuple[ColumnId, float]]:
    """Columns whose neurons may project to ``col``, with probabilities.

    The first entry is always the column itself with p_local; the rest are
    lateral entries, one per surviving stencil offset.  Open boundaries drop
    offsets that leave the grid; a torus wraps them.  On a torus smaller
    than the stencil box, distinct offsets may wrap onto the same column
    (possibly ``col`` itself); such images are kept as separate entries and
    their probabilities add.
    """
    if not (0 <= col.x < spec.width and 0 <= col.y < spec.height):
        raise ConfigError(f"column {col} outside {spec.width}x{spec.height} grid")
    reach = [(col, spec.p_local)]
    torus = spec.boundary == BOUNDARY_TORUS
    for off in stencil(spec):
        x, y = col.x + off.dx, col.y + off.dy
        if torus:
            x %= spec.width
            y %= spec.height
        elif not (0 <= x < spec.width and 0 <= y < spec.height):
            continue
        reach.append((ColumnId(x, y), off.p))
    return reach


def expected_counts(spec: GridSpec) -> CountsReport:
    """Expected synapse counts without materializing any synapse.

    Per target neuron the local expectation is ``p_local * neurons_per_column``
    and each in-reach source column contributes ``p * excitatory_per_column``
    (lateral sources are excitatory only).  Summed over all columns; the
    total-equivalent figure adds ``c_ext`` external synapses per neuron.
    """
    n_exc = spec.excitatory_per_column
    local_per_neuron = spec.p_local * spec.neurons_per_column
    recurrent = 0.0
    for idx in range(spec.n_columns):
        col = column_from_linear(idx, spec)
        lateral = 0.0
        for _, p in columns_in_reach(col, spec)[1:]:
            lateral += p * n_exc
        recurrent += spec.neurons_per_column * (local_per_neuron + lateral)
    total = recurrent + spec.n_neurons * spec.c_ext
    return CountsReport(
        n_columns=spec.n_columns,
        n_neurons=spec.n_neurons,
        expected_recurrent_synapses=recurrent,
        expected_total_equivalent_synapses=total,
        expected_synapses_per_neuron=recurrent / spec.n_neurons,
    )
