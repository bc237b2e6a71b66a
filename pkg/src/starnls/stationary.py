"""Closed-form standing-wave profiles on the star graph.

Every edge of a standing wave carries a shifted copy of the half-line soliton

    phi(a; x) = [(mu+1) omega]^(1/(2 mu)) sech^(1/mu)(mu sqrt(omega) (x - a)),

with centers a_i = +a ("bump": interior maximum) or -a ("tail": monotone
decay).  For delta strength alpha != 0 the flux condition forces

    tanh(mu sqrt(omega) a) * (2 j - N) = alpha / sqrt(omega)

where j counts bumps, so states exist only for j with sign(2j - N) =
sign(alpha) and |alpha| < |2j - N| sqrt(omega).  For alpha = 0 (Kirchhoff)
the odd-N state glues N identical half solitons at the vertex, while even N
admits a one-parameter family of N/2 translated line solitons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import GraphField, StarGrid
from .errors import (
    DegenerateConfigurationError,
    ExistenceBoundError,
    InvalidParameterError,
    ParityMismatchError,
    ZeroAlphaError,
)

__all__ = [
    "soliton_profile",
    "admissible_bump_counts",
    "StationarySpec",
    "bump_offset",
    "build_state",
    "build_kirchhoff",
    "build",
    "cubic_mass",
    "cubic_energy_spectrum",
    "recommended_edge_length",
]

DELTA = "delta"
KIRCHHOFF_ODD = "kirchhoff_odd"
KIRCHHOFF_EVEN = "kirchhoff_even"


def soliton_profile(a: float, omega: float, mu: float, x) -> np.ndarray:
    """Half-line soliton amplitude centered at ``a``; positive branch."""
    if not omega > 0:
        raise InvalidParameterError(f"omega must be positive, got {omega}")
    if not mu > 0:
        raise InvalidParameterError(f"mu must be positive, got {mu}")
    amp = ((mu + 1.0) * omega) ** (1.0 / (2.0 * mu))
    arg = np.abs(mu * math.sqrt(omega) * (np.asarray(x, dtype=float) - a))
    # sech(z)^(1/mu) via exponentials: stable for arbitrarily large |z|
    sech = 2.0 * np.exp(-arg) / (1.0 + np.exp(-2.0 * arg))
    return amp * sech ** (1.0 / mu)


def admissible_bump_counts(alpha: float, n_edges: int) -> list[int]:
    """Bump counts j carrying a standing wave for given sign of alpha.

    alpha > 0: j = floor(N/2 + 1) .. N (more bumps than tails);
    alpha < 0: j = 0 .. floor((N-1)/2) (more tails than bumps).
    """
    if alpha == 0:
        raise ZeroAlphaError(
            "alpha = 0 has no bump-indexed family; use the Kirchhoff builders"
        )
    if alpha > 0:
        return list(range(n_edges // 2 + 1, n_edges + 1))
    return list(range(0, (n_edges - 1) // 2 + 1))


def recommended_edge_length(omega: float, mu: float, margin: float = 12.0) -> float:
    """Truncation length keeping the profile at x = L below ~e^-margin of peak."""
    return margin / (mu * math.sqrt(omega))


@dataclass(frozen=True)
class StationarySpec:
    """Parameters identifying one explicit standing wave.

    ``kind`` is one of ``delta`` (requires bump count j), ``kirchhoff_odd``,
    or ``kirchhoff_even`` (requires the free offset a).  Validation happens at
    construction: the per-state existence bound |alpha| < |2j - N| sqrt(omega)
    must hold strictly (for j = 0 this is the global bound omega > alpha^2/N^2;
    excited states need the stronger per-j version).
    """

    alpha: float
    omega: float
    mu: float
    n_edges: int
    kind: str = DELTA
    j: Optional[int] = None
    offset: Optional[float] = None

    def __post_init__(self):
        if self.n_edges < 2:
            raise InvalidParameterError(f"need at least 2 edges, got {self.n_edges}")
        if not self.omega > 0:
            raise InvalidParameterError(f"omega must be positive, got {self.omega}")
        if not self.mu > 0:
            raise InvalidParameterError(f"mu must be positive, got {self.mu}")
        if self.kind == DELTA:
            self._validate_delta()
        elif self.kind == KIRCHHOFF_ODD:
            if self.alpha != 0:
                raise InvalidParameterError("kirchhoff_odd requires alpha = 0")
            if self.n_edges % 2 == 0:
                raise ParityMismatchError(
                    f"kirchhoff_odd requires an odd edge count, got {self.n_edges}"
                )
        elif self.kind == KIRCHHOFF_EVEN:
            if self.alpha != 0:
                raise InvalidParameterError("kirchhoff_even requires alpha = 0")
            if self.n_edges % 2 == 1:
                raise ParityMismatchError(
                    f"kirchhoff_even requires an even edge count, got {self.n_edges}"
                )
            if self.offset is None:
                raise InvalidParameterError("kirchhoff_even requires the offset a")
        else:
            raise InvalidParameterError(f"unknown stationary kind {self.kind!r}")

    def _validate_delta(self):
        if self.alpha == 0:
            raise ZeroAlphaError(
                "delta states require alpha != 0; use the Kirchhoff builders"
            )
        if self.j is None:
            raise InvalidParameterError("delta states require the bump count j")
        allowed = admissible_bump_counts(self.alpha, self.n_edges)
        if self.j not in allowed:
            raise InvalidParameterError(
                f"bump count j={self.j} not admissible for alpha={self.alpha}, "
                f"N={self.n_edges}; allowed: {allowed}"
            )
        # artanh domain: |alpha| < |2j - N| sqrt(omega), strict
        denom = abs(2 * self.j - self.n_edges) * math.sqrt(self.omega)
        if not abs(self.alpha) < denom:
            raise ExistenceBoundError(
                f"no standing wave: omega = {self.omega} is at or below the "
                f"existence bound alpha^2/(2j-N)^2 = "
                f"{self.alpha ** 2 / (2 * self.j - self.n_edges) ** 2} "
                f"for alpha={self.alpha}, N={self.n_edges}, j={self.j}"
            )

    # convenient constructors ------------------------------------------------

    @classmethod
    def delta_state(cls, alpha, omega, mu, n_edges, j) -> "StationarySpec":
        return cls(alpha, omega, mu, n_edges, DELTA, j=j)

    @classmethod
    def kirchhoff_odd(cls, omega, mu, n_edges) -> "StationarySpec":
        return cls(0.0, omega, mu, n_edges, KIRCHHOFF_ODD)

    @classmethod
    def kirchhoff_even(cls, omega, mu, n_edges, offset) -> "StationarySpec":
        return cls(0.0, omega, mu, n_edges, KIRCHHOFF_EVEN, offset=float(offset))


def bump_offset(spec: StationarySpec) -> float:
    """Center offset a^j = artanh(alpha / ((2j - N) sqrt(omega))) / (mu sqrt(omega))."""
    if spec.kind != DELTA:
        raise InvalidParameterError("bump_offset applies to delta states only")
    two_j_minus_n = 2 * spec.j - spec.n_edges
    if two_j_minus_n == 0:
        raise DegenerateConfigurationError(
            "2j = N leaves the offset equation without a finite solution"
        )
    ratio = spec.alpha / (two_j_minus_n * math.sqrt(spec.omega))
    if not abs(ratio) < 1:
        raise ExistenceBoundError(
            f"artanh argument {ratio} outside (-1, 1); omega below the "
            "existence bound for this bump count"
        )
    return math.atanh(ratio) / (spec.mu * math.sqrt(spec.omega))


def build_state(spec: StationarySpec, grid: StarGrid) -> GraphField:
    """Sample the bump/tail state: bumps on edges 1..j, tails on the rest."""
    if spec.kind != DELTA:
        raise InvalidParameterError("build_state handles delta states; see build_kirchhoff")
    if grid.n_edges != spec.n_edges:
        raise InvalidParameterError(
            f"grid has {grid.n_edges} edges but spec expects {spec.n_edges}"
        )
    a = bump_offset(spec)
    x = grid.x
    bump = soliton_profile(a, spec.omega, spec.mu, x)
    tail = soliton_profile(-a, spec.omega, spec.mu, x)
    rows = [bump if k < spec.j else tail for k in range(spec.n_edges)]
    # sech is even, so both rows share the vertex value exactly
    return GraphField(grid, rows[0][0], np.stack([r[1:] for r in rows]))


def build_kirchhoff(spec: StationarySpec, grid: StarGrid) -> GraphField:
    """Sample the alpha = 0 states: N half solitons (odd) or translated pairs (even)."""
    if spec.kind not in (KIRCHHOFF_ODD, KIRCHHOFF_EVEN):
        raise InvalidParameterError("build_kirchhoff handles Kirchhoff states only")
    if grid.n_edges != spec.n_edges:
        raise InvalidParameterError(
            f"grid has {grid.n_edges} edges but spec expects {spec.n_edges}"
        )
    x = grid.x
    if spec.kind == KIRCHHOFF_ODD:
        row = soliton_profile(0.0, spec.omega, spec.mu, x)
        rows = [row] * spec.n_edges
    else:
        half = spec.n_edges // 2
        incoming = soliton_profile(-spec.offset, spec.omega, spec.mu, x)
        outgoing = soliton_profile(+spec.offset, spec.omega, spec.mu, x)
        rows = [incoming] * half + [outgoing] * half
    return GraphField(grid, rows[0][0], np.stack([r[1:] for r in rows]))


def build(spec: StationarySpec, grid: StarGrid) -> GraphField:
    """Dispatch on the spec kind."""
    if spec.kind == DELTA:
        return build_state(spec, grid)
    return build_kirchhoff(spec, grid)


def cubic_mass(n_edges: int, omega: float, alpha: float) -> float:
    """Mass 2 N sqrt(omega) + 2 alpha of every cubic (mu = 1) bound state.

    Independent of the bump count j: the cubic family is mass-degenerate.
    """
    if not omega > alpha**2 / n_edges**2:
        raise ExistenceBoundError(
            f"omega = {omega} at or below the existence bound "
            f"alpha^2/N^2 = {alpha ** 2 / n_edges ** 2}"
        )
    return 2.0 * n_edges * math.sqrt(omega) + 2.0 * alpha


def cubic_energy_spectrum(n_edges: int, omega: float, alpha: float, j: int) -> float:
    """Energy -(N/3) omega^(3/2) - alpha^3 / (3 (2j - N)^2) of the cubic state j."""
    if alpha == 0:
        raise ZeroAlphaError("the j-indexed spectrum requires alpha != 0")
    if j not in admissible_bump_counts(alpha, n_edges):
        raise InvalidParameterError(
            f"bump count j={j} not admissible for alpha={alpha}, N={n_edges}"
        )
    if 2 * j == n_edges:
        raise DegenerateConfigurationError("2j = N is not a valid configuration")
    return -(n_edges / 3.0) * omega**1.5 - alpha**3 / (3.0 * (2 * j - n_edges) ** 2)
