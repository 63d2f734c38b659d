"""The vector alpha and its text grammar."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import ParseError
from .realnum import (
    DEFAULT_BUDGET,
    DecimalLiteral,
    NearestDistance,
    PrecisionBudget,
    Rational,
    Real,
    RealSpec,
    dot,
    nearest_distance,
    parse_component,
)


@dataclass(frozen=True)
class AlphaVector:
    components: tuple[RealSpec, ...]
    reals: tuple[Real, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("alpha needs at least one component")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "reals", tuple(c.to_real() for c in comps))

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def resonant(self) -> bool:
        """All coordinates rational, so 1, alpha_1..alpha_N are Q-dependent."""
        return all(isinstance(c, Rational) for c in self.components)

    @property
    def exact(self) -> bool:
        return not any(isinstance(c, DecimalLiteral) for c in self.components)

    def dot(self, q: Sequence[int]) -> Real:
        return dot(self, q)

    def distance(self, q: Sequence[int], budget: PrecisionBudget = DEFAULT_BUDGET) -> NearestDistance:
        """Exact ``||alpha . q||`` and the nearest integer to ``alpha . q``."""
        return nearest_distance(self.dot(q), budget)

    def approx(self) -> list[float]:
        return [r.approx() for r in self.reals]

    def magnitude_bounds(self) -> list[Fraction]:
        """Rational upper bounds on ``|alpha_i|`` (including uncertainty)."""
        out = []
        for r in self.reals:
            lo, hi = r.bounds(32)
            out.append(max(abs(lo), abs(hi)))
        return out

    def render(self) -> str:
        return ",".join(c.render() for c in self.components)

    def __str__(self):
        return self.render()


def parse_alpha(spec: str) -> AlphaVector:
    """Parse ``component ("," component)*``.

    >>> parse_alpha("quad:(1+1*sqrt(5))/2").n
    1
    """
    if not spec or not spec.strip():
        raise ParseError("empty alpha-spec", 0)
    comps = []
    offset = 0
    for piece in spec.split(","):
        if not piece.strip():
            raise ParseError("empty component", offset)
        comps.append(parse_component(piece, offset))
        offset += len(piece) + 1
    return AlphaVector(tuple(comps))


def render_alpha(alpha: AlphaVector) -> str:
    return alpha.render()
