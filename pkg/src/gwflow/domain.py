"""Simulation domains: periodic torus and buffered window."""

from __future__ import annotations

from dataclasses import dataclass


class DomainError(ValueError):
    """Raised for queries or constructions outside the declared domain."""


@dataclass(frozen=True)
class Torus:
    """Fundamental cell [-M, M) x [-N, N-1] with periodic wrapping.

    Heights lift to the plane with windings (p, q):
    h(x + 2M, y) = h(x, y) + p and h(x, y + 2N) = h(x, y) - q.
    """

    M: int
    N: int

    def __post_init__(self):
        if self.M <= 0 or self.N <= 0:
            raise DomainError(f"torus sizes must be positive, got {(self.M, self.N)}")

    @property
    def rows(self) -> range:
        return range(-self.N, self.N)

    @property
    def x_extent(self) -> tuple[float, float]:
        return (-float(self.M), float(self.M))

    def wrap_x(self, x: float) -> float:
        M = float(self.M)
        return x - 2.0 * M * ((x + M) // (2.0 * M))

    def wrap_y(self, y: int) -> int:
        N = self.N
        return (y + N) % (2 * N) - N


@dataclass(frozen=True)
class Window:
    """Observation box [a, b] x [c, d] with speed-one x margin and row buffers.

    Kinks and antikinks travel at speed one, so creations with x outside
    [a - margin, b + margin] cannot influence the box within the horizon;
    the vertical buffer rows carry no creations and seal off the box from
    rows further out (a creation-free row evolves deterministically).
    """

    a: float
    b: float
    c: int
    d: int
    horizontal_margin: float
    vertical_buffer: int

    def __post_init__(self):
        if self.b <= self.a:
            raise DomainError("window needs a < b")
        if self.d < self.c:
            raise DomainError("window needs c <= d")
        if self.horizontal_margin < 0 or self.vertical_buffer < 0:
            raise DomainError("margins must be nonnegative")

    @property
    def rows(self) -> range:
        return range(self.c - self.vertical_buffer, self.d + self.vertical_buffer + 1)

    @property
    def interior_rows(self) -> range:
        """Rows that receive creations (strictly inside the buffered band)."""
        lo = self.c - self.vertical_buffer + 1
        hi = self.d + self.vertical_buffer - 1
        return range(lo, hi + 1)

    @property
    def x_extent(self) -> tuple[float, float]:
        return (self.a - self.horizontal_margin, self.b + self.horizontal_margin)


Domain = Torus | Window
