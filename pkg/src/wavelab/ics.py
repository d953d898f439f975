"""Initial-condition catalog."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import ClassVar

import numpy as np

from .spectral import Field, Grid

_IMAGES = 4


def _periodized(profile, grid: Grid, center: float, width: float) -> np.ndarray:
    x = grid.x
    return sum(profile((x - center - m * grid.length) / width)
               for m in range(-_IMAGES, _IMAGES + 1))


@dataclass(frozen=True)
class Gaussian:
    amp: float = 0.1
    center: float = np.pi
    width: float = 0.5
    kind: ClassVar[str] = "gaussian"

    def build(self, grid: Grid) -> Field:
        return Field(grid, self.amp * _periodized(lambda z: np.exp(-z**2), grid,
                                                  self.center, self.width))


@dataclass(frozen=True)
class Sech2:
    amp: float = 0.1
    center: float = np.pi
    width: float = 0.5
    kind: ClassVar[str] = "sech2"

    def build(self, grid: Grid) -> Field:
        return Field(grid, self.amp * _periodized(lambda z: 1.0 / np.cosh(z) ** 2, grid,
                                                  self.center, self.width))


@dataclass(frozen=True)
class Sine:
    amp: float = 0.1
    k: float = 1.0
    kind: ClassVar[str] = "sine"

    def mode(self, grid: Grid) -> int:
        j = self.k * grid.length / (2 * np.pi)
        if abs(j - round(j)) > 1e-9:
            raise ValueError(f"k={self.k} is not an integer multiple of 2*pi/length")
        return int(round(j))

    def build(self, grid: Grid) -> Field:
        self.mode(grid)
        return Field(grid, self.amp * np.sin(self.k * grid.x))


@dataclass(frozen=True)
class RandomSobolev:
    s: float = 2.0
    radius: float = 0.1
    seed: int = 0
    kind: ClassVar[str] = "random_sobolev"

    def build(self, grid: Grid) -> Field:
        from .kato import SampleSpec, random_sobolev_field
        return random_sobolev_field(grid, SampleSpec(s=self.s, radius=self.radius, seed=self.seed), 0)


@dataclass(frozen=True)
class FromFile:
    """CSV with a header; the column named ``u`` (or the last column) is read."""

    path: str = ""
    kind: ClassVar[str] = "from_file"

    def build(self, grid: Grid) -> Field:
        with open(Path(self.path), newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        col = header.index("u") if "u" in header else len(header) - 1
        values = np.array([float(r[col]) for r in body if r])
        if values.size != grid.n:
            raise ValueError(f"{self.path} holds {values.size} samples, grid has n={grid.n}")
        return Field(grid, values)


IC_KINDS = {cls.kind: cls for cls in (Gaussian, Sech2, Sine, RandomSobolev, FromFile)}
