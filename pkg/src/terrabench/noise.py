"""Seeded multi-octave value noise used as the elevation sampler.

The sampler only produces an unnormalized field; worldgen owns zero-mean
normalization, peak amplitude, and elevation-level scaling. Samplers are
pluggable so a learned generator can be dropped in behind the same call.
"""

import numpy as np


def _fade(t: np.ndarray) -> np.ndarray:
    # quintic smoothstep, C2-continuous across lattice cells
    return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)


def value_noise_octave(rng: np.random.Generator, cells: int, wavelength: float) -> np.ndarray:
    """One octave of lattice value noise over a cells x cells grid.

    Lattice values are uniform in [-1, 1] at spacing `wavelength` (in cell
    units) and interpolated with a quintic fade.
    """
    if wavelength <= 0:
        raise ValueError(f"wavelength must be positive, got {wavelength}")
    coords = np.arange(cells, dtype=np.float64) / wavelength
    i0 = np.floor(coords).astype(np.intp)
    frac = _fade(coords - i0)
    lattice_n = int(i0[-1]) + 2
    lattice = rng.uniform(-1.0, 1.0, size=(lattice_n, lattice_n))

    v00 = lattice[np.ix_(i0, i0)]
    v01 = lattice[np.ix_(i0, i0 + 1)]
    v10 = lattice[np.ix_(i0 + 1, i0)]
    v11 = lattice[np.ix_(i0 + 1, i0 + 1)]
    tx = frac[np.newaxis, :]
    ty = frac[:, np.newaxis]
    top = v00 * (1.0 - tx) + v01 * tx
    bot = v10 * (1.0 - tx) + v11 * tx
    return top * (1.0 - ty) + bot * ty


class MultiOctaveNoise:
    """Fractal sum of value-noise octaves (wavelength halves, amplitude
    multiplies by `persistence` per octave)."""

    def __init__(self, octaves: int = 5, persistence: float = 0.5,
                 base_wavelength_cells: float = 32.0):
        if octaves < 1:
            raise ValueError("octaves must be >= 1")
        self.octaves = octaves
        self.persistence = persistence
        self.base_wavelength_cells = base_wavelength_cells

    def sample(self, rng: np.random.Generator, cells: int) -> np.ndarray:
        field = np.zeros((cells, cells), dtype=np.float64)
        amplitude = 1.0
        wavelength = self.base_wavelength_cells
        for _ in range(self.octaves):
            field += amplitude * value_noise_octave(rng, cells, wavelength)
            amplitude *= self.persistence
            wavelength = max(wavelength / 2.0, 1.0)
        return field
