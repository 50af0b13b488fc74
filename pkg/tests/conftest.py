"""Shared fixtures and independent reference implementations.

The oracles here deliberately avoid the library's vectorized code paths:
convolution is a plain quadruple loop with inline boundary folding, the
PRNG reference is pure-Python integer arithmetic, and statistics use
direct formula translations. Tests compare the fast implementations
against these.
"""

from __future__ import annotations

import math
import sys

import numpy as np
import pytest

from gstk import Band, ClassSignature, MultibandImage, Placement, Rectangle, SceneSpec

_MASK64 = 0xFFFFFFFFFFFFFFFF


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print the acceptance criterion verdicts collected during the run."""
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "REPORT", None) if module else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


# ---------------------------------------------------------------------------
# Convolution oracle


def fold_index(i: int, n: int, boundary: str) -> int | None:
    """Map an out-of-range index to a source index (None = reads zero)."""
    if 0 <= i < n:
        return i
    if boundary == "replicate":
        return min(max(i, 0), n - 1)
    if boundary == "zero":
        return None
    if boundary == "reflect":
        m = i % (2 * n)
        return m if m < n else 2 * n - 1 - m
    raise ValueError(boundary)


def oracle_convolve(
    samples: np.ndarray,
    coeffs: list[list[int]],
    anchor: tuple[int, int],
    boundary: str,
) -> np.ndarray:
    """Direct quadruple-loop stencil application, exact integer arithmetic.

    The template is applied as printed (no flipping): the output at (r, c)
    sums coeff[kr][kc] * f(r + kr - anchor_row, c + kc - anchor_col).
    """
    height, width = samples.shape
    ar, ac = anchor
    out = np.zeros((height, width), dtype=np.int64)
    for r in range(height):
        for c in range(width):
            acc = 0
            for kr, row in enumerate(coeffs):
                for kc, coeff in enumerate(row):
                    if coeff == 0:
                        continue
                    sr = fold_index(r + kr - ar, height, boundary)
                    sc = fold_index(c + kc - ac, width, boundary)
                    if sr is None or sc is None:
                        continue
                    acc += coeff * int(samples[sr, sc])
            out[r, c] = acc
    return out.astype(np.int32)


# ---------------------------------------------------------------------------
# PRNG reference (pure Python, masked 64-bit arithmetic)


def ref_splitmix64(seed: int, index: int) -> int:
    z = (seed + (index + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def ref_uniform(seed: int, index: int) -> float:
    return ((ref_splitmix64(seed, index) >> 11) + 1) * 2.0**-53


def ref_gaussian(seed: int, index: int) -> float:
    u1 = ref_uniform(seed, 2 * index)
    u2 = ref_uniform(seed, 2 * index + 1)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


# ---------------------------------------------------------------------------
# Scene fixtures


def separable_scene_spec(seed: int = 8101) -> SceneSpec:
    """Three well-separated classes: per-band mean gaps >= 10 sigma."""
    sigma = (2.0, 2.0, 2.0)
    return SceneSpec(
        width=80,
        height=80,
        dtype="u8",
        seed=seed,
        signatures=(
            ClassSignature("sea", (40.0, 60.0, 30.0), sigma),
            ClassSignature("forest", (120.0, 90.0, 80.0), sigma),
            ClassSignature("soil", (200.0, 170.0, 150.0), sigma),
        ),
        placements=(
            Placement(2, Rectangle(8, 8, 30, 40)),
            Placement(3, Rectangle(46, 30, 28, 44)),
        ),
    )


# Class mean profiles built from mutually orthogonal +-1 patterns over four
# equal-area quadrants: bands 1, 4, 5 swing +-90 on the three orthogonal
# patterns (huge stddev, near-zero pairwise correlation), while the other
# four bands share one mixed low-amplitude profile (small stddev, strongly
# correlated with each other). Every triple except (1, 4, 5) then contains
# a small-stddev or strongly correlated band and scores far lower.
_W1 = (1, 1, -1, -1)
_W2 = (1, -1, 1, -1)
_W3 = (1, -1, -1, 1)
_MIX = (3, -1, -1, -1)


def forced_oif_spec(seed: int = 20260825) -> SceneSpec:
    signatures = []
    for c in range(4):
        means = (
            128.0 + 90.0 * _W1[c],
            128.0 + 4.0 * _MIX[c],
            128.0 + 5.0 * _MIX[c],
            128.0 + 90.0 * _W2[c],
            128.0 + 90.0 * _W3[c],
            128.0 + 6.0 * _MIX[c],
            128.0 + 7.0 * _MIX[c],
        )
        signatures.append(ClassSignature(f"region {c + 1}", means, (2.0,) * 7))
    return SceneSpec(
        width=64,
        height=64,
        dtype="u8",
        seed=seed,
        signatures=tuple(signatures),
        placements=(
            Placement(2, Rectangle(0, 32, 32, 32)),
            Placement(3, Rectangle(32, 0, 32, 32)),
            Placement(4, Rectangle(32, 32, 32, 32)),
        ),
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1729)


def random_band(
    rng: np.random.Generator, height: int, width: int, dtype: str = "u8"
) -> Band:
    if dtype == "u8":
        return Band(rng.integers(0, 256, (height, width), dtype=np.uint8))
    return Band(rng.integers(0, 65536, (height, width), dtype=np.uint16))


def random_image(
    rng: np.random.Generator,
    n_bands: int,
    height: int,
    width: int,
    dtype: str = "u8",
) -> MultibandImage:
    return MultibandImage(
        tuple(random_band(rng, height, width, dtype) for _ in range(n_bands))
    )
