"""Shared fixtures: tables, language trees, reports, censuses, samplers.

Expensive computations (deep enumerations, the radius-12 census, attractor
layers, bulk orbit sampling) are session-scoped and timed; their wall-clock
seconds land in the ``timings`` fixture so runtime-budget assertions can see
the cost no matter which test triggered the work first.
"""

from __future__ import annotations

import random
import time
from fractions import Fraction
from pathlib import Path

import pytest

from spybilliard.analysis import build_complexity_report, square_cover_census
from spybilliard.dynamics import attractor_layers
from spybilliard.language import enumerate_language
from spybilliard.table import load_table

from tests import oracles

ROOT = Path(__file__).resolve().parents[1]
BUNDLED = ROOT / "src" / "spybilliard" / "tables"
DATA = Path(__file__).resolve().parent / "data"

TABLE_PATHS = {
    "square": BUNDLED / "square.tbl",
    "square_mirror_third": BUNDLED / "square_mirror_third.tbl",
    "rect_mirror_sym": BUNDLED / "rect_mirror_sym.tbl",
    "lshape_mirror": DATA / "lshape_mirror.tbl",
    "square_mirror_partial": DATA / "square_mirror_partial.tbl",
    "triangle_interval": DATA / "triangle_interval.tbl",
}

DEEP_N = 12  # bundled tables are enumerated once per session to this length
SAMPLE_SEED = 20260823
ATTRACTOR_SEED = 1729


@pytest.fixture(scope="session")
def timings():
    """Wall-clock seconds of the expensive shared computations, by key."""
    return {}


def _read(stem: str) -> str:
    return TABLE_PATHS[stem].read_text()


@pytest.fixture(scope="session")
def square_table():
    return load_table(_read("square"))


@pytest.fixture(scope="session")
def mirror_table():
    return load_table(_read("square_mirror_third"))


@pytest.fixture(scope="session")
def rect_table():
    return load_table(_read("rect_mirror_sym"))


@pytest.fixture(scope="session")
def lshape_table():
    return load_table(_read("lshape_mirror"))


@pytest.fixture(scope="session")
def partial_table():
    return load_table(_read("square_mirror_partial"))


@pytest.fixture(scope="session")
def triangle_table():
    return load_table(_read("triangle_interval"))


# ---------------------------------------------------------------------------
# Deep language trees and the full reports built from them
# ---------------------------------------------------------------------------


def _timed_tree(table, timings, key):
    t0 = time.perf_counter()
    tree = enumerate_language(table, DEEP_N, budget=200_000_000)
    timings[key] = time.perf_counter() - t0
    return tree


@pytest.fixture(scope="session")
def square_tree(square_table, timings):
    return _timed_tree(square_table, timings, "tree/square")


@pytest.fixture(scope="session")
def mirror_tree(mirror_table, timings):
    return _timed_tree(mirror_table, timings, "tree/square_mirror_third")


@pytest.fixture(scope="session")
def rect_tree(rect_table, timings):
    return _timed_tree(rect_table, timings, "tree/rect_mirror_sym")


def _timed_report(table, tree, timings, key):
    t0 = time.perf_counter()
    rep = build_complexity_report(table, DEEP_N, budget=200_000_000, tree=tree)
    timings[key] = time.perf_counter() - t0
    return rep


@pytest.fixture(scope="session")
def square_report(square_table, square_tree, timings):
    return _timed_report(square_table, square_tree, timings, "report/square")


@pytest.fixture(scope="session")
def mirror_report(mirror_table, mirror_tree, timings):
    return _timed_report(mirror_table, mirror_tree, timings, "report/square_mirror_third")


@pytest.fixture(scope="session")
def rect_report(rect_table, rect_tree, timings):
    return _timed_report(rect_table, rect_tree, timings, "report/rect_mirror_sym")


@pytest.fixture(scope="session")
def mirror_census(mirror_table, timings):
    t0 = time.perf_counter()
    census = square_cover_census(mirror_table, 12, budget=200_000_000)
    timings["census/square_mirror_third"] = time.perf_counter() - t0
    return census


# ---------------------------------------------------------------------------
# Attractor layers (shared between unit and acceptance tests)
# ---------------------------------------------------------------------------


@pytest.fixture(scope="session")
def mirror_layers(mirror_table, timings):
    t0 = time.perf_counter()
    layers = attractor_layers(
        mirror_table, 8, samples=2000, seed=ATTRACTOR_SEED, exact_depth=4
    )
    timings["attractor/square_mirror_third"] = time.perf_counter() - t0
    return layers


@pytest.fixture(scope="session")
def square_layers(square_table, timings):
    t0 = time.perf_counter()
    layers = attractor_layers(
        square_table, 8, samples=2000, seed=ATTRACTOR_SEED, exact_depth=4
    )
    timings["attractor/square"] = time.perf_counter() - t0
    return layers


# ---------------------------------------------------------------------------
# Bulk sampled words (the oracle side of the language comparison)
# ---------------------------------------------------------------------------


def sample_words_axis(stem: str, traces: int, max_len: int, seed: int) -> dict:
    """Trace ``traces`` seeded random orbits with the independent axis tracer.

    Starts are interior points on a 1/10000 grid with integer directions in
    [-999, 999]^2; each accepted trace contributes every prefix of its word.
    Returns {n: set of words of length n} for n = 0..max_len.
    """
    otab = oracles.parse_table(_read(stem))
    (x0, y0), (x1, _y1), (_x2, y2), _v3 = otab.verts
    assert (x0, y0) == (0, 0)
    width, height = x1, y2
    rng = random.Random(seed)
    out = {n: set() for n in range(max_len + 1)}
    out[0].add(())
    for _ in range(traces):
        pos = (
            Fraction(rng.randrange(1, 10000), 10000) * width,
            Fraction(rng.randrange(1, 10000), 10000) * height,
        )
        d = (Fraction(rng.randrange(-999, 1000)), Fraction(rng.randrange(-999, 1000)))
        if d[0] == 0 and d[1] == 0:
            continue
        word = oracles.trace_word_axis(otab, pos, d, max_len)
        if word is None:
            continue
        for n in range(1, max_len + 1):
            out[n].add(word[:n])
    return out


@pytest.fixture(scope="session")
def square_sampled_words(timings):
    t0 = time.perf_counter()
    words = sample_words_axis("square", 100_000, 10, SAMPLE_SEED)
    timings["sample/square"] = time.perf_counter() - t0
    return words


@pytest.fixture(scope="session")
def mirror_sampled_words(timings):
    t0 = time.perf_counter()
    words = sample_words_axis("square_mirror_third", 100_000, 10, SAMPLE_SEED)
    timings["sample/square_mirror_third"] = time.perf_counter() - t0
    return words


@pytest.fixture(scope="session")
def rect_sampled_words(timings):
    t0 = time.perf_counter()
    words = sample_words_axis("rect_mirror_sym", 100_000, 10, SAMPLE_SEED)
    timings["sample/rect_mirror_sym"] = time.perf_counter() - t0
    return words
