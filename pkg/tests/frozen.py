"""Frozen expectation tables.

Values here were produced by the engine, cross-checked against the
independent oracles in :mod:`tests.oracles` (pointwise ray tracing, lattice
counts, closed forms) and against each other (identity residuals, bound
inequalities), then recorded.  Tests compare live results to these literals
so that any behavioral drift shows up as an explicit diff, not as a silent
re-derivation.

Key:

* ``p``: word counts per length, ``p[n]`` for n = 0..len-1;
* ``n_vert``: oriented singular-to-singular flight counts by exact number of
  flight links (index = links; index 0 is always 0);
* ``n_spy``: one-sided-mirror flight family counts, same indexing;
* ``census_cumulative_r12``: flights within unfolded radius m, m = 1..12,
  for the unit square with the reflecting-right mirror at x = 1/3.
"""

SQUARE = {
    "p": (1, 4, 12, 28, 52, 92, 140, 212, 300, 412, 540, 708, 892),
    "n_vert": (0, 4, 8, 8, 16, 8, 24, 16, 24, 16, 40, 16, 48),
    "n_spy": (0,) * 13,
}

SQUARE_MIRROR_THIRD = {
    "p": (1, 6, 22, 54, 104, 182, 282, 424, 598, 816, 1074, 1392, 1756),
    "n_vert": (0, 8, 16, 18, 28, 26, 42, 36, 50, 46, 62, 58, 78),
    "n_spy": (0, 2, 4, 6, 10, 12, 18, 22, 28, 32, 42, 46, 58),
}

RECT_MIRROR_SYM = {
    "p": (1, 6, 22, 54, 102, 182, 278, 422, 598, 822, 1078, 1414, 1782),
    "n_vert": (0, 8, 16, 16, 32, 16, 48, 32, 48, 32, 80, 32, 96),
    "n_spy": (0, 2, 4, 6, 10, 12, 18, 22, 28, 32, 42, 46, 58),
}

LSHAPE_MIRROR = {
    "p": (1, 8, 33, 85, 170, 304, 479),
    "n_vert": (0, 16, 30, 39, 56, 50, 84),
    "n_spy": (0, 2, 4, 6, 10, 12, 18),
}

SQUARE_MIRROR_PARTIAL = {
    "p": (1, 6, 24, 72, 148, 302, 504),
    "n_vert": (0, 16, 42, 32, 96, 48, 108),
    "n_spy": (0, 2, 6, 8, 22, 16, 36),
}

TRIANGLE_INTERVAL = {
    "p": (1, 3, 6, 12, 22, 38, 56),
}

CENSUS_MIRROR_THIRD_R12 = {
    "cumulative": (0, 18, 40, 72, 114, 164, 212, 290, 368, 444, 522, 630),
    "records": 630,
    "corner_corner": 130,
}

BY_TABLE = {
    "square": SQUARE,
    "square_mirror_third": SQUARE_MIRROR_THIRD,
    "rect_mirror_sym": RECT_MIRROR_SYM,
    "lshape_mirror": LSHAPE_MIRROR,
    "square_mirror_partial": SQUARE_MIRROR_PARTIAL,
}
