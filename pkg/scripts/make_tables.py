#!/usr/bin/env python3
"""Regenerate the bundled table files and the test-data tables.

Bundled tables (shipped inside the package, used by reports and docs):
  square.tbl              plain unit square
  square_mirror_third.tbl unit square, full-height mirror at x = 1/3,
                          reflective face toward +x
  rect_mirror_sym.tbl     2 x 1 rectangle built by unfolding the unit square
                          across its right side; fold edge carries a mirror
                          (covering data recorded)

Test-data tables (loaded by the test suite only):
  triangle_interval.tbl     triangle with an irrational apex (interval kernel)
  lshape_mirror.tbl         L-shaped room (one reflex corner) with a mirror
  square_mirror_partial.tbl mirror spanning only the middle of the square

Every file is written through the serializer, so regeneration is
deterministic; run from the repository root.
"""

from pathlib import Path

from spybilliard.table import (
    build_square_with_vertical_mirrors,
    build_symmetric_unfolding,
    dump_table,
    load_table,
)

ROOT = Path(__file__).resolve().parent.parent
BUNDLED = ROOT / "src" / "spybilliard" / "tables"
TESTDATA = ROOT / "tests" / "data"

# Hand-written sources for tables the builders do not cover.  They are parsed
# and re-serialized so the shipped file is always in canonical form.
LITERAL_SOURCES = {
    "triangle_interval.tbl": """\
[meta]
kernel interval
name triangle-interval
[polygon]
0 0
1 0
1/2 sqrt(2)/2
""",
    "lshape_mirror.tbl": """\
[meta]
kernel rational
name lshape-mirror
[polygon]
0 0
2 0
2 1
1 1
1 2
0 2
[mirror]
from 3/2 0
to 3/2 1
reflective right
""",
    "square_mirror_partial.tbl": """\
[meta]
kernel rational
name square-mirror-partial
[polygon]
0 0
1 0
1 1
0 1
[mirror]
from 1/2 1/4
to 1/2 3/4
reflective left
""",
}


def _named(table, name):
    import dataclasses

    return dataclasses.replace(table, name=name)


def write(path: Path, table) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    text = dump_table(table)
    load_table(text)  # round-trip check before anything lands on disk
    path.write_text(text, encoding="utf-8", newline="\n")
    print(f"wrote {path.relative_to(ROOT)}")


def main() -> None:
    write(BUNDLED / "square.tbl", _named(build_square_with_vertical_mirrors([]), "square"))
    write(
        BUNDLED / "square_mirror_third.tbl",
        _named(
            build_square_with_vertical_mirrors([("1/3", (0, 1), "right")]),
            "square-mirror-third",
        ),
    )
    write(
        BUNDLED / "rect_mirror_sym.tbl",
        build_symmetric_unfolding(
            [(0, 0), (1, 0), (1, 1), (0, 1)],
            [(0, 1, "parent")],
            name="rect-mirror-sym",
        ),
    )
    for fname, source in LITERAL_SOURCES.items():
        write(TESTDATA / fname, load_table(source))


if __name__ == "__main__":
    main()
