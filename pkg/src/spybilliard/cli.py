"""Command-line driver: load a table, run one engine, write one run directory.

One invocation = one table = one run directory.  The run directory name is a
pure function of the configuration (table stem, command, depth, seed), so a
repeated run with identical flags rewrites its own outputs with byte-identical
files; nothing is timestamped and no hidden state leaks into the artifacts.

Exit codes:
    0  success (for ``report``/``attractor``: every hard assertion passed)
    2  unusable input (missing or invalid table file, bad start state)
    3  a hard assertion failed (details in ``failures.json``)
    4  budget exhausted (partial outputs kept)
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import random
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .analysis import ComplexityReport, build_complexity_report, write_report_csv
from .dynamics import (
    attractor_layers,
    cells_nested,
    orbit_to_csv,
    orbit_to_svg,
    orbit_word,
    phase_point,
    random_phase_point,
    trace_orbit,
    unfolded_orbit_svg,
)
from .language import (
    LanguageTree,
    count_generalized_diagonals,
    count_spy_diagonal_families,
    enumerate_language,
)
from .numbers import (
    Q,
    UndecidableSignError,
    scalar_from_string,
    scalar_to_string,
    set_precision_floor,
)
from .table import Table, TableFormatError, load_table, validate
from .tracing import BudgetExceeded

__all__ = ["RunConfig", "build_parser", "main"]

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_ASSERTION = 3
EXIT_BUDGET = 4

#: Per-command default for ``--n`` when the flag is omitted.
DEFAULT_N = {
    "validate": 0,
    "orbit": 32,
    "words": 8,
    "diagonals": 8,
    "report": 8,
    "attractor": 6,
}


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a run's outputs; no hidden inputs.

    ``run_dir`` is derived from the fields alone, which is what makes repeat
    runs land on the same files (the determinism contract is checked by
    comparing those files byte for byte).
    """

    table_path: Path
    command: str
    n: int
    kernel: Optional[str]
    precision: Optional[int]
    budget: int
    seed: int
    out: Path
    svg: bool
    label: Optional[str] = None
    position: Optional[str] = None
    direction: Optional[str] = None
    samples: int = 2000
    exact_depth: Optional[int] = None
    radius: Optional[int] = None
    census_radius: Optional[int] = None
    replay: Optional[Path] = None

    @property
    def run_dir(self) -> Path:
        return self.out / f"{self.table_path.stem}-{self.command}-n{self.n}-s{self.seed}"


# ---------------------------------------------------------------------------
# Deterministic writers
# ---------------------------------------------------------------------------


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_json(path: Path, payload) -> None:
    _write_text(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------------------
# Table loading
# ---------------------------------------------------------------------------


def _load_table(cfg: RunConfig) -> Table:
    if not cfg.table_path.is_file():
        raise FileNotFoundError(f"table not found: {cfg.table_path}")
    table = load_table(cfg.table_path.read_text(encoding="utf-8"))
    if cfg.kernel is not None and cfg.kernel != table.kernel:
        if cfg.kernel == "rational":
            raise TableFormatError(
                "table declares the interval kernel; it cannot be demoted to rational",
                1,
            )
        table = dataclasses.replace(table, kernel=cfg.kernel)
    return table


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_validate(cfg: RunConfig, table: Table) -> int:
    report = validate(table)
    _write_json(
        cfg.run_dir / "validation.json",
        {
            "table": table.name,
            "q": report.q,
            "r": report.r,
            "label_count": report.label_count,
            "ok": report.ok,
            "issues": list(report.issues),
        },
    )
    if report.ok:
        print(f"{table.name}: ok (q={report.q}, r={report.r}, {report.label_count} labels)")
        return EXIT_OK
    for issue in report.issues:
        print(f"{table.name}: {issue}", file=sys.stderr)
    return EXIT_ASSERTION


def _parse_direction(text: str, kernel: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError("--direction expects two comma-separated components, e.g. '1,2'")
    return tuple(scalar_from_string(p.strip(), kernel) for p in parts)


def cmd_orbit(cfg: RunConfig, table: Table) -> int:
    if cfg.label is not None:
        if cfg.position is None or cfg.direction is None:
            raise ValueError("--label needs --position and --direction")
        pos = scalar_from_string(cfg.position, table.kernel)
        d = _parse_direction(cfg.direction, table.kernel)
        start = phase_point(table, cfg.label, pos, d)
    else:
        start = random_phase_point(table, random.Random(cfg.seed))
    orbit = trace_orbit(table, start, cfg.n)
    run = cfg.run_dir
    _write_text(run / "orbit.csv", orbit_to_csv(table, orbit))
    _write_json(
        run / "orbit.json",
        {
            "table": table.name,
            "start_label": start.label.name,
            "events": len(orbit.code),
            "termination": orbit.termination,
            "word": list(orbit_word(orbit)),
        },
    )
    if cfg.svg:
        _write_text(run / "orbit.svg", orbit_to_svg(table, orbit))
        _write_text(run / "unfolded.svg", unfolded_orbit_svg(table, orbit))
    print(
        f"{table.name}: {len(orbit.code)} events from {start.label.name}, "
        f"termination={orbit.termination}"
    )
    return EXIT_OK


def cmd_words(cfg: RunConfig, table: Table) -> int:
    tree = enumerate_language(table, cfg.n, budget=cfg.budget)
    run = cfg.run_dir
    rows = ["n,p,s"]
    for n in range(tree.complete_to + 1):
        s = tree.p(n + 1) - tree.p(n) if n < tree.complete_to else ""
        rows.append(f"{n},{tree.p(n)},{s}")
    _write_text(run / "complexity.csv", "\n".join(rows) + "\n")
    lines = []
    for n in range(1, tree.complete_to + 1):
        lines.extend(".".join(word) for word in sorted(tree.words[n]))
    _write_text(run / "words.txt", "\n".join(lines) + ("\n" if lines else ""))
    print(f"{table.name}: p = {tree.complexity()}")
    if tree.truncated:
        print(
            f"budget {cfg.budget} exhausted at length {tree.complete_to}; partial outputs kept",
            file=sys.stderr,
        )
        return EXIT_BUDGET
    return EXIT_OK


def _scalar_tuple_str(values) -> str:
    return " ".join(scalar_to_string(v) for v in values)


def cmd_diagonals(cfg: RunConfig, table: Table) -> int:
    cutoff = Q(cfg.radius) if cfg.radius is not None else None
    diagonals = count_generalized_diagonals(
        table, cfg.n, budget=cfg.budget, major_cutoff=cutoff
    )
    spies = count_spy_diagonal_families(table, cfg.n, budget=cfg.budget)
    run = cfg.run_dir

    vert = diagonals.counts_by_length()
    spy = spies.counts_by_length()
    rows = ["n,n_vert,n_vert_cumulative,n_spy,n_spy_cumulative"]
    vert_cum = spy_cum = 0
    violation = None
    for n in range(cfg.n + 1):
        vert_cum += vert[n]
        spy_cum += spy[n]
        rows.append(f"{n},{vert[n]},{vert_cum},{spy[n]},{spy_cum}")
        if spy_cum > vert_cum and violation is None:
            violation = n
    _write_text(run / "diagonals.csv", "\n".join(rows) + "\n")

    rec_rows = ["length,source,direction,target,letters"]
    keyed = sorted(
        diagonals.records,
        key=lambda rec: (
            rec.length,
            tuple(scalar_to_string(c) for c in rec.source),
            tuple(scalar_to_string(c) for c in rec.direction),
        ),
    )
    for rec in keyed:
        rec_rows.append(
            f"{rec.length},{_scalar_tuple_str(rec.source)},"
            f"{_scalar_tuple_str(rec.direction)},{_scalar_tuple_str(rec.target)},"
            f"{'.'.join(rec.letters)}"
        )
    _write_text(run / "diagonal_records.csv", "\n".join(rec_rows) + "\n")

    print(f"{table.name}: n_vert={vert} n_spy={spy}")
    if violation is not None:
        _write_json(
            run / "failures.json",
            [{"check": "spy_family_bound", "level": violation}],
        )
        print(
            f"FAIL: cumulative spy-family count exceeds cumulative diagonal count "
            f"at n={violation}",
            file=sys.stderr,
        )
        return EXIT_ASSERTION
    if not diagonals.complete:
        print(
            "depth limit dropped candidates inside the requested radius; "
            "partial outputs kept",
            file=sys.stderr,
        )
        return EXIT_BUDGET
    return EXIT_OK


def _tree_from_words_text(table: Table, text: str) -> LanguageTree:
    """Rebuild a word tree from a ``words.txt`` dump (one dot-joined word per line)."""
    by_len: dict = {}
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        word = tuple(line.split("."))
        by_len.setdefault(len(word), set()).add(word)
    n_max = max(by_len) if by_len else 0
    words = [frozenset({()})]
    words.extend(frozenset(by_len.get(k, set())) for k in range(1, n_max + 1))
    alphabet = tuple(lab.name for lab in table.labels)
    return LanguageTree(n_max, n_max, False, tuple(words), alphabet)


def _report_failures(report: ComplexityReport) -> list:
    out = []
    for n, (p_n, b_n) in enumerate(zip(report.p, report.bounds)):
        if p_n > b_n:
            out.append(
                {"check": "complexity_bound", "level": n, "p": p_n, "bound": b_n}
            )
    vert_cum = spy_cum = 0
    for i in range(min(len(report.n_vert), len(report.n_spy))):
        vert_cum += report.n_vert[i]
        spy_cum += report.n_spy[i]
        if spy_cum > vert_cum:
            out.append(
                {
                    "check": "spy_family_bound",
                    "level": i,
                    "n_spy_cumulative": spy_cum,
                    "n_vert_cumulative": vert_cum,
                }
            )
            break
    for j, res in enumerate(report.identity_residuals):
        if res != 0:
            out.append(
                {"check": "second_difference_identity", "level": j, "residual": res}
            )
    if report.census is not None and not report.census.ok:
        out.append({"check": "census", "level": report.census.radius})
    if report.projection is not None and not report.projection.ok:
        out.append({"check": "covering_projection", "level": report.projection.n_max})
    return out


def cmd_report(cfg: RunConfig, table: Table) -> int:
    tree = None
    if cfg.replay is not None:
        if not cfg.replay.is_file():
            raise ValueError(f"replay file not found: {cfg.replay}")
        tree = _tree_from_words_text(table, cfg.replay.read_text(encoding="utf-8"))
    report = build_complexity_report(
        table,
        cfg.n,
        census_radius=cfg.census_radius,
        budget=cfg.budget,
        tree=tree,
    )
    run = cfg.run_dir
    _write_text(run / "report.json", report.to_json())
    write_report_csv(run / "report.csv", report)

    for key, val in sorted(report.flags().items()):
        print(f"  {key}: {'n/a' if val is None else val}")
    failures = _report_failures(report)
    if failures:
        _write_json(run / "failures.json", failures)
        for rec in failures:
            print(f"FAIL: {rec['check']} at level {rec['level']}", file=sys.stderr)
        return EXIT_ASSERTION
    if report.truncated:
        print(
            f"budget {cfg.budget} exhausted at length {report.complete_to}; "
            "partial outputs kept",
            file=sys.stderr,
        )
        return EXIT_BUDGET
    print(f"{table.name}: hard assertions pass to n={report.complete_to}")
    return EXIT_OK


def _cells_payload(cells: dict) -> dict:
    doc: dict = {}
    for name in sorted(cells):
        regions = cells[name]
        if regions is None:
            doc[name] = "full"
            continue
        doc[name] = [
            {
                "chart": c.chart,
                "sense": c.sense,
                "verts": [
                    [scalar_to_string(u), scalar_to_string(v)] for (u, v) in c.verts
                ],
            }
            for c in regions
        ]
    return doc


def cmd_attractor(cfg: RunConfig, table: Table) -> int:
    layers = attractor_layers(
        table,
        cfg.n,
        samples=cfg.samples,
        seed=cfg.seed,
        exact_depth=cfg.exact_depth,
    )
    run = cfg.run_dir
    label_names = [lab.name for lab in table.labels]

    payload = []
    for layer in layers:
        total = (
            sum(layer.surviving.values()) / layer.sample_count
            if layer.sample_count
            else 0.0
        )
        payload.append(
            {
                "depth": layer.depth,
                "sample_count": layer.sample_count,
                "total_measure": total,
                "measure": {k: layer.measure[k] for k in sorted(layer.measure)},
                "surviving": {k: layer.surviving[k] for k in sorted(layer.surviving)},
                "standard_error": {
                    k: layer.standard_error[k] for k in sorted(layer.standard_error)
                },
                "cells": _cells_payload(layer.cells),
            }
        )
    _write_json(run / "attractor.json", payload)

    rows = ["depth,total_measure," + ",".join(label_names)]
    for entry in payload:
        cols = [str(entry["depth"]), repr(entry["total_measure"])]
        cols.extend(repr(entry["measure"][name]) for name in label_names)
        rows.append(",".join(cols))
    _write_text(run / "attractor.csv", "\n".join(rows) + "\n")

    failures = []
    for k in range(1, len(layers)):
        inner, outer = layers[k].cells, layers[k - 1].cells
        if not inner or not outer:
            continue  # exact cells not computed this deep
        for detail in cells_nested(inner, outer):
            failures.append({"check": "cell_nesting", "level": k, "detail": detail})
    for k in range(1, len(layers)):
        for name in label_names:
            rise = layers[k].measure[name] - layers[k - 1].measure[name]
            se = (
                layers[k].standard_error[name] ** 2
                + layers[k - 1].standard_error[name] ** 2
            ) ** 0.5
            if rise > 3 * se:
                failures.append(
                    {"check": "measure_monotone", "level": k, "label": name}
                )

    series = " ".join(f"{entry['total_measure']:.4f}" for entry in payload)
    print(f"{table.name}: surviving measure by depth: {series}")
    if failures:
        _write_json(run / "failures.json", failures)
        for rec in failures:
            print(f"FAIL: {rec['check']} at level {rec['level']}", file=sys.stderr)
        return EXIT_ASSERTION
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spybilliard",
        description="Exact engines for polygonal billiards with one-sided mirrors.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--table", required=True, type=Path, help="table file to load")
    common.add_argument(
        "--n", type=int, default=None, help="depth / word-length cap (per-command default)"
    )
    common.add_argument(
        "--kernel",
        choices=("rational", "interval"),
        default=None,
        help="override the table's scalar kernel (promotion to interval only)",
    )
    common.add_argument(
        "--precision",
        type=int,
        default=None,
        help="interval-kernel precision floor in bits",
    )
    common.add_argument(
        "--budget", type=int, default=10_000_000, help="work budget (beams / fan cells)"
    )
    common.add_argument("--seed", type=int, default=0, help="seed for sampled starts")
    common.add_argument(
        "--out", type=Path, default=Path("runs"), help="parent directory for run outputs"
    )
    common.add_argument("--svg", action="store_true", help="also write SVG figures")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check table wellformedness")

    p_orbit = sub.add_parser("orbit", parents=[common], help="trace one orbit")
    p_orbit.add_argument("--label", default=None, help="start side label (e.g. w1)")
    p_orbit.add_argument(
        "--position", default=None, help="start position in (0,1) along the side"
    )
    p_orbit.add_argument(
        "--direction", default=None, help="start direction 'dx,dy' (exact literals)"
    )

    sub.add_parser("words", parents=[common], help="enumerate the itinerary language")

    p_diag = sub.add_parser(
        "diagonals", parents=[common], help="count singular orbit segments"
    )
    p_diag.add_argument(
        "--radius",
        type=int,
        default=None,
        help="geometric cutoff: only flights within this chart-major distance",
    )

    p_report = sub.add_parser(
        "report", parents=[common], help="full complexity report with hard assertions"
    )
    p_report.add_argument(
        "--census-radius",
        type=int,
        default=None,
        help="add the unfolded-cover census up to this radius (square tables)",
    )
    p_report.add_argument(
        "--replay",
        type=Path,
        default=None,
        help="audit a words.txt dump instead of enumerating",
    )

    p_attr = sub.add_parser(
        "attractor", parents=[common], help="nested forward-image layers"
    )
    p_attr.add_argument(
        "--samples", type=int, default=2000, help="Monte Carlo samples per run"
    )
    p_attr.add_argument(
        "--exact-depth",
        type=int,
        default=None,
        help="compute exact cells to this depth (default min(n, 4))",
    )
    return parser


_HANDLERS = {
    "validate": cmd_validate,
    "orbit": cmd_orbit,
    "words": cmd_words,
    "diagonals": cmd_diagonals,
    "report": cmd_report,
    "attractor": cmd_attractor,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    n = args.n if args.n is not None else DEFAULT_N[args.command]
    if n < 0:
        print("error: --n must be >= 0", file=sys.stderr)
        return EXIT_INPUT
    cfg = RunConfig(
        table_path=args.table,
        command=args.command,
        n=n,
        kernel=args.kernel,
        precision=args.precision,
        budget=args.budget,
        seed=args.seed,
        out=args.out,
        svg=args.svg,
        label=getattr(args, "label", None),
        position=getattr(args, "position", None),
        direction=getattr(args, "direction", None),
        samples=getattr(args, "samples", 2000),
        exact_depth=getattr(args, "exact_depth", None),
        radius=getattr(args, "radius", None),
        census_radius=getattr(args, "census_radius", None),
        replay=getattr(args, "replay", None),
    )
    if cfg.precision is not None:
        try:
            set_precision_floor(cfg.precision)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
    try:
        table = _load_table(cfg)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except TableFormatError as exc:
        print(f"error: invalid table: {exc}", file=sys.stderr)
        return EXIT_INPUT

    try:
        return _HANDLERS[cfg.command](cfg, table)
    except BudgetExceeded as exc:
        _write_json(
            cfg.run_dir / "failures.json",
            [{"check": "budget", "message": str(exc)}],
        )
        print(f"error: {exc}; partial outputs kept", file=sys.stderr)
        return EXIT_BUDGET
    except UndecidableSignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ASSERTION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
