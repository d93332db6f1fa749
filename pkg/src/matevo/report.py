"""Analysis pipeline over a (t, x) grid and its JSON / CSV reports.

All per-node work may run on a thread pool; results are collected in grid
order and serialised by a single emitter, so reports do not depend on the
number of workers.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import Executor, ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from . import __version__
from .dsl import ResponseModel
from .evolution import (MIXED, SMOOTH_AGING, SMOOTH_REMODELING, classify_evolution,
                        evolution_from_linearization, x_evolution_from_linearization)
from .jets import linearize
from .morphogenesis import (MORPHOGENESIS, NO_MORPHOGENESIS, STENCIL, UNDETERMINED,
                            NoDerivativeError, aligned_frames, classify_morphogenesis,
                            morphogenesis_fibre, morphogenesis_fibre_at_x, symmetry_frame_field)
from .numkernel import DEFAULT_REL_TOL
from .scenarios import DEFAULT_DET_FLOOR, sample_deformations
from .symmetry import profile_from_algebras, symmetry_from_linearization

SCHEMA_ID = "matevo-report/1"
SYMMETRY_SCHEMA_ID = "matevo-symmetry/1"
CSV_COLUMNS = ("t", "x1", "x2", "x3", "sym_dim", "evo_dim", "evo_base_dim",
               "morph_dim", "morph_base_dim", "flags")
MIN_SAMPLES = 26


class GridError(ValueError):
    """Invalid grid or sampling configuration."""


@dataclass(frozen=True)
class GridSpec:
    t_min: float = -1.0
    t_max: float = 1.0
    t_steps: int = 41
    x: tuple[float, float, float] = (0.0, 0.0, 0.0)
    x1_range: tuple[float, float, int] | None = None  # full-body mode, x2 = x3 = 0
    seed: int = 42
    samples: int = 40
    rel_tol: float = DEFAULT_REL_TOL
    det_floor: float = DEFAULT_DET_FLOOR
    frame_derivative: str = STENCIL

    def validate(self) -> "GridSpec":
        if not all(math.isfinite(v) for v in (self.t_min, self.t_max, *self.x)):
            raise GridError("grid bounds must be finite")
        if not self.t_min < self.t_max:
            raise GridError(f"t_min ({self.t_min}) must be below t_max ({self.t_max})")
        if self.t_steps < 2:
            raise GridError("t_steps must be at least 2")
        if self.samples < MIN_SAMPLES:
            raise GridError(f"need at least {MIN_SAMPLES} samples, got {self.samples}")
        if not self.rel_tol > 0:
            raise GridError("rel_tol must be positive")
        if not 0 < self.det_floor < 1:
            raise GridError("det floor must lie in (0, 1)")
        if self.x1_range is not None:
            lo, hi, n = self.x1_range
            if not (math.isfinite(lo) and math.isfinite(hi)) or n < 1 or (n > 1 and not lo < hi):
                raise GridError(f"bad x1 range {self.x1_range}")
        return self

    @property
    def full_body(self) -> bool:
        return self.x1_range is not None

    def times(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.t_steps)

    def positions(self) -> list[tuple[float, float, float]]:
        if self.x1_range is None:
            return [tuple(float(v) for v in self.x)]
        lo, hi, n = self.x1_range
        return [(float(v), 0.0, 0.0) for v in np.linspace(lo, hi, int(n))]

    def deformations(self) -> np.ndarray:
        return sample_deformations(self.seed, self.samples, self.det_floor)

    def provenance(self) -> dict[str, Any]:
        d = asdict(self)
        d["x"] = list(d["x"])
        if d["x1_range"] is not None:
            d["x1_range"] = list(d["x1_range"])
        return d


@dataclass
class ColumnResult:
    """Everything computed along one particle's time line."""
    x: tuple[float, float, float]
    profile: Any
    x_evolution: list
    body_evolution: list
    x_morphogenesis: list
    body_morphogenesis: list
    evolution_verdict: Any
    morphogenesis_verdict: Any
    body_morphogenesis_verdict: Any


def _map(pool: Executor | None, fn, items):
    return list(pool.map(fn, items)) if pool is not None else [fn(i) for i in items]


def analyze_column(model: ResponseModel, grid: GridSpec, x, samples: np.ndarray,
                   pool: Executor | None = None) -> ColumnResult:
    ts = grid.times()
    tol = grid.rel_tol

    def node(t):
        lin = linearize(model, t, x, samples)
        return (lin, symmetry_from_linearization(lin, t, x, tol),
                x_evolution_from_linearization(lin, t, x, tol),
                evolution_from_linearization(lin, t, x, tol))

    results = _map(pool, node, ts)
    lins = [r[0] for r in results]
    profile = profile_from_algebras(ts, x, [r[1] for r in results])
    fields = symmetry_frame_field(model, ts, x, samples, tol, profile=profile,
                                  derivative=grid.frame_derivative, body=True, pool=pool)
    jumps = set(profile.jump_nodes)
    owner = {}
    for f in fields:
        for i in range(f.segment.start, f.segment.stop):
            owner[i] = f

    def morph(i):
        if i in jumps:
            return None, None
        try:
            return (morphogenesis_fibre_at_x(model, owner[i], i, samples, tol, lins[i]),
                    morphogenesis_fibre(model, owner[i], i, samples, tol, lins[i]))
        except NoDerivativeError:
            return None, None

    morphs = _map(pool, morph, range(len(ts)))
    x_morph = [m[0] for m in morphs]
    body_morph = [m[1] for m in morphs]
    x_evo = [r[2] for r in results]
    return ColumnResult(
        tuple(float(v) for v in x), profile, x_evo, [r[3] for r in results], x_morph, body_morph,
        classify_evolution(x_evo), classify_morphogenesis(profile, x_morph),
        classify_morphogenesis(profile, body_morph))


def run_analysis(model: ResponseModel, grid: GridSpec, jobs: int = 1) -> list[ColumnResult]:
    grid.validate()
    samples = grid.deformations()
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            return [analyze_column(model, grid, x, samples, pool) for x in grid.positions()]
    return [analyze_column(model, grid, x, samples) for x in grid.positions()]


def _num(v: float) -> float | None:
    v = float(v)
    return v if math.isfinite(v) else None


def _margin(fibre) -> list[float | None] | None:
    return None if fibre is None else [_num(v) for v in fibre.basis.margin()]


def _dims(fibre) -> tuple[int | None, int | None]:
    return (None, None) if fibre is None else (fibre.dim, fibre.base_dim)


def _node_flags(column: ColumnResult, i: int) -> str:
    flags = []
    if i in column.profile.jump_nodes:
        flags.append("jump")
    elif column.x_morphogenesis[i] is None:
        flags.append("no-derivative")
    if any(i in pair for pair in column.profile.boundaries):
        flags.append("boundary")
    return "|".join(flags)


def _aggregate_evolution(verdicts: list[str]) -> str:
    if all(v == SMOOTH_REMODELING for v in verdicts):
        return SMOOTH_REMODELING
    if all(v == SMOOTH_AGING for v in verdicts):
        return SMOOTH_AGING
    return MIXED


def _aggregate_morphogenesis(verdicts: list[str]) -> str:
    if MORPHOGENESIS in verdicts:
        return MORPHOGENESIS
    if UNDETERMINED in verdicts:
        return UNDETERMINED
    return NO_MORPHOGENESIS


def build_report(model: ResponseModel, grid: GridSpec, columns: list[ColumnResult]) -> dict[str, Any]:
    """Assemble the JSON-ready report (plain dicts, lists and numbers)."""
    nodes, body_nodes, diagnostics, profiles, per_x = [], [], [], [], []
    for col in columns:
        ts = col.profile.ts
        for i, t in enumerate(ts):
            evo_dim, evo_base = _dims(col.x_evolution[i])
            morph_dim, morph_base = _dims(col.x_morphogenesis[i])
            nodes.append({"t": float(t), "x1": col.x[0], "x2": col.x[1], "x3": col.x[2],
                          "sym_dim": col.profile.dims[i], "evo_dim": evo_dim,
                          "evo_base_dim": evo_base, "morph_dim": morph_dim,
                          "morph_base_dim": morph_base, "flags": _node_flags(col, i)})
            bevo_dim, bevo_base = _dims(col.body_evolution[i])
            bmorph_dim, bmorph_base = _dims(col.body_morphogenesis[i])
            body_nodes.append({"t": float(t), "x1": col.x[0], "x2": col.x[1], "x3": col.x[2],
                               "evo_dim": bevo_dim, "evo_base_dim": bevo_base,
                               "morph_dim": bmorph_dim, "morph_base_dim": bmorph_base})
            diagnostics.append({"t": float(t), "x1": col.x[0],
                                "sym_margin": _margin(col.profile.algebras[i]),
                                "evo_margin": _margin(col.x_evolution[i]),
                                "morph_margin": _margin(col.x_morphogenesis[i])})
        profiles.append({
            "x": list(col.x),
            "segments": [{"start": s.start, "stop": s.stop, "dim": s.dim,
                          "t_start": float(ts[s.start]), "t_end": float(ts[s.stop - 1])}
                         for s in col.profile.segments],
            "boundaries": [list(b) for b in col.profile.boundaries],
            "jump_nodes": [{"index": i, "t": float(ts[i])} for i in col.profile.jump_nodes],
        })
        per_x.append({"x": list(col.x),
                      "evolution": col.evolution_verdict.verdict,
                      "morphogenesis": col.morphogenesis_verdict.verdict,
                      "body_morphogenesis": col.body_morphogenesis_verdict.verdict,
                      "reasons": list(col.morphogenesis_verdict.reasons),
                      "warnings": list(col.morphogenesis_verdict.warnings)})

    body_evo_dims = {n["evo_dim"] for n in body_nodes}
    morph_bases = [n["morph_base_dim"] for n in nodes if n["morph_base_dim"] is not None]
    conditions = {
        "i_body_evolution_dim_constant": len(body_evo_dims) == 1,
        "ii_some_node_aging": any(n["evo_base_dim"] == 0 for n in nodes),
        "iii_morphogenesis_base_dim_one": bool(morph_bases) and all(b == 1 for b in morph_bases),
    }
    warnings = sorted({w for p in per_x for w in p["warnings"]})
    return {
        "schema": SCHEMA_ID,
        "tool": {"name": "matevo", "version": __version__},
        "provenance": {"model": {"name": model.name, "text": model.to_text(), "source": model.source},
                       "grid": grid.provenance()},
        "mode": "body" if grid.full_body else "particle",
        "nodes": nodes,
        "body_nodes": body_nodes,
        "diagnostics": diagnostics,
        "profiles": profiles,
        "verdicts": {
            "evolution": _aggregate_evolution([p["evolution"] for p in per_x]),
            "morphogenesis": _aggregate_morphogenesis([p["morphogenesis"] for p in per_x]),
            "body_morphogenesis": _aggregate_morphogenesis([p["body_morphogenesis"] for p in per_x]),
            "per_x": per_x,
            "conditions": conditions,
            "warnings": warnings,
        },
    }


def analyze(model: ResponseModel, grid: GridSpec, jobs: int = 1) -> dict[str, Any]:
    return build_report(model, grid, run_analysis(model, grid, jobs))


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_json(report: dict[str, Any]) -> str:
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def write_csv(rows: list[dict[str, Any]], columns=CSV_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r[c]) for c in columns])
    return buf.getvalue()


def read_csv(text: str) -> list[dict[str, Any]]:
    """Parse a node-table CSV back into typed records (empty cells become None)."""
    rows = []
    for r in csv.DictReader(io.StringIO(text)):
        rec: dict[str, Any] = {}
        for k, v in r.items():
            if k == "flags":
                rec[k] = v
            elif v == "":
                rec[k] = None
            elif k in ("t", "x1", "x2", "x3"):
                rec[k] = float(v)
            else:
                rec[k] = int(v)
        rows.append(rec)
    return rows


def symmetry_table(model: ResponseModel, grid: GridSpec, jobs: int = 1) -> dict[str, Any]:
    """Per-node symmetry dimension and aligned basis.

    Each basis element is flattened row-major and the elements are
    concatenated, so ``basis`` has ``9 * sym_dim`` entries.
    """
    grid.validate()
    samples = grid.deformations()
    rows = []

    def node(args):
        t, x = args
        return symmetry_from_linearization(linearize(model, t, x, samples), t, x, grid.rel_tol)

    ts = grid.times()
    pool = ThreadPoolExecutor(jobs) if jobs > 1 else None
    try:
        for x in grid.positions():
            profile = profile_from_algebras(ts, x, _map(pool, node, [(t, x) for t in ts]))
            for seg, frames in zip(profile.segments, aligned_frames(profile)):
                for j, i in enumerate(range(seg.start, seg.stop)):
                    rows.append({"t": float(ts[i]), "x1": float(x[0]), "x2": float(x[1]),
                                 "x3": float(x[2]), "sym_dim": seg.dim,
                                 "basis": [float(v) for v in frames[j].T.ravel()]})
    finally:
        if pool is not None:
            pool.shutdown()
    return {"schema": SYMMETRY_SCHEMA_ID,
            "tool": {"name": "matevo", "version": __version__},
            "provenance": {"model": {"name": model.name, "text": model.to_text(), "source": model.source},
                           "grid": grid.provenance()},
            "nodes": rows}


def symmetry_csv(table: dict[str, Any]) -> str:
    rows = [dict(r, basis=" ".join(repr(v) for v in r["basis"])) for r in table["nodes"]]
    return write_csv(rows, ("t", "x1", "x2", "x3", "sym_dim", "basis"))


def report_schema() -> dict[str, Any]:
    """The JSON schema that every analysis report validates against."""
    from importlib.resources import files
    return json.loads(files("matevo").joinpath("report.schema.json").read_text())
