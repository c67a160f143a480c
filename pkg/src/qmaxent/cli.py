"""Command-line front end.

Exit codes: 0 success, 1 internal error, 2 infeasible target, 3 malformed
input, 4 reproduction mismatch against the golden values.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import fixtures
from .correlation import (
    C3_SOLVER_TOL,
    c3_details,
    c3_discontinuity_probe,
    density_from_vector,
    ghz_vector,
)
from .errors import InfeasibleError, SolverError, ValidationError
from .faces import lsc_probe
from .inference import DEFAULT_SCHEDULE, SOLVER_TOL, continuity_probe, maxent
from .linalg import DEGENERACY_TOL
from .numrange import (
    ANGLE_RESOLUTION,
    analyze_3x3,
    atlas_to_csv,
    atlas_to_svg,
    boundary_sweep,
    classify_point,
    discontinuity_candidates,
    range_shape,
    write_text,
)
from .observables import ObservableSet, pairs_to_matrix
from .reproduce import REPRODUCIBLE, reproduce
from .states import check_density

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INFEASIBLE = 2
EXIT_MALFORMED = 3
EXIT_MISMATCH = 4
FORMATS = ("json", "csv", "svg")
DEFAULT_SEED = 42


class _Parser(argparse.ArgumentParser):
    """Argument errors count as malformed input."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_MALFORMED, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    input: str | None
    fixture: str | None
    alpha: list | None
    resolution: int
    solver_tol: float
    degeneracy_tol: float
    out_dir: Path
    formats: tuple
    seed: int
    base_angle: float = 0.0

    def __post_init__(self):
        if self.solver_tol <= 0 or self.degeneracy_tol <= 0:
            raise ValidationError("tolerances must be positive")
        if self.resolution < 16:
            raise ValidationError("resolution must be at least 16")
        bad = [f for f in self.formats if f not in FORMATS]
        if bad:
            raise ValidationError(f"unknown output formats {bad}; choose from {list(FORMATS)}")

    def to_json_obj(self) -> dict:
        return {
            "command": self.command,
            "input": self.input,
            "fixture": self.fixture,
            "alpha": self.alpha,
            "resolution": self.resolution,
            "solver_tol": self.solver_tol,
            "degeneracy_tol": self.degeneracy_tol,
            "formats": list(self.formats),
            "seed": self.seed,
        }


# -- input helpers ---------------------------------------------------------------------------


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}") from exc


def _matrix_from_obj(obj: dict) -> np.ndarray:
    try:
        d = int(obj["dim"])
        entries = np.asarray(obj["entries"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"matrix JSON needs 'dim' and 'entries': {exc}") from exc
    if entries.ndim == 2 and entries.shape == (d * d, 2):
        entries = entries.reshape(d, d, 2)
    mat = pairs_to_matrix(entries)
    if mat.shape != (d, d):
        raise ValidationError(f"entries do not form a {d}x{d} matrix")
    return mat


def _vector_from_obj(obj: dict) -> np.ndarray:
    try:
        arr = np.asarray(obj["vector"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"vector JSON needs 'vector': {exc}") from exc
    if arr.ndim == 1:
        return arr.astype(complex)
    if arr.ndim == 2 and arr.shape[1] == 2:
        return arr[:, 0] + 1j * arr[:, 1]
    raise ValidationError("vector must be a list of reals or of [re, im] pairs")


def _load_observables(cfg: RunConfig) -> ObservableSet:
    if cfg.input:
        obj = _read_json(cfg.input)
        if "observables" in obj:
            return ObservableSet.from_json_obj(obj)
        if "entries" in obj:
            return ObservableSet.from_matrix(_matrix_from_obj(obj))
        raise ValidationError("input must be an observable set or a matrix JSON")
    if cfg.fixture:
        return fixtures.observable_fixture(cfg.fixture)
    raise ValidationError("need --input or --fixture")


def _emit(cfg: RunConfig, stem: str, report: dict) -> Path:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.out_dir / f"{stem}.json"
    report = {"config": cfg.to_json_obj(), **report}
    path.write_text(json.dumps(report, indent=1, sort_keys=True, allow_nan=True) + "\n")
    return path


# -- commands --------------------------------------------------------------------------------


def cmd_maxent(cfg: RunConfig) -> int:
    u = _load_observables(cfg)
    if cfg.alpha is None:
        raise ValidationError("maxent needs --alpha")
    sol = maxent(u, cfg.alpha, tol=cfg.solver_tol, degeneracy_tol=cfg.degeneracy_tol)
    out = _emit(cfg, "maxent", {"solution": sol.to_json_obj()})
    print(f"status={sol.status} entropy={sol.entropy:.12g} residual={sol.constraint_residual:.3e} -> {out}")
    return EXIT_OK


def _nr_matrix(cfg: RunConfig) -> tuple[np.ndarray, str]:
    if cfg.fixture and not cfg.input:
        return fixtures.planar_matrix(cfg.fixture), cfg.fixture
    u = _load_observables(cfg)
    if u.r != 2:
        raise ValidationError(f"numerical range needs two observables, got {u.r}")
    return u.as_matrix(), Path(cfg.input).stem if cfg.input else "input"


def cmd_nr(cfg: RunConfig) -> int:
    a, label = _nr_matrix(cfg)
    atlas = boundary_sweep(a, cfg.resolution, cfg.degeneracy_tol)
    cand = discontinuity_candidates(a, cfg.resolution)
    shape, heuristic = range_shape(a, atlas)
    classes = [classify_point(atlas, z).to_json_obj() | {"point": [z.real, z.imag]} for z in cand.points]
    multiply = int(np.sum(atlas.multiplicities > 1)) if atlas.multiplicities is not None else 0
    report = {
        "label": label,
        "shape": shape,
        "shape_heuristic": heuristic,
        "flat_segments": atlas.to_json_obj()["flat_segments"],
        "multiply_generated_fraction": multiply / len(atlas.angles),
        "candidates": cand.to_json_obj(),
        "candidate_classes": classes,
    }
    if a.shape == (3, 3):
        h1 = (a + a.conj().T) / 2
        h2 = (a - a.conj().T) / 2j
        report["analysis_3x3"] = analyze_3x3(h1, h2).to_json_obj()
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    if "json" in cfg.formats:
        _emit(cfg, "nr", report)
    if "csv" in cfg.formats:
        write_text(cfg.out_dir / "atlas.csv", atlas_to_csv(atlas))
    if "svg" in cfg.formats:
        note = "all sampled boundary points multiply generated" if cand.flagged_fraction > 0.25 else ""
        write_text(cfg.out_dir / "atlas.svg", atlas_to_svg(atlas, cand.points, title=f"W({label})", annotation=note))
    if len(cand.points) <= 8:
        pts = "[" + ", ".join(f"{z.real:.6g}{z.imag:+.6g}i" for z in cand.points) + "]"
    else:
        pts = f"{len(cand.points)} points (flagged fraction {cand.flagged_fraction:.3f})"
    print(f"shape={shape} flats={len(atlas.flat_segments)} candidates={pts}")
    for note in cand.notes:
        print(f"note: {note}")
    return EXIT_OK


def _points_curve(obj: dict):
    try:
        pts = [np.asarray(p, dtype=float) for p in obj["points"]]
        target = np.asarray(obj["target"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"probe input needs 'points' and 'target': {exc}") from exc
    if len(pts) < 3:
        raise ValidationError("probe input needs at least three points")
    # the k-th point stands for eps = 1 / (k + 1)
    schedule = [1.0 / (k + 1) for k in range(len(pts))]
    lookup = dict(zip(schedule, pts))

    def curve(e):
        return target if e == 0 else lookup[e]

    return curve, target, schedule


def cmd_probe(cfg: RunConfig) -> int:
    if cfg.input:
        obj = _read_json(cfg.input)
        u = ObservableSet.from_json_obj(obj)
        curve, target, schedule = _points_curve(obj)
        desc = "listed points"
    else:
        if not cfg.fixture:
            raise ValidationError(f"probe needs --input or --fixture (one of {list(fixtures.CURVES)})")
        nc = fixtures.named_curve(cfg.fixture, cfg.base_angle)
        u, curve, target, desc = nc.observables, nc.curve, nc.target, nc.description
        schedule = DEFAULT_SCHEDULE
    cont = continuity_probe(u, target, curve, schedule, description=desc, tol=cfg.solver_tol)
    lsc = lsc_probe(u, curve, schedule, description=desc)
    _emit(cfg, "probe", {"continuity": cont.to_json_obj(), "lsc": lsc.to_json_obj()})
    print(
        f"verdict={cont.verdict} gap={cont.gap_trace_distance:.6g} entropy_jump={cont.entropy_jump:.6g} "
        f"lsc_violated={lsc.lsc_violated} dims={lsc.dims_along[-1]}->{lsc.dim_at_limit}"
    )
    return EXIT_OK


def cmd_c3(cfg: RunConfig) -> int:
    # the 36-observable problem uses a looser default gradient tolerance
    tol = C3_SOLVER_TOL if cfg.solver_tol == SOLVER_TOL else cfg.solver_tol
    if cfg.alpha is not None and not cfg.input and not cfg.fixture:
        if len(cfg.alpha) not in (1, 2):
            raise ValidationError("--alpha for c3 is a GHZ amplitude: re or re,im")
        amp = complex(cfg.alpha[0], cfg.alpha[1] if len(cfg.alpha) == 2 else 0.0)
        probe = c3_discontinuity_probe(amp, tol=tol)
        _emit(cfg, "c3", {"probe": probe.to_json_obj()})
        print(f"C3(psi)={probe.c3_psi:.12g} reference={probe.reference:.12g} C3(phi)={probe.c3_phi} gap={probe.gap:.12g}")
        return EXIT_OK
    if cfg.input:
        obj = _read_json(cfg.input)
        rho = density_from_vector(_vector_from_obj(obj), normalize=True) if "vector" in obj else _matrix_from_obj(obj)
    elif cfg.fixture == "ghz":
        rho = density_from_vector(ghz_vector(np.sqrt(0.5)))
    elif cfg.fixture == "product":
        rho = density_from_vector(np.eye(8)[0])
    else:
        raise ValidationError("c3 needs --input, --alpha, or --fixture ghz|product")
    rho = check_density(rho)
    res = c3_details(rho, tol)
    _emit(cfg, "c3", {"result": res.to_json_obj()})
    print(f"C3={res.value:.12g}")
    return EXIT_OK


def cmd_reproduce(cfg: RunConfig) -> int:
    names = list(REPRODUCIBLE) if cfg.fixture in (None, "all") else [cfg.fixture]
    failed = False
    results = []
    for name in names:
        rep = reproduce(name)
        results.append(rep.to_json_obj())
        print(f"{name}: {'PASS' if rep.passed else 'FAIL'}")
        for c in rep.checks:
            if not c.ok:
                print(f"  mismatch: {c.name}: got {c.value!r}, expected {c.expected!r} (tol {c.tol})")
        failed |= not rep.passed
    _emit(cfg, "reproduce", {"results": results})
    return EXIT_MISMATCH if failed else EXIT_OK


COMMANDS = {
    "maxent": cmd_maxent,
    "nr": cmd_nr,
    "probe": cmd_probe,
    "c3": cmd_c3,
    "reproduce": cmd_reproduce,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qmaxent", description="Maximum-entropy inference, numerical ranges and continuity probes.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    help_text = {
        "maxent": "infer the maximum-entropy state for target expected values",
        "nr": "sweep a numerical range and list discontinuity candidates",
        "probe": "continuity and face-dimension probe along a curve",
        "c3": "irreducible three-party correlation of a three-qubit state",
        "reproduce": f"rerun a reference example: {', '.join(REPRODUCIBLE)} or all",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=help_text[name])
        p.add_argument("--input", help="JSON input (observable set, matrix, state, vector or probe points)")
        p.add_argument("--fixture", help="built-in fixture name")
        p.add_argument("--alpha", help="comma-separated reals")
        p.add_argument("--resolution", type=int, default=ANGLE_RESOLUTION)
        p.add_argument("--solver-tol", type=float, default=SOLVER_TOL)
        p.add_argument("--degeneracy-tol", type=float, default=DEGENERACY_TOL)
        p.add_argument("--out-dir", default="qmaxent-out")
        p.add_argument("--format", default="json,csv,svg", help="subset of json,csv,svg")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        if name == "probe":
            p.add_argument("--base-angle", type=float, default=0.0, help="base point angle for circle curves")
    return parser


def _parse_alpha(text: str | None) -> list | None:
    if text is None:
        return None
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ValidationError(f"--alpha must be comma-separated reals: {exc}") from exc


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig(
            command=args.command,
            input=args.input,
            fixture=args.fixture,
            alpha=_parse_alpha(args.alpha),
            resolution=args.resolution,
            solver_tol=args.solver_tol,
            degeneracy_tol=args.degeneracy_tol,
            out_dir=Path(args.out_dir),
            formats=tuple(f.strip() for f in args.format.split(",") if f.strip()),
            seed=args.seed,
            base_angle=getattr(args, "base_angle", 0.0),
        )
        return COMMANDS[cfg.command](cfg)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValidationError as exc:
        print(f"malformed input: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - report every unexpected failure as internal
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
