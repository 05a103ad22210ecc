"""Batch experiments: sweep specs, trajectory farming, aggregation and CSV output."""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .analysis import FitModel, data_collapse, extrapolate_thermo, fit_scaling
from .circuit import Boundary, CircuitConfig, ConfigError, Model, TrajectoryRecord, run_trajectory
from .entanglement import Bipartition, EntanglementReport
from .oracle import MAX_QUBITS, oracle_entropy, oracle_log_negativity, replay

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

WORKERS_ENV = "NOISYHYBRID_WORKERS"

POINTS_HEADER = (
    "model,boundary,L,p,q,t_noise,depth,n_traj,I_mean,I_stderr,EN_mean,EN_stderr,"
    "SA_mean,SAB_mean,purity_exp_mean"
).split(",")
TRAJ_HEADER = (
    "model,boundary,L,p,q,t_noise,depth,trajectory_index,stream_id,"
    "S_A,S_B,S_AB,I,EN,purity_exp"
).split(",")
FITS_HEADER = "model,boundary,L,p,t_noise,observable,fit_model,a,b,exponent,rss,n_points".split(",")
COLLAPSE_HEADER = "model,boundary,p,t_noise,observable,q_c,nu,cost,n_sizes".split(",")


def fmt(v) -> str:
    """17 significant digits for floats; plain text otherwise."""
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (Model, Boundary, FitModel)):
        return v.value
    return str(v)


class SpecError(ValueError):
    """Invalid experiment spec; the message names the offending line when known."""


# -- ensemble points --


@dataclass(frozen=True)
class EnsemblePoint:
    model: Model
    boundary: Boundary
    L: int
    p: float
    q: float
    t_noise: int
    depth: int
    n_traj: int
    I_mean: float
    I_stderr: float
    EN_mean: float
    EN_stderr: float
    SA_mean: float
    SAB_mean: float
    purity_exp_mean: float

    def row(self) -> list[str]:
        return [fmt(getattr(self, name)) for name in POINTS_HEADER]

    @classmethod
    def from_row(cls, row: dict) -> "EnsemblePoint":
        kw = {}
        for f in fields(cls):
            raw = row[f.name]
            if f.name == "model":
                kw[f.name] = Model(raw)
            elif f.name == "boundary":
                kw[f.name] = Boundary(raw)
            elif f.name in ("L", "t_noise", "depth", "n_traj"):
                kw[f.name] = int(raw)
            else:
                kw[f.name] = float(raw)
        return cls(**kw)

    def observable(self, name: str) -> tuple[float, float]:
        if name == "EN":
            return self.EN_mean, self.EN_stderr
        if name == "I":
            return self.I_mean, self.I_stderr
        raise ValueError(f"unknown observable {name!r} (use EN or I)")


def _cell_key(cfg: CircuitConfig):
    return (cfg.model, cfg.boundary, cfg.n_qubits, cfg.measure_rate, cfg.reset_rate,
            cfg.t_noise if cfg.model is Model.BOUNDARY_PLUS_LATE_BULK else 0,
            cfg.depth, cfg.boundary_resets)


def _mean_stderr(v: np.ndarray) -> tuple[float, float]:
    m = math.fsum(v) / v.size
    if v.size < 2:
        return m, 0.0
    var = math.fsum((v - m) ** 2) / (v.size - 1)
    return m, math.sqrt(var / v.size)


def aggregate(records: Sequence[TrajectoryRecord]) -> EnsemblePoint:
    """Sample means and standard errors, folded in the given (trajectory-index) order."""
    if not records:
        raise ValueError("need at least one trajectory record")
    key = _cell_key(records[0].config)
    if any(_cell_key(r.config) != key for r in records):
        raise ValueError("records come from different circuit configurations")
    cfg = records[0].config
    mi = np.array([r.report.mutual_information for r in records], dtype=float)
    en = np.array([r.report.log_negativity for r in records], dtype=float)
    sa = np.array([r.report.s_a for r in records], dtype=float)
    sab = np.array([r.report.s_ab for r in records], dtype=float)
    pe = np.array([r.report.purity_exponent for r in records], dtype=float)
    i_m, i_se = _mean_stderr(mi)
    e_m, e_se = _mean_stderr(en)
    return EnsemblePoint(
        model=cfg.model,
        boundary=cfg.boundary,
        L=cfg.n_qubits,
        p=float(cfg.measure_rate),
        q=float(cfg.reset_rate),
        t_noise=int(key[5]),
        depth=int(cfg.depth),
        n_traj=len(records),
        I_mean=i_m,
        I_stderr=i_se,
        EN_mean=e_m,
        EN_stderr=e_se,
        SA_mean=_mean_stderr(sa)[0],
        SAB_mean=_mean_stderr(sab)[0],
        purity_exp_mean=_mean_stderr(pe)[0],
    )


def points_to_csv(points: Iterable[EnsemblePoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(POINTS_HEADER)
    for pt in points:
        w.writerow(pt.row())
    return buf.getvalue()


def read_points(path: str | os.PathLike) -> list[EnsemblePoint]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != POINTS_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [EnsemblePoint.from_row(row) for row in reader]


# -- spec --


_SPEC_KEYS = {
    "sweep": {"model", "boundary", "L", "p", "q", "t_noise", "depth", "boundary_resets"},
    "run": {"trajectories", "master_seed", "workers", "out", "write_trajectories", "oracle_check"},
    "analysis": {"q_max", "fit", "observable", "collapse", "qc_range", "nu_range", "plots"},
}


@dataclass
class ExperimentSpec:
    sizes: list[int]
    measure_rates: list[float]
    reset_rates: list[float]
    models: list[Model] = field(default_factory=lambda: [Model.BULK_NOISE])
    boundaries: list[Boundary] = field(default_factory=lambda: [Boundary.PBC])
    t_noise: list[int] = field(default_factory=lambda: [0])
    depth: int | None = None
    boundary_resets: bool = True
    trajectories: int = 300
    master_seed: int = 0
    workers: int | None = None  # None: $NOISYHYBRID_WORKERS, else 1
    out_dir: Path = Path("results")
    write_trajectories: bool = False
    oracle_check: bool = False
    q_max: float = 1 / 8
    fit_models: list[FitModel] = field(default_factory=list)
    observable: str = "EN"
    collapse: bool = False
    qc_range: tuple[float, float] | None = None
    nu_range: tuple[float, float] | None = None
    plots: bool = True

    def __post_init__(self):
        if self.trajectories < 1:
            raise SpecError("trajectories must be >= 1")
        if self.workers is not None and self.workers < 1:
            raise SpecError("workers must be >= 1")
        if self.observable not in ("EN", "I"):
            raise SpecError("observable must be EN or I")
        if self.collapse and (self.qc_range is None or self.nu_range is None):
            raise SpecError("collapse needs qc_range and nu_range")
        if self.oracle_check and max(self.sizes) > MAX_QUBITS:
            raise SpecError(f"oracle_check needs every L <= {MAX_QUBITS}")
        self.cells()  # raises if any sweep cell is an invalid circuit

    def cells(self) -> list[CircuitConfig]:
        out, seen = [], set()
        for model, boundary, L, p, q, tn in itertools.product(
            self.models, self.boundaries, self.sizes, self.measure_rates, self.reset_rates, self.t_noise
        ):
            if Model(model) is Model.BULK_NOISE:
                tn = 0
            try:
                cfg = CircuitConfig(
                    n_qubits=L, measure_rate=p, reset_rate=q, model=model, boundary=boundary,
                    t_noise=tn, depth=self.depth, master_seed=self.master_seed,
                    boundary_resets=self.boundary_resets,
                )
            except ConfigError as exc:
                raise SpecError(f"sweep cell L={L}, p={p}, q={q}, t_noise={tn}: {exc}") from None
            key = _cell_key(cfg)
            if key not in seen:
                seen.add(key)
                out.append(cfg)
        return out


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _key_line(text: str, section: str, key: str) -> int | None:
    current = None
    for lineno, line in enumerate(text.splitlines(), 1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            continue
        if current == section and re.match(rf"\s*{re.escape(key)}\s*=", line):
            return lineno
    return None


def parse_spec(text: str, source: str = "<spec>") -> ExperimentSpec:
    """Parse a TOML experiment spec; unknown sections or keys are errors."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise SpecError(f"{source}: {exc}") from None
    for section, body in doc.items():
        if section not in _SPEC_KEYS or not isinstance(body, dict):
            line = next((i for i, ln in enumerate(text.splitlines(), 1)
                         if re.match(rf"\s*\[{re.escape(section)}\]", ln)), None)
            raise SpecError(f"{source}:{line or '?'}: unknown section [{section}]")
        for key in body:
            if key not in _SPEC_KEYS[section]:
                line = _key_line(text, section, key)
                raise SpecError(f"{source}:{line or '?'}: unknown key '{key}' in [{section}]")
    sweep = doc.get("sweep", {})
    run = doc.get("run", {})
    ana = doc.get("analysis", {})
    for required in ("L", "p", "q"):
        if required not in sweep:
            raise SpecError(f"{source}: [sweep] needs '{required}'")

    def guard(section, key, conv):
        try:
            return conv()
        except (ValueError, TypeError) as exc:
            line = _key_line(text, section, key)
            raise SpecError(f"{source}:{line or '?'}: bad value for '{key}': {exc}") from None

    kw = dict(
        sizes=guard("sweep", "L", lambda: [int(v) for v in _as_list(sweep["L"])]),
        measure_rates=guard("sweep", "p", lambda: [float(v) for v in _as_list(sweep["p"])]),
        reset_rates=guard("sweep", "q", lambda: [float(v) for v in _as_list(sweep["q"])]),
    )
    if "model" in sweep:
        kw["models"] = guard("sweep", "model", lambda: [Model(v) for v in _as_list(sweep["model"])])
    if "boundary" in sweep:
        kw["boundaries"] = guard("sweep", "boundary", lambda: [Boundary(v) for v in _as_list(sweep["boundary"])])
    if "t_noise" in sweep:
        kw["t_noise"] = guard("sweep", "t_noise", lambda: [int(v) for v in _as_list(sweep["t_noise"])])
    if "depth" in sweep:
        kw["depth"] = guard("sweep", "depth", lambda: int(sweep["depth"]))
    if "boundary_resets" in sweep:
        kw["boundary_resets"] = bool(sweep["boundary_resets"])
    for key, conv in (("trajectories", int), ("master_seed", int), ("workers", int),
                      ("write_trajectories", bool), ("oracle_check", bool)):
        if key in run:
            kw[key] = guard("run", key, lambda c=conv, k=key: c(run[k]))
    if "out" in run:
        kw["out_dir"] = Path(run["out"])
    if "q_max" in ana:
        kw["q_max"] = guard("analysis", "q_max", lambda: float(ana["q_max"]))
    if "fit" in ana:
        kw["fit_models"] = guard("analysis", "fit", lambda: [FitModel(v) for v in _as_list(ana["fit"])])
    for key in ("observable", "collapse", "plots"):
        if key in ana:
            kw[key] = ana[key]
    for key in ("qc_range", "nu_range"):
        if key in ana:
            kw[key] = guard("analysis", key, lambda k=key: tuple(float(v) for v in ana[k]))
    try:
        return ExperimentSpec(**kw)
    except SpecError as exc:
        line = None
        if str(exc).startswith("sweep cell"):
            line = next((i for i, ln in enumerate(text.splitlines(), 1)
                         if re.match(r"\s*\[sweep\]", ln)), None)
        where = f"{source}:{line}" if line else source
        raise SpecError(f"{where}: {exc}") from None


def load_spec(path: str | os.PathLike) -> ExperimentSpec:
    p = Path(path)
    return parse_spec(p.read_text(), source=str(p))


# -- execution --


def verify_against_oracle(record: TrajectoryRecord, tol: float = 1e-9) -> list[str]:
    """Replay the event log densely; returns mismatch descriptions (empty if all agree)."""
    if record.events is None:
        raise ValueError("record carries no event log")
    L = record.config.n_qubits
    b = Bipartition.half_chain(L)
    st = replay(record.events, L)
    a, bb = list(b.region_a), list(b.region_b)
    s_a = oracle_entropy(st, a)
    s_b = oracle_entropy(st, bb)
    s_ab = oracle_entropy(st, a + bb)
    dense = {
        "s_a": s_a,
        "s_b": s_b,
        "s_ab": s_ab,
        "mutual_information": s_a + s_b - s_ab,
        "log_negativity": oracle_log_negativity(st, bb),
    }
    bad = []
    for name, v in dense.items():
        mine = getattr(record.report, name)
        if abs(mine - v) > tol:
            bad.append(f"{name}: tableau {mine} vs dense {v:.12g}")
    purity_exp = math.log2(st.purity())
    if round(purity_exp) != record.report.purity_exponent or abs(purity_exp - round(purity_exp)) > 1e-9:
        bad.append(f"purity exponent: tableau {record.report.purity_exponent} vs dense {purity_exp:.12g}")
    return bad


def _run_task(args):
    cfg, oracle_check = args
    rec = run_trajectory(cfg, record_events=oracle_check)
    mismatches = verify_against_oracle(rec) if oracle_check else []
    r = rec.report
    return (
        (r.s_a, r.s_b, r.s_ab, r.mutual_information, r.log_negativity, r.purity_exponent),
        rec.stream_id,
        mismatches,
    )


class OracleMismatch(RuntimeError):
    pass


def run_records(spec: ExperimentSpec, workers: int | None = None) -> list[list[TrajectoryRecord]]:
    """All trajectory records, grouped per sweep cell, in trajectory-index order."""
    cells = spec.cells()
    T = spec.trajectories
    tasks = [
        (cfg.with_index(c * T + t), spec.oracle_check)
        for c, cfg in enumerate(cells)
        for t in range(T)
    ]
    if workers is None:
        workers = spec.workers if spec.workers is not None else default_workers()
    if workers < 1:
        raise SpecError("workers must be >= 1")
    log.info("%d cells x %d trajectories on %d worker(s)", len(cells), T, workers)
    if workers == 1:
        results = map(_run_task, tasks)
        results = list(results)
    else:
        chunk = max(1, len(tasks) // (workers * 16))
        with ProcessPoolExecutor(max_workers=workers) as ex:
            # map preserves submission order, so the fold below is schedule independent
            results = list(ex.map(_run_task, tasks, chunksize=chunk))
    grouped: list[list[TrajectoryRecord]] = [[] for _ in cells]
    failures = []
    for (cfg, _), (vals, stream_id, mismatches) in zip(tasks, results):
        c = cfg.trajectory_index // T
        grouped[c].append(TrajectoryRecord(cfg, EntanglementReport(*vals), stream_id))
        if mismatches:
            failures.append(f"trajectory {cfg.trajectory_index}: " + "; ".join(mismatches))
    if failures:
        raise OracleMismatch(f"{len(failures)} trajectories disagree with the dense oracle:\n"
                             + "\n".join(failures[:20]))
    return grouped


def _traj_rows(grouped):
    for recs in grouped:
        for r in recs:
            c = r.config
            rep = r.report
            yield [
                fmt(c.model), fmt(c.boundary), c.n_qubits, fmt(float(c.measure_rate)),
                fmt(float(c.reset_rate)), c.t_noise if c.model is Model.BOUNDARY_PLUS_LATE_BULK else 0,
                c.depth, c.trajectory_index, r.stream_id, rep.s_a, rep.s_b, rep.s_ab,
                rep.mutual_information, fmt(float(rep.log_negativity)), rep.purity_exponent,
            ]


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(row)


def _series_key(pt: EnsemblePoint):
    return (pt.model, pt.boundary, pt.p, pt.t_noise)


def fit_rows(points: Sequence[EnsemblePoint], models: Sequence[FitModel], observable: str,
             q_max: float | None) -> list[list[str]]:
    """Scaling fits of the observable against q, per size and for the 1/L-extrapolated limit."""
    rows = []
    series: dict = {}
    for pt in points:
        series.setdefault(_series_key(pt), []).append(pt)
    for key, pts in series.items():
        model, boundary, p, tn = key
        by_size: dict[int, list[EnsemblePoint]] = {}
        for pt in pts:
            by_size.setdefault(pt.L, []).append(pt)
        curves = {}
        for L, group in sorted(by_size.items()):
            group = sorted((g for g in group if g.q > 0), key=lambda g: g.q)
            q = np.array([g.q for g in group])
            v = np.array([g.observable(observable) for g in group]).reshape(-1, 2)
            curves[str(L)] = (q, v[:, 0], v[:, 1])
        if len(by_size) >= 2:
            qs = sorted({pt.q for pt in pts if pt.q > 0})
            qq, vv, ss = [], [], []
            for qv in qs:
                at = [pt for pt in pts if pt.q == qv]
                if len({pt.L for pt in at}) < 2:
                    continue
                th = extrapolate_thermo([pt.L for pt in at], [pt.observable(observable)[0] for pt in at],
                                        [pt.observable(observable)[1] for pt in at])
                qq.append(qv)
                vv.append(th.s_inf)
                ss.append(th.s_inf_stderr)
            curves["inf"] = (np.array(qq), np.array(vv), np.array(ss))
        for label, (q, v, se) in curves.items():
            for fm in models:
                try:
                    fr = fit_scaling(q, v, fm, stderr=se, q_max=q_max)
                except ValueError as exc:
                    log.info("skipping %s fit for %s L=%s: %s", fm.value, key, label, exc)
                    continue
                rows.append([
                    fmt(model), fmt(boundary), label, fmt(p), tn, observable, fm.value,
                    fmt(fr.a), fmt(fr.b), "" if fr.exponent is None else fmt(fr.exponent),
                    fmt(fr.rss), fr.q.size,
                ])
    return rows


def collapse_rows(points: Sequence[EnsemblePoint], observable: str, qc_range, nu_range) -> list[list[str]]:
    rows = []
    series: dict = {}
    for pt in points:
        series.setdefault(_series_key(pt), []).append(pt)
    for key, pts in series.items():
        if len({pt.L for pt in pts}) < 3:
            continue
        L = [pt.L for pt in pts]
        q = [pt.q for pt in pts]
        g = [pt.observable(observable)[0] for pt in pts]
        res = data_collapse(L, q, g, qc_range, nu_range)
        model, boundary, p, tn = key
        rows.append([fmt(model), fmt(boundary), fmt(p), tn, observable, fmt(res.q_c), fmt(res.nu),
                     fmt(res.cost), len(set(L))])
    return rows


def run_experiment(spec: ExperimentSpec, workers: int | None = None) -> list[EnsemblePoint]:
    """Run the sweep and write ``points.csv`` plus the optional tables and plots."""
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out} is not writable")
    grouped = run_records(spec, workers)
    points = [aggregate(recs) for recs in grouped]
    (out / "points.csv").write_text(points_to_csv(points))
    if spec.write_trajectories:
        _write_csv(out / "trajectories.csv", TRAJ_HEADER, _traj_rows(grouped))
    if spec.fit_models:
        _write_csv(out / "fits.csv", FITS_HEADER,
                   fit_rows(points, spec.fit_models, spec.observable, spec.q_max))
    if spec.collapse:
        _write_csv(out / "collapse.csv", COLLAPSE_HEADER,
                   collapse_rows(points, spec.observable, spec.qc_range, spec.nu_range))
    if spec.plots:
        from .plots import plot_vs_l, plot_vs_q

        plot_vs_q(points, out / "entanglement_vs_q.svg")
        plot_vs_l(points, out / "entanglement_vs_L.svg")
    return points


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise SpecError(f"{WORKERS_ENV}={raw!r} is not an integer") from None
    if n < 1:
        raise SpecError(f"{WORKERS_ENV} must be >= 1")
    return n
