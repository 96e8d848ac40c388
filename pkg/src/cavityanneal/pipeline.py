"""Staged experiment runner: mode selection, programming, spectrum, anneal,
readout and the Hopfield bounds, with every emitted file listed in a manifest.

Energies are in units of J and lengths in units of the reference wavelength.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import plotting
from .annealer import AnnealSchedule, evolve
from .cavity_optics import CavityGeometry, HGMode, LatticePose, reference_spacing, wannier_density
from .config import ExperimentConfig
from .coupling_synthesis import ModeBasis, program_matrix, pump_parameters
from .errors import StageError, ValidationError
from .hopfield import HopfieldProblem, brute_force_ground, energy_report, nu_table, problem_matrix
from .io import Manifest, content_hash, read_json, write_csv, write_json, write_triplets
from .mode_search import CandidatePool, SelectionResult, build_pool, pose_scan, uniformity_filter
from .readout import add_noise, intensities, invert_intensities, probe_settings
from .spin_system import build_basis, build_hamiltonian, eigenpairs, low_spectrum, min_gap

log = logging.getLogger(__name__)

STAGES = ("select-modes", "synthesize", "spectrum", "anneal", "readout", "hopfield-bounds")
# stages each stage needs results from
REQUIRES = {
    "select-modes": (),
    "synthesize": ("select-modes",),
    "spectrum": ("select-modes", "synthesize"),
    "anneal": ("select-modes", "synthesize"),
    "readout": ("select-modes", "synthesize", "anneal"),
    "hopfield-bounds": (),
}


@dataclass
class RunContext:
    config: ExperimentConfig
    out: Path
    threads: int = 1
    reuse: bool = False
    manifest: Manifest = None
    config_hash: str = ""
    results: dict = field(default_factory=dict)

    def __post_init__(self):
        self.out = Path(self.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.manifest = Manifest(self.out)
        self.config_hash = config_hash(self.config)

    def meta(self, **units) -> dict:
        return {**units, "config": self.config_hash}

    def csv(self, name, columns, rows, **units):
        return self.manifest.add(write_csv(self.out / name, columns, rows, self.meta(**units)))

    def json(self, name, payload):
        return self.manifest.add(write_json(self.out / name, {"config": self.config_hash, **payload}))

    def figure(self, name, fig):
        if self.config.runtime.figures:
            self.manifest.add(plotting.save(fig, self.out / "figures" / name))
        else:
            plotting.plt.close(fig)


def config_hash(cfg: ExperimentConfig) -> str:
    """Hash of everything that can change numbers; output path and thread count excluded."""
    d = cfg.to_dict()
    d["runtime"] = {k: v for k, v in d["runtime"].items() if k not in ("out", "threads")}
    return content_hash(json.dumps(d, sort_keys=True))


def _problems(cfg: ExperimentConfig) -> dict[str, HopfieldProblem]:
    return {name: HopfieldProblem(np.array(cfg.problem.memories), np.array(p), cfg.problem.nu)
            for name, p in cfg.problem.probes.items()}


def _geometry(cfg):
    g = cfg.geometry
    return CavityGeometry(g.length, g.curvature_ratio, g.standing_wave)


def _poses(cfg, geometry) -> list[LatticePose]:
    d = reference_spacing(geometry, cfg.lattice.spacing_factor)
    poses = []
    for angle in cfg.search.angles:
        for off in cfg.search.offsets:
            pose = LatticePose(cfg.lattice.n_sites, d, tuple(o * d for o in off), float(angle))
            pose.check_inside(geometry)
            poses.append(pose)
    return poses


def _pool_builder(cfg, geometry):
    g = cfg.geometry
    wannier = wannier_density(cfg.lattice.depth, reference_spacing(geometry, cfg.lattice.spacing_factor))

    def build(pose):
        return build_pool(geometry, pose, wannier, range(g.n_min, g.n_max + 1), g.l_values, g.m_values)
    return build


# --- stages -------------------------------------------------------------------

def stage_select(ctx: RunContext) -> None:
    cfg = ctx.config
    path = ctx.out / "selection.json"
    if ctx.reuse and path.exists():
        data = read_json(path)
        vectors = np.array(data["vectors"])
        labels = [tuple(x) for x in data["selection"]["labels"]]
        log.info("reusing mode selection from %s", path)
        ctx.manifest.add(path)
        ctx.results["basis"] = ModeBasis.from_vectors(vectors, labels)
        ctx.results["selection"] = data["selection"]
        return
    geometry = _geometry(cfg)
    builder = _pool_builder(cfg, geometry)
    res: SelectionResult = pose_scan(_poses(cfg, geometry), builder, cfg.n_modes,
                                     cfg.search.passes, workers=ctx.threads)
    pool: CandidatePool = builder(res.pose)
    vectors = pool.vectors[res.indices]
    ok, score = uniformity_filter(res, cfg.search.max_ratio)
    selection = res.to_dict()
    selection["uniform"] = ok
    ctx.json("selection.json", {"selection": selection, "vectors": vectors,
                                "pool_size": pool.size, "units": "lengths in reference wavelengths"})
    ctx.results["basis"] = ModeBasis.from_vectors(vectors, [tuple(x) for x in res.labels])
    ctx.results["selection"] = selection
    if not ok:
        log.warning("selected norms span %.1f, above the uniformity limit %.1f", score, cfg.search.max_ratio)
    mode = HGMode(*res.labels[0], geometry)
    ctx.figure("lattice_mode.png", plotting.lattice_figure(geometry, res.pose, mode))


def stage_synthesize(ctx: RunContext) -> None:
    cfg = ctx.config
    basis: ModeBasis = ctx.results["basis"]
    programs = {}
    for name, prob in _problems(cfg).items():
        a = problem_matrix(prob)
        prog = program_matrix(a, basis, cfg.program.strength, cfg.program.step)
        pump = pump_parameters(prog.quantized, cfg.program.kappa)
        programs[name] = prog
        ctx.json(f"program_{name}.json", {
            "probe": prob.probe, "nu": prob.nu, **prog.to_dict(), "pump": pump.to_dict(),
            "max_deviation": prog.max_deviation, "condition_number": basis.condition_number,
        })
        rows = [(k, *_lab(lab), prog.inputs[k] / prog.strength, prog.scaled_inputs[k],
                 pump.strength[k], pump.detuning[k])
                for k, lab in enumerate(basis.labels)]
        ctx.csv(f"inputs_{name}.csv", ["index", "n", "l", "m", "f_over_zeta", "f_tilde_over_zeta",
                                       "eta", "detuning"], rows,
                units="f/zeta dimensionless, eta and detuning in J")
        ctx.figure(f"inputs_{name}.png",
                   plotting.inputs_figure(basis.labels, prog.scaled_inputs, pump.strength))
    ctx.results["programs"] = programs


def _target(prob: HopfieldProblem, n_up: int) -> np.ndarray:
    return brute_force_ground(prob, n_up)[0]


def stage_spectrum(ctx: RunContext) -> None:
    cfg = ctx.config
    sector = build_basis(cfg.lattice.n_sites, cfg.lattice.n_up)
    zetas = np.linspace(0.0, cfg.spectrum.zeta_max, cfg.spectrum.points)
    k = min(cfg.spectrum.levels, sector.dim)
    summary = {}
    for name, prob in _problems(cfg).items():
        prog = ctx.results["programs"][name]
        h = build_hamiltonian(sector, 1.0, cfg.schedule.zeta_final, prog.recovered, cfg.lattice.periodic)
        curves = low_spectrum(h, k, zetas)
        target = _target(prob, cfg.lattice.n_up)
        ov = curves.overlaps(sector.index(target))[:, 0]
        rows = [(z, *e, g, o) for z, e, g, o in zip(zetas, curves.energies, curves.gaps, ov)]
        ctx.csv(f"spectrum_{name}.csv",
                ["zeta_over_J", *[f"e{i}" for i in range(k)], "gap", "ground_target_overlap"],
                rows, units="energies in J")
        z_star, delta = min_gap(h, zetas)
        summary[name] = {"min_gap": delta, "min_gap_zeta": z_star,
                         "ground_overlap_final": float(ov[-1]), "target": target}
        ctx.manifest.add(write_triplets(ctx.out / f"hamiltonian_{name}.txt",
                                        h.matrix(cfg.schedule.zeta_final),
                                        ctx.meta(units="J", zeta=cfg.schedule.zeta_final)))
        ctx.figure(f"spectrum_{name}.png",
                   plotting.spectrum_figure(zetas, curves.energies, ov, (delta, z_star)))
    ctx.json("spectrum_summary.json", {"units": "J", "recalls": summary})


def _anneal_one(args):
    h, schedule, target, cfg = args
    return evolve(h, schedule, target=target, method=cfg.schedule.method,
                  rtol=cfg.runtime.rtol, atol=cfg.runtime.atol)


def stage_anneal(ctx: RunContext) -> None:
    cfg = ctx.config
    sector = build_basis(cfg.lattice.n_sites, cfg.lattice.n_up)
    jobs, keys = [], []
    for name, prob in _problems(cfg).items():
        prog = ctx.results["programs"][name]
        h = build_hamiltonian(sector, cfg.schedule.tunneling, cfg.schedule.zeta_final,
                              prog.recovered, cfg.lattice.periodic)
        target = _target(prob, cfg.lattice.n_up)
        for tau in cfg.schedule.taus:
            sched = AnnealSchedule(float(tau), cfg.schedule.zeta_final, samples=cfg.schedule.samples,
                                   tunneling=cfg.schedule.tunneling)
            jobs.append((h, sched, target, cfg))
            keys.append((name, float(tau), target))
    if ctx.threads > 1:
        with ThreadPoolExecutor(ctx.threads) as ex:
            records = list(ex.map(_anneal_one, jobs))
    else:
        records = [_anneal_one(j) for j in jobs]

    summary, finals = {}, {}
    for (name, tau, target), rec in zip(keys, records):
        N = sector.n_sites
        rows = [(t, *m, g, o) for t, m, g, o in
                zip(rec.times * cfg.schedule.tunneling, rec.magnetization, rec.ground_overlap, rec.target_overlap)]
        ctx.csv(f"trajectory_{name}_tau{tau:g}.csv",
                ["tJ", *[f"sz{i + 1}" for i in range(N)], "gs_overlap", "target_overlap"],
                rows, units="time in 1/J")
        psi = rec.final_state / np.linalg.norm(rec.final_state)
        overlaps = {f"memory{q + 1}": float(abs(psi[sector.index(m)]) ** 2)
                    for q, m in enumerate(np.array(cfg.problem.memories))}
        winner = max(overlaps, key=overlaps.get)
        summary.setdefault(name, []).append({
            "tau": tau, "final_target_overlap": float(rec.target_overlap[-1]),
            "final_ground_overlap": float(rec.ground_overlap[-1]),
            "final_magnetization": rec.magnetization[-1],
            "signs_match_target": bool(np.all(np.sign(rec.magnetization[-1]) == target)),
            "memory_overlaps": overlaps, "winner": winner, "norm_drift": rec.norm_drift,
        })
        finals.setdefault(name, {})[tau] = rec
    for name, runs in finals.items():
        ctx.figure(f"overlap_{name}.png", plotting.overlap_figure(
            {tau: (r.times, r.ground_overlap) for tau, r in runs.items()}))
        longest = runs[max(runs)]
        ctx.figure(f"magnetization_{name}.png", plotting.magnetization_figure(
            longest.times * cfg.schedule.tunneling, longest.magnetization,
            _target(_problems(cfg)[name], cfg.lattice.n_up)))
    ctx.json("anneal_summary.json", {"units": "time in 1/J", "method": cfg.schedule.method,
                                     "recalls": summary})
    ctx.results["anneal"] = {name: runs[max(runs)].final_state for name, runs in finals.items()}


def stage_readout(ctx: RunContext) -> None:
    cfg = ctx.config
    basis: ModeBasis = ctx.results["basis"]
    sector = build_basis(cfg.lattice.n_sites, cfg.lattice.n_up)
    vectors = np.array([_vector(m) for m in basis.matrices])
    pump = probe_settings(basis.size, cfg.program.kappa, cfg.readout.probe_strength)
    rng = np.random.default_rng(cfg.runtime.seed)
    labels = basis.labels
    mem_int = {}
    for q, m in enumerate(np.array(cfg.problem.memories)):
        e = np.zeros(sector.dim)
        e[sector.index(m)] = 1.0
        mem_int[f"memory{q + 1}"] = intensities(e, sector, vectors, pump)
    ctx.csv("intensities_memories.csv", ["index", "n", "l", "m", *mem_int],
            [(k, *_lab(lab), *[v[k] for v in mem_int.values()]) for k, lab in enumerate(labels)],
            units="intensity in photons per unit probe strength")
    ctx.figure("intensities_memories.png", plotting.intensity_figure(labels, mem_int))
    for name, psi in ctx.results["anneal"].items():
        inten = intensities(psi, sector, vectors, pump)
        measured = add_noise(inten, cfg.readout.noise, rng) if cfg.readout.noise > 0 else inten
        ctx.csv(f"intensities_{name}.csv", ["index", "n", "l", "m", "intensity"],
                [(k, *_lab(lab), measured[k]) for k, lab in enumerate(labels)],
                units="intensity in photons per unit probe strength")
        rec = invert_intensities(measured, vectors, pump)
        ctx.json(f"reconstruction_{name}.json", {"noise": cfg.readout.noise, **rec.to_dict()})


def stage_hopfield(ctx: RunContext) -> None:
    cfg = ctx.config
    nus = np.linspace(0.0, cfg.problem.nu_max, 61)
    for name, prob in _problems(cfg).items():
        rep = energy_report(prob)
        table = nu_table(prob, nus)
        names = ["probe", *[f"memory{q + 1}" for q in range(prob.n_memories)]]
        ctx.csv(f"hopfield_nu_{name}.csv", ["nu", *[f"E_{n}" for n in names]], table,
                units="dimensionless energy")
        ctx.json(f"hopfield_{name}.json", {
            "memories": prob.memories, "probe": prob.probe, "nu": prob.nu,
            "n_up": cfg.lattice.n_up, "ground": brute_force_ground(prob, cfg.lattice.n_up),
            **rep.to_dict(),
        })
        ctx.figure(f"hopfield_nu_{name}.png", plotting.nu_figure(table, names, rep.nu_interval[1]))


RUNNERS = {
    "select-modes": stage_select,
    "synthesize": stage_synthesize,
    "spectrum": stage_spectrum,
    "anneal": stage_anneal,
    "readout": stage_readout,
    "hopfield-bounds": stage_hopfield,
}


def _vector(matrix: np.ndarray) -> np.ndarray:
    """Recover v (up to sign) from the rank-one matrix v v^T."""
    w, u = np.linalg.eigh(matrix)
    v = u[:, -1] * np.sqrt(max(w[-1], 0.0))
    return v if v[np.argmax(np.abs(v))] >= 0 else -v


def _lab(lab):
    lab = tuple(lab) if isinstance(lab, (list, tuple)) else (lab,)
    return (lab + (0, 0, 0))[:3]


def plan(stop_stage: str | None = None, only: str | None = None) -> list[str]:
    """Stages to execute, in pipeline order."""
    if only is not None:
        if only not in RUNNERS:
            raise ValidationError(f"unknown stage {only!r}; choose from {', '.join(STAGES)}")
        return [s for s in STAGES if s in REQUIRES[only] or s == only]
    if stop_stage is None:
        return list(STAGES)
    if stop_stage not in RUNNERS:
        raise ValidationError(f"unknown stage {stop_stage!r}; choose from {', '.join(STAGES)}")
    if stop_stage == "hopfield-bounds":
        return list(STAGES)
    return list(STAGES[:STAGES.index(stop_stage) + 1])


def run_pipeline(config: ExperimentConfig, out=None, *, stop_stage: str | None = None,
                 only: str | None = None, reuse: bool = False, threads: int | None = None) -> RunContext:
    """Run the stages and write ``manifest.json``.

    On failure the files written so far stay on disk, the manifest records
    the failed stage and a ``StageError`` is raised.
    """
    ctx = RunContext(config, Path(out or config.runtime.out),
                     threads or config.runtime.threads, reuse)
    ctx.json("config.json", {"experiment": config.to_dict()})
    done = []
    for stage in plan(stop_stage, only):
        log.info("stage %s", stage)
        try:
            RUNNERS[stage](ctx)
        except Exception as exc:
            ctx.manifest.write(f"failed:{stage}", {"stages": done, "config": ctx.config_hash,
                                                   "error": str(exc)})
            raise StageError(stage, exc) from exc
        done.append(stage)
    ctx.manifest.write("complete", {"stages": done, "config": ctx.config_hash,
                                    "seed": config.runtime.seed})
    return ctx


# --- golden comparison -----------------------------------------------------------

FIXTURE_KEYS = ("instance", "quantities")
INSTANCE_KEYS = ("matrix", "target", "n_up", "tunneling", "periodic", "zeta_final", "tau")


def default_fixture_path() -> Path:
    return Path(str(resources.files("cavityanneal") / "data" / "golden_chi1.json"))


def default_config_path() -> Path:
    return Path(str(resources.files("cavityanneal") / "data" / "reference.yaml"))


def load_fixture(path=None) -> dict:
    fx = read_json(path or default_fixture_path())
    missing = [k for k in FIXTURE_KEYS if k not in fx]
    missing += [f"instance.{k}" for k in INSTANCE_KEYS if k not in fx.get("instance", {})]
    for name, q in fx.get("quantities", {}).items():
        missing += [f"quantities.{name}.{k}" for k in ("value", "tol") if k not in q]
    if missing:
        raise ValidationError(f"fixture is missing keys: {', '.join(missing)}")
    return fx


def golden_bundle(fixture: dict) -> dict:
    """Compute every fixture quantity for the fixture's instance."""
    inst = fixture["instance"]
    a = np.array(inst["matrix"], dtype=float)
    target = np.array(inst["target"])
    sector = build_basis(len(a), int(inst["n_up"]))
    h = build_hamiltonian(sector, float(inst["tunneling"]), float(inst["zeta_final"]), a,
                          bool(inst["periodic"]))
    zf = float(inst["zeta_final"])
    z_star, delta = min_gap(h, np.linspace(0.0, zf, 201))
    _, v = eigenpairs(h, 1, zf)
    rec = evolve(h, AnnealSchedule(float(inst["tau"]), zf, tunneling=float(inst["tunneling"])),
                 target=target, track_ground=False)
    return {
        "min_gap": delta,
        "min_gap_zeta": z_star,
        "ground_overlap_2J": float(abs(v[sector.index(target), 0]) ** 2),
        "anneal_overlap_tau50": float(rec.target_overlap[-1]),
        "final_signs_match": float(np.all(np.sign(rec.magnetization[-1]) == target)),
        "norm_drift": rec.norm_drift,
    }


@dataclass
class GoldenReport:
    rows: list

    @property
    def passed(self) -> bool:
        return all(r["passed"] for r in self.rows)

    def failures(self) -> list[str]:
        return [r["quantity"] for r in self.rows if not r["passed"]]

    def to_dict(self) -> dict:
        return {"passed": self.passed, "rows": self.rows}

    def lines(self) -> list[str]:
        out = []
        for r in self.rows:
            got = "missing" if r["computed"] is None else f"{r['computed']:.6g}"
            out.append(f"{'PASS' if r['passed'] else 'FAIL'}  {r['quantity']}: computed {got}, "
                       f"expected {r['expected']:g} +- {r['tol']:g}")
        return out


def golden_compare(bundle, fixture) -> GoldenReport:
    """Per-quantity pass/fail of ``bundle`` (dict or JSON path) against ``fixture``."""
    if not isinstance(bundle, dict):
        bundle = read_json(bundle)["quantities"]
    if not isinstance(fixture, dict):
        fixture = load_fixture(fixture)
    if "quantities" not in fixture:
        raise ValidationError("fixture is missing keys: quantities")
    rows = []
    for name, spec in fixture["quantities"].items():
        val = bundle.get(name)
        ok = val is not None and np.isfinite(val) and abs(val - spec["value"]) <= spec["tol"]
        rows.append({"quantity": name, "expected": spec["value"], "tol": spec["tol"],
                     "computed": None if val is None else float(val), "passed": bool(ok)})
    return GoldenReport(rows)


def run_golden(fixture_path=None, out=None) -> GoldenReport:
    fixture = load_fixture(fixture_path)
    bundle = golden_bundle(fixture)
    report = golden_compare(bundle, fixture)
    if out is not None:
        out = Path(out)
        m = Manifest(out)
        m.add(write_json(out / "golden_bundle.json", {"quantities": bundle}))
        m.add(write_json(out / "golden_report.json", report.to_dict()))
        m.write("complete" if report.passed else "failed:golden")
    return report
