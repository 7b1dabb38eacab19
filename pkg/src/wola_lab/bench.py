"""Acoustic echo cancellation benchmark: scenario generation, simulation, sweeps.

Far-end and near-end signals are white Gaussian; the echo path is an
exponentially decaying Gaussian impulse response. Subband filters are
adapted open loop with RLS. ERLE is measured against the noiseless echo
delayed by the bank delay N-1, so it isolates the modeling error.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .adaptation import RlsBank
from .complexity import Method, table1
from .errors import ConfigError, WindowTooShort, WolaError, ZeroReference
from .filterbank import FilterBankSpec, SubbandFilterSet, characterize, characterize_effective
from .gwola import ConventionalEngine, GwolaEngine, OverlapAddSynthesizer, effective_responses
from .prototype import SynthesisDesign, parse_window
from .ptwola import PtwolaConfig, PtwolaEngine
from .ptwola import effective_responses as pt_effective_responses
from .steady_state import ERLE_CAP_DB, analytical_erle, generate_rir, w_extended

log = logging.getLogger(__name__)

CSV_COLUMNS = [
    "window", "synthesis", "method", "T", "R", "seed",
    "steady_erle_db", "system_distance_db", "analytical_erle_db", "flops_mult", "flops_add",
]
ANALYTIC_COLUMNS = ["window", "synthesis", "T", "erle_db", "distortion_err", "alias_err"]
COMPLEXITY_COLUMNS = ["method", "N", "T", "R", "real_mults", "real_adds"]


@dataclass
class ScenarioConfig:
    """One benchmark cell.

    ``warmup_fraction`` of the frames (and at least ceil((2N+L)/D) frames) is
    discarded; ERLE is averaged over the remaining steady window.
    """

    N: int = 1024
    D: int = 512
    window: str = "root-hann"
    synthesis: str = "min-norm"
    method: str = "gwola"
    T: int = 1
    R: int = 0
    L: int = 512
    t60: float = 0.07
    ebr_db: float = 20.0
    sigma_u: float = 1.0
    frames: int = 4000
    fs: float = 16000.0
    seed: int = 0
    warmup_fraction: float = 0.75
    lam: float = 0.999
    p0: float = 100.0

    def validate(self) -> "ScenarioConfig":
        N, D = int(self.N), int(self.D)
        if N < 4 or N & (N - 1):
            raise ConfigError(f"N must be a power of two >= 4, got {N}")
        if D < 1 or N % D:
            raise ConfigError(f"D={D} must divide N={N}")
        if not 1 <= self.L <= N:
            raise ConfigError(f"need 1 <= L <= N, got L={self.L}")
        try:
            parse_window(self.window)
            SynthesisDesign(self.synthesis)
            method = Method(self.method)
        except (ValueError, WolaError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.T < 1:
            raise ConfigError("T must be >= 1")
        if method is Method.PTWOLA and self.T < 2 * self.R + 1:
            raise ConfigError(f"ptwola needs T >= 2R+1, got T={self.T}, R={self.R}")
        if not 0 <= self.warmup_fraction < 1:
            raise ConfigError("warmup_fraction must lie in [0, 1)")
        if self.steady_start() >= self.frames:
            raise ConfigError("no frames left after warm-up")
        return self

    def warmup_frames(self) -> int:
        return math.ceil((2 * self.N + self.L) / self.D)

    def steady_start(self) -> int:
        return max(self.warmup_frames(), int(math.floor(self.warmup_fraction * self.frames)))

    @classmethod
    def from_dict(cls, d) -> "ScenarioConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class MetricSeries:
    erle_db_over_time: np.ndarray
    steady_erle_db: float
    system_distance_db: float
    analytical_erle_db: float = float("nan")
    extra: dict = field(default_factory=dict)


def _erle(ref_energy, err_energy):
    if err_energy <= ref_energy * 10 ** (-ERLE_CAP_DB / 10):
        return ERLE_CAP_DB
    return float(10 * np.log10(ref_energy / err_energy))


def measure_erle(y_ref, y_hat, steady_window=None) -> float:
    """10 log10(sum y_ref^2 / sum (y_ref - y_hat)^2) over ``steady_window``.

    Examples
    --------
    >>> round(measure_erle(np.ones(4), 0.5 * np.ones(4)), 2)
    6.02
    """
    y_ref, y_hat = np.asarray(y_ref), np.asarray(y_hat)
    if steady_window is not None:
        sl = steady_window if isinstance(steady_window, slice) else slice(*steady_window)
        y_ref, y_hat = y_ref[sl], y_hat[sl]
    if len(y_ref) == 0:
        raise WindowTooShort("empty ERLE window")
    return _erle(float(np.sum(np.abs(y_ref) ** 2)), float(np.sum(np.abs(y_ref - y_hat) ** 2)))


def system_distance(t_hat, w_ext) -> float:
    """10 log10(||w_ext - t_hat||^2 / ||w_ext||^2), capped at -300 dB."""
    t = np.asarray(t_hat)
    w = np.asarray(w_ext)
    M = max(len(t), len(w))
    t = np.pad(t, (0, M - len(t)))
    w = np.pad(w, (0, M - len(w)))
    ref = float(np.sum(np.abs(w) ** 2))
    if ref == 0:
        raise ZeroReference("w_ext is all zero")
    err = float(np.sum(np.abs(w - t) ** 2))
    if err <= ref * 10 ** (-ERLE_CAP_DB / 10):
        return -ERLE_CAP_DB
    return float(10 * np.log10(err / ref))


def derive_seed(base_seed, index) -> int:
    """Deterministic 32-bit seed for replicate ``index`` of ``base_seed``."""
    return int(np.random.SeedSequence([int(base_seed), int(index)]).generate_state(1)[0])


@dataclass
class Scenario:
    w: np.ndarray
    u: np.ndarray
    echo: np.ndarray
    mic: np.ndarray


def make_scenario(cfg: ScenarioConfig, rir=None) -> Scenario:
    """Impulse response, far-end input, echo and noisy microphone signal.

    ``rir`` replaces the generated impulse response when given.
    """
    n = cfg.frames * cfg.D
    s_rir, s_u, s_noise = np.random.SeedSequence(int(cfg.seed)).spawn(3)
    if rir is None:
        w = generate_rir(cfg.L, cfg.t60, cfg.fs, np.random.default_rng(s_rir)).w
    else:
        w = np.asarray(rir, float)
        if len(w) > cfg.N:
            raise ConfigError(f"impulse response longer than N={cfg.N}")
    u = cfg.sigma_u * np.random.default_rng(s_u).standard_normal(n)
    echo = np.convolve(u, w)[:n]
    if np.isinf(cfg.ebr_db):
        mic = echo.copy()
    else:
        noise = np.random.default_rng(s_noise).standard_normal(n)
        target = np.mean(echo**2) / 10 ** (cfg.ebr_db / 10)
        mic = echo + noise * np.sqrt(target / np.mean(noise**2))
    return Scenario(w, u, echo, mic)


def _engine(cfg, spec):
    method = Method(cfg.method)
    if method is Method.GWOLA:
        return GwolaEngine(spec, cfg.T)
    if method is Method.CONVENTIONAL:
        return ConventionalEngine(spec, cfg.T)
    return PtwolaEngine(spec, PtwolaConfig(cfg.R, cfg.T))


def _mirror(half, N):
    return np.concatenate([half, np.conj(half[-2:0:-1])], axis=0)


def model_distortion(cfg, spec, coeffs_half) -> np.ndarray:
    """Distortion response t_hat implied by the final subband coefficients."""
    method = Method(cfg.method)
    N = spec.N
    if method is Method.GWOLA:
        return characterize(SubbandFilterSet.from_half(coeffs_half, N), spec.kernels, spec).t_hat
    if method is Method.CONVENTIONAL:
        b = effective_responses(coeffs_half, spec.h0, N, step=spec.D)
    else:
        b = pt_effective_responses(coeffs_half, PtwolaConfig(cfg.R, cfg.T), N)
    return characterize_effective(_mirror(b, N), spec, alias=False).t_hat


def simulate(cfg: ScenarioConfig, syntheses=None, rir=None) -> dict:
    """Run one adaptive simulation, evaluated with each synthesis window.

    The adapted coefficients do not depend on the synthesis window, so one
    RLS run serves every entry of ``syntheses`` (default: ``cfg.synthesis``).

    Returns
    -------
    dict
        synthesis name -> :class:`MetricSeries`.
    """
    cfg.validate()
    syntheses = [cfg.synthesis] if syntheses is None else list(syntheses)
    N, D, Q = cfg.N, cfg.D, cfg.frames
    specs = {s: FilterBankSpec.design(N, D, cfg.window, s) for s in syntheses}
    spec0 = specs[syntheses[0]]
    sc = make_scenario(cfg, rir)
    eng = _engine(cfg, spec0)
    ana = GwolaEngine(spec0, 1)
    bank = RlsBank.create(eng.n_subbands, cfg.T, cfg.lam, cfg.p0)
    syn = {s: OverlapAddSynthesizer(specs[s]) for s in syntheses}
    out = {s: np.empty(Q * D) for s in syntheses}
    pad_u = np.concatenate([np.zeros(D - 1), sc.u])
    pad_d = np.concatenate([np.zeros(D - 1), sc.mic])
    for q in range(Q):
        X = eng.push(pad_u[q * D : q * D + D]).matrix
        d = ana.push(pad_d[q * D : q * D + D]).matrix[:, 0]
        est, _ = bank.update(X, d)
        for s in syntheses:
            out[s][q * D : q * D + D] = syn[s].push(est)
    ref = np.concatenate([np.zeros(N - 1), sc.echo])[: Q * D]
    start = cfg.steady_start() * D
    rep = table1(cfg.method, N, cfg.T, cfg.R)
    res = {}
    wext = w_extended(sc.w, N, cfg.T)
    for s in syntheses:
        e = ref - out[s]
        re = np.sum(ref.reshape(Q, D) ** 2, axis=1)
        ee = np.sum(e.reshape(Q, D) ** 2, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            series = 10 * np.log10(re / ee)
        t_hat = model_distortion(cfg, specs[s], bank.coeffs)
        ana_db = float("nan")
        if Method(cfg.method) is Method.GWOLA:
            ana_db = analytical_erle(sc.w, specs[s], cfg.T).erle_db
        res[s] = MetricSeries(
            series,
            measure_erle(ref, out[s], (start, Q * D)),
            system_distance(t_hat.real, wext),
            ana_db,
            {"flops_mult": rep.real_mults, "flops_add": rep.real_adds},
        )
    return res


def run_simulation(cfg: ScenarioConfig, rir=None) -> MetricSeries:
    return simulate(cfg, rir=rir)[cfg.synthesis]


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.6g}"
    return str(x)


def result_row(cfg: ScenarioConfig, synthesis, m: MetricSeries) -> dict:
    return {
        "window": cfg.window,
        "synthesis": synthesis,
        "method": cfg.method,
        "T": cfg.T,
        "R": cfg.R if Method(cfg.method) is Method.PTWOLA else 0,
        "seed": cfg.seed,
        "steady_erle_db": m.steady_erle_db,
        "system_distance_db": m.system_distance_db,
        "analytical_erle_db": m.analytical_erle_db,
        "flops_mult": m.extra.get("flops_mult", ""),
        "flops_add": m.extra.get("flops_add", ""),
    }


def _run_group(args):
    cfg, syntheses = args
    try:
        res = simulate(cfg, syntheses)
    except WolaError as exc:
        log.warning("cell %s failed: %s", cfg, exc)
        nan = float("nan")
        res = {s: MetricSeries(np.zeros(0), nan, nan, nan) for s in syntheses}
    return {s: result_row(cfg, s, m) for s, m in res.items()}


def sweep(template: ScenarioConfig, T_list, windows, syntheses, methods, seeds, R_list=None, jobs=1):
    """Cartesian-product sweep; one row per (window, synthesis, method, T, R, seed).

    Every cell of seed ``s`` uses the same scenario realisation (impulse
    response, signals, noise), so differences between cells are not masked by
    realisation noise. ``seeds`` is a list of seeds or a count of replicates
    derived from ``template.seed``. Rows are returned in nesting order window,
    synthesis, method, T, R, seed regardless of ``jobs``.
    """
    if isinstance(seeds, int):
        seeds = [derive_seed(template.seed, i) for i in range(seeds)]
    R_list = [template.R] if R_list is None else list(R_list)
    if not (T_list and windows and syntheses and methods and seeds):
        raise ConfigError("sweep grids must be non-empty")
    groups = []
    for window in windows:
        for method in methods:
            Rs = R_list if Method(method) is Method.PTWOLA else [0]
            for T in T_list:
                for R in Rs:
                    for seed in seeds:
                        cfg = dataclasses.replace(template, window=window, method=method, T=int(T),
                                                  R=int(R), seed=int(seed))
                        groups.append((cfg, list(syntheses)))
    if jobs and jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            results = list(ex.map(_run_group, groups))
    else:
        results = [_run_group(g) for g in groups]
    by_key = {}
    for (cfg, _), res in zip(groups, results):
        for s, row in res.items():
            by_key[(cfg.window, s, cfg.method, cfg.T, cfg.R, cfg.seed)] = row
    rows = []
    for window in windows:
        for s in syntheses:
            for method in methods:
                Rs = R_list if Method(method) is Method.PTWOLA else [0]
                for T in T_list:
                    for R in Rs:
                        for seed in seeds:
                            rows.append(by_key[(window, s, method, int(T), int(R), int(seed))])
    return rows


def analytic_sweep(windows, syntheses, T_list, N=1024, D=512, L=512, t60=0.07, fs=16000.0, seeds=1, seed=0):
    """Seed-averaged analytical ERLE rows ``window,synthesis,T,erle_db,distortion_err,alias_err``."""
    if isinstance(seeds, int):
        seeds = [derive_seed(seed, i) for i in range(seeds)]
    rirs = [generate_rir(L, t60, fs, np.random.default_rng(np.random.SeedSequence(s).spawn(1)[0])).w
            for s in seeds]
    rows = []
    for window in windows:
        for s in syntheses:
            spec = FilterBankSpec.design(N, D, window, s)
            for T in T_list:
                r = [analytical_erle(w, spec, int(T)) for w in rirs]
                rows.append({
                    "window": window, "synthesis": s, "T": int(T),
                    "erle_db": float(np.mean([x.erle_db for x in r])),
                    "distortion_err": float(np.mean([x.distortion_err for x in r])),
                    "alias_err": float(np.mean([x.alias_err for x in r])),
                })
    return rows


def write_csv(rows, fh, columns=CSV_COLUMNS):
    wr = csv.writer(fh, lineterminator="\n")
    wr.writerow(columns)
    for r in rows:
        wr.writerow([_fmt(r[c]) for c in columns])


def write_json(rows, fh):
    def conv(v):
        if isinstance(v, (float, np.floating)):
            v = float(v)
            return float(f"{v:.6g}") if np.isfinite(v) else None
        if isinstance(v, np.integer):
            return int(v)
        return v

    json.dump([{k: conv(v) for k, v in r.items()} for r in rows], fh, indent=1)
    fh.write("\n")


def rows_to_csv(rows, columns=CSV_COLUMNS) -> str:
    buf = io.StringIO()
    write_csv(rows, buf, columns)
    return buf.getvalue()


def write_vector_csv(values, fh):
    """Export a vector as ``index,value_re,value_im``."""
    v = np.asarray(values)
    wr = csv.writer(fh, lineterminator="\n")
    wr.writerow(["index", "value_re", "value_im"])
    for i, x in enumerate(v):
        wr.writerow([i, repr(float(np.real(x))), repr(float(np.imag(x)))])
