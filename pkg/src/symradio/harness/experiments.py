"""
Monte Carlo sweeps producing :class:`ResultRow` records.

Every sweep point is split into chunks of ``config.chunk`` trials and each
chunk owns a random stream keyed on the point and the chunk index. Chunks
are reduced to counts and sums and combined in index order, so the output
does not depend on how many worker processes ran them.
"""

from __future__ import annotations

import csv
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from ..allocation import ConstraintSet, allocate_siso, beamform_power_min, brute_force_siso
from ..channel import link_scale, synthesize_batch
from ..core import ChannelState, InfeasibleError, complex_normal, make_rng, noise_variance
from ..detectors import (
    linear_detect_batch,
    linear_filter,
    ml_detect_batch,
    ml_exhaustive,
    sic_detect_batch,
)
from ..fdsr import FdsrChannel, coherent_bpsk_ber, fdsr_detect_batch
from ..modem import build_constellation, gamma_from_impedance, impedance_from_gamma
from ..rates import CIRCULAR, primary_lower, primary_upper, secondary_rate
from ..ris import cascaded_channel, passive_beamform

log = logging.getLogger("symradio")

CSV_HEADER = ("experiment", "detector", "K", "M_r", "snr_db", "metric", "value", "stderr", "trials", "seed")

# stream-key prefixes, one per experiment kind
_CODES = {"ber_sweep": 1, "rate_sweep": 2, "allocation": 3, "ris_scaling": 4, "fdsr_sweep": 5,
          "oracle_suite": 6}


@dataclass(frozen=True)
class ResultRow:
    """One metric at one sweep point."""

    experiment: str
    detector: str
    K: int
    M_r: int
    snr_db: float
    metric: str
    value: float
    stderr: float
    trials: int
    seed: int

    def __post_init__(self):
        if not (math.isfinite(self.value) and math.isfinite(self.stderr)):
            raise ValueError(f"non-finite result for {self.metric}: {self.value} +/- {self.stderr}")


_FLOAT_FIELDS = ("snr_db", "value", "stderr")


def _fmt(name, value):
    if name in _FLOAT_FIELDS:
        return repr(float(value))
    return str(int(value)) if name in ("K", "M_r", "trials", "seed") else str(value)


class ResultWriter:
    """Streams rows to a CSV file (or standard output when `path` is None)."""

    def __init__(self, path=None):
        self.path = path
        try:
            self._fh = sys.stdout if path is None else open(path, "w", encoding="utf-8", newline="")
        except OSError as exc:
            raise OSError(f"cannot write results to {path}: {exc.strerror}") from exc
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(CSV_HEADER)
        self.count = 0

    def write(self, row):
        self._w.writerow([_fmt(f, getattr(row, f)) for f in CSV_HEADER])
        self.count += 1

    def flush(self):
        self._fh.flush()

    def close(self):
        self.flush()
        if self.path is not None:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_results(rows, path):
    """Write rows as CSV; an empty sequence gives a header-only file."""
    with ResultWriter(path) as out:
        for row in rows:
            out.write(row)


def read_results(path):
    """Parse a results CSV back into :class:`ResultRow` objects."""
    types = {f.name: f.type for f in fields(ResultRow)}
    cast = {"int": int, "float": float, "str": str}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [ResultRow(**{k: cast[types[k]](v) for k, v in rec.items()}) for rec in reader]


# Channel draws
def _links(system, n, M, rng):
    """Direct channel plus the two backscatter hops; ``h2 = alpha * l * g``."""
    scale = link_scale(system.backscatter_gain_db)
    if system.channel == "fixed":
        return np.ones((n, M), complex), np.full((n, 1), scale, complex), np.ones((n, M), complex)
    h1 = complex_normal((n, M), 1.0, rng)
    if system.channel == "rayleigh":
        return h1, np.full((n, 1), scale, complex), complex_normal((n, M), 1.0, rng)
    return h1, scale * complex_normal((n, 1), 1.0, rng), complex_normal((n, M), 1.0, rng)


def _chunks(trials, chunk):
    return [(i, min(chunk, trials - i * chunk)) for i in range(-(-trials // chunk))]


def _binomial(errors, n):
    ber = errors / n
    return ber, math.sqrt(ber * (1 - ber) / n)


def _moments(x):
    """(count, mean, sum of squared deviations) of one chunk."""
    x = np.asarray(x, dtype=float)
    mean = float(x.mean())
    return x.size, mean, float(np.sum((x - mean) ** 2))


def _mean(parts):
    """Merge chunk moments in order; returns (mean, standard error)."""
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in parts:
        delta = mb - mean
        tot = n + nb
        mean += delta * nb / tot
        m2 += m2b + delta * delta * n * nb / tot
        n = tot
    return mean, math.sqrt(m2 / max(n - 1, 1) / n)


# BER sweeps
def _detect(name, y, h1, h2, p, sigma2, A_s, A_c, squared):
    if name == "ml":
        s_idx, c_idx, _ = ml_detect_batch(y, h1, h2, p, A_s, A_c)
    elif name in ("mrc", "zf", "mmse"):
        s_idx, c_idx, _ = linear_detect_batch(y, h1, h2, p, sigma2, name, A_s, A_c, squared)
    else:
        s_idx, c_idx, _ = sic_detect_batch(y, h1, h2, p, sigma2, A_s, A_c, first_stage=name[4:])
    return s_idx, c_idx


def _ber_chunk(task):
    cfg, key, n, K, M, snr_db, link = task
    sysc = cfg.system
    A_s, A_c = build_constellation(sysc.primary), build_constellation(sysc.secondary)
    rng = make_rng(cfg.seed, key)
    h1, l, g = _links(sysc, n, M, rng)
    h2 = sysc.alpha * l * g if link == "full" else np.zeros_like(h1)
    si = rng.integers(A_s.size, size=(n, K))
    ci = rng.integers(A_c.size, size=n)
    sigma2 = noise_variance(snr_db, sysc.p)
    y = synthesize_batch(h1, h2, sysc.p, A_s.points[si], A_c.points[ci], sigma2, rng)
    out = []
    for det in cfg.ber.detectors:
        s_hat, c_hat = _detect(det, y, h1, h2, sysc.p, sigma2, A_s, A_c, cfg.ber.squared_moduli)
        out.append((int(A_s.bit_errors(s_hat, si).sum()), int(A_c.bit_errors(c_hat, ci).sum())))
    return out


def _ber_points(cfg):
    sw, code = cfg.sweep, _CODES["ber_sweep"]
    for K in sw.K:
        for M in sw.M_r:
            for si, snr in enumerate(sw.snr_db):
                for link in cfg.ber.links:
                    # links share streams: the comparison uses common random numbers
                    tasks = [(cfg, (code, K, M, si, c), n, K, M, snr, link)
                             for c, n in _chunks(sw.trials, cfg.chunk)]
                    yield (K, M, snr, link), _ber_chunk, tasks


def _ber_rows(cfg, point, results):
    K, M, snr, link = point
    A_s, A_c = build_constellation(cfg.system.primary), build_constellation(cfg.system.secondary)
    n = cfg.sweep.trials
    tag = "" if link == "full" else f"[{link}]"
    for j, det in enumerate(cfg.ber.detectors):
        es = sum(r[j][0] for r in results)
        ec = sum(r[j][1] for r in results)
        streams = [("ber_s", es, n * K * A_s.bits_per_symbol)]
        if link == "full":
            streams.append(("ber_c", ec, n * A_c.bits_per_symbol))
        for metric, errors, bits in streams:
            ber, se = _binomial(errors, bits)
            yield ResultRow("ber_sweep", det, K, M, snr, metric + tag, ber, se, n, cfg.seed)


# Rate sweeps
def _rate_chunk(task):
    cfg, key, n, K, M = task
    sysc = cfg.system
    rng = make_rng(cfg.seed, key)
    h1, l, g = _links(sysc, n, M, rng)
    A_c = CIRCULAR if sysc.secondary == CIRCULAR else sysc.secondary
    points = cfg.rate.alpha_points
    out = []
    for snr in cfg.sweep.snr_db:
        sigma2 = noise_variance(snr, sysc.p)
        row = []
        for metric in cfg.rate.metrics:
            def rate(alpha):
                h2 = alpha * l * g
                if metric == "primary_upper":
                    return primary_upper(h1, h2, sysc.p, sigma2, A_c)
                if metric == "primary_lower":
                    return primary_lower(h1, h2, sysc.p, sigma2, A_c)
                return secondary_rate(h2, sysc.p, sigma2, K, sysc.primary)

            if points:
                curve = np.stack([rate(a) for a in np.linspace(0.0, 1.0, points)], axis=-1)
                # relative tolerance absorbs rounding on flat stretches
                drop = np.diff(curve, axis=-1) < -1e-12 * np.maximum(1.0, np.abs(curve[..., 1:]))
                row.append(int(np.any(drop, axis=-1).sum()))
            else:
                row.append(_moments(rate(sysc.alpha)))
        out.append(row)
    return out


def _rate_points(cfg):
    sw, code = cfg.sweep, _CODES["rate_sweep"]
    for K in sw.K:
        for M in sw.M_r:
            # one set of draws serves every SNR (common random numbers)
            tasks = [(cfg, (code, K, M, c), n, K, M) for c, n in _chunks(sw.trials, cfg.chunk)]
            yield (K, M), _rate_chunk, tasks


def _rate_rows(cfg, point, results):
    K, M = point
    n = cfg.sweep.trials
    for si, snr in enumerate(cfg.sweep.snr_db):
        for j, metric in enumerate(cfg.rate.metrics):
            if cfg.rate.alpha_points:
                count = sum(r[si][j] for r in results)
                yield ResultRow("rate_sweep", "analytic", K, M, snr, f"violations[{metric}]",
                                float(count), 0.0, n, cfg.seed)
            else:
                mean, se = _mean(r[si][j] for r in results)
                yield ResultRow("rate_sweep", "analytic", K, M, snr, metric, mean, se, n, cfg.seed)


# RIS scaling
def _ris_chunk(task):
    cfg, key, n, M_b = task
    rng = make_rng(cfg.seed, key)
    l = complex_normal((n, M_b), 1.0, rng)
    g = complex_normal((n, M_b), 1.0, rng)
    theta = np.exp(-1j * (np.angle(l) + np.angle(g)))
    return _moments(np.abs(cascaded_channel(l, g, theta)) ** 2)


def _ris_points(cfg):
    code = _CODES["ris_scaling"]
    for M_b in cfg.ris.M_b:
        tasks = [(cfg, (code, M_b, c), n, M_b) for c, n in _chunks(cfg.sweep.trials, cfg.chunk)]
        yield (M_b,), _ris_chunk, tasks


def _ris_rows(cfg, point, results):
    (M_b,) = point
    n = cfg.sweep.trials
    mean, se = _mean(results)
    ones = np.ones(M_b)
    unit = abs(complex(cascaded_channel(ones, ones, passive_beamform(ones, ones).theta))) ** 2
    for snr in cfg.sweep.snr_db:
        lin = cfg.system.p / noise_variance(snr, cfg.system.p)
        yield ResultRow("ris_scaling", "aligned", 1, 1, snr, f"snr_unit[M_b={M_b}]", unit * lin, 0.0, 1, cfg.seed)
        yield ResultRow("ris_scaling", "aligned", 1, 1, snr, f"snr[M_b={M_b}]", mean * lin, se * lin, n, cfg.seed)


# Full-duplex cancellation
def _fdsr_chunk(task):
    cfg, key, n, K, snr = task
    sysc, fd = cfg.system, cfg.fdsr
    A_s, A_c = build_constellation(sysc.primary), build_constellation("bpsk")
    rng = make_rng(cfg.seed, key)
    s = A_s.points[rng.integers(A_s.size, size=(n, K))]
    ci = rng.integers(2, size=n)
    sigma2 = noise_variance(snr, sysc.p)
    y = synthesize_batch([fd.beta1], [fd.beta2], sysc.p, s, A_c.points[ci], sigma2, rng)[..., 0]
    out = []
    for rf in fd.residual_factors:
        ch = FdsrChannel(fd.beta1, fd.beta2, rf)
        out.append(int((fdsr_detect_batch(y, ch, sysc.p, s, A_c) != ci).sum()))
    return out


def _fdsr_points(cfg):
    code = _CODES["fdsr_sweep"]
    for K in cfg.sweep.K:
        for si, snr in enumerate(cfg.sweep.snr_db):
            # every residual factor sees the same blocks
            tasks = [(cfg, (code, K, si, c), n, K, snr) for c, n in _chunks(cfg.sweep.trials, cfg.chunk)]
            yield (K, snr), _fdsr_chunk, tasks


def _fdsr_rows(cfg, point, results):
    K, snr = point
    n = cfg.sweep.trials
    sigma2 = noise_variance(snr, cfg.system.p)
    theory = float(coherent_bpsk_ber(cfg.system.p, cfg.fdsr.beta2, sigma2, K))
    yield ResultRow("fdsr_sweep", "closed_form", K, 1, snr, "ber_c", theory, 0.0, 0, cfg.seed)
    for j, rf in enumerate(cfg.fdsr.residual_factors):
        ber, se = _binomial(sum(r[j] for r in results), n)
        yield ResultRow("fdsr_sweep", "cancel_mf", K, 1, snr, f"ber_c[rf={rf!r}]", ber, se, n, cfg.seed)


# Allocation
def _alloc_points(cfg):
    yield ("allocation",), None, []


def _siso_states(cfg, M, rng, count):
    h1, l, g = _links(cfg.system, count, M, rng)
    return [ChannelState(h1[i], l[i, 0], g[i]) for i in range(count)]


def _alloc_rows(cfg, point, results):
    al, sysc = cfg.allocation, cfg.system
    code = _CODES["allocation"]
    A_c = CIRCULAR if sysc.secondary == CIRCULAR else sysc.secondary
    M = cfg.sweep.M_r[0]
    if al.mode == "siso":
        states = _siso_states(cfg, M, make_rng(cfg.seed, (code, M)), al.states)
        cons = ConstraintSet(peak_power=al.peak_power, avg_power=al.avg_power)
        for snr in cfg.sweep.snr_db:
            sigma2 = noise_variance(snr, 1.0)
            sol = allocate_siso(states, al.weights, cons, al.grid, sigma2, sysc.primary, A_c,
                                al.primary_rate, cfg.sweep.K[0])
            values = [("objective", sol.objective),
                      ("primary_rate", float(np.mean(sol.rates["primary"]))),
                      ("secondary_rate", float(np.mean(sol.rates["secondary"]))),
                      ("avg_power", sol.avg_power),
                      ("mean_alpha", float(np.mean(sol.alpha))),
                      ("multiplier", float(sol.multiplier))]
            for metric, value in values:
                yield ResultRow("allocation", "siso", cfg.sweep.K[0], M, snr, metric, value, 0.0,
                                al.states, cfg.seed)
        return
    rng = make_rng(cfg.seed, (code, al.M_t, 1))
    h_dir, l, g = _links(cfg.system, al.states, al.M_t, rng)
    h_comp = sysc.alpha * l * g
    cons = ConstraintSet(power_budget=al.power_budget, min_primary_rate=al.min_primary_rate,
                         min_secondary_rate=al.min_secondary_rate)
    for snr in cfg.sweep.snr_db:
        sigma2 = noise_variance(snr, 1.0)
        acc = {"min_power": [], "primary_rate": [], "secondary_rate": []}
        for i in range(al.states):
            try:
                sol = beamform_power_min(h_dir[i], h_comp[i], cons, sigma2, sysc.primary, A_c)
            except InfeasibleError as exc:
                raise InfeasibleError(f"channel draw {i} at {snr} dB: {exc}", exc.binding) from None
            acc["min_power"].append(sol.objective)
            acc["primary_rate"].append(sol.rates["primary"])
            acc["secondary_rate"].append(sol.rates["secondary"])
        for metric, vals in acc.items():
            v = np.asarray(vals)
            se = float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else 0.0
            yield ResultRow("allocation", "miso", 1, al.M_t, snr, metric, float(v.mean()), se,
                            al.states, cfg.seed)


# Oracle suite
def _oracle_points(cfg):
    yield ("oracle",), None, []


def _oracle_rows(cfg, point, results):
    sysc, orc, sw = cfg.system, cfg.oracle, cfg.sweep
    code = _CODES["oracle_suite"]
    A_s, A_c = build_constellation(sysc.primary), build_constellation(sysc.secondary)
    snr = sw.snr_db[0]
    sigma2 = noise_variance(snr, sysc.p)

    for K in sw.K:
        for M in sw.M_r:
            if A_s.size**K * A_c.size > 4096:
                log.warning("skipping exhaustive ML check at K=%d: search space too large", K)
                continue
            rng = make_rng(cfg.seed, (code, 1, K, M))
            n = orc.ml_blocks
            h1, l, g = _links(sysc, n, M, rng)
            h2 = sysc.alpha * l * g
            si = rng.integers(A_s.size, size=(n, K))
            ci = rng.integers(A_c.size, size=n)
            y = synthesize_batch(h1, h2, sysc.p, A_s.points[si], A_c.points[ci], sigma2, rng)
            s_fast, c_fast, _ = ml_detect_batch(y, h1, h2, sysc.p, A_s, A_c)
            bad = 0
            for i in range(n):
                s_ref, c_ref, _ = ml_exhaustive(y[i], h1[i], h2[i], sysc.p, A_s, A_c)
                bad += int(c_ref != c_fast[i] or not np.array_equal(s_ref, s_fast[i]))
            yield ResultRow("oracle_suite", "ml_reduced", K, M, snr, "mismatches", float(bad), 0.0, n, cfg.seed)

    rng = make_rng(cfg.seed, (code, 2))
    cons = ConstraintSet(avg_power=1.0)
    A_cr = CIRCULAR if sysc.secondary == CIRCULAR else sysc.secondary
    misses, worst = 0, 0.0
    for _ in range(orc.alloc_instances):
        states = _siso_states(cfg, 1, rng, 2)
        fast = allocate_siso(states, (1.0, 1.0), cons, orc.alloc_grid, sigma2, sysc.primary, A_cr)
        ref = brute_force_siso(states, (1.0, 1.0), cons, orc.oracle_grid, sigma2, sysc.primary, A_cr)
        cell_p = 2 * cons.avg_power / (orc.alloc_grid - 1)
        cell_a = 1.0 / (orc.alloc_grid - 1)
        dp = np.max(np.abs(fast.power - ref.power)) / cell_p
        da = np.max(np.abs(fast.alpha - ref.alpha)) / cell_a
        worst = max(worst, dp, da)
        misses += int(dp > 1 or da > 1)
    n = orc.alloc_instances
    yield ResultRow("oracle_suite", "siso_alloc", 1, 1, snr, "outside_one_cell", float(misses), 0.0, n, cfg.seed)
    yield ResultRow("oracle_suite", "siso_alloc", 1, 1, snr, "max_offset_cells", float(worst), 0.0, n, cfg.seed)

    rng = make_rng(cfg.seed, (code, 3))
    n = orc.impedance_draws
    gamma = np.sqrt(rng.uniform(0, 1, n)) * np.exp(2j * np.pi * rng.uniform(0, 1, n))
    z_a = rng.uniform(1, 100, n) + 1j * rng.uniform(-100, 100, n)
    err = np.abs(gamma_from_impedance(impedance_from_gamma(gamma, z_a), z_a) - gamma).max()
    yield ResultRow("oracle_suite", "impedance", 1, 1, snr, "max_roundtrip_error", float(err), 0.0, n, cfg.seed)

    rng = make_rng(cfg.seed, (code, 4))
    n = orc.mmse_draws
    M = max(2, max(sw.M_r))
    h1 = complex_normal((n, M), 1.0, rng)
    h2 = complex_normal((n, M), 1.0, rng)
    zf = linear_filter(h1, h2, 1.0, 0.0, "zf")
    mmse = linear_filter(h1, h2, 1.0, 1e-12, "mmse")
    rel = np.linalg.norm(mmse - zf, axis=(-2, -1)) / np.linalg.norm(zf, axis=(-2, -1))
    yield ResultRow("oracle_suite", "mmse_vs_zf", 1, M, math.inf, "max_relative_difference",
                    float(rel.max()), 0.0, n, cfg.seed)


_KINDS = {
    "ber_sweep": (_ber_points, _ber_rows),
    "rate_sweep": (_rate_points, _rate_rows),
    "ris_scaling": (_ris_points, _ris_rows),
    "fdsr_sweep": (_fdsr_points, _fdsr_rows),
    "allocation": (_alloc_points, _alloc_rows),
    "oracle_suite": (_oracle_points, _oracle_rows),
}


def resolve_workers(cfg):
    return cfg.workers or os.cpu_count() or 1


def iter_experiment(config, executor=None):
    """
    Yield result rows point by point in sweep order.

    Rows of a finished point are yielded before the next point starts, so
    a consumer can flush partial results when interrupted.
    """
    points, to_rows = _KINDS[config.experiment]
    for point, fn, tasks in points(config):
        log.info("%s %s", config.experiment, point)
        if executor is not None and len(tasks) > 1:
            results = list(executor.map(fn, tasks))
        else:
            results = [fn(t) for t in tasks]
        yield from to_rows(config, point, results)


def run_experiment(config, workers=None):
    """
    Run a full sweep and return its rows.

    Parameters
    ----------
    config : ExperimentConfig
    workers : int, optional
        Overrides ``config.workers``; results are identical for any value.
    """
    n = resolve_workers(config) if workers is None else int(workers)
    if n <= 1:
        return list(iter_experiment(config))
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(iter_experiment(config, pool))
