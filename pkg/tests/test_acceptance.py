"""Exit criteria for the package; each test records one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines are printed in the
terminal summary under "acceptance criteria".
"""

import io
import math
import time

import numpy as np
import pytest

from onebit_dmt import analytic as an
from onebit_dmt.channel import AntennaConfig, SnrPoint
from onebit_dmt.cli import run
from onebit_dmt.outage import ThresholdSpec, outage_prob_mc, outage_prob_rank1
from onebit_dmt.protocol import PowerMode, SchemeConfig, audit_power, estimate_diversity, run_batch
from onebit_dmt.rng import stream


@pytest.fixture
def record(acceptance_log):
    def _record(n, ok, detail, elapsed):
        acceptance_log.append(f"[{n:2d}] {'PASS' if ok else 'FAIL'} ({elapsed:.2f}s) {detail}")
        return ok

    return _record


def test_01_analytic_exactness(record):
    t0 = time.perf_counter()
    vertex_ok = all(
        an.eval_curve(an.dmt_no_csi(AntennaConfig(M, N)), k) == (M - k) * (N - k)
        and an.dmt_no_csi(AntennaConfig(M, N)).vertices == tuple((k, (M - k) * (N - k)) for k in range(min(M, N) + 1))
        for M in range(1, 9)
        for N in range(1, 9)
        for k in range(min(M, N) + 1)
    )
    worst_d1 = 0.0
    for M in range(1, 5):
        for N in range(1, 5):
            cfg = AntennaConfig(M, N)
            for r in np.linspace(0, cfg.min_mn, 100):
                d = an.eval_curve(an.dmt_no_csi(cfg), r)
                worst_d1 = max(worst_d1, abs(an.theorem2_bound(cfg, M + N + 3, 1, r) - d))
    c22 = AntennaConfig(2, 2)
    gap = abs(an.theorem2_bound(c22, 8, 10**6, 0.0) - an.theorem1_bound(c22, 8, 0.0))
    elapsed = time.perf_counter() - t0
    ok = vertex_ok and worst_d1 <= 1e-12 and gap < 0.01 and elapsed < 1
    record(1, ok, f"vertices exact={vertex_ok}, max|T2(D=1)-d|={worst_d1:.1e}, |T2(1e6)-T1|={gap:.2e}", elapsed)
    assert ok


def test_02_headline_delay_example(record):
    t0 = time.perf_counter()
    D = an.delay_for_epsilon(10, 3, 0.1, power_control=True).required_D
    c31 = AntennaConfig(3, 1)
    ratios = [an.exmp1_variant(3, 10, 4, r) / an.theorem1_bound(c31, 10, r) for r in np.linspace(0, 0.999, 200)]
    elapsed = time.perf_counter() - t0
    ok = D == 4 and min(ratios) >= 0.9 and abs(ratios[0] - 174 / 181) < 1e-12 and elapsed < 1
    record(2, ok, f"required D={D}, min ratio={min(ratios):.4f} (174/181={174/181:.4f})", elapsed)
    assert ok


def test_03_figure2_regeneration(record):
    t0 = time.perf_counter()
    buf = io.StringIO()
    code = run(["curve", "-M", "2", "-N", "2", "-l", "8", "-D", "1,2,3,4,8"], stdout=buf)
    rows = [line.split(",") for line in buf.getvalue().splitlines() if line and not line.startswith("#")]
    header, data = rows[0], [[float(x) if x else math.nan for x in row] for row in rows[1:]]
    col = {h: i for i, h in enumerate(header)}
    ds = [1, 2, 3, 4, 8]
    mono = anchored = below = True
    for row in data:
        r = row[col["r"]]
        vals = [row[col[f"theorem2_D{D}"]] for D in ds]
        mono &= all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
        anchored &= abs(vals[0] - row[col["d_no_csi"]]) <= 1e-12
        below &= all(v <= 8 * (2 - r) + 1e-12 for v in vals)
    elapsed = time.perf_counter() - t0
    ok = code == 0 and len(data) > 10 and mono and anchored and below and elapsed < 1
    record(3, ok, f"{len(data)} r points: nondecreasing in D={mono}, D=1 anchored={anchored}, below l(2-r)={below}", elapsed)
    assert ok


def test_04_rank1_outage_slope_law(record):
    t0 = time.perf_counter()
    rhos = [1e3, 1e4, 1e5, 1e6]
    worst = 0.0
    for M in (1, 2, 3):
        cfg = AntennaConfig(M, 1)
        for f in (0.3, 0.5, 0.7):
            p = [outage_prob_rank1(M, SnrPoint(rho), ThresholdSpec.short_term(cfg, f)).value for rho in rhos]
            slope = np.polyfit(np.log(rhos), -np.log(p), 1)[0]
            dev = abs(slope - M * (1 - f)) / (M * (1 - f))
            worst = max(worst, dev)
    elapsed = time.perf_counter() - t0
    ok = worst < 0.05 and elapsed < 1
    record(4, ok, f"max relative slope deviation {worst:.3%} over 9 (M,f) pairs", elapsed)
    assert ok


def test_05_monte_carlo_vs_closed_form(record):
    t0 = time.perf_counter()
    configs = [(1, 1), (2, 1), (3, 1), (1, 2), (1, 3)]
    fs = [0.3, 0.5, 0.7, 0.9, 1.0]
    rhos = [1e1, 1e2, 1e3, 1e4]
    passed = cells = 0
    for ci, (M, N) in enumerate(configs):
        cfg = AntennaConfig(M, N)
        for fi, f in enumerate(fs):
            spec = ThresholdSpec.short_term(cfg, f)
            for ri, rho in enumerate(rhos):
                snr = SnrPoint(rho)
                exact = outage_prob_rank1(cfg.max_mn, snr, spec).value
                est = outage_prob_mc(cfg, spec, snr, 100_000, stream(2025, 100 * ci + 10 * fi + ri))
                cells += 1
                passed += abs(est.value - exact) <= 3 * est.stderr
    elapsed = time.perf_counter() - t0
    ok = cells == 100 and passed >= 99 and elapsed < 300
    record(5, ok, f"{passed}/{cells} cells within 3 stderr at 1e5 trials", elapsed)
    assert ok


def test_06_geometric_delay_law(record):
    t0 = time.perf_counter()
    c11 = AntennaConfig(1, 1)
    snr = SnrPoint.from_log(10)
    l = 4
    s = run_batch(c11, SchemeConfig(l, None, 0.25), snr, 100_000, seed=606)
    p = outage_prob_rank1(1, snr, ThresholdSpec.unbounded(c11)).value
    frac = 1 - s.delay_histogram[1] / s.trials
    se = math.sqrt(p * (1 - p) / s.trials)
    excess = s.mean_delay / l - 1
    target = 1 / snr.log_rho**2
    elapsed = time.perf_counter() - t0
    ok = abs(frac - p) <= 3 * se and target / 2 <= excess <= 2 * target and elapsed < 60
    record(6, ok, f"deferral {frac:.5f} vs {p:.5f} (+-3se {3*se:.5f}); E[T]/l-1={excess:.5f} vs 1/log^2={target:.3f}", elapsed)
    assert ok


def test_07_empirical_diversity_ordering(record):
    t0 = time.perf_counter()
    c11 = AntennaConfig(1, 1)
    rhos = np.logspace(2, 5, 5)
    est = {}
    for name, D in (("D=1", 1), ("short D=2", 2), ("unbounded", None)):
        summaries = [run_batch(c11, SchemeConfig(4, D, 0.25), SnrPoint(rho), 10**6, seed=707) for rho in rhos]
        est[name] = estimate_diversity(summaries)
    a, b, c = est["D=1"], est["short D=2"], est["unbounded"]
    sep_ab = (b.slope - a.slope) / math.hypot(a.stderr, b.stderr)
    sep_bc = (c.slope - b.slope) / math.hypot(b.stderr, c.stderr)
    d = an.eval_curve(an.dmt_no_csi(c11), 0.25)
    elapsed = time.perf_counter() - t0
    ok = sep_ab > 2 and sep_bc > 2 and abs(a.slope - d) <= 0.15 * d and elapsed < 600
    detail = ", ".join(f"{k}: {v.slope:.3f}+-{v.stderr:.3f} ({len(v.snr_points)} pts)" for k, v in est.items())
    record(7, ok, f"{detail}; separations {sep_ab:.1f}, {sep_bc:.1f} combined se; d(0.25)={d}", elapsed)
    assert ok


def test_08_power_audit(record):
    t0 = time.perf_counter()
    c31 = AntennaConfig(3, 1)
    short = SchemeConfig(10, 3, 0.5)
    s_short = [run_batch(c31, short, SnrPoint(rho), 10**6, seed=808) for rho in (1e2, 1e3)]
    rep_short = audit_power(s_short, short)
    long = SchemeConfig(10, 3, 0.5, PowerMode.LONG_TERM_EXPONENT)
    s_long = [run_batch(c31, long, SnrPoint(rho), 10**6, seed=808) for rho in (1e2, 1e3)]
    rep_long = audit_power(s_long, long, budget=2.0)
    elapsed = time.perf_counter() - t0
    short_exact = all(row.avg_power_linear == 1.0 for row in rep_short.rows)
    ok = short_exact and rep_short.passed and rep_long.passed and elapsed < 300
    powers = ", ".join(f"{row.avg_power_linear:.4f}" for row in rep_long.rows)
    record(8, ok, f"short-term avg power exactly 1: {short_exact}; exponent schedule avg power [{powers}] within c=2", elapsed)
    assert ok


def test_09_erratum_regressions(record):
    t0 = time.perf_counter()
    c22 = AntennaConfig(2, 2)
    _, printed_alpha, _ = an.segment(c22, 0.5, printed_alpha=True)
    _, vertex_alpha, _ = an.segment(c22, 0.5)
    c31 = AntennaConfig(3, 1)
    d = an.dmt_no_csi(c31)
    exmp2_differs = all(an.exmp2_variant(3, 10, 1, r) != an.eval_curve(d, r) for r in (0.0, 0.25, 0.5, 0.9))
    elapsed = time.perf_counter() - t0
    ok = printed_alpha != vertex_alpha and exmp2_differs and elapsed < 1
    record(9, ok, f"printed alpha_1={printed_alpha} vs vertex alpha_1={vertex_alpha}; printed N=1 bound at D=1 != d(r): {exmp2_differs}", elapsed)
    assert ok


def test_10_sweep_determinism(record, tmp_path):
    t0 = time.perf_counter()
    cfg = tmp_path / "sweep.toml"
    cfg.write_text('M = 1\nN = 1\nl = 4\nr = 0.25\nD = [1, 2, "inf"]\nsnr_db = [20, 30, 40]\ntrials = 50000\nseed = 99\n')
    outs = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        assert run(["sweep", "--config", str(cfg), "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    elapsed = time.perf_counter() - t0
    ok = outs[0] == outs[1] and len(outs[0]) > 0
    record(10, ok, f"two sweeps produced byte-identical CSV ({len(outs[0])} bytes)", elapsed)
    assert ok
