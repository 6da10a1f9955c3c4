"""Command-line experiment runner; every subcommand writes one CSV.

Exit codes: 0 success, 2 configuration error, 3 numerical error or abort.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys

from onebit_dmt import analytic
from onebit_dmt.channel import AntennaConfig, SnrPoint
from onebit_dmt.config import ConfigError, ExperimentConfig, load_config
from onebit_dmt.errors import (
    DomainError,
    EstimationError,
    FormulaDomainError,
    PreconditionError,
    StageCapExceeded,
)
from onebit_dmt.protocol import (
    PowerMode,
    SchemeConfig,
    audit_power,
    empirical_multiplexing,
    estimate_diversity,
    run_batch,
)

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

UNITS = "# units: snr_db in dB (rho = 10^(snr_db/10)); rho linear; delay in channel uses; diversity dimensionless"


class Unsupported(ConfigError):
    pass


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "pass" if x else "FAIL"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _dlabel(D) -> str:
    return "inf" if D is None else str(D)


class Table:
    """CSV text with ``#`` comment lines ahead of the header."""

    def __init__(self, cfg: ExperimentConfig, command: str):
        self.comments = [f"command = {command}", *cfg.echo()]
        self.sections: list[tuple[list[str], list[list]]] = []

    def note(self, text: str) -> None:
        self.comments.append(text)

    def section(self, header: list[str]) -> list[list]:
        rows: list[list] = []
        self.sections.append((header, rows))
        return rows

    def render(self) -> str:
        buf = io.StringIO()
        for c in self.comments:
            buf.write(f"# {c}\n")
        buf.write(UNITS + "\n")
        w = csv.writer(buf, lineterminator="\n")
        for n, (header, rows) in enumerate(self.sections):
            if n:
                buf.write("\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(x) for x in row])
        return buf.getvalue()


def _r_grid(cfg: ExperimentConfig) -> list[float]:
    if cfg.r_grid is not None:
        return list(cfg.r_grid)
    m = min(cfg.M, cfg.N)
    return [m * k / 20 for k in range(21)]


def _try(fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except (FormulaDomainError, PreconditionError):
        return None


def cmd_curve(cfg: ExperimentConfig, command: str = "curve") -> Table:
    """Analytic bounds versus ``r`` for each deadline; negative values clamped to 0."""
    config = AntennaConfig(cfg.M, cfg.N)
    deadlines = cfg.deadlines or (1, 2, 4)
    printed_alpha = "printed_alpha" in cfg.variants
    table = Table(cfg, command)
    if cfg.l < cfg.M + cfg.N:
        table.note(f"theorem2 columns empty: requires l >= M+N = {cfg.M + cfg.N}")
    if cfg.M == 1 and cfg.N != 1:
        table.note("theorem3 columns empty: 1/(M-1) is singular at M=1")
    header = ["r", "d_no_csi", "theorem1"]
    for D in deadlines:
        d = _dlabel(D)
        header += [f"theorem2_D{d}", f"theorem3_D{d}", f"exmp1_D{d}", f"exmp2_D{d}"]
    rows = table.section(header)
    curve = analytic.dmt_no_csi(config)
    clamp = lambda v: None if v is None else max(float(v), 0.0)  # noqa: E731
    for r in _r_grid(cfg):
        row = [float(r), float(analytic.eval_curve(curve, r)), float(analytic.theorem1_bound(config, cfg.l, r))]
        for D in deadlines:
            Dv = math.inf if D is None else D
            t2 = _try(analytic.theorem2_bound, config, cfg.l, Dv, r)
            t3 = _try(_quiet_theorem3, config, cfg.l, Dv, r, printed_alpha)
            e1 = e2 = None
            if cfg.N == 1:
                e1 = _try(analytic.exmp1_variant, cfg.M, cfg.l, Dv, r)
                e2 = analytic.exmp2_variant(cfg.M, cfg.l, Dv, r)
            row += [clamp(t2), clamp(t3), clamp(e1), clamp(e2)]
        rows.append(row)
    return table


def _quiet_theorem3(config, l, D, r, printed_alpha):
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", analytic.NegativeBoundWarning)
        return analytic.theorem3_bound(config, l, D, r, printed_alpha)


def cmd_figure2(cfg: ExperimentConfig) -> Table:
    """Curve table with the two-by-two, ``l = 8`` defaults."""
    return cmd_curve(cfg, "figure2")


def cmd_figure3(cfg: ExperimentConfig) -> Table:
    """Fraction of unbounded-delay diversity kept at deadline ``D`` (single receive antenna)."""
    if cfg.N != 1:
        raise Unsupported("figure3 is defined for N=1 only")
    config = AntennaConfig(cfg.M, cfg.N)
    deadlines = cfg.deadlines or tuple(range(1, 11))
    printed = "printed_exmp2" in cfg.variants
    table = Table(cfg, "figure3")
    table.note("ratio_short_term = " + ("printed N=1 short-term bound" if printed else "general short-term bound") + " / l(1-r)")
    table.note("ratio_long_term = N=1 long-term bound / l(1-r)")
    rows = table.section(["D", "ratio_short_term", "ratio_long_term"])

    def ratios(D, r):
        Dv = math.inf if D is None else D
        base = analytic.theorem1_bound(config, cfg.l, r)
        st = analytic.exmp2_variant(cfg.M, cfg.l, Dv, r) if printed else _try(analytic.theorem2_bound, config, cfg.l, Dv, r)
        lt = _try(analytic.exmp1_variant, cfg.M, cfg.l, Dv, r)
        return (None if st is None else st / base, None if lt is None else lt / base)

    for D in deadlines:
        at0 = ratios(D, 0.0)
        at_half = ratios(D, 0.5)
        for a, b in zip(at0, at_half):
            if a is not None and abs(a - b) > 1e-12 * max(1.0, abs(a)):
                raise ArithmeticError(f"ratio depends on r at D={_dlabel(D)}: {a} vs {b}")
        rows.append([_dlabel(D), *at0])
    return table


def _scheme(cfg: ExperimentConfig, D) -> SchemeConfig:
    if D is None or cfg.power_mode == "short":
        mode = PowerMode.SHORT_TERM
    else:
        mode = PowerMode.LONG_TERM_EXPONENT if cfg.schedule == "exponent" else PowerMode.LONG_TERM_PRINTED
    return SchemeConfig(
        cfg.l,
        D,
        cfg.r,
        mode,
        printed_f_i="printed_f_i" in cfg.variants,
        printed_alpha="printed_alpha" in cfg.variants,
        stage_cap=cfg.stage_cap,
    )


def _theory(config: AntennaConfig, scheme: SchemeConfig):
    if scheme.D is None:
        return analytic.theorem1_bound(config, scheme.l, scheme.r)
    if scheme.power_mode.long_term:
        return _try(_quiet_theorem3, config, scheme.l, scheme.D, scheme.r, scheme.printed_alpha)
    if scheme.D == 1:
        return float(analytic.eval_curve(analytic.dmt_no_csi(config), scheme.r))
    return _try(analytic.theorem2_bound, config, scheme.l, scheme.D, scheme.r)


def cmd_sweep(cfg: ExperimentConfig) -> Table:
    """Monte Carlo sweep over SNR for each deadline, then a diversity-slope block."""
    config = AntennaConfig(cfg.M, cfg.N)
    deadlines = cfg.deadlines or (1, 2, None)
    table = Table(cfg, "sweep")
    rows = table.section([
        "scheme", "D", "snr_db", "rho", "trials", "mean_error_bound", "error_bound_stderr",
        "mean_delay", "avg_power", "empirical_multiplexing", "deferral_fraction",
    ])
    slopes = []
    for D in deadlines:
        scheme = _scheme(cfg, D)
        summaries = []
        for db in cfg.snr_db:
            snr = SnrPoint.from_db(db)
            s = run_batch(config, scheme, snr, cfg.trials, cfg.seed, workers=cfg.workers)
            summaries.append(s)
            rows.append([
                scheme.label, _dlabel(D), float(db), snr.rho, s.trials, s.mean_error_bound,
                s.error_bound_stderr, s.mean_delay, s.avg_power_linear,
                empirical_multiplexing(s), 1.0 - s.delay_histogram.get(1, 0) / s.trials,
            ])
        try:
            est = estimate_diversity(summaries)
            slopes.append([scheme.label, _dlabel(D), est.slope, est.stderr, est.intercept,
                           len(est.snr_points), _theory(config, scheme)])
        except EstimationError as exc:
            table.note(f"slope for {scheme.label}: {exc}")
            slopes.append([scheme.label, _dlabel(D), None, None, None, 0, _theory(config, scheme)])
    srows = table.section(["scheme", "D", "slope", "slope_stderr", "intercept", "points_used", "theory_bound"])
    srows.extend(slopes)
    return table


def cmd_audit(cfg: ExperimentConfig) -> Table:
    """Empirical long-term power usage per SNR with pass/fail against the budget."""
    if cfg.power_mode != "long":
        raise Unsupported(
            "audit applies to long-term power control; short-term transmissions always use "
            "exactly rho (average power 1). Set power_mode = \"long\"."
        )
    bounded = [D for D in (cfg.deadlines or (3,)) if D is not None]
    if not bounded:
        raise ConfigError("audit needs a finite deadline")
    D = bounded[0]
    config = AntennaConfig(cfg.M, cfg.N)
    scheme = _scheme(cfg, D)
    summaries = [
        run_batch(config, scheme, SnrPoint.from_db(db), cfg.trials, cfg.seed, workers=cfg.workers)
        for db in cfg.snr_db
    ]
    report = audit_power(summaries, scheme, cfg.budget)
    table = Table(cfg, "audit")
    table.note("schedule exponents per SNR: " + "; ".join(
        ",".join(f"{g:.6g}" for g in s.schedule) for s in summaries))
    table.note("stageK = rho^(g_K-1) * Pr(reach stage K)")
    rows = table.section(["snr_db", "rho", "avg_power", "budget", "status"] + [f"stage{i}" for i in range(1, D + 1)])
    for db, row in zip(cfg.snr_db, report.rows):
        rows.append([float(db), row.rho, row.avg_power_linear, cfg.budget, row.passed, *row.stage_contributions])
    table.note(f"overall = {'pass' if report.passed else 'FAIL'}")
    return table


COMMANDS = {
    "curve": cmd_curve,
    "figure2": cmd_figure2,
    "figure3": cmd_figure3,
    "sweep": cmd_sweep,
    "audit": cmd_audit,
}

PRESETS = {
    "figure2": {"M": 2, "N": 2, "l": 8, "deadlines": (1, 2, 3, 4, 8)},
    "figure3": {"M": 3, "N": 1, "l": 10},
    "audit": {"power_mode": "long"},
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat TOML file of experiment keys")
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--snr-db-list", dest="snr_db", help="comma-separated SNR grid in dB")
    common.add_argument("--out", help="output CSV path (default: stdout)")
    common.add_argument("--variant", dest="variants", action="append",
                        choices=["printed_alpha", "printed_exmp2", "printed_f_i"])
    common.add_argument("--schedule", choices=["printed", "exponent"])
    common.add_argument("--power-mode", dest="power_mode", choices=["short", "long"])
    common.add_argument("-M", "--tx", dest="M", type=int)
    common.add_argument("-N", "--rx", dest="N", type=int)
    common.add_argument("-l", "--blocklength", dest="l", type=int)
    common.add_argument("-D", "--deadlines", dest="deadlines", help="comma-separated, 'inf' for unbounded")
    common.add_argument("--r-grid", dest="r_grid", help="comma-separated multiplexing gains")
    common.add_argument("-r", "--rate", dest="r", type=float, help="target multiplexing gain for sweep/audit")
    common.add_argument("--budget", type=float)
    common.add_argument("--workers", type=int)
    common.add_argument("--stage-cap", dest="stage_cap", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="onebit-dmt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=fn.__doc__.splitlines()[0])
    return parser


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose") and v is not None}
    try:
        cfg = load_config(args.config)
        preset = PRESETS.get(args.command, {})
        if preset:
            # presets sit between the file defaults and explicit flags
            cfg = load_config(args.config, {**{k: v for k, v in preset.items() if _is_default(cfg, k)}, **overrides})
        else:
            cfg = load_config(args.config, overrides)
        table = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StageCapExceeded, DomainError, PreconditionError, ArithmeticError, EstimationError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    text = table.render()
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return EXIT_OK


def _is_default(cfg: ExperimentConfig, key: str) -> bool:
    return getattr(cfg, key) == getattr(ExperimentConfig(), key)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
