"""Command-line driver: ``paraww run | check | plot-data``."""
from __future__ import annotations

import argparse
import logging
import os
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, parse_config
from .diagnostics import DiagnosticsRecord, breakdown_report, make_record
from .dynamics import Evaluation, SimParams, WaveState, run
from .persistence import (CsvWriter, SnapshotError, emit_plot_data, read_diagnostics,
                          read_snapshot, write_snapshot)

__all__ = ["initial_state", "sim_params", "run_simulation", "RunOutcome", "main"]

log = logging.getLogger("paraww")

EXIT_OK, EXIT_DEPTH, EXIT_NAN, EXIT_SOLVER = 0, 2, 3, 4
EXIT_USAGE = 1


def initial_state(cfg: RunConfig) -> WaveState:
    """Build the configured initial data.

    ``shear``: constant vorticity ``omega0`` with ``v^1 = -omega0 (y + 1)``;
    ``stream``: uniform horizontal flow ``c``; ``standing_wave``: still water
    released from ``eta = amplitude cos(mode x_1)`` (period ``L`` per axis).
    """
    g = cfg.grid
    ic = cfg.initial_condition
    s = WaveState.rest(g)
    if ic.kind == "standing_wave":
        s.eta = ic.amplitude * np.cos(ic.mode * 2 * np.pi / g.L * g.x[0])
    elif ic.kind == "shear":
        s.V[0] = -ic.omega0
        s.omega[:] = ic.omega0 if g.d == 1 else 0.0
        if g.d == 2:
            s.omega[1] = ic.omega0  # pair (0, 2): d_1 v^3 - d_3 v^1 with v^3 = 0
    elif ic.kind == "stream":
        s.V[:] = ic.c
        s.Vb[:] = ic.c
    elif ic.kind == "file":
        s = read_snapshot(ic.path)
        if s.grid != g:
            raise ConfigError(f"snapshot grid {s.grid} differs from the configured grid",
                              key="initial_condition.path")
    return s


def sim_params(cfg: RunConfig) -> SimParams:
    return SimParams(h0=cfg.h0, tolerance=cfg.tolerance, backend=cfg.elliptic_backend,
                     cfl=cfg.cfl_safety, filter=cfg.filter)


@dataclass
class RunOutcome:
    exit_code: int
    status: str
    message: str
    steps: int
    records: list[DiagnosticsRecord] = field(default_factory=list)
    output_dir: Path | None = None


def _output_dir(cfg: RunConfig) -> Path:
    return Path(os.environ.get("WW_OUTPUT_DIR") or cfg.output_dir)


def run_simulation(cfg: RunConfig, output_dir: str | Path | None = None) -> RunOutcome:
    """Run ``cfg`` and write ``diagnostics.csv``, snapshots and ``breakdown.txt``.

    Snapshots go to ``snapshot_<step>.wwsn`` every ``snapshot_every`` steps and
    to ``snapshot_final.wwsn`` at the end (also after an abort).
    """
    out = Path(output_dir) if output_dir is not None else _output_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    params = sim_params(cfg)
    state = initial_state(cfg)
    records: list[DiagnosticsRecord] = []
    counter = {"n": 0}
    last_ev: dict[str, Evaluation] = {}

    with CsvWriter(out / "diagnostics.csv") as csv:
        def on_step(st: WaveState, ev: Evaluation, prev: WaveState | None, dt: float):
            rec = make_record(st, ev, prev, dt, last_ev.get("ev"), s=cfg.sobolev_s,
                              curvature_p=cfg.curvature_p, params=params,
                              with_zeta=cfg.residuals, with_symm=cfg.residuals)
            last_ev["ev"] = ev
            records.append(rec)
            csv.write(rec)
            n = counter["n"]
            if cfg.snapshot_every and n > 0 and n % cfg.snapshot_every == 0:
                write_snapshot(out / f"snapshot_{n:06d}.wwsn", st)
            counter["n"] = n + 1
            log.info("t = %.6g  E = %.12g  a_min = %.6g", st.t, rec.E_basic, rec.a_min)

        dt = cfg.dt if cfg.dt > 0 else None
        res = run(state, params, cfg.T_final, on_step=on_step, dt=dt)
        abort = None if res.status == "ok" else res.status
        if abort:
            csv.comment(f"abort: {abort}: {res.message}")
    write_snapshot(out / "snapshot_final.wwsn", res.state)
    if records:
        rep = breakdown_report(records, cfg.c0, cfg.h0, abort)
        (out / "breakdown.txt").write_text("\n".join(rep.lines()) + "\n")
    return RunOutcome(res.exit_code, res.status, res.message, res.steps, records, out)


# ---------------------------------------------------------------------------
# invariant suite
# ---------------------------------------------------------------------------

def _checks(dn_bottom: str):
    """Quick invariant checks as ``(name, callable -> (value, bound))``."""
    from .dn import dn_apply
    from .dynamics import assemble_rhs
    from .grid import GridSpec
    from .littlewood_paley import decompose
    from .paradiff import bony_remainder, paraproduct

    rng = np.random.default_rng(0)

    def bony():
        g = GridSpec(1, 128)
        worst = 0.0
        for _ in range(10):
            a, u = g.random_field(rng, 40), g.random_field(rng, 40)
            r = a * u - paraproduct(g, a, u) - paraproduct(g, u, a) - bony_remainder(g, u, a)
            worst = max(worst, np.abs(r).max() / (np.abs(a).max() * np.abs(u).max()))
        return worst, 1e-12

    def partition():
        g = GridSpec(1, 128)
        u = g.random_field(rng, 64)
        return float(np.abs(decompose(g, u).reconstruct() - u).max() / np.abs(u).max()), 1e-13

    def dn_flat():
        g = GridSpec(1, 64, Nz=65)
        x = g.x[0]
        worst = 0.0
        for k in (1, 4, 16):
            Gf = dn_apply(g, np.zeros(g.shape), np.cos(k * x), dn_bottom,
                          paralinearize=False).Gf
            sym = k / np.tanh(k) if dn_bottom == "dirichlet0" else k * np.tanh(k)
            worst = max(worst, np.abs(Gf - sym * np.cos(k * x)).max() / sym)
        return worst, 1e-6

    def rest():
        g = GridSpec(1, 32)
        ev = assemble_rhs(WaveState.rest(g))
        return max(ev.deriv.max_abs(), float(np.abs(ev.pressure.taylor_a - 1).max())), 1e-10

    def snapshot():
        import tempfile
        g = GridSpec(1, 16, Nz=9)
        s = WaveState.rest(g)
        s.eta = g.random_field(rng, 4) * 0.1
        s.omega = rng.standard_normal(s.omega.shape)
        with tempfile.TemporaryDirectory() as td:
            p = Path(td) / "s.wwsn"
            write_snapshot(p, s)
            r = read_snapshot(p)
        same = all(np.array_equal(a, b) for a, b in zip(s.fields().values(),
                                                        r.fields().values()))
        return (0.0 if same and r.t == s.t else 1.0), 0.0

    return [("bony_identity", bony), ("partition_of_unity", partition),
            (f"dn_flat_symbol[{dn_bottom}]", dn_flat), ("rest_fixed_point", rest),
            ("snapshot_round_trip", snapshot)]


def run_checks(dn_bottom: str = "dirichlet0", stream=None) -> bool:
    stream = sys.stdout if stream is None else stream
    ok_all = True
    for name, fn in _checks(dn_bottom):
        value, bound = fn()
        ok = value <= bound
        ok_all &= ok
        print(f"{'PASS' if ok else 'FAIL'} {name}: {value:.3e} (bound {bound:.1e})", file=stream)
    return ok_all


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="paraww", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log every step")
    sub = p.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run a simulation from a config file")
    r.add_argument("config")
    c = sub.add_parser("check", help="run the quick invariant suite")
    c.add_argument("--dn-bottom", default="dirichlet0", choices=("dirichlet0", "neumann0"))
    pd = sub.add_parser("plot-data", help="extract (t, value) columns from a diagnostics CSV")
    pd.add_argument("csv")
    pd.add_argument("fields", nargs="+")
    pd.add_argument("-o", "--out", default=None, help="output directory (default: CSV dir)")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.cmd == "run":
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                cfg = parse_config(args.config)
            for w in caught:
                print(f"warning: {w.message}", file=sys.stderr)
            outcome = run_simulation(cfg)
        except (ConfigError, SnapshotError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        print(f"status: {outcome.status} after {outcome.steps} steps"
              + (f" ({outcome.message})" if outcome.message else ""))
        print(f"output: {outcome.output_dir}")
        rep = outcome.output_dir / "breakdown.txt"
        if rep.exists():
            print(rep.read_text(), end="")
        return outcome.exit_code
    if args.cmd == "check":
        return 0 if run_checks(args.dn_bottom) else EXIT_USAGE
    if args.cmd == "plot-data":
        try:
            records, _ = read_diagnostics(args.csv)
            out = args.out if args.out is not None else Path(args.csv).parent
            for p in emit_plot_data(records, args.fields, out):
                print(p)
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        return 0
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
