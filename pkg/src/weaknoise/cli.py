"""
Command-line front end.

``weaknoise {cycles,perturb,direct,all} [--config PATH] [--out DIR]
[--nmax N] [--sigma-order K] [--quiet]``

Each command writes plain CSV/text files into the output directory, each
starting with a ``#`` header block (tool version, config hash, truncation).
Output contains no timestamps, so reruns with the same config reproduce the
files byte for byte.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .config import RunConfig, load_config
from .cycles import (
    PrimeCycle,
    cycles_to_csv,
    enumerate_prime_itineraries,
    itinerary_str,
    locate_cycle,
)
from .direct import asymptotic_ratio_fit, compare_curves, curves_to_csv
from .errors import WeakNoiseError
from .spectral import EigenExpansion, assemble_traces, convergence_rows, cumulants

__all__ = ["main", "Session", "cmd_cycles", "cmd_perturb", "cmd_direct", "cmd_all", "format_table"]

log = logging.getLogger("weaknoise")


class StageError(WeakNoiseError):
    """A pipeline failure tagged with the stage that raised it."""


@dataclass
class Session:
    """State shared by the commands of one invocation."""

    config: RunConfig
    out: Path
    cycles: list[PrimeCycle] | None = None
    rows: list[EigenExpansion] | None = None
    Q: Any = None
    failures: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.spec = self.config.build_map()
        self.out.mkdir(parents=True, exist_ok=True)

    def header(self) -> list[str]:
        c = self.config
        sizes = " ".join(f"{k}={v}" for k, v in sorted(c.sizes.items(), key=lambda kv: str(kv[0])))
        return [
            f"weaknoise {__version__}",
            f"config sha256:{c.digest()}",
            f"map {self.spec.name} kernel {c.kernel.get('kind', 'gaussian')}",
            f"n_max {c.n_max} sigma_order {c.sigma_order} sizes {sizes}",
        ]

    def write(self, name: str, body: str) -> Path:
        path = self.out / name
        text = "".join(f"# {line}\n" for line in self.header()) + body
        path.write_text(text)
        log.info("wrote %s", path)
        return path


def _fmt(x: float) -> str:
    return "" if not math.isfinite(x) else f"{x:.15g}"


def _csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


# --------------------------------------------------------------------------
# stages


def _ensure_cycles(s: Session) -> list[PrimeCycle]:
    if s.cycles is not None:
        return s.cycles
    tol = s.config.tolerances.get("cycle_residual", 1e-12)
    found = []
    for word in enumerate_prime_itineraries(s.config.n_max, s.spec.branch_count):
        try:
            found.append(locate_cycle(s.spec, word, residual_tol=tol))
        except WeakNoiseError as exc:
            msg = f"cycles/{itinerary_str(word)}: {exc}"
            log.error(msg)
            s.failures.append(msg)
    s.cycles = found
    log.info("located %d prime cycles up to length %d", len(found), s.config.n_max)
    return found


def cmd_cycles(s: Session) -> int:
    cycles = _ensure_cycles(s)
    s.write("cycles.csv", cycles_to_csv(cycles))
    return 1 if s.failures else 0


def _even_only(s: Session) -> bool:
    return s.config.build_kernel().is_even


def _powers(s: Session) -> list[int]:
    J = s.config.sigma_order
    return list(range(0, J + 1, 2)) if _even_only(s) else list(range(J + 1))


def _ensure_expansion(s: Session) -> list[EigenExpansion]:
    if s.rows is not None:
        return s.rows
    cycles = _ensure_cycles(s)
    if s.failures:
        raise StageError("perturb: cycle table incomplete; " + "; ".join(s.failures))
    c = s.config
    try:
        C = assemble_traces(s.spec, cycles, c.n_max, c.build_sizes(), c.build_kernel(),
                            c.sigma_order, c.workers)
    except WeakNoiseError as exc:
        raise StageError(f"perturb/traces: {exc}") from exc
    Q = cumulants(C)
    s.Q = Q
    try:
        s.rows = convergence_rows(Q, c.sigma_order)
    except WeakNoiseError as exc:
        raise StageError(f"perturb/roots: {exc}") from exc
    return s.rows


def _agreeing_digits(value: float, reference: float) -> int:
    if value == reference:
        return 15
    rel = abs(value - reference) / max(abs(reference), 1e-300)
    return int(min(15, max(3, math.floor(-math.log10(rel)) + 1)))


def format_table(rows: Sequence[EigenExpansion], powers: Sequence[int]) -> str:
    """Text table of ``nu`` per truncation length, each entry shown to the
    number of significant digits it shares with the last row."""
    last = rows[-1]
    names = [f"nu_{p}" for p in powers]
    cells = []
    for i, r in enumerate(rows):
        line = [str(r.n_max)]
        for p in powers:
            v, ref = r.nu_coeff(p), last.nu_coeff(p)
            d = 15 if i == len(rows) - 1 else _agreeing_digits(v, ref)
            line.append(f"{v:.{d}g}")
        cells.append(line)
    widths = [max(len(x) for x in col) for col in zip(["n", *names], *cells)]
    fmt = lambda cols: "  ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip()
    out = [fmt(["n", *names]), fmt(["-" * w for w in widths])]
    out += [fmt(line) for line in cells]
    return "\n".join(out) + "\n"


def cmd_perturb(s: Session) -> int:
    rows = _ensure_expansion(s)
    powers = _powers(s)
    s.write("table.txt", format_table(rows, powers))
    s.write("convergence.csv", _csv(
        ["n"] + [f"nu_{p}" for p in powers],
        [[r.n_max] + [r.nu_coeff(p) for p in powers] for r in rows],
    ))
    final = rows[-1]
    s.write("expansion.csv", _csv(
        ["power", "z", "nu"],
        [[p, final.z_coeff(p), final.nu_coeff(p)] for p in powers],
    ))
    Q = s.Q.Q
    s.write("cumulants.csv", _csv(
        ["n"] + [f"Q_{p}" for p in powers],
        [[n] + [float(Q[n, p]) for p in powers] for n in range(1, s.Q.n_max + 1)],
    ))
    if _even_only(s):
        try:
            fit = asymptotic_ratio_fit(final.nu_even)
        except WeakNoiseError as exc:
            log.warning("growth fit skipped: %s", exc)
        else:
            body = _csv(
                ["k", "nu_2k", "log_residual"],
                [[k, float(final.nu_even[k]), r] for k, r in zip(fit.ks, fit.residuals)],
            )
            s.write("growth.csv", f"# fit |nu_2k| ~ C k! a^k k^b: a={fit.a:.15g} "
                                  f"b={fit.b:.15g} log_C={fit.log_c:.15g}\n" + body)
    log.info("nu_0 = %.15g", final.nu_coeff(0))
    return 0


def cmd_direct(s: Session) -> int:
    rows = _ensure_expansion(s)
    d = s.config.direct
    try:
        curves = compare_curves(s.spec, s.config.sigma_grid, rows[-1],
                                M=int(d.get("basis_size", 30)), bins=int(d.get("lattice_bins", 1024)))
    except WeakNoiseError as exc:
        raise StageError(f"direct: {exc}") from exc
    s.write("direct.csv", curves_to_csv(curves))
    return 0


def cmd_all(s: Session) -> int:
    status = cmd_cycles(s)
    if status:
        return status
    cmd_perturb(s)
    return cmd_direct(s)


COMMANDS = {"cycles": cmd_cycles, "perturb": cmd_perturb, "direct": cmd_direct, "all": cmd_all}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="weaknoise", description=__doc__.split("\n\n")[0].strip())
    p.add_argument("--version", action="version", version=f"weaknoise {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML run configuration")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides config)")
    common.add_argument("--nmax", type=int, metavar="N", help="maximal cycle length")
    common.add_argument("--sigma-order", type=int, metavar="K", help="highest power of sigma")
    common.add_argument("--quiet", action="store_true", help="only report errors")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("cycles", parents=[common], help="locate prime cycles")
    sub.add_parser("perturb", parents=[common], help="weak-noise expansion of the eigenvalue")
    sub.add_parser("direct", parents=[common], help="compare with finite-noise discretizations")
    sub.add_parser("all", parents=[common], help="run cycles, perturb and direct")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", force=True)
    try:
        config = load_config(args.config).with_overrides(
            out=args.out, n_max=args.nmax, sigma_order=args.sigma_order
        )
        session = Session(config, Path(config.out))
        return COMMANDS[args.command](session)
    except WeakNoiseError as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
