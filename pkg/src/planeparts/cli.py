"""Command-line driver: ``planeparts {sample,limit-shape,kernel,lln,oracle}``.

Every data file starts with the effective configuration (``# key = value``
lines, or a JSON header for partition files).  Timestamps and thread counts
go only to a sidecar ``<out>.log`` so data files are byte-identical across
runs and thread counts.

Exit codes: 0 success, 2 invalid configuration, 1 computational failure.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import io
import math
import sys
from typing import Callable

import numpy as np

from . import __version__
from .bulkgeom import BulkPoint, LatticePoint, Pattern, density, in_region_A
from .errors import PlanePartsError, PreconditionError
from .kernels import FiniteQKernel, QuadratureConfig, correlation, kernel_Kq, kernel_sine
from .lln import FAMILIES, TestFunction, run_lln_experiment
from .qspecial import macmahon_constant
from .sampler import (DEFAULT_DELTA, exact_pattern_probability, plane_partition_counts,
                      enumerate_plane_partitions, resolve_threads, sample_plane_partitions,
                      format_partitions)


class ConfigError(Exception):
    """Invalid user configuration; the message names the field."""

    def __init__(self, field: str, msg: str):
        super().__init__(f"invalid {field}: {msg}")
        self.field = field


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError("arguments", message)


# ---------------------------------------------------------------------------
# config helpers
# ---------------------------------------------------------------------------

def read_config_file(path: str) -> dict[str, str]:
    """Plain ``key = value`` lines; ``#`` starts a comment; keys use flag names."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError("config", str(exc)) from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ConfigError("config", f"line {n} is not 'key = value'")
        out[key.strip().lstrip("-").replace("-", "_")] = val.strip()
    return out


def _float(field: str, text) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        raise ConfigError(field, f"{text!r} is not a number") from None


def _int(field: str, text) -> int:
    try:
        return int(text)
    except (TypeError, ValueError):
        raise ConfigError(field, f"{text!r} is not an integer") from None


def _floats(field: str, text: str) -> list[float]:
    return [_float(field, s) for s in str(text).split(",") if s.strip()]


def _resolve_q(ns) -> float:
    if ns.q is not None and ns.r is not None:
        raise ConfigError("q", "give either --q or --r, not both")
    if ns.r is not None:
        r = _float("r", ns.r)
        if not r > 0:
            raise ConfigError("r", f"must be positive, got {r!r}")
        return math.exp(-r)
    if ns.q is None:
        raise ConfigError("q", "one of --q or --r is required")
    q = _float("q", ns.q)
    if not 0 < q < 1:
        raise ConfigError("q", f"must lie in (0, 1), got {q!r}")
    return q


def _pattern(text: str) -> Pattern:
    try:
        return Pattern.parse(text)
    except PlanePartsError as exc:
        raise ConfigError("pattern", str(exc)) from None


def _point(field: str, text: str) -> LatticePoint:
    try:
        return LatticePoint.parse(text).require_valid()
    except PlanePartsError as exc:
        raise ConfigError(field, str(exc)) from None


def _positive(field: str, val: float) -> float:
    if not val > 0:
        raise ConfigError(field, f"must be positive, got {val!r}")
    return val


def _threads(ns) -> int:
    try:
        return resolve_threads(None if ns.threads is None else _int("threads", ns.threads))
    except ValueError:
        raise ConfigError("threads", "PLANEPARTS_THREADS must be an integer") from None


def _fmt(v) -> str:
    return format(v, ".17g") if isinstance(v, float) else str(v)


def _header(cfg: dict) -> str:
    return "".join(f"# {k} = {_fmt(v)}\n" for k, v in cfg.items())


class _Output:
    """Writes the data file (or stdout) and the sidecar log."""

    def __init__(self, path: str | None):
        self.path = path
        self.buf = io.StringIO()

    def write(self, text: str):
        self.buf.write(text)

    def close(self, command: str, cfg: dict, extra: dict):
        data = self.buf.getvalue()
        if self.path is None or self.path == "-":
            sys.stdout.write(data)
            return
        with open(self.path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(data)
        stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        with open(self.path + ".log", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"timestamp = {stamp}\ncommand = {command}\nversion = {__version__}\n")
            fh.write(_header({**cfg, **extra}).replace("# ", ""))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_sample(ns) -> int:
    q = _resolve_q(ns)
    n = _int("n", ns.n)
    if n < 1:
        raise ConfigError("n", f"must be at least 1, got {n}")
    seed = _int("seed", ns.seed)
    delta = _positive("delta", _float("delta", ns.delta))
    threads = _threads(ns)
    cfg = {"command": "sample", "q": q, "n": n, "seed": seed, "delta": delta}
    parts = sample_plane_partitions(q, n, seed, delta, threads)
    if ns.stats == "volume":
        cfg["stats"] = "volume"
        out = _Output(ns.out)
        out.write(_header(cfg))
        out.write(volume_histogram_csv(q, [p.volume for p in parts]))
        out.close("sample", cfg, {"threads": threads})
        return 0
    out = _Output(ns.out)
    out.write(format_partitions(parts, cfg))
    out.close("sample", cfg, {"threads": threads})
    return 0


def volume_histogram_csv(q: float, volumes, max_bin: int = 8) -> str:
    """``volume,count,expected,sigma,z`` rows for ``volume <= max_bin``."""
    n = len(volumes)
    counts = np.bincount(np.minimum(volumes, max_bin + 1), minlength=max_bin + 2)
    pp = plane_partition_counts(max_bin)
    M = macmahon_constant(q)
    lines = ["volume,count,expected,sigma,z"]
    for v in range(max_bin + 1):
        p = M * pp[v] * q**v
        exp = n * p
        sd = math.sqrt(n * p * (1 - p))
        lines.append(f"{v},{counts[v]},{_fmt(exp)},{_fmt(sd)},{_fmt((counts[v] - exp) / sd)}")
    return "\n".join(lines) + "\n"


def cmd_limit_shape(ns) -> int:
    vals = {k: _float(k, getattr(ns, k)) for k in ("tau_min", "tau_max", "chi_min", "chi_max", "step")}
    _positive("step", vals["step"])
    for lo, hi in (("tau_min", "tau_max"), ("chi_min", "chi_max")):
        if not vals[lo] <= vals[hi]:
            raise ConfigError(lo, f"{lo} must not exceed {hi}")
        if not all(map(math.isfinite, (vals[lo], vals[hi]))):
            raise ConfigError(lo, "grid bounds must be finite")
    step = vals["step"]
    nt = int(math.floor((vals["tau_max"] - vals["tau_min"]) / step + 1e-9)) + 1
    nc = int(math.floor((vals["chi_max"] - vals["chi_min"]) / step + 1e-9)) + 1
    cfg = {"command": "limit-shape", **vals}
    out = _Output(ns.out)
    out.write(_header(cfg))
    out.write("tau,chi,in_A,density\n")
    for i in range(nt):
        tau = vals["tau_min"] + i * step
        for j in range(nc):
            chi = vals["chi_min"] + j * step
            if in_region_A(tau, chi):
                out.write(f"{_fmt(tau)},{_fmt(chi)},1,{_fmt(density(tau, chi))}\n")
            else:
                out.write(f"{_fmt(tau)},{_fmt(chi)},0,\n")
    out.close("limit-shape", cfg, {})
    return 0


def cmd_kernel(ns) -> int:
    tol = _positive("tol", _float("tol", ns.tol))
    qcfg = QuadratureConfig(tol=tol)
    if ns.type == "sine":
        dt = _int("dt", ns.dt)
        dh = _float("dh", ns.dh)
        dh2 = 2 * dh
        if dh2 != int(dh2) or (int(dh2) + dt) % 2:
            raise ConfigError("dh", "dh + dt/2 must be an integer")
        tau, chi = _float("tau", ns.tau), _float("chi", ns.chi)
        if not in_region_A(tau, chi):
            raise ConfigError("tau", f"({tau!r}, {chi!r}) lies outside the liquid region")
        val = kernel_sine(dt, int(dh2), BulkPoint.at(tau, chi), qcfg)
        cfg = {"command": "kernel", "type": "sine", "dt": dt, "dh": dh, "tau": tau, "chi": chi, "tol": tol}
        result = {"value_real": val.real, "value_imag": val.imag}
    else:
        q = _resolve_q(ns)
        p1, p2 = _point("p1", ns.p1), _point("p2", ns.p2)
        val = kernel_Kq(p1, p2, q, qcfg)
        cfg = {"command": "kernel", "type": "kq", "q": q, "p1": str(p1), "p2": str(p2), "tol": tol}
        result = {"value": val}
    out = _Output(ns.out)
    out.write(_header(cfg))
    out.write("".join(f"{k} = {_fmt(v)}\n" for k, v in result.items()))
    out.close("kernel", cfg, {})
    return 0


def cmd_lln(ns) -> int:
    if ns.r is None:
        raise ConfigError("r", "a comma-separated list of r values is required")
    r_list = _floats("r", ns.r)
    if not r_list or any(not r > 0 for r in r_list):
        raise ConfigError("r", "all r values must be positive")
    if any(b >= a for a, b in zip(r_list, r_list[1:])):
        raise ConfigError("r", "r values must be strictly decreasing")
    n = _int("n", ns.n)
    if n < 50:
        raise ConfigError("n", f"at least 50 replicas are needed, got {n}")
    center = _floats("f_center", ns.f_center)
    if len(center) != 2:
        raise ConfigError("f_center", "expected 'tau,chi'")
    radius = _positive("f_radius", _float("f_radius", ns.f_radius))
    if ns.f_family not in FAMILIES:
        raise ConfigError("f_family", f"choose one of {', '.join(FAMILIES)}")
    f = TestFunction(ns.f_family, (center[0], center[1]), radius, _float("f_amplitude", ns.f_amplitude))
    m = _pattern(ns.pattern)
    seed = _int("seed", ns.seed)
    delta = _positive("delta", _float("delta", ns.delta))
    grid_step = _positive("grid_step", _float("grid_step", ns.grid_step))
    tol = _positive("tol", _float("tol", ns.tol))
    threads = _threads(ns)
    rep = run_lln_experiment(f, m, r_list, n, seed, delta, grid_step,
                             QuadratureConfig(tol=tol), threads)
    cfg = {"command": "lln", "r": ",".join(_fmt(r) for r in r_list), "n": n, "seed": seed,
           "delta": delta, "pattern": str(m), "f_family": f.family,
           "f_center": f"{_fmt(center[0])},{_fmt(center[1])}", "f_radius": radius,
           "f_amplitude": f.amplitude, "grid_step": grid_step, "tol": tol}
    out = _Output(ns.out)
    out.write(_header(cfg))
    out.write(rep.to_text())
    out.close("lln", cfg, {"threads": threads})
    if ns.sigmas_csv:
        rep.write_sigmas_csv(ns.sigmas_csv)
    return 0


def cmd_oracle(ns) -> int:
    vmax = _int("max_volume", ns.max_volume)
    if not 0 <= vmax <= 14:
        raise ConfigError("max_volume", f"must lie in 0..14, got {vmax}")
    _, counts = enumerate_plane_partitions(vmax)
    series = plane_partition_counts(vmax)
    if counts != series:
        raise PlanePartsError("enumeration and series expansion disagree")
    cfg = {"command": "oracle", "max_volume": vmax}
    lines = ["volume,count"] + [f"{v},{c}" for v, c in enumerate(counts)]
    if ns.pattern:
        q = _resolve_q(ns)
        m = _pattern(ns.pattern)
        pmax = min(vmax, 12)
        prob, tail = exact_pattern_probability(q, m, max_volume=pmax)
        kern = correlation(FiniteQKernel(q), list(m))
        cfg.update({"q": q, "pattern": str(m)})
        lines += ["", "# pattern probability", "enumeration,tail_bound,kernel",
                  f"{_fmt(prob)},{_fmt(tail)},{_fmt(kern)}"]
    out = _Output(ns.out)
    out.write(_header(cfg))
    out.write("\n".join(lines) + "\n")
    out.close("oracle", cfg, {})
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="planeparts", description="Random plane partitions: sampling, kernels, limit shape.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, q=True):
        sp.add_argument("--config", help="key = value file; flags override it")
        sp.add_argument("--out", help="output path (default: stdout)")
        if q:
            sp.add_argument("--q")
            sp.add_argument("--r")

    s = sub.add_parser("sample", help="exact samples from the q^volume measure")
    common(s)
    s.add_argument("--n", default="1")
    s.add_argument("--seed", default="0")
    s.add_argument("--delta", default=repr(DEFAULT_DELTA))
    s.add_argument("--threads")
    s.add_argument("--stats", choices=["volume"])

    g = sub.add_parser("limit-shape", help="density grid over a box")
    common(g, q=False)
    g.add_argument("--tau-min", default="-2")
    g.add_argument("--tau-max", default="2")
    g.add_argument("--chi-min", default="-2")
    g.add_argument("--chi-max", default="2")
    g.add_argument("--step", default="0.1")

    k = sub.add_parser("kernel", help="evaluate a correlation kernel")
    common(k)
    k.add_argument("--type", choices=["sine", "kq"], default="sine")
    k.add_argument("--dt", default="0")
    k.add_argument("--dh", default="0", help="height difference h (not doubled)")
    k.add_argument("--tau", default="0")
    k.add_argument("--chi", default="0")
    k.add_argument("--p1", default="0:1", help="first point, t:2h")
    k.add_argument("--p2", default="0:1", help="second point, t:2h")
    k.add_argument("--tol", default="1e-12")

    e = sub.add_parser("lln", help="law-of-large-numbers experiment")
    common(e, q=False)
    e.add_argument("--r", help="comma-separated, strictly decreasing")
    e.add_argument("--n", default="200")
    e.add_argument("--seed", default="0")
    e.add_argument("--delta", default=repr(DEFAULT_DELTA))
    e.add_argument("--pattern", default="0:1")
    e.add_argument("--f-family", default="cosine-bump")
    e.add_argument("--f-center", default="0.5,0.5")
    e.add_argument("--f-radius", default="0.3")
    e.add_argument("--f-amplitude", default="1.0")
    e.add_argument("--grid-step", default="0.02")
    e.add_argument("--tol", default="1e-12")
    e.add_argument("--threads")
    e.add_argument("--sigmas-csv", help="per-replica CSV (r, replica, sigma)")

    o = sub.add_parser("oracle", help="enumeration oracle")
    common(o)
    o.add_argument("--max-volume", default="8")
    o.add_argument("--pattern", help="also compare the pattern probability with the kernel")
    return p


COMMANDS: dict[str, Callable] = {
    "sample": cmd_sample,
    "limit-shape": cmd_limit_shape,
    "kernel": cmd_kernel,
    "lln": cmd_lln,
    "oracle": cmd_oracle,
}


def _apply_config(parser: argparse.ArgumentParser, ns, argv) -> None:
    """Fill values from ``--config`` for keys not given on the command line."""
    if not getattr(ns, "config", None):
        return
    given = {a.split("=", 1)[0].lstrip("-").replace("-", "_") for a in argv if a.startswith("--")}
    for key, val in read_config_file(ns.config).items():
        if not hasattr(ns, key) or key in ("config", "command"):
            raise ConfigError(key, "unknown key in config file")
        if key not in given:
            setattr(ns, key, val)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.command is None:
            raise ConfigError("command", "choose one of " + ", ".join(COMMANDS))
        _apply_config(parser, ns, argv)
        return COMMANDS[ns.command](ns)
    except ConfigError as exc:
        print(f"planeparts: error: {exc}", file=sys.stderr)
        return 2
    except PreconditionError as exc:
        print(f"planeparts: error: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except (PlanePartsError, ArithmeticError, OverflowError) as exc:
        print(f"planeparts: computation failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
