"""Command-line front end (``ifacesim``).

Settings come from a flat ``key = value`` file (``--config``), then from
flags, which win. Every command writes CSVs plus a ``summary.txt`` into
``--out`` and exits 0 iff all of its checks pass.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import acceptance, dual, engine, interface, output, renewal, scaling, stats
from .kernel import KernelError, leave_rate, parse_kernel

COMMANDS = ("validate-kernel", "simulate", "renewal", "scaling", "modulus", "duality",
            "sweep", "accept")
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    command: str
    kernel: str = "-2:0.2,-1:0.3,1:0.3,2:0.2"
    eps: tuple[float, ...] = (0.1,)
    horizon: float = 1e4
    grid: tuple[float, ...] = scaling.DEFAULT_GRID
    replicates: int = 200
    master_seed: int = 0
    out: str = "ifacesim-out"
    level: float = stats.DEFAULT_LEVEL
    initial: str = "heaviside@1/2"
    extra: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.eps or any(not 0.0 <= e < 1.0 for e in self.eps):
            raise ConfigError("eps must lie in [0, 1)")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if not self.horizon > 0:
            raise ConfigError("horizon must be > 0")
        if not 0.0 < self.level < 1.0:
            raise ConfigError("level must lie in (0, 1)")

    def get(self, key: str, cast: Callable = str, default=None):
        if key not in self.extra:
            return default
        try:
            return cast(self.extra[key])
        except ValueError as err:
            raise ConfigError(f"bad value for {key}: {self.extra[key]!r}") from err


# per-command defaults applied when neither file nor flag sets a key
COMMAND_DEFAULTS = {
    "scaling": {"eps": "0.05", "grid": "0.25,0.5,1,2"},
    "modulus": {"eps": "0.05"},
    "duality": {"eps": "0.3", "horizon": "2"},
    "renewal": {"eps": "0", "horizon": "1e5"},
}


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in str(text).replace(" ", "").split(",") if v)
    except ValueError as err:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from err


def read_config_file(path: str) -> dict[str, str]:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as err:
        raise output.IoError(f"cannot read config {path}: {err}") from err
    out = {}
    for no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{path}:{no}: expected 'key = value'")
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def build_config(command: str, values: dict[str, str]) -> ExperimentConfig:
    vals = {**COMMAND_DEFAULTS.get(command, {}), **values}
    known = {}
    try:
        if "kernel" in vals:
            known["kernel"] = vals.pop("kernel")
        if "eps" in vals:
            known["eps"] = _floats(vals.pop("eps"))
        if "horizon" in vals:
            known["horizon"] = float(vals.pop("horizon"))
        if "grid" in vals:
            known["grid"] = _floats(vals.pop("grid"))
        if "replicates" in vals:
            known["replicates"] = int(vals.pop("replicates"))
        if "seed" in vals:
            known["master_seed"] = int(vals.pop("seed"))
        if "out" in vals:
            known["out"] = vals.pop("out")
        if "level" in vals:
            known["level"] = float(vals.pop("level"))
        if "initial" in vals:
            known["initial"] = vals.pop("initial")
    except ValueError as err:
        raise ConfigError(str(err)) from err
    return ExperimentConfig(command=command, extra=vals, **known)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class Outcome:
    checks: list[Check] = field(default_factory=list)
    summary: list[tuple[str, object]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(Check(name, bool(passed), detail))

    def merge(self, other: "Outcome", prefix: str) -> None:
        self.checks += [Check(f"{prefix}{c.name}", c.passed, c.detail) for c in other.checks]
        self.summary += [(f"{prefix}{k}", v) for k, v in other.summary]


def _kernel(cfg: ExperimentConfig):
    try:
        return parse_kernel(cfg.kernel)
    except KernelError as err:
        raise ConfigError(f"invalid kernel: {err}") from err


def _initial(cfg: ExperimentConfig, kmax: int):
    try:
        return interface.parse_initial(cfg.initial, kmax)
    except ValueError as err:
        raise ConfigError(str(err)) from err


# -- commands ---------------------------------------------------------------------

def cmd_validate_kernel(cfg: ExperimentConfig, out: Path, echo) -> Outcome:
    k = _kernel(cfg)
    res = Outcome()
    res.summary += [("kernel", k.to_spec()), ("range", k.range), ("sigma2", k.sigma2),
                    ("abs_first_moment", k.abs_first_moment),
                    ("nearest_neighbor", k.is_nearest_neighbor)]
    for e in cfg.eps:
        res.summary.append((f"leave_rate[eps={e}]", leave_rate(k, e)))
    echo(f"sigma2={k.sigma2:g}")
    res.add("kernel valid", True)
    return res


def _single_eps(cfg: ExperimentConfig) -> float:
    if len(cfg.eps) != 1:
        raise ConfigError(f"{cfg.command} takes one eps (use sweep for a list)")
    return cfg.eps[0]


def cmd_simulate(cfg: ExperimentConfig, out: Path, echo) -> Outcome:
    k = _kernel(cfg)
    eps = _single_eps(cfg)
    x0 = _initial(cfg, k.range)
    snap = [t for t in cfg.grid if t <= cfg.horizon]
    tr = engine.run(x0, k, eps, cfg.horizon, seed=engine.derive_seed(cfg.master_seed, 0),
                    snapshot_times=snap)
    output.write_trajectory(out / "trajectory.csv", tr)
    output.write_snapshots(out / "snapshots.csv", tr)
    res = Outcome()
    res.summary += [("eps", eps), ("horizon", tr.horizon), ("events", tr.n_events),
                    ("s_clock_final", tr.s_clock_final), ("final_config", tr.final_config.serialize()),
                    ("M_final", tr.final_config.M), ("L_final", tr.final_config.L),
                    ("R_final", tr.final_config.R)]
    if tr.n_events >= 20:
        holds = np.diff(np.concatenate(([0.0], tr.s_clock)))
        ks = stats.ks_test(holds, "exponential", 1.0 - eps / 2.0, level=cfg.level,
                           name="s_clock_holds")
        ups = int(np.sum(tr.events.new_value == 0))
        bt = stats.binomial_test(ups, tr.n_events, (1.0 - eps) / (2.0 - eps), level=cfg.level,
                                 name="up_steps")
        for rep in (ks, bt):
            res.add(rep.name, rep.passed, str(rep))
            res.summary += [(f"{rep.name}.statistic", rep.statistic), (f"{rep.name}.p_value", rep.p_value)]
    return res


def cmd_renewal(cfg: ExperimentConfig, out: Path, echo) -> Outcome:
    k = _kernel(cfg)
    eps = _single_eps(cfg)
    x0 = _initial(cfg, k.range)
    tr = engine.run(x0, k, eps, cfg.horizon, seed=engine.derive_seed(cfg.master_seed, 0))
    ex = renewal.detect_excursions(tr, k)
    output.write_excursions(out / "excursions.csv", ex.tau, ex.eta, ex.hold)
    res = Outcome()
    res.summary += [("eps", eps), ("horizon", tr.horizon), ("events", tr.n_events),
                    ("tau0", ex.tau0), ("excursions", len(ex)), ("complete", ex.complete)]
    if len(ex) < 2:
        res.add("enough excursions", False, f"{len(ex)} complete excursions")
        return res
    ratio, se = renewal.renewal_ratio(ex)
    res.summary += [("renewal_ratio", ratio), ("renewal_ratio_stderr", se)]
    if eps == 0.0:
        res.add("renewal ratio = sigma2", abs(ratio - k.sigma2) <= 3 * se + 1e-12,
                f"{ratio} vs {k.sigma2} (3 se = {3 * se})")
    else:
        res.add("renewal ratio <= sigma2", ratio <= k.sigma2 + 2 * se, f"{ratio}")
    r = leave_rate(k, eps)
    if r > 0:
        occ = renewal.heaviside_occupation(tr)
        invpi = float(ex.tau.mean()) * r * occ
        res.summary += [("heaviside_occupation", occ), ("invpi_product", invpi)]
        res.add("mean(tau) r pi(hv) = 1", abs(invpi - 1.0) < 0.05, f"{invpi}")
        if len(ex) >= 20:
            ks = stats.ks_test(ex.hold, "exponential", r, level=cfg.level, name="heaviside_holds")
            res.add(ks.name, ks.passed, str(ks))
    burn = cfg.get("burn_in", float, min(1e3, cfg.horizon / 10))
    try:
        est, ese = renewal.equilibrium_average(tr, k, burn)
        res.summary += [("equilibrium_average", est), ("equilibrium_stderr", ese)]
    except (ValueError, stats.TooFewSamples):
        pass
    return res


def cmd_scaling(cfg: ExperimentConfig, out: Path, echo) -> Outcome:
    k = _kernel(cfg)
    x0 = _initial(cfg, k.range)
    res = Outcome()
    rows = []
    snaps = []
    workers = cfg.get("threads", int)
    for j, eps in enumerate(cfg.eps):
        if eps <= 0:
            raise ConfigError("scaling needs eps > 0")
        m = scaling.sample_marginals(k, eps, cfg.grid, cfg.replicates,
                                     engine.derive_seed(cfg.master_seed, j), x0, workers)
        for c, t in enumerate(cfg.grid):
            ref = scaling.brownian_reference(k.sigma2, t)
            col = m.M[:, c]
            if t > 0 and cfg.replicates >= 20:
                ks = stats.ks_test(col, "normal", ref.mean, ref.var, level=cfg.level)
                rows.append((eps, t, col.mean(), col.var(ddof=1), ks.statistic, ks.p_value))
                res.add(f"KS eps={eps} t={t}", ks.passed, str(ks))
            else:
                rows.append((eps, t, col.mean(), col.var(ddof=1) if len(col) > 1 else 0.0,
                             float("nan"), float("nan")))
        tmax = max(cfg.grid)
        tr = engine.run(x0, k, eps, tmax / eps ** 2, seed=engine.derive_seed(cfg.master_seed, 10_000 + j),
                        record=False, snapshot_times=[t / eps ** 2 for t in cfg.grid])
        for t, s in zip(cfg.grid, tr.snapshots):
            snaps.append(scaling.measure_snapshot(interface.parse_config(s.config), eps, t))
    output.write_csv(out / "marginals.csv", output.MARGINAL_COLUMNS, rows)
    output.write_measure_snapshots(out / "snapshots.csv", snaps)
    res.summary += [("replicates", cfg.replicates), ("eps", ",".join(map(str, cfg.eps))),
                    ("grid", ",".join(map(str, cfg.grid)))]
    return res


def cmd_modulus(cfg: ExperimentConfig, out: Path, echo) -> Outcome:
    from .parallel import farm

    k = _kernel(cfg)
    eps = _single_eps(cfg)
    if eps <= 0:
        raise ConfigError("modulus needs eps > 0 (the lattice scale)")
    f = scaling.parse_test_function(cfg.get("test_function", str, "hat@-1,1"))
    T = cfg.get("T", float, 1.0)
    eta = cfg.get("eta", float, 0.5)
    deltas = _floats(cfg.get("delta", str, "0.2,0.1,0.05"))
    jobs = [(k, eps, engine.derive_seed(cfg.master_seed, r), T, f) for r in range(cfg.replicates)]
    paths = farm(acceptance._pairing_job, jobs, cfg.get("threads", int))
    rows = []
    sums = []
    for d in deltas:
        st = scaling.modulus_statistics(paths, eps, d, eta, f, T)
        sums.append(st.block_sum)
        for i, (p, pu, pd) in enumerate(zip(st.p_two_sided, st.p_up, st.p_down)):
            rows.append((eps, d, eta, i, p, pu, pd))
    output.write_csv(out / "modulus.csv",
                     ("eps", "delta", "eta", "block", "p_two_sided", "p_up", "p_down"), rows)
    res = Outcome()
    res.summary += [(f"block_sum[delta={d}]", s) for d, s in zip(deltas, sums)]
    order = np.argsort(deltas)[::-1]
    ordered = [sums[i] for i in order]
    if len(deltas) > 1:
        res.add("block sum decreases with delta",
                all(a > b for a, b in zip(ordered, ordered[1:])), str(ordered))
    return res


def cmd_duality(cfg: ExperimentConfig, out: Path, echo) -> Outcome:
    k = _kernel(cfg)
    eps = _single_eps(cfg)
    n = cfg.get("n", int, 16)
    trials = cfg.get("trials", int, 10_000)
    try:
        rep = dual.duality_suite(k, n, eps, cfg.horizon, trials,
                                 seed=engine.derive_seed(cfg.master_seed, 0))
    except dual.TorusTooSmall as err:
        raise ConfigError(str(err)) from err
    output.write_csv(out / "duality.csv", output.DUALITY_COLUMNS,
                     [(rep.n, rep.horizon, rep.eps, rep.trials, rep.failures)])
    echo(f"failures={rep.failures}")
    res = Outcome()
    res.summary += [("n", rep.n), ("trials", rep.trials), ("failures", rep.failures)]
    res.add("pathwise duality", rep.passed, f"{rep.failures} failures")
    return res


def cmd_accept(cfg: ExperimentConfig, out: Path, echo) -> Outcome:
    only = cfg.get("criteria", str)
    sel = [int(v) for v in only.split(",")] if only else None
    results = acceptance.run_all(sel, workers=cfg.get("threads", int), echo=echo)
    output.write_csv(out / "acceptance.csv", ("criterion", "title", "passed", "detail", "seconds"),
                     [(r.number, r.title, r.passed, r.detail, r.seconds) for r in results])
    res = Outcome()
    for r in results:
        res.add(f"criterion {r.number}", r.passed, r.detail)
        res.summary.append((f"criterion_{r.number}", "pass" if r.passed else "fail"))
    return res


def cmd_sweep(cfg: ExperimentConfig, out: Path, echo) -> Outcome:
    sub = cfg.get("of", str)
    if sub not in HANDLERS or sub in ("sweep", "accept", "validate-kernel"):
        raise ConfigError("sweep needs --of <simulate|renewal|scaling|modulus|duality>")
    res = Outcome()
    for eps in cfg.eps:
        sub_cfg = replace(cfg, command=sub, eps=(eps,))
        sub_out = out / f"eps={eps}"
        sub_out.mkdir(parents=True, exist_ok=True)
        part = HANDLERS[sub](sub_cfg, sub_out, echo)
        output.write_summary(sub_out / "summary.txt", _summary(sub_cfg, part))
        res.merge(part, f"eps={eps}:")
    return res


HANDLERS: dict[str, Callable[[ExperimentConfig, Path, Callable], Outcome]] = {
    "validate-kernel": cmd_validate_kernel, "simulate": cmd_simulate, "renewal": cmd_renewal,
    "scaling": cmd_scaling, "modulus": cmd_modulus, "duality": cmd_duality,
    "sweep": cmd_sweep, "accept": cmd_accept,
}


def _summary(cfg: ExperimentConfig, res: Outcome) -> list[tuple[str, object]]:
    head = [("command", cfg.command), ("kernel", cfg.kernel), ("master_seed", cfg.master_seed),
            ("level", cfg.level)]
    checks = [(f"check.{c.name}", "pass" if c.passed else "fail") for c in res.checks]
    return head + res.summary + checks + [("all_checks_pass", res.passed)]


def run_command(cfg: ExperimentConfig, echo: Callable[[str], None] = print) -> int:
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        res = HANDLERS[cfg.command](cfg, out, echo)
        output.write_summary(out / "summary.txt", _summary(cfg, res))
    except ConfigError as err:
        echo(f"config error: {err}")
        return EXIT_CONFIG
    except OSError as err:
        echo(f"io error: {err}")
        return EXIT_IO
    for c in res.checks:
        if not c.passed:
            echo(f"FAILED {c.name}: {c.detail}")
    return 0 if res.passed else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ifacesim", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--kernel", help="kernel spec, e.g. -1:0.5,1:0.5")
    p.add_argument("--eps", help="bias, or a comma-separated list for sweep")
    p.add_argument("--horizon", help="model time horizon")
    p.add_argument("--grid", help="comma-separated times (macroscopic for scaling)")
    p.add_argument("--replicates", help="number of replicates")
    p.add_argument("--seed", help="master seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--level", help="test level")
    p.add_argument("--initial", help="heaviside@<half-integer> or bits@<start>:<01-string>")
    p.add_argument("--of", help="command swept by 'sweep'")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="extra setting (n, trials, burn_in, eta, delta, T, test_function, criteria, threads)")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        values = read_config_file(args.config) if args.config else {}
        for item in args.set:
            key, sep, val = item.partition("=")
            if not sep:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            values[key.strip()] = val.strip()
        for key in ("kernel", "eps", "horizon", "grid", "replicates", "seed", "out", "level",
                    "initial", "of"):
            v = getattr(args, key)
            if v is not None:
                values[key] = v
        cfg = build_config(args.command, values)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as err:
        print(f"io error: {err}", file=sys.stderr)
        return EXIT_IO
    return run_command(cfg)


if __name__ == "__main__":
    sys.exit(main())
