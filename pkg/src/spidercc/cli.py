"""Command-line front end.

Subcommands::

    spidercc run      one simulation: trace lines, then verdict lines
    spidercc fuzz     many seeded simulations, summarised
    spidercc explore  exhaustive binding check
    spidercc regress  pinned scenarios against their golden verdict files

Every option can also come from a flat ``key=value`` config file given
with ``--config``; command-line flags win.  Keys are the long flag names
with ``_`` or ``-``; ``check`` and ``param`` may repeat.

Exit status: 0 when everything passes, 1 when a check fails (or an
exploration is inconclusive), 2 for configuration errors.
"""
from __future__ import annotations

import argparse
import dataclasses
import itertools
import os
import random
import sys
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from importlib import resources
from pathlib import Path

from . import adversaries
from .explore import DEFAULT_STATE_BUDGET, binding_explorer
from .protocols import BINDING_MIN_N, PROTOCOLS, get_protocol
from .simnet import LivenessViolation, SimulationError, run as simulate, scaled_decision_time
from .spider import TaskSpec, Vertex
from .verify import CHECKS, FAIL, PASS, Verdict, check_all, check_binding_oracle, input_assignment

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

ADVERSARIES = ("none", "silent", "random_crash", "byz", "late_cascade")
MUTATIONS = ("own_input",)
_REPEATABLE = {"check", "param"}
_KEYS = {"protocol", "n", "f", "R", "value_count", "inputs", "adversary", "seed", "check", "param",
         "repeat", "schedules", "trace_out", "allow_underresilient", "faulty", "max_states", "mutate",
         "command"}


class ConfigError(Exception):
    pass


@dataclasses.dataclass
class ScenarioConfig:
    protocol: str = "crash_cc"
    n: int = 3
    f: int = 1
    R: int = 1
    value_count: int = 2
    inputs: str = "random"
    adversary: str = "none"
    params: dict = dataclasses.field(default_factory=dict)
    seed: int = 0
    checks: tuple = ("all",)
    repeat: int = 1
    schedules: int = 1
    allow_underresilient: bool = False
    faulty: str = ""
    max_states: int = DEFAULT_STATE_BUDGET
    mutate: str = ""
    underresilient: bool = False

    @property
    def spec(self) -> TaskSpec:
        return TaskSpec(self.value_count, self.R, self.n, self.f, get_protocol(self.protocol).failure_model)


# ---------------------------------------------------------------- config files

def read_config(path) -> dict:
    """Parse a flat key=value file into {key: value or [values]}."""
    out: dict = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in _REPEATABLE:
            out.setdefault(key, []).append((lineno, value))
        elif key in out:
            raise ConfigError(f"{path}:{lineno}: {key} given twice")
        else:
            out[key] = (lineno, value)
    return out


def _int(value, what, where) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}{what} must be an integer, got {value!r}") from None


def build_config(args, file_keys: dict, origin: str = "") -> ScenarioConfig:
    """Merge config-file keys under command-line flags and validate."""

    def pick(key):
        flag = getattr(args, key, None)
        if flag is not None and flag != [] and flag is not False:
            return flag, "--" + key.replace("_", "-") + ": "
        if key in file_keys:
            entry = file_keys[key]
            if isinstance(entry, list):
                return [v for _, v in entry], f"{origin}:{entry[0][0]}: "
            return entry[1], f"{origin}:{entry[0]}: "
        return None, ""

    cfg = ScenarioConfig()
    for key in ("protocol", "inputs", "adversary", "faulty", "mutate"):
        v, _ = pick(key)
        if v is not None:
            setattr(cfg, key, str(v))
    for key in ("n", "f", "R", "value_count", "seed", "repeat", "schedules", "max_states"):
        v, where = pick(key)
        if v is not None:
            setattr(cfg, key, _int(v, key, where))
    v, where = pick("allow_underresilient")
    if v is not None:
        cfg.allow_underresilient = v is True or str(v).lower() in ("1", "true", "yes")
    checks, where = pick("check")
    if checks:
        names = [c.strip() for item in checks for c in str(item).split(",") if c.strip()]
        for c in names:
            if c != "all" and c not in CHECKS:
                raise ConfigError(f"{where}unknown check {c!r}; choose from all, {', '.join(CHECKS)}")
        cfg.checks = tuple(names)
    params, where = pick("param")
    for item in params or []:
        if "=" not in item:
            raise ConfigError(f"{where}adversary parameter must be key=value, got {item!r}")
        k, v = item.split("=", 1)
        cfg.params[k.strip()] = v.strip()

    _, where = pick("protocol")
    if cfg.protocol not in PROTOCOLS:
        raise ConfigError(f"{where}unknown protocol {cfg.protocol!r}; choose from {', '.join(PROTOCOLS)}")
    if cfg.adversary not in ADVERSARIES:
        _, where = pick("adversary")
        raise ConfigError(f"{where}unknown adversary {cfg.adversary!r}; choose from {', '.join(ADVERSARIES)}")
    if cfg.mutate and cfg.mutate not in MUTATIONS:
        _, where = pick("mutate")
        raise ConfigError(f"{where}unknown mutation {cfg.mutate!r}; choose from {', '.join(MUTATIONS)}")
    try:
        spec = cfg.spec
    except ValueError as exc:
        raise ConfigError(f"{origin + ': ' if origin else ''}{exc}") from None
    proto = get_protocol(cfg.protocol)
    if spec.R not in proto.refinements:
        raise ConfigError(f"{cfg.protocol} does not support R={spec.R}")
    if not proto.resilient(cfg.n, cfg.f):
        if not cfg.allow_underresilient:
            raise ConfigError(f"{cfg.protocol} needs n >= {proto.min_n(cfg.f)} for f={cfg.f}, got n={cfg.n}; "
                              "pass --allow-underresilient to run it anyway")
        cfg.underresilient = True
    if cfg.repeat < 1:
        raise ConfigError("repeat must be at least 1")
    if cfg.schedules < 1:
        raise ConfigError("schedules must be at least 1")
    if cfg.inputs not in ("random", "all"):
        parse_inputs(cfg.inputs, cfg)
    return cfg


def parse_inputs(text: str, cfg: ScenarioConfig) -> tuple:
    try:
        vals = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise ConfigError(f"inputs must be comma-separated integers, 'random' or 'all', got {text!r}") from None
    if len(vals) != cfg.n:
        raise ConfigError(f"expected {cfg.n} inputs, got {len(vals)}")
    if any(not 0 <= v < cfg.value_count for v in vals):
        raise ConfigError(f"inputs must lie in 0..{cfg.value_count - 1}")
    return vals


# ---------------------------------------------------------------- scenarios

def make_adversary(cfg: ScenarioConfig, seed: int):
    p = dict(cfg.params)
    try:
        delays = tuple(Fraction(d) for d in p.pop("delays").split(",")) if "delays" in p else None
        if cfg.adversary == "none":
            adv = adversaries.Adversary(seed, delays or (1,))
        elif cfg.adversary == "silent":
            adv = adversaries.SilentFaulty(seed, delays or (1,))
        elif cfg.adversary == "random_crash":
            adv = adversaries.RandomCrash(seed, float(p.pop("crash_prob", 0.5)), delays or adversaries.DEFAULT_DELAYS)
        elif cfg.adversary == "byz":
            kw = {}
            if "split" in p:
                kw["split"] = tuple(None if v == "bot" else int(v) for v in p.pop("split").split(","))
            if "inject_prob" in p:
                kw["inject_prob"] = float(p.pop("inject_prob"))
            if cfg.faulty:
                kw["faulty"] = [int(x) for x in cfg.faulty.split(",")]
            adv = adversaries.ByzEquivocator(seed, p.pop("strategy", "random"),
                                             delays or adversaries.DEFAULT_DELAYS, **kw)
        else:
            adv = adversaries.LateCascadeScript(Fraction(p.pop("epsilon", "1/8")), cfg.f)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"adversary {cfg.adversary}: {exc}") from None
    if p:
        raise ConfigError(f"adversary {cfg.adversary} does not take {', '.join(sorted(p))}")
    return adv


def inputs_for(cfg: ScenarioConfig, index: int) -> tuple:
    """Input assignment of run ``index``; runs in one schedule group share it."""
    if cfg.adversary == "late_cascade":
        return adversaries.LateCascadeScript(Fraction(1, 2), cfg.f).script_inputs
    if cfg.inputs == "random":
        rng = random.Random(f"inputs/{cfg.seed}/{index // cfg.schedules}")
        return tuple(rng.randrange(cfg.value_count) for _ in range(cfg.n))
    return parse_inputs(cfg.inputs, cfg)


def mutated(name: str, mutation: str):
    """A deliberately broken copy of a protocol, to show the checks bite."""
    proto = get_protocol(name)
    if mutation != "own_input":
        return proto

    def step(state, event, spec):
        st, out = proto.step(state, event, spec)
        if out.decision is not None:
            out = dataclasses.replace(out, decision=Vertex(st.input, spec.R))
        return st, out

    return dataclasses.replace(proto, step=step)


def simulate_one(cfg: ScenarioConfig, index: int):
    """One seeded run: (trace or None, trace lines, verdicts)."""
    seed = cfg.seed + index
    inputs = inputs_for(cfg, index)
    adv = make_adversary(cfg, seed)
    proto = mutated(cfg.protocol, cfg.mutate) if cfg.mutate else cfg.protocol
    names = None if "all" in cfg.checks else cfg.checks
    try:
        trace = simulate(cfg.spec, inputs, adv, proto)
    except LivenessViolation as exc:
        return None, exc.trace.lines(), [Verdict("termination", FAIL, str(exc))]
    except (SimulationError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return trace, trace.lines(), check_all(trace, names)


def _fuzz_job(args):
    cfg, index = args
    trace, lines, verdicts = simulate_one(cfg, index)
    return index, lines, verdicts, trace


def workers() -> int:
    try:
        return max(1, int(os.environ.get("CC_WORKERS", "1")))
    except ValueError:
        raise ConfigError(f"CC_WORKERS must be an integer, got {os.environ['CC_WORKERS']!r}") from None


def _pool_map(fn, jobs):
    n = workers()
    if n == 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(n) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * n))))


# ---------------------------------------------------------------- commands

def _emit_lines(lines, trace_out, out):
    if trace_out:
        Path(trace_out).write_text("".join(line + "\n" for line in lines))
    else:
        for line in lines:
            print(line, file=out)


def cmd_run(cfg: ScenarioConfig, trace_out=None, out=None) -> int:
    out = out or sys.stdout
    trace, lines, verdicts = simulate_one(cfg, 0)
    _emit_lines(lines, trace_out, out)
    if cfg.underresilient:
        print("note=underresilient experiment, not a regression", file=out)
    for v in verdicts:
        print(v.line(), file=out)
    return EXIT_OK if all(v.ok for v in verdicts) else EXIT_FAIL


def cmd_fuzz(cfg: ScenarioConfig, trace_out=None, out=None) -> int:
    out = out or sys.stdout
    results = _pool_map(_fuzz_job, [(cfg, i) for i in range(cfg.repeat)])
    results.sort(key=lambda r: r[0])
    failures = 0
    first = None
    merged = []
    groups = defaultdict(list)
    for index, lines, verdicts, trace in results:
        merged.append(f"run={index} seed={cfg.seed + index}")
        merged.extend(lines)
        bad = [v for v in verdicts if not v.ok]
        if bad:
            failures += 1
            if first is None:
                first = f"seed={cfg.seed + index} {bad[0].prop}: {bad[0].witness}"
        if trace is not None:
            groups[input_assignment(trace)].append(trace)
    if trace_out:
        _emit_lines(merged, trace_out, out)
    oracle_fail = []
    if cfg.protocol != "echo_cc":
        for inputs, traces in groups.items():
            v = check_binding_oracle(traces)
            if not v.ok:
                oracle_fail.append(v)
    if cfg.underresilient:
        print("note=underresilient experiment, not a regression", file=out)
    summary = f"runs={cfg.repeat} failures={failures}" + (f" first={first}" if first else "")
    print(Verdict("fuzz", FAIL if failures else PASS, summary).line(), file=out)
    if cfg.protocol != "echo_cc":
        note = f"groups={len(groups)}" + (f" first={oracle_fail[0].witness}" if oracle_fail else "")
        print(Verdict("binding_oracle", FAIL if oracle_fail else PASS, note).line(), file=out)
    return EXIT_FAIL if failures or oracle_fail else EXIT_OK


def explore_assignments(cfg: ScenarioConfig, faulty) -> list:
    if cfg.inputs == "all":
        correct = [p for p in range(cfg.n) if p not in faulty]
        out = []
        for combo in itertools.product(range(cfg.value_count), repeat=len(correct)):
            vals = [0] * cfg.n
            for p, v in zip(correct, combo):
                vals[p] = v
            out.append(tuple(vals))
        return out
    if cfg.inputs == "random":
        raise ConfigError("explore needs explicit inputs or 'all'")
    return [parse_inputs(cfg.inputs, cfg)]


def _explore_job(args):
    cfg, inputs, faulty = args
    return inputs, binding_explorer(cfg.spec, inputs, cfg.protocol, faulty, cfg.max_states)


def cmd_explore(cfg: ScenarioConfig, out=None) -> int:
    out = out or sys.stdout
    if cfg.faulty:
        try:
            faulty = frozenset(int(x) for x in cfg.faulty.split(","))
        except ValueError:
            raise ConfigError(f"faulty must list process ids, got {cfg.faulty!r}") from None
    else:
        faulty = frozenset(range(cfg.n - cfg.f, cfg.n))
    if len(faulty) > cfg.f or not faulty <= set(range(cfg.n)):
        raise ConfigError(f"faulty set {sorted(faulty)} does not fit n={cfg.n}, f={cfg.f}")
    need = BINDING_MIN_N.get(cfg.protocol)
    if need and cfg.n < need(cfg.f) and not cfg.allow_underresilient:
        raise ConfigError(f"binding for {cfg.protocol} needs n >= {need(cfg.f)}")
    jobs = [(cfg, inputs, faulty) for inputs in explore_assignments(cfg, faulty)]
    ok = True
    for inputs, res in _pool_map(_explore_job, jobs):
        hidden = faulty if cfg.spec.failure_model == "malicious" else ()
        shown = ",".join("x" if p in hidden else str(v) for p, v in enumerate(inputs))
        locked = " ".join(f"{'-'.join(map(str, b)) or 'none'}:{c}" for b, c in sorted(res.locked.items()))
        v = res.verdict
        print(Verdict(v.prop, v.result, f"inputs={shown} states={res.states} locked=[{locked}] "
                                        f"{v.witness if v.result == FAIL else ''}".rstrip()).line(), file=out)
        ok &= v.ok
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------- regression

def regress_dir() -> Path:
    return Path(str(resources.files("spidercc") / "regress"))


def scenario_lines(cfg: ScenarioConfig, command: str) -> list:
    """The verdict lines a pinned scenario is compared on."""
    if command == "explore":
        buf = _Lines()
        cmd_explore(cfg, buf)
        return buf.lines
    trace, _, verdicts = simulate_one(cfg, 0)
    lines = [v.line() for v in verdicts]
    if trace is not None:
        decisions = " ".join(f"{p}:{'bot' if d.value is None else d.value}/{d.grade}"
                             for p, d in sorted(trace.correct_decisions().items()))
        last = trace.last_correct_decision_time()
        lines.append(f"prop=metrics result=pass witness=last_decision={last} "
                     f"scaled_time={scaled_decision_time(trace)} decisions={decisions}")
    return lines


class _Lines:
    def __init__(self):
        self.lines = []

    def write(self, s):
        self.lines.extend(x for x in s.split("\n") if x)

    def flush(self):
        pass


def cmd_regress(out=None, directory=None, update=False) -> int:
    out = out or sys.stdout
    directory = Path(directory) if directory else regress_dir()
    ok = True
    for path in sorted(directory.glob("*.cfg")):
        keys = read_config(path)
        command = keys.pop("command", (0, "run"))[1]
        keys.pop("trace_out", None)
        cfg = build_config(argparse.Namespace(), keys, str(path))
        got = scenario_lines(cfg, command)
        golden = path.with_suffix(".expected")
        if update:
            golden.write_text("".join(line + "\n" for line in got))
            continue
        want = golden.read_text().splitlines() if golden.exists() else []
        if got == want:
            print(Verdict(f"regress:{path.stem}", PASS).line(), file=out)
        else:
            ok = False
            diff = next((f"want {w!r} got {g!r}" for w, g in itertools.zip_longest(want, got) if w != g), "")
            print(Verdict(f"regress:{path.stem}", FAIL, diff).line(), file=out)
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------- entry point

def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value file; flags override it")
    common.add_argument("--protocol", choices=sorted(PROTOCOLS))
    common.add_argument("--n", type=int)
    common.add_argument("--f", type=int)
    common.add_argument("--R", type=int, choices=(1, 2))
    common.add_argument("--value-count", dest="value_count", type=int)
    common.add_argument("--inputs", help="comma-separated values, 'random', or 'all' (explore)")
    common.add_argument("--allow-underresilient", dest="allow_underresilient", action="store_true",
                        default=None, help="run below the protocol's resilience bound")

    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--adversary", choices=ADVERSARIES)
    sim.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                     help="adversary parameter: delays, crash_prob, strategy, split, inject_prob, epsilon")
    sim.add_argument("--faulty", help="fixed faulty ids for the byz adversary")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--check", action="append", default=[], help="checker name or 'all' (repeatable)")
    sim.add_argument("--trace-out", dest="trace_out", help="write trace lines here instead of stdout")
    sim.add_argument("--mutate", choices=MUTATIONS, help=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="spidercc", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="cmd", required=True)
    sub.add_parser("run", parents=[common, sim], help="one simulation")
    fz = sub.add_parser("fuzz", parents=[common, sim], help="many seeded simulations")
    fz.add_argument("--repeat", type=int)
    fz.add_argument("--schedules", type=int, help="runs sharing each random input assignment")
    ex = sub.add_parser("explore", parents=[common], help="exhaustive binding check")
    ex.add_argument("--faulty", help="faulty ids (default: the last f)")
    ex.add_argument("--max-states", dest="max_states", type=int)
    rg = sub.add_parser("regress", help="pinned scenarios against golden files")
    rg.add_argument("--dir", help="scenario directory (default: the packaged suite)")
    rg.add_argument("--update", action="store_true", help="rewrite the golden files")
    return p


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    try:
        if args.cmd == "regress":
            return cmd_regress(directory=args.dir, update=args.update)
        keys = read_config(args.config) if args.config else {}
        keys.pop("command", None)
        trace_out = getattr(args, "trace_out", None) or (keys.pop("trace_out", (0, None))[1])
        keys.pop("trace_out", None)
        cfg = build_config(args, keys, args.config or "")
        if cfg.underresilient:
            print(f"warning: {cfg.protocol} below its resilience bound; results are an experiment",
                  file=sys.stderr)
        if args.cmd == "run":
            return cmd_run(cfg, trace_out)
        if args.cmd == "fuzz":
            return cmd_fuzz(cfg, trace_out)
        return cmd_explore(cfg)
    except ConfigError as exc:
        print(f"spidercc: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
