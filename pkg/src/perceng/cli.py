"""The ``pf`` command: simulate scenarios and plan on behalf of the producer.

Exit codes: 0 success, 2 config or parameter error, 3 runtime fault,
4 infeasible goal, 5 missing metric.  ``PF_LOG`` sets the log level.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from importlib import resources
from typing import Optional, Sequence

from .config import RunConfig, load_config
from .errors import (
    BudgetExceeded,
    ConfigError,
    Infeasible,
    InvalidParams,
    MetricMissing,
    PercengError,
)
from .metrics import margin_at, margin_field
from .producer import DEFAULT_BUDGET, GOAL_KINDS, CostModel, Goal, plan_action_sequence
from .producer import select_stationary_action
from .scenarios import Scenario, instantiate_scenario
from .simulation import Resolver, simulate
from .tracefmt import dumps_trace, encode_value, summarize

log = logging.getLogger("perceng")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_INFEASIBLE, EXIT_METRIC = 0, 2, 3, 4, 5
TRUE_WORDS = {"1", "yes", "true", "on"}
FALSE_WORDS = {"0", "no", "false", "off"}


def bundled_config(name: str) -> Optional[str]:
    """Path of a config shipped with the package, or None."""
    ref = resources.files("perceng") / "configs" / name
    return str(ref) if ref.is_file() else None


def _resolve_path(path: str) -> str:
    if os.path.exists(path) or os.path.dirname(path):
        return path
    shipped = bundled_config(path)
    if shipped:
        log.info("using bundled config %s", shipped)
        return shipped
    return path


def _parse_overrides(items: Sequence[str]) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--param expects key=value, got {item!r}")
        out[key.strip().lower()] = value.strip()
    return out


def _flag(cfg: RunConfig, section: str, key: str, default=False) -> bool:
    raw = getattr(cfg, section).get(key)
    if raw is None:
        return default
    if raw.lower() in TRUE_WORDS:
        return True
    if raw.lower() in FALSE_WORDS:
        return False
    raise cfg.error(f"{key} must be yes or no, got {raw!r}", section, key)


def _number(cfg: RunConfig, section: str, key: str, cast, default):
    raw = getattr(cfg, section).get(key)
    if raw is None:
        return default
    try:
        return cast(raw)
    except ValueError:
        raise cfg.error(f"{key}: cannot read {raw!r} as {cast.__name__}", section, key) from None


def build_scenario(cfg: RunConfig, overrides: Optional[dict] = None) -> Scenario:
    params = dict(cfg.params)
    params.update(overrides or {})
    try:
        return instantiate_scenario(cfg.scenario, params)
    except InvalidParams as exc:
        section = "params" if exc.key and exc.key in cfg.params else "scenario"
        line = cfg.line_of(section, exc.key if section == "params" else "name")
        raise ConfigError(str(exc), cfg.path, line) from None


def _observations(cfg: RunConfig, scenario: Scenario, raw: str, allow_gaps: bool) -> tuple:
    parse = scenario.parse_observation or (lambda s: s)
    out = []
    for tok in raw.split("|"):
        tok = tok.strip()
        if allow_gaps and tok in ("", "_", "*"):
            out.append(None)
            continue
        try:
            out.append(parse(tok))
        except ValueError:
            raise cfg.error(f"cannot parse observation {tok!r}", "goal", "observations") from None
    return tuple(out)


def build_goal(cfg: RunConfig, scenario: Scenario) -> Goal:
    """Goal from the ``[goal]`` section.

    ``observations`` separates targets with ``|``; in an
    ``observation_sequence`` an entry of ``_`` leaves that stage free.
    ``target`` names a scenario-defined goal payload instead.
    """
    g = cfg.goal
    if not g:
        raise cfg.error("config has no [goal] section")
    kind = g.get("kind", "observation_set")
    if kind not in GOAL_KINDS:
        raise cfg.error(f"unknown goal kind {kind!r}", "goal", "kind")
    if "target" in g:
        name = g["target"]
        if name not in scenario.goal_targets:
            known = ", ".join(sorted(scenario.goal_targets)) or "none"
            raise cfg.error(f"unknown goal target {name!r} (known: {known})", "goal", "target")
        payload = scenario.goal_targets[name]
    elif "observations" in g:
        payload = _observations(cfg, scenario, g["observations"], kind == "observation_sequence")
    else:
        raise cfg.error("[goal] needs observations or target", "goal")
    on = g.get("on", "istate" if kind == "istate_set" else "observation")
    stage = _number(cfg, "goal", "stage", int, None)
    try:
        return Goal(kind, payload,
                    require_plausible=_flag(cfg, "goal", "require_plausible"),
                    require_illusory=_flag(cfg, "goal", "require_illusory"),
                    stage=stage, on=on, tol=_number(cfg, "goal", "tol", float, 0.0))
    except ValueError as exc:
        raise cfg.error(str(exc), "goal") from None


def _margin_lookup(scenario: Scenario, kind: str):
    if scenario.sweep is None:
        raise MetricMissing(f"scenario {scenario.name!r} declares no margin space")
    space, member = scenario.sweep(kind)
    return lambda v: margin_at(v, space, member)


def build_cost(cfg: RunConfig, scenario: Scenario):
    name = cfg.plan.get("cost", "default")
    if name == "default":
        return scenario.plan_cost
    if name == "zero":
        return CostModel(nonnegative=True)
    if name == "margin":
        c = _number(cfg, "plan", "margin_c", float, 0.0)
        return CostModel.margin_aware(c, _margin_lookup(scenario, "y"))
    raise cfg.error(f"unknown cost {name!r}; use default, zero or margin", "plan", "cost")


# -- subcommands -------------------------------------------------------------

def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_run(args, cfg: RunConfig) -> int:
    scenario = build_scenario(cfg, _parse_overrides(args.param))
    stages = args.stages or cfg.stages or scenario.stages
    seed = cfg.seed if args.seed is None else args.seed
    log.info("running %s for %d stages, seed %d", scenario.name, stages, seed)
    trace = simulate(scenario.system, scenario.omega1, stages, Resolver(seed))
    _emit(dumps_trace(trace), args.out)
    summary = summarize(trace, scenario.relations, scenario.system.receiver)
    print(json.dumps(summary, sort_keys=True), file=sys.stdout if args.out else sys.stderr)
    return EXIT_OK


def cmd_plan(args, cfg: RunConfig) -> int:
    scenario = build_scenario(cfg, _parse_overrides(args.param))
    goal = build_goal(cfg, scenario)
    cost = build_cost(cfg, scenario)
    mode = cfg.plan.get("mode", "auto")
    if mode not in ("auto", "stationary", "sequence"):
        raise cfg.error(f"unknown plan mode {mode!r}", "plan", "mode")
    if mode == "auto":
        set_goal = goal.kind in ("observation_set", "istate_set")
        mode = "stationary" if scenario.stationary is not None and set_goal else "sequence"
    report = {"scenario": scenario.name, "mode": mode, "goal": goal.kind}
    if mode == "stationary":
        if scenario.stationary is None:
            raise cfg.error("scenario has no stationary producer setting", "plan", "mode")
        setting = scenario.stationary
        receiver = scenario.agents[scenario.system.receiver]
        rel = scenario.relations[scenario.system.receiver]
        choice = select_stationary_action(setting, receiver, rel, goal, cost)
        y = setting.sense(setting.produce(choice.action))
        report.update(action=encode_value(choice.action), cost=choice.cost,
                      observation=encode_value(choice.observation),
                      feasible_actions=choice.feasible,
                      verified=goal.target_ok(y, choice.istate))
    else:
        horizon = args.stages or _number(cfg, "plan", "horizon", int, None)
        if horizon is None:
            horizon = scenario.stages - 1
        budget = _number(cfg, "plan", "budget", int, DEFAULT_BUDGET)
        plan = plan_action_sequence(scenario.system, scenario.omega1, goal, horizon, cost, budget)
        report.update(actions=encode_value(plan.actions), cost=plan.cost, horizon=horizon,
                      nodes=plan.nodes, verified=plan.verified)
        if not plan.verified:
            log.error("plan failed replay verification")
            _emit(json.dumps(report, sort_keys=True) + "\n", args.out)
            return EXIT_RUNTIME
    _emit(json.dumps(report, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf"
    return repr(float(v))


def margins_csv(scenario: Scenario, kind: str) -> str:
    if scenario.sweep is None:
        raise MetricMissing(f"scenario {scenario.name!r} declares no margin space")
    space, member = scenario.sweep(kind)
    pts = list(space)
    results = margin_field(space, member)
    dim = len(pts[0]) if pts and isinstance(pts[0], tuple) else 1
    head = [kind] if dim == 1 else [f"{kind}{i + 1}" for i in range(dim)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(head + ["pr", "ffm", "in_p"])
    for p, m in zip(pts, results):
        coords = list(p) if isinstance(p, tuple) else [p]
        w.writerow([_coord(c) for c in coords] + [_fmt(m.pr), _fmt(m.ffm), int(m.in_plausible_set)])
    return buf.getvalue()


def _coord(c):
    if isinstance(c, float):
        return repr(c)
    return str(encode_value(c))


def cmd_margins(args, cfg: RunConfig) -> int:
    scenario = build_scenario(cfg, _parse_overrides(args.param))
    kind = args.space or cfg.margins.get("space", "y")
    _emit(margins_csv(scenario, kind), args.out)
    return EXIT_OK


def cmd_selfcheck(args) -> int:
    from .oracles import run_selfcheck

    seed = 0 if args.seed is None else args.seed
    results = run_selfcheck(seed=seed, rounds=args.rounds)
    failed = 0
    for name, checked, mismatches in results:
        status = "ok" if mismatches == 0 else "FAIL"
        print(f"{status:4} {name}: {checked} instances, {mismatches} mismatches")
        failed += mismatches > 0
    return EXIT_OK if failed == 0 else EXIT_RUNTIME


# -- entry point ---------------------------------------------------------------

def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pf", description="Simulate perception scenarios and plan on behalf of the producer.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_config=True):
        if with_config:
            p.add_argument("config", help="scenario config file (or the name of a bundled one)")
            p.add_argument("--param", action="append", default=[], metavar="K=V",
                           help="override a scenario parameter (repeatable)")
            p.add_argument("--out", help="output file (default: stdout)")
            p.add_argument("--stages", type=int, help="number of stages (plan: horizon)")
        p.add_argument("--seed", type=int, help="seed for disturbance resolution")
        return p

    common(sub.add_parser("run", help="simulate a scenario and write a JSONL trace"))
    common(sub.add_parser("plan", help="plan a producer action or sequence for the [goal]"))
    m = common(sub.add_parser("margins", help="export PR/FFM over a sampled space as CSV"))
    m.add_argument("--space", choices=("y", "u"), help="sweep observations or producer actions")
    s = common(sub.add_parser("selfcheck", help="compare filters against brute-force oracles"),
               with_config=False)
    s.add_argument("--rounds", type=int, default=20, help="random instances per check")
    return parser


def _setup_logging():
    level_name = os.environ.get("PF_LOG", "WARNING").upper()
    level = getattr(logging, level_name, None)
    logging.basicConfig(level=level if isinstance(level, int) else logging.WARNING,
                        format="pf: %(levelname)s: %(message)s", stream=sys.stderr)
    if not isinstance(level, int):
        log.warning("ignoring unknown PF_LOG level %r", level_name)


def main(argv: Optional[Sequence[str]] = None) -> int:
    _setup_logging()
    args = make_parser().parse_args(argv)
    if getattr(args, "stages", None) is not None and args.stages < 1:
        print("pf: error: --stages must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "selfcheck":
            return cmd_selfcheck(args)
        cfg = load_config(_resolve_path(args.config))
        handler = {"run": cmd_run, "plan": cmd_plan, "margins": cmd_margins}[args.command]
        return handler(args, cfg)
    except (ConfigError, InvalidParams) as exc:
        print(f"pf: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Infeasible as exc:
        print(f"pf: infeasible: {exc.diagnostic}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except MetricMissing as exc:
        print(f"pf: no metric: {exc}", file=sys.stderr)
        return EXIT_METRIC
    except (PercengError, BudgetExceeded, ValueError, OSError) as exc:
        print(f"pf: runtime fault: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
