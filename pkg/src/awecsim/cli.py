"""Command-line experiment runner.

Layering: built-in defaults, then config-file keys, then explicit flags.
Reports embed the fully resolved configuration and seed. Exit status 0
means the experiment completed (whatever the verdict says); configuration
and runtime faults exit 1 (argparse usage errors exit 2); --gate maps a
failed certificate or feasibility verdict to exit 2.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import secrets
import sys
from dataclasses import dataclass, fields
from typing import Optional

from . import adversaries as registry
from .attacks import a_attack_experiment, b_attack_experiment
from .awec import AwecParams, awec_runner, noise_index_count
from .channels import ChannelSpec, sampler_for
from .core import RandomStream
from .harness import (
    ConfigurationError,
    bernoulli_report,
    dp_audit,
    estimate_awec,
    estimate_wec,
    exact_dp_audit,
    neighboring_pair,
    pipeline_report,
    view_equivalence,
    write_awec_trial_log,
    write_wec_trial_log,
)
from .stats import binom_tail_at_most
from .wec import run_wec

COMMANDS = ("pipeline", "awec", "wec", "audit", "attack", "appendix-a", "gl-decode")


@dataclass
class ExperimentConfig:
    command: str = "pipeline"
    channel: str = "trusted-laplace"
    eps: float = 1.0
    delta: float = 0.0
    n: int = 1000
    ell: int = 3
    lambda1: float = 1.0
    lambda2: float = 10.0
    k: Optional[int] = None
    trials: int = 1000
    seed: Optional[int] = None
    adversaries: Optional[tuple] = None
    leak_index: int = 0
    output: Optional[str] = None
    format: str = "json-tree"
    threads: int = 1
    gate: bool = False
    exact: bool = False
    gamma: float = 0.4
    dist_radius: int = 1
    pred_accuracy: float = 0.9
    trial_log: Optional[str] = None


_BOOL_KEYS = {"gate", "exact"}
_INT_KEYS = {"n", "ell", "k", "trials", "seed", "leak_index", "threads", "dist_radius"}
_FLOAT_KEYS = {"eps", "delta", "lambda1", "lambda2", "gamma", "pred_accuracy"}


def parse_config_file(path: str) -> dict:
    """Plain key = value records; # starts a comment; keys use - or _."""
    values = {}
    known = {f.name for f in fields(ExperimentConfig)}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in known:
                raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _coerce(key, value, f"{path}:{lineno}")
    return values


def _coerce(key: str, value: str, where: str):
    try:
        if key in _BOOL_KEYS:
            if value.lower() in ("1", "true", "yes", "on"):
                return True
            if value.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
        if key == "adversaries":
            return tuple(part.strip() for part in value.split(",") if part.strip())
        return value
    except ValueError as exc:
        raise ConfigurationError(f"{where}: bad value for {key}: {value!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="awecsim",
        description="Erasure-channel construction lab over DP inner-product channels",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="key = value config file; flags override it")
    parser.add_argument("--channel", help="channel kind", default=None)
    parser.add_argument("--eps", type=float, default=None, help="privacy budget (nats)")
    parser.add_argument("--delta", type=float, default=None, help="privacy slack")
    parser.add_argument("--n", type=int, default=None, help="vector length (bits for gl-decode)")
    parser.add_argument("--ell", type=int, default=None, help="accuracy radius")
    parser.add_argument("--lambda1", type=float, default=None, help="noise-budget exponent scale")
    parser.add_argument("--lambda2", type=float, default=None, help="noise-budget multiplier")
    parser.add_argument("--k", type=int, default=None, help="override the derived noise-index count")
    parser.add_argument("--trials", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None, help="auto-generated and echoed if omitted")
    parser.add_argument("--adversaries", default=None, help="comma-separated registry keys")
    parser.add_argument("--leak-index", type=int, default=None, dest="leak_index",
                        help="leaked coordinate; also the audited coordinate")
    parser.add_argument("--output", default=None, help="report path (stdout if omitted)")
    parser.add_argument("--format", choices=("json-tree", "csv"), default=None)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--gate", action="store_true", default=None,
                        help="exit 2 when the certificate/verdict fails")
    parser.add_argument("--exact", action="store_true", default=None,
                        help="prefer exact enumeration where supported")
    return parser


def resolve_config(argv) -> ExperimentConfig:
    args = build_parser().parse_args(argv)
    cfg = ExperimentConfig()
    if args.config:
        for key, value in parse_config_file(args.config).items():
            setattr(cfg, key, value)
    for field in fields(ExperimentConfig):
        if field.name == "command":
            continue
        flag_value = getattr(args, field.name, None)
        if flag_value is not None:
            if field.name == "adversaries" and isinstance(flag_value, str):
                flag_value = tuple(p.strip() for p in flag_value.split(",") if p.strip())
            setattr(cfg, field.name, flag_value)
    cfg.command = args.command
    if cfg.seed is None:
        cfg.seed = secrets.randbits(63)
    if cfg.trials < 1:
        raise ConfigurationError("trials must be at least 1")
    if cfg.threads < 1:
        raise ConfigurationError("threads must be at least 1")
    _validate_adversaries(cfg)
    return cfg


_ATTACK_ESTIMATORS = ("exact-oa", "plugin")
_ATTACK_DISTINGUISHERS = ("yhat-disagree",)


def _validate_adversaries(cfg: ExperimentConfig):
    if cfg.adversaries is None:
        return
    known = (
        set(registry.AWEC_DISTINGUISHERS)
        | set(registry.AWEC_ESTIMATORS)
        | set(registry.WEC_GUESSERS)
        | set(registry.AUDIT_ADVERSARIES)
        | set(_ATTACK_DISTINGUISHERS)
    )
    for name in cfg.adversaries:
        if name not in known:
            raise ConfigurationError(f"unknown adversary key {name!r}; known: {sorted(known)}")


def _channel_spec(cfg: ExperimentConfig) -> ChannelSpec:
    extra = {}
    if cfg.channel == "leaky":
        extra["leak_index"] = cfg.leak_index
    return ChannelSpec(cfg.channel, cfg.n, cfg.eps, cfg.delta, extra)


def _awec_params(cfg: ExperimentConfig) -> AwecParams:
    return AwecParams(
        n=cfg.n, ell=cfg.ell, eps=cfg.eps,
        lambda1=cfg.lambda1, lambda2=cfg.lambda2, k_override=cfg.k,
    )


def _pick(names, pool, fallback):
    if names is None:
        return fallback
    chosen = tuple(n for n in names if n in pool)
    return chosen if chosen else fallback


def run_experiment(cfg: ExperimentConfig) -> dict:
    stream = RandomStream(cfg.seed)
    if cfg.command == "pipeline":
        spec = _channel_spec(cfg)
        report = pipeline_report(
            spec,
            _awec_params(cfg),
            cfg.trials,
            stream,
            distinguisher_names=_pick(cfg.adversaries, registry.AWEC_DISTINGUISHERS,
                                      registry.DEFAULT_AWEC_DISTINGUISHERS),
            estimator_names=_pick(cfg.adversaries, registry.AWEC_ESTIMATORS,
                                  registry.DEFAULT_AWEC_ESTIMATORS),
            guesser_names=_pick(cfg.adversaries, registry.WEC_GUESSERS,
                                registry.DEFAULT_WEC_GUESSERS),
            audit_names=_pick(cfg.adversaries, registry.AUDIT_ADVERSARIES,
                              registry.DEFAULT_AUDIT_ADVERSARIES),
            threads=cfg.threads,
        )
        report["gate_ok"] = bool(report["feasibility"]["ot_feasible"])
        return report
    if cfg.command == "awec":
        spec = _channel_spec(cfg)
        cert = estimate_awec(
            awec_runner(sampler_for(spec), _awec_params(cfg)),
            cfg.ell,
            cfg.trials,
            stream,
            registry.resolve(registry.AWEC_DISTINGUISHERS,
                             _pick(cfg.adversaries, registry.AWEC_DISTINGUISHERS,
                                   registry.DEFAULT_AWEC_DISTINGUISHERS)),
            registry.resolve(registry.AWEC_ESTIMATORS,
                             _pick(cfg.adversaries, registry.AWEC_ESTIMATORS,
                                   registry.DEFAULT_AWEC_ESTIMATORS)),
            threads=cfg.threads,
        )
        report = cert.as_dict()
        report["gate_ok"] = cert.verdict
        if cfg.trial_log:
            write_awec_trial_log(
                awec_runner(sampler_for(spec), _awec_params(cfg)),
                cfg.trials,
                RandomStream(cfg.seed).substream("trial-log"),
                cfg.trial_log,
            )
            report["trial_log"] = cfg.trial_log
        return report
    if cfg.command == "wec":
        spec = _channel_spec(cfg)
        params = _awec_params(cfg)
        runner = awec_runner(sampler_for(spec), params)
        cert = estimate_wec(
            lambda s: run_wec(runner, params.ell, params.n, s),
            cfg.ell,
            cfg.trials,
            stream,
            registry.resolve(registry.AWEC_DISTINGUISHERS,
                             _pick(cfg.adversaries, registry.AWEC_DISTINGUISHERS,
                                   registry.DEFAULT_AWEC_DISTINGUISHERS)),
            registry.resolve(registry.WEC_GUESSERS,
                             _pick(cfg.adversaries, registry.WEC_GUESSERS,
                                   registry.DEFAULT_WEC_GUESSERS)),
            threads=cfg.threads,
        )
        report = cert.as_dict()
        report["gate_ok"] = cert.verdict
        if cfg.trial_log:
            write_wec_trial_log(
                lambda s: run_wec(runner, params.ell, params.n, s),
                cfg.trials,
                RandomStream(cfg.seed).substream("trial-log"),
                cfg.trial_log,
            )
            report["trial_log"] = cfg.trial_log
        return report
    if cfg.command == "audit":
        spec = _channel_spec(cfg)
        sampler = sampler_for(spec)
        pair = neighboring_pair(cfg.n, cfg.leak_index, stream.substream("pair"))
        names = _pick(cfg.adversaries, registry.AUDIT_ADVERSARIES,
                      registry.DEFAULT_AUDIT_ADVERSARIES)
        results = [
            dp_audit(sampler, adv, "y", pair, cfg.eps, cfg.delta, cfg.trials,
                     stream.substream("audit", adv.name), cfg.threads)
            for adv in registry.resolve(registry.AUDIT_ADVERSARIES, names)
        ]
        violation = any(r.violation for r in results)
        report = {
            "results": [r.as_dict() for r in results],
            "violation": violation,
            "gate_ok": not violation,
        }
        if cfg.exact:
            exact = exact_dp_audit(spec, "y", cfg.leak_index)
            report["exact"] = exact.as_dict()
            report["violation"] = violation or exact.violation
            report["gate_ok"] = not report["violation"]
        return report
    if cfg.command == "attack":
        return _attack_report(cfg, stream)
    if cfg.command == "appendix-a":
        faithful = view_equivalence(cfg.n, cfg.eps, cfg.trials,
                                    stream.substream("faithful"), cfg.threads, broken=False)
        broken = view_equivalence(cfg.n, cfg.eps, cfg.trials,
                                  stream.substream("broken"), cfg.threads, broken=True)
        return {
            "faithful": faithful,
            "broken": broken,
            "gate_ok": faithful["tv"]["point"] <= 0.02 < broken["tv"]["point"],
        }
    if cfg.command == "gl-decode":
        return _gl_decode_report(cfg, stream)
    raise ConfigurationError(f"unknown command {cfg.command!r}")


def _attack_report(cfg: ExperimentConfig, stream: RandomStream) -> dict:
    spec = _channel_spec(cfg)
    sampler = sampler_for(spec)
    k = cfg.k if cfg.k is not None else noise_index_count(cfg.ell, cfg.eps, cfg.lambda1, cfg.lambda2)
    names = cfg.adversaries or _ATTACK_DISTINGUISHERS
    results = {}
    for name in names:
        sub = stream.substream("attack", name)
        if name in _ATTACK_DISTINGUISHERS:
            verdict = a_attack_experiment(
                sampler, cfg.n, k, cfg.trials, sub, cfg.eps, cfg.delta, gamma=cfg.gamma
            )
        elif name in registry.AWEC_ESTIMATORS:
            verdict = b_attack_experiment(
                sampler, registry.AWEC_ESTIMATORS[name](), cfg.n, k, cfg.trials, sub,
                cfg.eps, cfg.delta, dist_radius=cfg.dist_radius,
            )
        else:
            raise ConfigurationError(f"adversary {name!r} has no attack pathway")
        results[name] = {
            "hits": verdict.hits,
            "misses": verdict.misses,
            "trials": verdict.n_guesses,
            "hit_ci": [verdict.hit_low, verdict.hit_high],
            "miss_ci": [verdict.miss_low, verdict.miss_high],
            "violation": verdict.violation,
        }
    return {
        "k": k,
        "results": results,
        "violation": any(r["violation"] for r in results.values()),
        "gate_ok": True,
    }


def _gl_decode_report(cfg: ExperimentConfig, stream: RandomStream) -> dict:
    from .wec import gl_weak_decode

    n_bits = cfg.n
    acc = cfg.pred_accuracy
    p_pair_wrong = 2 * acc * (1 - acc)
    successes = 0
    predicted = []
    for t in range(cfg.trials):
        sub = stream.substream("gl", t)
        truth = sub.substream("truth").integer(0, 2**n_bits - 1)
        noise_rng = sub.substream("noise").generator

        def pred(r):
            clean = (truth & r).bit_count() & 1
            return clean ^ int(noise_rng.random() < 1 - acc)

        decoded = gl_weak_decode(pred, n_bits, sub.substream("decode"))
        successes += int(decoded == truth)
        per_bit = []
        s = n_bits
        for i in range(n_bits):
            if (truth >> i) & 1:
                per_bit.append(binom_tail_at_most((s - 1) // 2, s, p_pair_wrong))
            else:
                per_bit.append(binom_tail_at_most(s // 2, s, p_pair_wrong))
        prob = 1.0
        for b in per_bit:
            prob *= b
        predicted.append(prob)
    report = bernoulli_report("recovery", successes, cfg.trials, cfg.seed)
    return {
        "n_bits": n_bits,
        "pred_accuracy": acc,
        "recovery": report.as_dict(),
        "oracle_prediction": sum(predicted) / len(predicted),
        "gate_ok": True,
    }


def _flatten_rows(report: dict, prefix=""):
    keys = {"point", "ci_low", "ci_high", "trials", "seed"}
    if isinstance(report, dict):
        if keys <= set(report):
            yield (prefix or report.get("name", "metric"), report["point"],
                   report["ci_low"], report["ci_high"], report["trials"], report["seed"])
            return
        for key in report:
            yield from _flatten_rows(report[key], f"{prefix}.{key}" if prefix else str(key))
    elif isinstance(report, (list, tuple)):
        for idx, item in enumerate(report):
            yield from _flatten_rows(item, f"{prefix}[{idx}]")
    else:
        yield (prefix, report, "", "", "", "")


def render_report(report: dict, fmt: str) -> str:
    if fmt == "json-tree":
        return json.dumps(report, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["metric", "point", "ci_low", "ci_high", "trials", "seed"])
    for row in _flatten_rows(report):
        writer.writerow(row)
    return buf.getvalue()


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = resolve_config(argv)
        report = run_experiment(cfg)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    gate_ok = report.pop("gate_ok", True)
    # Delivery and scheduling knobs stay out of the report so reruns are
    # byte-identical regardless of destination, format, or thread count.
    excluded = {"output", "threads", "format", "gate"}
    full = {
        "command": cfg.command,
        "config": {
            f.name: (list(getattr(cfg, f.name)) if isinstance(getattr(cfg, f.name), tuple)
                     else getattr(cfg, f.name))
            for f in fields(cfg)
            if f.name not in excluded
        },
        "report": report,
    }
    rendered = render_report(full, cfg.format)
    summary = f"{cfg.command}: seed={cfg.seed} trials={cfg.trials} gate_ok={gate_ok}"
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8") as fh:
            fh.write(rendered)
        print(summary)
    else:
        sys.stdout.write(rendered)
        print(summary, file=sys.stderr)
    if cfg.gate and not gate_ok:
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
