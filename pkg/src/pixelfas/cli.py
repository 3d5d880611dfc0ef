"""Command-line front end.

Subcommands:
  synth   write surrogate model files (network + pattern bundle)
  search  step 1 only: find matched sets, write matched_sets.json
  order   step 2 only: GA ordering over previously found matched sets
  run     the full two-step pipeline
  eval    recompute reflections, covariance, and delta_e for a state table
  oracle  run the built-in verification suites

Exit codes: 0 success, 1 internal/oracle failure, 2 config error,
3 parse error, 4 numeric error, 5 search exhausted with no solution.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config
from .errors import (ConfigError, DegenerateStateError, NoSolutionError,
                     ParseError, PixelFasError, SingularMatrixError)
from .em_model import save_network, save_pattern_bundle
from .impm import (PixelConfiguration, build_load_map, input_impedance,
                   port_currents, reflection_coefficient)
from .pcdm import compute_kernel, covariance_from_currents, target_covariance
from .search import (MatchedSet, RunResult, SearchStats, SetResult, Step1Result,
                     order_matched_sets, random_matched_search)
from . import oracles, reports

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_NUMERIC = 4
EXIT_NO_SOLUTION = 5


def _make_outdir(out: str) -> Path:
    outdir = Path(out)
    if not outdir.parent.exists():
        raise ConfigError(f"output directory parent does not exist: {outdir.parent}")
    outdir.mkdir(exist_ok=True)
    return outdir


def _apply_overrides(config: RunConfig, args) -> RunConfig:
    for flag, attr in (("seed", "seed"), ("threads", "threads"),
                       ("budget", "budget"),
                       ("target_matched_sets", "target_matched_sets")):
        value = getattr(args, flag, None)
        if value is not None:
            setattr(config, attr, value)
    return config


def cmd_synth(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    outdir = _make_outdir(args.out)
    net, patterns = config.load_model()
    save_network(net, outdir / "network.zmat")
    save_pattern_bundle(patterns, outdir / "patterns")
    reports.write_manifest(outdir, config, config.seed)
    print(f"wrote network.zmat and patterns/ to {outdir}")
    return EXIT_OK


def _matched_sets_doc(step1: Step1Result, q: int) -> dict:
    return {
        "q": q,
        "stats": {
            "candidates_tried": step1.stats.candidates_tried,
            "matched_sets_found": step1.stats.matched_sets_found,
            "best_reflection_db": (None if step1.stats.best_reflection_db == float("inf")
                                   else step1.stats.best_reflection_db),
        },
        "sets": [
            {
                "switch_positions": list(ms.switch_positions),
                "hardwire": list(ms.hardwire),
                "state_bits": [list(s.switch_bits) for s in ms.states],
                "worst_reflection_db": ms.worst_reflection_db.tolist(),
            }
            for ms in step1.matched_sets
        ],
    }


def _step1_from_doc(doc: dict) -> Step1Result:
    stats = SearchStats(
        candidates_tried=doc["stats"]["candidates_tried"],
        matched_sets_found=doc["stats"]["matched_sets_found"],
        best_reflection_db=(float("inf") if doc["stats"]["best_reflection_db"] is None
                            else doc["stats"]["best_reflection_db"]),
    )
    q = doc["q"]
    sets = []
    for entry in doc["sets"]:
        positions = tuple(entry["switch_positions"])
        hardwire = tuple(entry["hardwire"])
        states = [PixelConfiguration(q=q, hardwire=hardwire,
                                     switch_positions=positions,
                                     switch_bits=tuple(bits))
                  for bits in entry["state_bits"]]
        sets.append(MatchedSet(switch_positions=positions, hardwire=hardwire,
                               states=states,
                               worst_reflection_db=np.array(entry["worst_reflection_db"])))
    return Step1Result(matched_sets=sets, stats=stats)


def cmd_search(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    outdir = _make_outdir(args.out)
    net, _ = config.load_model()
    step1 = random_matched_search(net, config.switch_model(), config.p_switches,
                                  config.n_ports, config.z0_ohm, config.seed,
                                  budget=config.budget,
                                  target=config.target_matched_sets,
                                  threads=config.threads)
    (outdir / "matched_sets.json").write_text(
        json.dumps(_matched_sets_doc(step1, net.q), indent=2, sort_keys=True,
                   default=reports._json_default) + "\n")
    reports.write_manifest(outdir, config, config.seed)
    print(f"{step1.stats.matched_sets_found} matched sets "
          f"from {step1.stats.candidates_tried} candidates")
    if step1.exhausted:
        raise NoSolutionError("no matched sets within budget", stats=step1.stats)
    return EXIT_OK


def _finish_run(config: RunConfig, outdir: Path, result: RunResult) -> int:
    reports.emit_run_artifacts(outdir, config, config.seed, result)
    if result.no_solution:
        print(f"no solution: {result.stats.candidates_tried} candidates tried, "
              f"best reflection {result.stats.best_reflection_db:.2f} dB")
        return EXIT_NO_SOLUTION
    print(f"delta_e = {result.best.delta_e:.6f} "
          f"(set {result.best.set_index}, M = {result.best.m}); artifacts in {outdir}")
    return EXIT_OK


def cmd_order(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    outdir = _make_outdir(args.out)
    try:
        doc = json.loads(Path(args.matched_sets).read_text())
        step1 = _step1_from_doc(doc)
    except FileNotFoundError as exc:
        raise ConfigError(f"matched-sets file not found: {args.matched_sets}") from exc
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise ParseError(f"bad matched-sets file: {exc}", path=args.matched_sets) from exc
    net, patterns = config.load_model()
    result = order_matched_sets(net, patterns, config.pas(), config.switch_model(),
                                step1, config.n_ports, config.aperture_wavelengths,
                                config.z0_ohm, config.seed,
                                ga_params=config.ga_params(),
                                threads=config.threads)
    return _finish_run(config, outdir, result)


def cmd_run(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    outdir = _make_outdir(args.out)
    net, patterns = config.load_model()
    step1 = random_matched_search(net, config.switch_model(), config.p_switches,
                                  config.n_ports, config.z0_ohm, config.seed,
                                  budget=config.budget,
                                  target=config.target_matched_sets,
                                  threads=config.threads)
    result = order_matched_sets(net, patterns, config.pas(), config.switch_model(),
                                step1, config.n_ports, config.aperture_wavelengths,
                                config.z0_ohm, config.seed,
                                ga_params=config.ga_params(),
                                threads=config.threads)
    return _finish_run(config, outdir, result)


def _read_state_table(path, switch_positions) -> list[tuple]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"state table not found: {path}")
    lines = path.read_text().splitlines()
    if not lines:
        raise ParseError("empty state table", path=path)
    header = lines[0].split(",")
    if header[:2] != ["fas_port", "state_index"]:
        raise ParseError("state table must start with fas_port,state_index",
                         path=path, line=1)
    table_positions = []
    for col in header[2:]:
        if not col.startswith("switch_"):
            raise ParseError(f"unexpected column {col!r}", path=path, line=1)
        table_positions.append(int(col[len("switch_"):]))
    known = set(switch_positions)
    for pos in table_positions:
        if pos not in known:
            raise ConfigError(
                f"state table references switch position {pos}, which is not "
                f"in the configured switch set {sorted(known)}")
    if set(table_positions) != known:
        raise ConfigError("state table must give bits for every configured switch")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != 2 + len(table_positions):
            raise ParseError("wrong column count", path=path, line=lineno)
        bits_by_pos = {}
        for pos, cell in zip(table_positions, cells[2:]):
            value = cell.strip().lower()
            if value not in ("on", "off", "0", "1"):
                raise ParseError(f"bad switch state {cell!r}", path=path, line=lineno)
            bits_by_pos[pos] = 1 if value in ("on", "1") else 0
        rows.append(tuple(bits_by_pos[pos] for pos in switch_positions))
    return rows


def cmd_eval(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    outdir = _make_outdir(args.out)
    if config.switch_positions is None or config.hardwire_x is None:
        raise ConfigError("eval needs design.switch_positions and design.hardwire_x")
    positions = tuple(sorted(int(p) for p in config.switch_positions))
    hardwire = tuple(int(b) for b in config.hardwire_x)
    bits_rows = _read_state_table(args.state_table, positions)
    if len(bits_rows) != config.n_ports:
        raise ConfigError(f"state table lists {len(bits_rows)} states, "
                          f"config expects {config.n_ports}")
    net, patterns = config.load_model()
    states = [PixelConfiguration(q=net.q, hardwire=hardwire,
                                 switch_positions=positions, switch_bits=bits)
              for bits in bits_rows]
    matched = MatchedSet(switch_positions=positions, hardwire=hardwire,
                         states=states,
                         worst_reflection_db=np.zeros(len(states)))
    switch_model = config.switch_model()
    from .search import currents_for_set
    currents, refl = currents_for_set(net, switch_model, matched, config.z0_ohm)
    matched.worst_reflection_db = refl.max(axis=1)
    kernel = compute_kernel(patterns, config.pas())
    rhos = covariance_from_currents(kernel, currents, net.freqs.samples_hz)
    target = target_covariance(config.n_ports, config.aperture_wavelengths)
    ordering = tuple(range(1, config.n_ports + 1))
    from .pcdm import average_error
    delta_e = average_error(rhos, target, ordering)
    result = RunResult(
        no_solution=False, stats=SearchStats(), target=target,
        best=SetResult(set_index=0, m=len(states), ordering=ordering,
                       delta_e=delta_e, rhos=rhos),
        best_set=matched, per_set=[], reflections_db=refl)
    return _finish_run(config, outdir, result)


def cmd_oracle(args) -> int:
    results = oracles.run_suites(args.level)
    doc = {"level": args.level, "suites": results,
           "passed": all(r["passed"] for r in results)}
    text = json.dumps(doc, indent=2, sort_keys=True)
    print(text)
    if args.out:
        outdir = _make_outdir(args.out)
        (outdir / "oracle.json").write_text(text + "\n")
    return EXIT_OK if doc["passed"] else EXIT_FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pixelfas",
        description="Reconfigurable-antenna state-set synthesis for fluid antenna systems")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--threads", type=int, default=None, help="worker cap")
        if out:
            p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("synth", help="write surrogate model files")
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("search", help="step 1: find matched sets")
    common(p)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--target-matched-sets", dest="target_matched_sets",
                   type=int, default=None)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("order", help="step 2: GA ordering of matched sets")
    common(p)
    p.add_argument("--matched-sets", required=True,
                   help="matched_sets.json from a previous search")
    p.set_defaults(func=cmd_order)

    p = sub.add_parser("run", help="full two-step pipeline")
    common(p)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--target-matched-sets", dest="target_matched_sets",
                   type=int, default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="evaluate a user-supplied state table")
    common(p)
    p.add_argument("--state-table", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("oracle", help="run built-in verification suites")
    p.add_argument("--level", choices=("fast", "full"), default="full")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (SingularMatrixError, DegenerateStateError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except NoSolutionError as exc:
        print(f"no solution: {exc}", file=sys.stderr)
        return EXIT_NO_SOLUTION
    except PixelFasError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
