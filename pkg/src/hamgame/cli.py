"""Command-line front end: validate, simulate, analyze, cloud.

Exit codes: 0 success, 1 usage or validation failure, 2 numerical blow-up.
Outputs are a CSV per trajectory (17 significant digits, so values round
trip exactly) plus a JSON sidecar with the game hash and run configuration;
analyze replays the run deterministically from the sidecar to recover the
payoff vectors the CSV does not store.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .analysis import build_report, make_reference, volume_ratio
from .dynamics import (
    IntegratorConfig,
    sample_payoff_ball,
    simulate,
    write_trajectory_csv,
    write_trajectory_metadata,
)
from .fileio import GameFileError, game_fingerprint, load_game_file
from .games import (
    GameKind,
    MixedProfile,
    bipartite_partition,
    solve_2x2_fully_mixed_nash,
)

USAGE_ERROR = 1
BLOW_UP_ERROR = 2


def _thread_cap() -> int:
    raw = os.environ.get("HAMGAME_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise SystemExit(f"HAMGAME_THREADS must be an integer, got {raw!r}")
    return os.cpu_count() or 1


def _load(path):
    try:
        return load_game_file(path)
    except (OSError, GameFileError) as err:
        print(f"error: {err}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _parse_inline_or_file(spec: str):
    if spec.startswith("@"):
        with open(spec[1:]) as handle:
            return json.load(handle)
    try:
        return json.loads(spec)
    except json.JSONDecodeError:
        with open(spec) as handle:
            return json.load(handle)


def _resolve_y0(loaded, args):
    if getattr(args, "y0", None):
        vectors = _parse_inline_or_file(args.y0)
        return tuple(np.asarray(v, dtype=float) for v in vectors)
    if getattr(args, "seed", None) is not None:
        return sample_payoff_ball(loaded.y0, args.radius, 1, args.seed)
    return loaded.y0


def _resolve_ref(loaded, spec):
    if spec is None or spec == "none":
        return None
    if spec == "solve2x2":
        profile = solve_2x2_fully_mixed_nash(loaded.game)
        if profile is None:
            print("note: no fully mixed 2x2 equilibrium found; continuing without a reference")
            return None
    else:
        profile = MixedProfile(tuple(np.asarray(v, dtype=float) for v in _parse_inline_or_file(spec)))
    return make_reference(loaded.game, profile)


def _squeeze_batch(y0):
    # sample_payoff_ball returns (1, k) arrays for a single draw
    return tuple(v[0] if v.ndim == 2 and v.shape[0] == 1 else v for v in y0)


def _config_from_args(args) -> IntegratorConfig:
    try:
        return IntegratorConfig(args.scheme, args.eta, args.horizon, args.stride)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def cmd_validate(args) -> int:
    loaded = _load(args.game)
    kind = loaded.classification.kind
    parts = [kind.value.replace("_", "-")]
    if loaded.normalization:
        constants = ", ".join(f"c={c:g}" for c in loaded.normalization.values())
        parts.append(f"normalized to zero-sum ({constants})")
    partition = bipartite_partition(loaded.game)
    if partition is not None:
        parts.append("bipartite")
    elif kind == GameKind.COORDINATION:
        parts.append("non-bipartite: network energy identically zero")
    else:
        parts.append("non-bipartite")
    print(", ".join(parts))
    if args.json:
        doc = {
            "classification": kind.value,
            "sigma": loaded.game.sigma,
            "bipartite": partition is not None,
            "partition": [list(side) for side in partition] if partition else None,
            "normalization": loaded.normalization,
            "game_hash": game_fingerprint(loaded.game),
        }
        print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def _out_paths(args, loaded, suffix=""):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(loaded.path).stem + suffix + "_" + args.scheme.replace(",", "-")
    return out / f"{stem}.csv", out / f"{stem}.meta.json"


def cmd_simulate(args) -> int:
    loaded = _load(args.game)
    config = _config_from_args(args)
    try:
        y0 = _squeeze_batch(_resolve_y0(loaded, args))
        ref = _resolve_ref(loaded, args.ref)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return USAGE_ERROR
    traj = simulate(
        loaded.game,
        loaded.regularizers,
        y0,
        config,
        ref=ref.profile if ref else None,
    )
    csv_path, meta_path = _out_paths(args, loaded)
    write_trajectory_csv(traj, loaded.game, csv_path)
    write_trajectory_metadata(traj, game_fingerprint(loaded.game), meta_path)
    drift_abs, drift_rel = traj.energy_drift()
    final_t = traj.states[-1].t
    print(
        f"wrote {csv_path} ({len(traj.states)} snapshots, final t={final_t:g}, "
        f"scheme={config.scheme})"
    )
    if drift_abs == drift_abs:
        print(
            f"energy[{traj.metadata['energy_variant']}]: drift={drift_abs:.3e} "
            f"(relative {drift_rel:.3e})"
        )
    if config.scheme == "euler" and traj.energy.size and not np.any(np.isnan(traj.energy)):
        diffs = np.diff(traj.energy)
        nondec = diffs.size == 0 or float(np.min(diffs)) >= -1e-10
        total = float(traj.energy[-1] - traj.energy[0])
        print(f"euler energy non-decreasing: {nondec}, total increase {total:.6g}")
    diag = traj.metadata["diagnostics"]
    if diag["truncated"]:
        print(
            f"blow-up at step {diag['blow_up_step']} ({diag['reason']}); trajectory truncated",
            file=sys.stderr,
        )
        return BLOW_UP_ERROR
    return 0


def _replay(loaded, meta, ref):
    config = IntegratorConfig(
        meta["scheme"], meta["eta"], meta["horizon"], meta["stride"]
    )
    y0 = tuple(np.asarray(v, dtype=float) for v in meta["y0"])
    stored_ref = meta.get("ref")
    if ref is None and stored_ref is not None:
        ref = make_reference(loaded.game, MixedProfile(tuple(np.asarray(v) for v in stored_ref)))
    traj = simulate(
        loaded.game,
        loaded.regularizers,
        y0,
        config,
        ref=ref.profile if ref else None,
        energy=meta.get("energy_variant") or "auto",
    )
    return traj, ref


def _csv_matches_replay(csv_path, traj) -> bool:
    """Exact match of the stored strategy rows against the replayed run."""
    from .dynamics import read_trajectory_csv

    try:
        _, data = read_trajectory_csv(csv_path)
    except (OSError, ValueError):
        return False
    if data.shape[0] != len(traj.states):
        return False
    xs = traj.strategy_matrix()
    for row in (0, data.shape[0] - 1):
        if data[row, 0] != traj.states[row].t:
            return False
        if not np.array_equal(data[row, 1 : 1 + xs.shape[1]], xs[row]):
            return False
    return True


def cmd_analyze(args) -> int:
    loaded = _load(args.game)
    game_hash = game_fingerprint(loaded.game)
    try:
        ref = _resolve_ref(loaded, args.ref)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return USAGE_ERROR
    failures = 0
    for csv_path in args.traj:
        csv_path = Path(csv_path)
        meta_path = csv_path.with_suffix("").with_suffix(".meta.json")
        if not meta_path.exists():
            meta_path = Path(str(csv_path)[: -len(".csv")] + ".meta.json")
        try:
            with open(meta_path) as handle:
                meta = json.load(handle)
        except OSError as err:
            print(f"error: {err}", file=sys.stderr)
            return USAGE_ERROR
        if meta.get("game_hash") != game_hash:
            print(
                f"error: {csv_path} was produced from a different game "
                f"(hash {meta.get('game_hash')} != {game_hash})",
                file=sys.stderr,
            )
            return USAGE_ERROR
        traj, used_ref = _replay(loaded, meta, ref)
        if not _csv_matches_replay(csv_path, traj):
            print(
                f"error: {csv_path} does not match a deterministic replay of its "
                "metadata (file edited or corrupted)",
                file=sys.stderr,
            )
            return USAGE_ERROR
        report = build_report(
            traj,
            loaded.game,
            loaded.regularizers,
            ref=used_ref,
            recurrence_epsilon=args.recurrence_eps,
            energy_tolerance=args.energy_tol,
            fenchel_tolerance=args.fenchel_tol,
        )
        out_dir = Path(args.out) if args.out else csv_path.parent
        out_dir.mkdir(parents=True, exist_ok=True)
        report_path = out_dir / (csv_path.stem + ".report.json")
        report_path.write_text(report.to_json() + "\n")
        status = "ok" if report.all_passed else "FAILED"
        print(f"{csv_path}: {status}; report written to {report_path}")
        for name, check in report.checks.items():
            print(
                f"  {name}: {'pass' if check['passed'] else 'FAIL'} "
                f"(value {check['value']:.3e}, tolerance {check['tolerance']:.1e})"
            )
        if not report.all_passed:
            failures += 1
    return USAGE_ERROR if failures else 0


def cmd_cloud(args) -> int:
    loaded = _load(args.game)
    if args.n < 10:
        print("error: cloud size must be at least 10", file=sys.stderr)
        return USAGE_ERROR
    schemes = [s.strip() for s in args.scheme.split(",") if s.strip()]
    cloud = sample_payoff_ball(loaded.y0, args.radius, args.n, args.seed)

    def run(scheme):
        config = IntegratorConfig(scheme, args.eta, args.horizon, args.stride)
        return scheme, volume_ratio(loaded.game, loaded.regularizers, cloud, config)

    results = {}
    try:
        workers = max(1, min(len(schemes), _thread_cap()))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for scheme, report in pool.map(run, schemes):
                results[scheme] = report
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return USAGE_ERROR
    doc = {
        "game_hash": game_fingerprint(loaded.game),
        "n": args.n,
        "radius": args.radius,
        "seed": args.seed,
        "eta": args.eta,
        "horizon": args.horizon,
        "volume": {
            scheme: {"ratio": rep.ratio, "note": rep.note} for scheme, rep in results.items()
        },
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report_path = out / (Path(loaded.path).stem + "_cloud.json")
    report_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    for scheme, rep in results.items():
        print(f"{scheme}: volume ratio {rep.ratio:.4f} ({rep.note})")
    print(f"report written to {report_path}")
    return 0


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; keep 2 reserved for blow-ups
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="hamgame",
        description="Simulate and analyze regularized-leader dynamics on network games.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="classify a game file and report its structure")
    p.add_argument("--game", required=True)
    p.add_argument("--json", action="store_true", help="also print a JSON summary")
    p.set_defaults(func=cmd_validate)

    def common_run_flags(p):
        p.add_argument("--scheme", default="rk4", help="euler, rk4, or leapfrog")
        p.add_argument("--eta", type=float, default=1e-3, help="integrator step size")
        p.add_argument("--horizon", type=float, default=10.0, help="simulated time span")
        p.add_argument("--stride", type=int, default=10, help="record every n-th step")

    p = sub.add_parser("simulate", help="run one trajectory and write CSV + metadata")
    p.add_argument("--game", required=True)
    common_run_flags(p)
    p.add_argument("--seed", type=int, default=None, help="draw y0 from a seeded ball")
    p.add_argument("--radius", type=float, default=0.1, help="radius of the seeded ball")
    p.add_argument("--y0", default=None, help="inline JSON (or @file / path) overriding the game file")
    p.add_argument("--ref", default="none", help="'solve2x2', 'none', or an inline/file profile")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="build invariance reports for recorded trajectories")
    p.add_argument("--game", required=True)
    p.add_argument("--traj", nargs="+", required=True, help="trajectory CSV files")
    p.add_argument("--ref", default="none")
    p.add_argument("--out", default=None, help="report directory (default: next to the CSV)")
    p.add_argument("--energy-tol", type=float, default=1e-6)
    p.add_argument("--fenchel-tol", type=float, default=1e-7)
    p.add_argument("--recurrence-eps", type=float, default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("cloud", help="evolve a cloud of starts and estimate volume change")
    p.add_argument("--game", required=True)
    common_run_flags(p)
    p.add_argument("--n", type=int, required=True, help="cloud size (>= 10)")
    p.add_argument("--radius", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_cloud)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as err:
        return err.code if isinstance(err.code, int) else USAGE_ERROR
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
