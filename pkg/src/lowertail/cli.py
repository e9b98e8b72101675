"""``lowertail`` command line.

Estimates go to stdout as JSON lines.  Errors go to stderr as one JSON
object, and the exit status is 0 on success, 1 for bad parameters, 2 when a
rare event was not reached and 3 when a lemma check found a violation.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np
from scipy.spatial import cKDTree

from .errors import InfeasibleSweepError, LowerTailError, ParameterError, RareEventExhaustion
from .geometry import BoxWindow, PointConfig, RngStream, sample_poisson
from .graphs import cell_from_points, knn_edges, rng_edges
from .scores import (CliqueCount, KnnPower, PowerEdgeRGG, RngPower, VoronoiIntrinsic, format_spec,
                     h_n, parse_spec, rgg_mean_density, score_all)
from .entropy import rate_upper_bound
from .lemmas import SUITES, run_suite
from .sprinkling import CouplingSample, event_A, event_E_M_plus, sample_given_A
from .tails import conditional_sample, estimate_tail, h_samples, rate_curve, sample_h, tail_csv

EXIT_OK, EXIT_PARAM, EXIT_EXHAUSTED, EXIT_VIOLATION = 0, 1, 2, 3
STOCHASTIC = {"sample", "tail", "rate-curve", "rate-bound", "verify", "render", "calibrate-L"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParameterError(message)


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _workers(text):
    if text == "auto":
        return "auto"
    try:
        w = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("workers must be a positive integer or 'auto'") from None
    if w < 1:
        raise argparse.ArgumentTypeError("workers must be a positive integer or 'auto'")
    return w


def _emit(obj, out=None):
    line = json.dumps(obj, sort_keys=True)
    if out:
        with open(out, "w") as fh:
            fh.write(line + "\n")
    print(line)


def _write(path, text):
    with open(path, "w") as fh:
        fh.write(text)


# -- commands ---------------------------------------------------------------------

def cmd_sample(args):
    cfg = sample_poisson(args.intensity, BoxWindow(args.n + 2 * args.margin, args.d),
                         RngStream(args.seed))
    text = cfg.to_text() if args.format == "text" else cfg.to_json()
    if args.out:
        _write(args.out, text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    return EXIT_OK


def _read_points(path):
    with open(path) as fh:
        text = fh.read()
    return PointConfig.from_json(text) if text.lstrip().startswith(("{", "[")) else PointConfig.from_text(text)


def cmd_score(args):
    spec = parse_spec(args.spec)
    cfg = _read_points(args.points)
    window = cfg.window if args.n is None else BoxWindow(args.n, cfg.dimension)
    scored = score_all(spec, cfg, window)
    scores = [None if not math.isfinite(v) else float(v) for v in scored.per_point_scores]
    _emit({"spec": format_spec(spec), "scoring_side": window.side, "points": len(cfg),
           "scored": len(scored.indices), "indices": scored.indices.tolist(), "scores": scores,
           "flagged": np.flatnonzero(scored.flags).tolist(), "h_n": h_n(scored)}, args.out)
    return EXIT_OK


def cmd_tail(args):
    est = estimate_tail(parse_spec(args.spec), args.n, args.a, args.margin, args.trials,
                        RngStream(args.seed), not args.non_strict, args.d, args.workers)
    if args.csv:
        _write(args.csv, tail_csv([est]))
    _emit(json.loads(est.to_json()), args.out)
    return EXIT_OK


def cmd_rate_curve(args):
    ests = rate_curve(parse_spec(args.spec), args.a, args.n_list, args.margin, args.trials,
                      RngStream(args.seed), args.min_hits, args.target_hits, args.max_trials,
                      not args.non_strict, args.d, args.workers)
    if args.csv:
        _write(args.csv, tail_csv(ests))
    for e in ests:
        _emit(json.loads(e.to_json()))
    return EXIT_OK


def cmd_rate_bound(args):
    b = rate_upper_bound(parse_spec(args.spec), args.a, (args.lambda_lo, args.lambda_hi), args.trials,
                         RngStream(args.seed), args.margin, args.d, args.scoring_side,
                         args.lambda_tol, workers=args.workers)
    obj = json.loads(b.to_json())
    obj.update(seed=args.seed, spec=format_spec(parse_spec(args.spec)), scoring_side=args.scoring_side,
               margin=args.margin)
    _emit(obj, args.out)
    return EXIT_OK


def cmd_verify(args):
    reports = run_suite(args.trials, RngStream(args.seed), args.suite, args.n, args.margin)
    failed = False
    lines = []
    for r in reports:
        obj = json.loads(r.to_json())
        obj["seed"] = args.seed
        lines.append(json.dumps(obj, sort_keys=True))
        print(lines[-1])
        failed |= not r.passed
    if args.out:
        _write(args.out, "\n".join(lines) + "\n")
    return EXIT_VIOLATION if failed else EXIT_OK


def _edges_for(spec, pts):
    kind = spec.kind
    if isinstance(kind, (PowerEdgeRGG, CliqueCount)):
        pairs = cKDTree(pts).query_pairs(kind.t, output_type="ndarray")
        if len(pairs):
            d = np.linalg.norm(pts[pairs[:, 0]] - pts[pairs[:, 1]], axis=1)
            pairs = pairs[d < kind.t]
        return pairs
    if isinstance(kind, KnnPower):
        return knn_edges(pts, kind.k, kind.mode, allow_infinite=True)
    if isinstance(kind, RngPower):
        return rng_edges(pts)
    return np.empty((0, 2), dtype=np.int64)


def _fmt(v):
    return f"{v:.4f}"


def render_svg(spec, config: PointConfig, scoring: BoxWindow, title: str, px: float = 600.0) -> str:
    """SVG of the points and graph edges of ``config`` with the scoring window drawn."""
    if config.dimension != 2:
        raise ParameterError("render supports d = 2 only")
    outer = config.window
    scale = px / outer.side
    lo = outer.lo

    def xy(p):
        return _fmt((p[0] - lo[0]) * scale), _fmt(px - (p[1] - lo[1]) * scale)

    pts = config.points
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{int(px)}" height="{int(px) + 30}" '
           f'viewBox="0 -30 {int(px)} {int(px) + 30}">',
           f'<text x="4" y="-10" font-family="monospace" font-size="13">{title}</text>',
           f'<rect x="0" y="0" width="{int(px)}" height="{int(px)}" fill="white" stroke="#999"/>']
    sx0, sy1 = xy(scoring.lo)
    sx1, sy0 = xy(scoring.hi)
    out.append(f'<rect x="{sx0}" y="{sy0}" width="{_fmt(float(sx1) - float(sx0))}" '
               f'height="{_fmt(float(sy1) - float(sy0))}" fill="none" stroke="black" stroke-width="1.5"/>')
    if isinstance(spec.kind, VoronoiIntrinsic):
        for i in range(len(pts)):
            cell = cell_from_points(pts, i, outer.side)
            if len(cell.vertices) >= 3:
                path = " ".join(",".join(xy(v + pts[i])) for v in cell.vertices)
                out.append(f'<polygon points="{path}" fill="none" stroke="#4a7bb7" stroke-width="0.6"/>')
    else:
        for i, j in _edges_for(spec, pts):
            (x1, y1), (x2, y2) = xy(pts[i]), xy(pts[j])
            out.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="#4a7bb7" stroke-width="0.8"/>')
    r = _fmt(max(1.5, 0.06 * scale))
    for p in pts:
        cx, cy = xy(p)
        out.append(f'<circle cx="{cx}" cy="{cy}" r="{r}" fill="black"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_render(args):
    spec = parse_spec(args.spec)
    rng = RngStream(args.seed)
    scoring = BoxWindow(args.n, 2)
    prefix = args.out or "render"
    value, _, _, typical = sample_h(spec, args.n, args.margin, rng.child(0))
    _write(f"{prefix}_typical.svg",
           render_svg(spec, typical, scoring, f"{format_spec(spec)}  n={args.n:g}  H_n={value:.4f}"))
    files = [f"{prefix}_typical.svg"]
    obj = {"spec": format_spec(spec), "n": args.n, "seed": args.seed, "typical_h": value}
    if args.conditioned is not None:
        if isinstance(spec.kind, PowerEdgeRGG) and spec.range_trunc is None and spec.clamp is None:
            mean = rgg_mean_density(spec.kind)
        else:
            vals, _, _ = h_samples(spec, args.n, args.margin, args.mean_trials, rng.child(2),
                                    workers=args.workers)
            mean = float(np.mean(vals))
        a = args.conditioned * mean
        cond = conditional_sample(spec, args.n, a, args.margin, args.max_attempts, rng.child(1))
        _write(f"{prefix}_conditioned.svg",
               render_svg(spec, cond.config, scoring,
                          f"{format_spec(spec)}  n={args.n:g}  H_n={cond.h_value:.4f} &lt; a={a:.4f}"))
        files.append(f"{prefix}_conditioned.svg")
        obj.update(a=a, mean=mean, conditioned_h=cond.h_value, attempts=cond.attempts)
    obj["files"] = files
    _emit(obj)
    return EXIT_OK


def cmd_calibrate_L(args):
    rng = RngStream(args.seed)
    window = BoxWindow(args.n, 2)
    outer = BoxWindow(args.n + 2 * args.margin, 2)
    held = 0
    for i in range(args.trials):
        sub = rng.child(i)
        base = sample_poisson(1.0, outer, sub.child(0))
        sprinkle = sample_given_A(window, args.M, args.L, sub.child(1))
        if not event_A(sprinkle, window, args.M, args.L):
            raise LowerTailError("conditioned sprinkle violates event A")
        sample = CouplingSample(base, base, sprinkle, base, 1.0, args.M ** -2)
        held += event_E_M_plus(sample, window, args.M, "voronoi")
    _emit({"L": args.L, "M": args.M, "n": args.n, "trials": args.trials, "held": held,
           "fraction": held / args.trials, "seed": args.seed})
    return EXIT_OK if held == args.trials else EXIT_VIOLATION


COMMANDS = {"sample": cmd_sample, "score": cmd_score, "tail": cmd_tail, "rate-curve": cmd_rate_curve,
            "rate-bound": cmd_rate_bound, "verify": cmd_verify, "render": cmd_render,
            "calibrate-L": cmd_calibrate_L}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lowertail", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="key = value file; command-line flags take precedence")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, seed=True, spec=True):
        if seed:
            sp.add_argument("--seed", type=int, help="master seed (required)")
            sp.add_argument("--workers", type=_workers, default=1,
                            help="process count; never changes the output")
        if spec:
            sp.add_argument("--spec", help='score spec, e.g. "rgg:alpha=0,t=1"')
        sp.add_argument("--out", help="output path")
        sp.add_argument("--d", type=int, default=2)

    s = sub.add_parser("sample", help="Poisson sample on Q_(n+2 margin)")
    common(s, spec=False)
    s.add_argument("--n", type=float, default=10.0)
    s.add_argument("--margin", type=float, default=0.0)
    s.add_argument("--intensity", type=float, default=1.0)
    s.add_argument("--format", choices=("text", "json"), default="text")

    s = sub.add_parser("score", help="per-point scores and H_n of a points file")
    common(s, seed=False)
    s.add_argument("--points", required=False, help="points file (text or JSON)")
    s.add_argument("--n", type=float, default=None, help="side of the scoring box (default: whole window)")

    for name in ("tail", "rate-curve"):
        s = sub.add_parser(name, help="lower-tail probability" if name == "tail" else "empirical rates over n")
        common(s)
        s.add_argument("--a", type=float)
        s.add_argument("--margin", type=float, default=3.0)
        s.add_argument("--non-strict", action="store_true", help="count H_n <= a instead of H_n < a")
        s.add_argument("--csv")
        if name == "tail":
            s.add_argument("--n", type=float)
            s.add_argument("--trials", type=int, default=10000)
        else:
            s.add_argument("--n-list", type=_float_list, default=[4.0, 6.0, 8.0])
            s.add_argument("--trials", type=int, default=None)
            s.add_argument("--target-hits", type=float, default=None)
            s.add_argument("--min-hits", type=float, default=10)
            s.add_argument("--max-trials", type=int, default=10 ** 6)

    s = sub.add_parser("rate-bound", help="Poisson-family entropy upper bound on the rate")
    common(s)
    s.add_argument("--a", type=float)
    s.add_argument("--lambda-lo", type=float, default=0.05)
    s.add_argument("--lambda-hi", type=float, default=1.0)
    s.add_argument("--trials", type=int, default=2000)
    s.add_argument("--margin", type=float, default=3.0)
    s.add_argument("--scoring-side", type=float, default=1.0)
    s.add_argument("--lambda-tol", type=float, default=1e-3)

    s = sub.add_parser("verify", help="structural property sweeps")
    common(s, spec=False)
    s.add_argument("--suite", action="append", choices=("all",) + SUITES)
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--n", type=float, default=10.0)
    s.add_argument("--margin", type=float, default=3.0)

    s = sub.add_parser("render", help="SVG of a typical and a conditioned realization")
    common(s)
    s.add_argument("--n", type=float, default=10.0)
    s.add_argument("--margin", type=float, default=1.0)
    s.add_argument("--conditioned", type=float, default=None,
                   help="condition on H_n below this fraction of its mean")
    s.add_argument("--max-attempts", type=int, default=100000)
    s.add_argument("--mean-trials", type=int, default=200)

    s = sub.add_parser("calibrate-L", help="check event A forces all radii below M")
    common(s, spec=False)
    s.add_argument("--L", type=float, default=12.0)
    s.add_argument("--M", type=float, default=2.0)
    s.add_argument("--n", type=float, default=6.0)
    s.add_argument("--margin", type=float, default=2.0)
    s.add_argument("--trials", type=int, default=1000)
    return p


def _read_config(path) -> dict:
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"config line without '=': {raw.strip()!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


_REQUIRED = {"tail": ("spec", "n", "a"), "rate-curve": ("spec", "a"), "rate-bound": ("spec", "a"),
             "score": ("spec", "points"), "render": ("spec",)}


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        values = _read_config(args.config)
        # re-parse with the file as defaults so explicit flags win
        sp = parser._subparsers._group_actions[0].choices[args.command]
        actions = {a.dest: a for a in sp._actions}
        defaults = {}
        for key, raw in values.items():
            if key not in actions:
                raise ParameterError(f"unknown config key {key!r} for {args.command}")
            act = actions[key]
            if act.nargs == 0:
                defaults[key] = raw.lower() in ("1", "true", "yes", "on")
            elif act.type is not None:
                try:
                    defaults[key] = act.type(raw)
                except (ValueError, argparse.ArgumentTypeError) as exc:
                    raise ParameterError(f"config key {key}: {exc}") from None
            else:
                defaults[key] = [raw] if act.dest == "suite" else raw
        sp.set_defaults(**defaults)
        args = parser.parse_args(argv)
    if args.command in STOCHASTIC and args.seed is None:
        raise ParameterError(f"{args.command} needs --seed")
    for key in _REQUIRED.get(args.command, ()):
        if getattr(args, key) is None:
            raise ParameterError(f"{args.command} needs --{key.replace('_', '-')}")
    if args.command == "verify" and not args.suite:
        args.suite = ["all"]
    if getattr(args, "spec", None) is not None:
        parse_spec(args.spec)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
        return COMMANDS[args.command](args)
    except (RareEventExhaustion, InfeasibleSweepError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, RareEventExhaustion):
            err.update(attempts=exc.attempts, best_value=exc.best_value)
        print(json.dumps(err), file=sys.stderr)
        return EXIT_EXHAUSTED
    except (LowerTailError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
