"""``hausloss`` command line: metrics, correlation studies, losses, gradient checks,
the optimization demo and corpus export.

Every command writes its reports into ``--out-dir`` together with a
``manifest.json`` recording the exact argument list, so ``hausloss replay``
can regenerate the same outputs.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from pathlib import Path

from . import __version__
from .arrayio import jsonable, load_grid, save_array, sha256_file, write_csv, write_json
from .correlate import PAIR_FIELDS, CorrelateConfig, pair_rows
from .correlate import summarize as summarize_correlation
from .errors import ConfigError, HauslossError
from .grid import threshold
from .hd_cv import CvLossParams
from .hd_dt import DtLossParams
from .hd_er import ErLossParams
from .losses import (FAMILIES, HD_FAMILIES, combined_loss, dsc_loss, gradient_check_details,
                     hd_loss)
from .metrics import evaluate
from .optimize import TRAJECTORY_FIELDS, OptimizeConfig
from .optimize import run as run_optimize
from .optimize import summarize as summarize_optimize
from .synth import SynthConfig, corpus, soft_pair, soften

METRIC_FIELDS = ("hd", "hd_directed_pq", "hd_directed_qp", "hd95", "hd90", "partial_hd",
                 "partial_k", "modified_hd", "asd", "dsc")
GRADCHECK_TOLERANCE = {"dsc": 1e-6}
DEFAULT_TOLERANCE = 1e-4


class _Run:
    """Output directory bookkeeping for one command invocation."""

    def __init__(self, args):
        self.out_dir = Path(args.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.outputs = []
        self.inputs = []

    def path(self, name: str) -> Path:
        p = self.out_dir / name
        self.outputs.append(name)
        return p

    def add_input(self, path) -> None:
        self.inputs.append(str(path))


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    moment = (_dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch
              else _dt.datetime.now(_dt.timezone.utc))
    return moment.strftime("%Y-%m-%dT%H:%M:%SZ")


def _replay_argv(argv) -> list:
    """The argument list minus ``--out-dir`` (a replay chooses its own)."""
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == "--out-dir":
            skip = True
            continue
        if a.startswith("--out-dir="):
            continue
        out.append(a)
    return out


def _write_manifest(run: _Run, args, argv, config, started: str) -> None:
    manifest = {
        "tool": "hausloss",
        "version": __version__,
        "command": args.command,
        "argv": _replay_argv(argv),
        "seed": args.seed,
        "config": config,
        "inputs": {p: sha256_file(p) for p in run.inputs},
        "outputs": {name: sha256_file(run.out_dir / name) for name in sorted(set(run.outputs))},
        "started": started,
        "finished": _timestamp(),
    }
    write_json(run.out_dir / "manifest.json", manifest)


@contextmanager
def _pool(threads: int):
    if threads and threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            yield ex
    else:
        yield None


def _load_config(path, cls, seed):
    data = {}
    if path:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    cfg = cls.from_dict(data)
    if seed is not None:
        synth = cfg.synth.to_dict() | {"seed": seed}
        cfg = cls.from_dict(cfg.to_dict() | {"synth": synth})
    return cfg


def _spacing(args):
    return tuple(args.spacing) if args.spacing else None


# --- commands ---------------------------------------------------------------

def cmd_eval(args, run: _Run):
    spacing = _spacing(args)
    truth = load_grid(args.truth, spacing, args.threshold)
    pred = load_grid(args.pred, spacing, args.threshold)
    run.add_input(args.truth)
    run.add_input(args.pred)
    report = evaluate(truth, pred, k=args.k, spacing=None).as_dict()
    write_json(run.path("eval.json"), {"metrics": report, "spacing": list(truth.spec.spacing),
                                       "shape": list(truth.spec.shape)})
    write_csv(run.path("eval.csv"), [report], METRIC_FIELDS)
    return {"metrics": report}, None


def cmd_correlate(args, run: _Run):
    cfg = _load_config(args.config, CorrelateConfig, args.seed)
    if args.n is not None:
        cfg = CorrelateConfig.from_dict(cfg.to_dict() | {"n_pairs": args.n})
    if args.config:
        run.add_input(args.config)
    with _pool(args.threads) as ex:
        rows = pair_rows(cfg, ex)
    summary = summarize_correlation(rows, cfg.er_slack)
    write_csv(run.path("correlate_pairs.csv"), rows, PAIR_FIELDS)
    write_json(run.path("correlate.json"), summary)
    if args.plot:
        from .plotting import correlation_scatter
        correlation_scatter(rows, summary["fits"],
                            ("hd_dt", "hd_cv", "hd_er", "loss_dt", "loss_cv", "loss_er"),
                            run.path("correlate_scatter.png"))
    return {"fits": {k: v["pearson_r"] for k, v in summary["fits"].items()},
            "hd_er_within_slack": summary["hd_er_within_slack"]}, cfg.to_dict()


def _params_for(family, args):
    alpha = args.alpha if args.alpha is not None else 2.0
    if family in ("dt", "dt-os"):
        return DtLossParams(alpha=alpha, one_sided=family == "dt-os")
    if family == "dt-gauss":
        return DtLossParams(alpha=alpha, sigma=args.sigma)
    if family == "er":
        return ErLossParams(k_max=args.k if args.k is not None else 10, alpha=alpha)
    if family == "cv":
        return CvLossParams(radii=tuple(args.radii) if args.radii else None, alpha=alpha)
    return None


def _loss_fn(family, hd_family, params, lam):
    if family == "dsc":
        return dsc_loss
    if family == "combined":
        return lambda p, q: combined_loss(p, q, hd_family, params, lam)
    return lambda p, q: hd_loss(family, p, q, params)


def cmd_loss(args, run: _Run):
    spacing = _spacing(args)
    p = load_grid(args.truth, spacing, as_probability=True)
    q = load_grid(args.pred, spacing, as_probability=True)
    run.add_input(args.truth)
    run.add_input(args.pred)
    hd_family = args.hd_family if args.family == "combined" else args.family
    params = _params_for(hd_family, args)
    ev = _loss_fn(args.family, hd_family, params, args.lam)(p, q)
    report = ev.summary()
    if args.save_grad:
        save_array(run.path("grad.npy"), ev.grad, "float")
    write_json(run.path("loss.json"), report)
    return {"value": ev.value, "family": ev.family}, None


def cmd_gradcheck(args, run: _Run):
    families = list(HD_FAMILIES) + ["dsc", "combined"] if args.family == "all" else [args.family]
    synth = SynthConfig(seed=args.seed if args.seed is not None else 0)
    pairs = [soft_pair(synth, i, args.smoothing) for i in range(args.pairs)]
    rows = []
    for fam in families:
        hd_family = args.hd_family if fam == "combined" else fam
        params = _params_for(hd_family, args)
        fn = _loss_fn(fam, hd_family, params, args.lam)
        tol = GRADCHECK_TOLERANCE.get(fam, DEFAULT_TOLERANCE)
        for i, (p, q) in enumerate(pairs):
            res = gradient_check_details(fn, p, q, sample_sites=args.sites, step=args.step,
                                         seed=(args.seed or 0) * 1000 + i)
            rows.append({"family": fam, "pair": i, "max_rel_error": res.max_rel_error,
                         "sites": res.n_sites, "kink_skipped": res.n_kink_skipped,
                         "tolerance": tol, "passed": int(res.max_rel_error <= tol)})
    fields = ("family", "pair", "max_rel_error", "sites", "kink_skipped", "tolerance", "passed")
    write_csv(run.path("gradcheck.csv"), rows, fields)
    verdict = {fam: {"max_rel_error": max(r["max_rel_error"] for r in rows if r["family"] == fam),
                     "passed": all(r["passed"] for r in rows if r["family"] == fam)}
               for fam in families}
    write_json(run.path("gradcheck.json"), {"families": verdict, "pairs": args.pairs,
                                            "sites": args.sites, "step": args.step})
    return {"passed": all(v["passed"] for v in verdict.values())}, None


def cmd_optimize(args, run: _Run):
    cfg = _load_config(args.config, OptimizeConfig, args.seed)
    overrides = {k: v for k, v in (("n_cases", args.cases), ("iterations", args.iterations))
                 if v is not None}
    if args.families:
        overrides["families"] = tuple(args.families)
    if overrides:
        cfg = OptimizeConfig.from_dict(cfg.to_dict() | overrides)
    if args.config:
        run.add_input(args.config)
    with _pool(args.threads) as ex:
        results, history = run_optimize(cfg, ex)
    rows = [row for r in results for row in r.rows]
    write_csv(run.path("trajectory.csv"), rows, TRAJECTORY_FIELDS)
    summary = summarize_optimize(results)
    diverged = [{"case": r.case, "family": r.family} for r in results if r.diverged]
    write_json(run.path("optimize.json"), {"summary": summary, "lambda_history": history,
                                           "diverged": diverged})
    for r in results:
        save_array(run.path(f"final/case{r.case:03d}_{r.family}.npy"),
                   threshold(r.final_q).data, "mask")
    if args.plot:
        from .plotting import trajectories
        trajectories(rows, run.path("trajectories.png"))
    return {"summary": summary}, cfg.to_dict()


def cmd_synth(args, run: _Run):
    cfg = _load_config(args.config, _SynthWrapper, args.seed).synth
    if args.config:
        run.add_input(args.config)
    rows = []
    for i, (truth, pred) in enumerate(corpus(cfg, args.n)):
        save_array(run.path(f"synth/truth_{i:04d}.npy"), truth.data, "mask")
        save_array(run.path(f"synth/pred_{i:04d}.npy"), pred.data, "mask")
        save_array(run.path(f"synth/soft_{i:04d}.npy"),
                   soften(pred, cfg.smoothing_radius).data, "float")
        m = evaluate(truth, pred)
        rows.append({"index": i, "exact_hd": m.hd, "dsc": m.dsc,
                     "fg_fraction": float(truth.data.mean())})
    write_csv(run.path("synth.csv"), rows, ("index", "exact_hd", "dsc", "fg_fraction"))
    write_json(run.path("synth.json"), {"config": cfg.to_dict(), "n": args.n})
    return {"n": args.n}, cfg.to_dict()


class _SynthWrapper:
    """Lets ``_load_config`` treat a bare synth config like the nested ones."""

    def __init__(self, synth: SynthConfig):
        self.synth = synth

    @classmethod
    def from_dict(cls, d):
        return cls(SynthConfig.from_dict(d.get("synth", d)))

    def to_dict(self):
        return {"synth": self.synth.to_dict()}


def cmd_replay(args, run: _Run):
    try:
        manifest = json.loads(Path(args.manifest).read_text())
        argv = list(manifest["argv"])
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read manifest {args.manifest}: {exc}") from exc
    code = main(argv + ["--out-dir", str(run.out_dir)])
    if code:
        raise HauslossError(f"replayed command exited with status {code}")
    return None, None


COMMANDS = {"eval": cmd_eval, "correlate": cmd_correlate, "loss": cmd_loss,
            "gradcheck": cmd_gradcheck, "optimize": cmd_optimize, "synth": cmd_synth,
            "replay": cmd_replay}


# --- parser -----------------------------------------------------------------

def _floats(text: str):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="master seed (overrides the config's synth seed)")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help="worker processes for corpus commands")
    common.add_argument("--out-dir", default=argparse.SUPPRESS, help="output directory")

    parser = argparse.ArgumentParser(prog="hausloss", parents=[common],
                                     description="Hausdorff metrics, estimators and losses.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    grid_args = argparse.ArgumentParser(add_help=False)
    grid_args.add_argument("truth", help="reference NPY array")
    grid_args.add_argument("pred", help="prediction NPY array")
    grid_args.add_argument("--spacing", type=_floats, help="per-axis spacing, e.g. 1,1,2.5")

    p = sub.add_parser("eval", parents=[common, grid_args], help="exact metrics for a pair")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--k", type=int, default=1, help="rank for the partial HD")

    p = sub.add_parser("correlate", parents=[common], help="estimators vs exact HD on a corpus")
    p.add_argument("config", nargs="?", help="JSON config (synth, n_pairs, cv_radii, er_slack)")
    p.add_argument("--n", type=int, help="number of pairs")
    p.add_argument("--plot", action="store_true", help="also write a scatter PNG")

    loss_args = argparse.ArgumentParser(add_help=False)
    loss_args.add_argument("--alpha", type=float)
    loss_args.add_argument("--radii", type=_floats, help="CV radii, comma separated")
    loss_args.add_argument("--k", type=int, help="number of erosions for the ER loss")
    loss_args.add_argument("--sigma", type=float, default=3.0, help="Gaussian DT width")
    loss_args.add_argument("--lambda", dest="lam", type=float, default=1.0)
    loss_args.add_argument("--hd-family", choices=HD_FAMILIES, default="dt",
                           help="HD term of the combined loss")

    p = sub.add_parser("loss", parents=[common, grid_args, loss_args], help="evaluate a loss")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--save-grad", action="store_true", help="write grad.npy (float32)")

    p = sub.add_parser("gradcheck", parents=[common, loss_args],
                       help="analytic gradients vs central differences")
    p.add_argument("--family", choices=FAMILIES + ("all",), default="all")
    p.add_argument("--pairs", type=int, default=10)
    p.add_argument("--sites", type=int, default=50)
    p.add_argument("--step", type=float, default=1e-4)
    p.add_argument("--smoothing", type=float, default=2.0)

    p = sub.add_parser("optimize", parents=[common], help="direct optimization demo")
    p.add_argument("config", nargs="?", help="JSON config (synth, n_cases, iterations, ...)")
    p.add_argument("--cases", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--families", nargs="+", choices=("dsc",) + HD_FAMILIES)
    p.add_argument("--plot", action="store_true", help="also write a trajectory PNG")

    p = sub.add_parser("synth", parents=[common], help="export a synthetic corpus")
    p.add_argument("config", nargs="?", help="JSON synth config")
    p.add_argument("--n", type=int, default=10)

    p = sub.add_parser("replay", parents=[common], help="re-run a recorded manifest")
    p.add_argument("manifest")
    return parser


def _error_payload(exc: Exception, command) -> dict:
    code = getattr(exc, "code", None) or ("io_error" if isinstance(exc, OSError) else "error")
    return {"error": {"code": code, "type": type(exc).__name__, "message": str(exc),
                      "command": command}}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    for name, default in (("seed", None), ("threads", 1), ("out_dir", ".")):
        if not hasattr(args, name):
            setattr(args, name, default)
    started = _timestamp()
    try:
        run = _Run(args)
        result, config = COMMANDS[args.command](args, run)
        if args.command != "replay":
            _write_manifest(run, args, argv, config, started)
            print(json.dumps(jsonable({"ok": True, "command": args.command,
                                       "out_dir": str(run.out_dir), "result": result}),
                             sort_keys=True))
        return 0
    except (HauslossError, OSError) as exc:
        payload = _error_payload(exc, args.command)
        text = json.dumps(payload, sort_keys=True)
        print(text, file=sys.stderr)
        try:
            Path(args.out_dir).mkdir(parents=True, exist_ok=True)
            (Path(args.out_dir) / "error.json").write_text(text + "\n")
        except OSError:
            pass
        return 1


if __name__ == "__main__":
    sys.exit(main())
