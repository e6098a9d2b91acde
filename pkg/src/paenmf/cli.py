"""Command-line entry point.

Commands: ``train``, ``factorize``, ``reconstruct``, ``sample``,
``gradcheck`` and ``synth``. Results are written as CSV files with a
header row, plus a ``manifest.json`` describing the run.

Exit status: 0 on success, 1 on usage or validation errors, 2 on
numerical failure (divergence, non-finite values).
"""

import argparse
import hashlib
import json
import logging
import os
import sys
from datetime import datetime, timezone

from . import checkpoint as ckpt
from .data_io import (
    DatasetDescriptor,
    Orientation,
    ScaleMode,
    SyntheticSpec,
    apply_scaling,
    generate_synthetic,
    load_csv,
    save_csv,
)
from .gradcheck import RTOL, run_gradcheck
from .model import forward_median, sample_reconstructions
from .nmf import factorize
from .trainer import DivergenceError, TrainConfig, evaluate, train

MANIFEST_VERSION = 1

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERIC = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for numerical failure here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if val < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {val}")
    return val


# ---------------------------------------------------------------- helpers

def read_config_file(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from exc
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"{path}: line {lineno}: expected 'key = value'")
        values[key.strip()] = value.strip()
    return values


# flag dest -> TrainConfig field
_TRAIN_FLAGS = {
    "r": "r",
    "hidden_width": "hidden_width",
    "lr": "learning_rate",
    "epochs": "epochs",
    "sigma_sq": "sigma_sq",
    "prior_k": "prior_k",
    "prior_lambda": "prior_lambda",
    "kl": "kl_enabled",
    "stochastic": "stochastic",
    "seed": "seed",
    "init_noise_scale": "init_noise_scale",
    "eps_clamp": "eps_clamp",
    "n_samples": "n_samples",
    "nmf_iters": "nmf_iters",
    "optimizer": "optimizer",
}


def build_config(args):
    """Defaults, overridden by the config file, overridden by flags."""
    values = read_config_file(args.config) if args.config else {}
    for dest, field in _TRAIN_FLAGS.items():
        val = getattr(args, dest, None)
        if val is not None:
            values[field] = val
    return TrainConfig.from_dict(values).validate()


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_manifest(out_dir, command, config, artifacts, started, inputs=None, extra=None):
    doc = {
        "format_version": MANIFEST_VERSION,
        "command": command,
        "config": config,
        "inputs": inputs or {},
        "artifacts": artifacts,
        "started": started,
        "finished": _now(),
    }
    if extra:
        doc.update(extra)
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    ckpt.atomic_write_text(os.path.join(out_dir, "manifest.json"), text)


def _descriptor(args):
    return DatasetDescriptor(orientation=args.orientation, scale_mode=ScaleMode.NONE)


def _load_data(args):
    """Return ``(V, scale_factor)`` with scaling applied."""
    V = load_csv(args.data, _descriptor(args))
    return apply_scaling(V, args.scale)


def _out_dir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _names(prefix, n):
    return [f"{prefix}_{j}" for j in range(n)]


def _input_record(path):
    return {"data": {"path": os.path.abspath(path), "sha256": file_sha256(path)}}


# ---------------------------------------------------------------- commands

def cmd_train(args):
    started = _now()
    config = build_config(args)
    V, factor = _load_data(args)
    out = _out_dir(args)
    model, history = train(V, config)
    result = evaluate(model, V, config)
    trace = forward_median(model.encoder, model.decoder, V)

    artifacts = {
        "checkpoint": "checkpoint.json",
        "train_log": "train_log.csv",
        "W_f": "W_f.csv",
        "k": "k.csv",
        "lambda": "lambda.csv",
    }
    data_info = {"orientation": Orientation(args.orientation).value,
                 "scale_mode": ScaleMode(args.scale).value, "scale_factor": factor}
    ckpt.save_checkpoint(os.path.join(out, artifacts["checkpoint"]), model, config,
                         extra={"data": data_info})
    _save_log(os.path.join(out, artifacts["train_log"]), history)
    r = config.r
    save_csv(model.decoder.W_f, os.path.join(out, artifacts["W_f"]), _names("basis", r))
    save_csv(trace.k.T, os.path.join(out, artifacts["k"]), _names("latent", r))
    save_csv(trace.lam.T, os.path.join(out, artifacts["lambda"]), _names("latent", r))
    write_manifest(out, "train", config.to_dict(), artifacts, started,
                   inputs=_input_record(args.data), extra={"data": data_info})
    last = history[-1]
    print(f"epochs={len(history)} final_total={last.total!r} "
          f"median_relative_error={result.median_recon_error!r}")
    return EXIT_OK


def _save_log(path, history):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("epoch,recon,kl,total\n")
        for h in history:
            fh.write(f"{h.epoch},{float(h.recon_term)!r},{float(h.kl_term)!r},{float(h.total)!r}\n")


def cmd_factorize(args):
    started = _now()
    V, factor = _load_data(args)
    out = _out_dir(args)
    fit = factorize(V, args.r, iters=args.iters, seed=args.seed, tol=args.tol)
    artifacts = {"W": "W.csv", "H": "H.csv", "objective_trace": "objective_trace.csv"}
    save_csv(fit.W, os.path.join(out, artifacts["W"]), _names("basis", args.r))
    save_csv(fit.H, os.path.join(out, artifacts["H"]), _names("point", V.shape[1]))
    with open(os.path.join(out, artifacts["objective_trace"]), "w",
              encoding="utf-8", newline="") as fh:
        fh.write("iteration,objective\n")
        for it, obj in enumerate(fit.objective_trace):
            fh.write(f"{it},{float(obj)!r}\n")
    err = fit.relative_error(V)
    config = {"r": args.r, "iters": args.iters, "seed": args.seed, "tol": args.tol,
              "orientation": Orientation(args.orientation).value,
              "scale_mode": ScaleMode(args.scale).value}
    write_manifest(out, "factorize", config, artifacts, started,
                   inputs=_input_record(args.data), extra={"scale_factor": factor})
    print(f"iterations={len(fit.objective_trace) - 1} relative_error={err!r}")
    return EXIT_OK


def cmd_reconstruct(args):
    started = _now()
    model, config = ckpt.load_checkpoint(args.checkpoint)
    V, factor = _load_data(args)
    out = _out_dir(args)
    result = evaluate(model, V, config)
    V_hat = model.reconstruct_median(V) * factor
    artifacts = {"reconstruction": "reconstruction.csv"}
    save_csv(V_hat, os.path.join(out, artifacts["reconstruction"]),
             _names("point", V.shape[1]))
    inputs = _input_record(args.data)
    inputs["checkpoint"] = {"path": os.path.abspath(args.checkpoint),
                            "sha256": file_sha256(args.checkpoint)}
    write_manifest(out, "reconstruct", config.to_dict(), artifacts, started, inputs=inputs,
                   extra={"relative_error": result.median_recon_error})
    print(f"relative_error={result.median_recon_error!r}")
    return EXIT_OK


def cmd_sample(args):
    started = _now()
    model, config = ckpt.load_checkpoint(args.checkpoint)
    V, factor = _load_data(args)
    n = V.shape[1]
    if not 0 <= args.index < n:
        raise ValueError(f"--index {args.index} out of range for {n} data points")
    if args.override_k is not None and not args.override_k > 0:
        raise ValueError("--override-k must be > 0")
    out = _out_dir(args)
    samples = sample_reconstructions(
        model.encoder, model.decoder, V[:, args.index], args.n_samples, args.seed,
        k_override=args.override_k,
    ) * factor
    artifacts = {"samples": "samples.csv"}
    save_csv(samples, os.path.join(out, artifacts["samples"]),
             _names("sample", args.n_samples))
    inputs = _input_record(args.data)
    inputs["checkpoint"] = {"path": os.path.abspath(args.checkpoint),
                            "sha256": file_sha256(args.checkpoint)}
    run = {"index": args.index, "n_samples": args.n_samples, "seed": args.seed,
           "override_k": args.override_k}
    write_manifest(out, "sample", run, artifacts, started, inputs=inputs)
    print(f"samples={args.n_samples} index={args.index}")
    return EXIT_OK


def cmd_gradcheck(args):
    result = run_gradcheck(seed=args.seed, n_configs=args.configs, corrupt=args.corrupt)
    for i, c in enumerate(result.configs):
        mode = "median" if c["median"] else "stochastic"
        print(f"config {i}: m={c['m']} p={c['p']} r={c['r']} n={c['n']} {mode} "
              f"max_error={c['max_error']:.3e}")
    print(f"checked={result.n_checked} max_relative_error={result.max_error:.6e}")
    if not result.passed:
        c, name, idx = result.worst
        print(f"gradcheck FAILED: worst entry config {c}, {name}{list(idx)} "
              f"error {result.max_error:.3e} >= {RTOL:g}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def cmd_synth(args):
    started = _now()
    spec = SyntheticSpec(m=args.m, n=args.n, r_true=args.r, noise_sigma=args.noise_sigma,
                         sparsity=args.sparsity, seed=args.seed)
    V, W, H = generate_synthetic(spec)
    out = _out_dir(args)
    artifacts = {"V": "V.csv", "W_true": "W_true.csv", "H_true": "H_true.csv"}
    save_csv(V, os.path.join(out, artifacts["V"]), _names("point", spec.n))
    save_csv(W, os.path.join(out, artifacts["W_true"]), _names("basis", spec.r_true))
    save_csv(H, os.path.join(out, artifacts["H_true"]), _names("point", spec.n))
    write_manifest(out, "synth", vars(spec).copy(), artifacts, started)
    print(f"m={spec.m} n={spec.n} r_true={spec.r_true}")
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _add_data_flags(p, required=True):
    p.add_argument("--data", required=required, help="data CSV (non-negative)")
    p.add_argument("--orientation", default="dims-as-rows",
                   choices=[o.value for o in Orientation],
                   help="dims-as-rows: one data point per column (default)")
    p.add_argument("--scale", default="none", choices=[s.value for s in ScaleMode])


def build_parser():
    parser = _Parser(prog="paenmf", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="fit a PAE-NMF model")
    _add_data_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="file of 'key = value' lines (TrainConfig fields)")
    p.add_argument("--seed", type=int)
    p.add_argument("--r", type=_positive_int)
    p.add_argument("--hidden-width", type=_positive_int)
    p.add_argument("--lr", type=float, help="learning rate")
    p.add_argument("--epochs", type=_positive_int)
    p.add_argument("--sigma-sq", type=float)
    p.add_argument("--prior-k", type=float)
    p.add_argument("--prior-lambda", type=float)
    p.add_argument("--kl", action=argparse.BooleanOptionalAction, default=None,
                   help="include the KL term (default on)")
    p.add_argument("--stochastic", action=argparse.BooleanOptionalAction, default=None,
                   help="sample latents during training; --no-stochastic uses the median")
    p.add_argument("--init-noise-scale", type=float)
    p.add_argument("--eps-clamp", type=float)
    p.add_argument("--n-samples", type=_positive_int, help="latent draws per epoch")
    p.add_argument("--nmf-iters", type=_positive_int)
    p.add_argument("--optimizer", choices=["adam", "gd"])
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("factorize", help="baseline multiplicative-update NMF")
    _add_data_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--r", type=_positive_int, required=True)
    p.add_argument("--iters", type=_positive_int, default=2000)
    p.add_argument("--tol", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_factorize)

    p = sub.add_parser("reconstruct", help="median reconstructions from a checkpoint")
    _add_data_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("sample", help="generate new points from one point's latent distribution")
    _add_data_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--index", type=int, default=0, help="0-based data point index")
    p.add_argument("--n-samples", type=_positive_int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--override-k", type=float,
                   help="diagnostic: replace every shape parameter with this value")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("gradcheck", help="finite-difference check of the backward pass")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--configs", type=_positive_int, default=5)
    p.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("synth", help="synthetic data with known factors")
    p.add_argument("--out", required=True)
    p.add_argument("--m", type=_positive_int, required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--r", type=_positive_int, required=True)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--sparsity", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"paenmf {args.command}: divergence: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ArithmeticError as exc:
        print(f"paenmf {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ValueError, OSError) as exc:
        print(f"paenmf {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
