"""Command-line front end for the whole pipeline.

Subcommands: generate (synthetic data), extract (raw signals to band
features), train, evaluate, ablate (attention variants), repr-ablate
(3-D input baselines vs the 4-D model). Settings resolve in three layers:
built-in defaults, then a key=value config file, then command-line flags.
Unknown config keys are rejected. Every command exits 0 on success and 1
with a single ``error: ...`` line otherwise.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import tensor as T
from .dataio import (
    KIND_RAW,
    Signature,
    SyntheticSpec,
    generate_synthetic,
    generate_synthetic_raw,
    read_dataset,
    read_kind,
    read_raw_set,
    write_dataset,
    write_raw_set,
)
from .features import DEFAULT_BANDS, RawRecording, extract_de
from .layout import (
    FeatureTensor4D,
    assemble_4d,
    channel_order,
    collapse_to_3d,
    default_grid,
    load_layout,
    standardize,
)
from .model import (
    ModelConfig,
    load_checkpoint,
    save_checkpoint,
    state_from_arrays,
)
from .tensor import Tensor
from .train import (
    TrainConfig,
    evaluate,
    fit,
    run_loop,
    split,
    write_metrics_jsonl,
)

_BUILTIN_LAYOUT = "builtin:seed62_8x9"


# ---------------------------------------------------------------------------
# configuration


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _parse_int_tuple(s: str):
    return tuple(int(x) for x in s.split(","))


def _parse_ratio(s: str):
    parts = s.split(":")
    if len(parts) != 2:
        raise ValueError(f"expected 'train:test', got {s!r}")
    return (int(parts[0]), int(parts[1]))


def _parse_attention(s: str):
    low = s.strip().lower()
    if low in ("none", ""):
        return (False, False, False)
    letters = set(low)
    if not letters <= {"p", "s", "t"}:
        raise ValueError(f"attention must be letters from 'pst' or 'none', got {s!r}")
    return ("p" in letters, "s" in letters, "t" in letters)


# key -> (parser, default, help); the single source of truth for settings
SCHEMA = {
    "t": (int, 9, "time slices per sample"),
    "s": (int, 5, "spectral bands per sample"),
    "v": (int, 8, "grid rows"),
    "h": (int, 9, "grid columns"),
    "n_classes": (int, 3, "number of classes"),
    "conv_channels": (_parse_int_tuple, (32, 64), "backbone channels, comma-separated"),
    "kernel": (_parse_int_tuple, (3, 5, 5), "conv kernel depth,rows,cols (odd)"),
    "n_attention_blocks": (int, 2, "stages that get an attention block"),
    "attention": (_parse_attention, (True, True, True), "enabled sub-modules: letters from 'pst', or 'none'"),
    "fc_hidden": (int, 128, "hidden units of the classifier head"),
    "dropout_rate": (float, 0.5, "dropout before the final layer"),
    "learning_rate": (float, 0.001, "Adam learning rate"),
    "beta1": (float, 0.9, "Adam first-moment decay"),
    "beta2": (float, 0.999, "Adam second-moment decay"),
    "epsilon": (float, 1e-8, "Adam denominator offset"),
    "batch_size": (int, 32, "minibatch size"),
    "epochs": (int, 300, "training epochs"),
    "seed": (int, 0, "base seed for every random choice"),
    "split_ratio": (_parse_ratio, (9, 6), "train:test ratio"),
    "shuffle": (_parse_bool, True, "shuffle before splitting and per epoch"),
    "noise_sigma": (float, 0.5, "synthetic noise standard deviation"),
    "n_per_class": (int, 30, "synthetic samples per class"),
    "amplitude": (float, 2.0, "synthetic signature amplitude"),
    "min_separation_sigmas": (float, 3.0, "required class separation in sigmas (0 disables)"),
    "layout": (str, "", "electrode layout file; empty uses the built-in 62-channel map"),
    "standardize": (_parse_bool, True, "per-sample standardization before training"),
    "slice_length_s": (float, 1.0, "extract: seconds per time slice"),
    "runs": (int, 5, "ablate: repeats with consecutive seeds"),
    "vht_band": (int, -1, "repr-ablate: band kept for VHT (-1 averages bands)"),
}


def _parse_value(key: str, raw: str):
    parser = SCHEMA[key][0]
    try:
        return parser(raw)
    except ValueError as exc:
        raise ValueError(f"config key {key!r}: {exc}") from None


def read_config_file(path) -> dict[str, str]:
    """key=value lines; '#' comments; unknown keys rejected."""
    raw: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, eq, value = line.partition("=")
            if not eq:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key = key.strip()
            if key not in SCHEMA:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            if key in raw:
                raise ValueError(f"{path}:{lineno}: duplicate config key {key!r}")
            raw[key] = value.strip()
    return raw


def resolve_config(args) -> tuple[dict, set[str]]:
    """defaults < config file < flags; returns (values, explicitly-set keys)."""
    values = {key: default for key, (_, default, _) in SCHEMA.items()}
    explicit: set[str] = set()
    if getattr(args, "config", None):
        for key, raw in read_config_file(args.config).items():
            values[key] = _parse_value(key, raw)
            explicit.add(key)
    for key in SCHEMA:
        raw = getattr(args, f"opt_{key}", None)
        if raw is not None:
            values[key] = _parse_value(key, raw)
            explicit.add(key)
    return values, explicit


def write_config_snapshot(values: dict, path) -> None:
    def fmt(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, tuple):
            if v == tuple(bool(b) for b in v) and len(v) == 3 and all(isinstance(b, bool) for b in v):
                letters = "".join(l for l, b in zip("pst", v) if b)
                return letters or "none"
            return ":".join(str(x) for x in v) if len(v) == 2 else ",".join(str(x) for x in v)
        return str(v)

    lines = [f"{key} = {fmt(values[key])}" for key in sorted(SCHEMA)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def model_config_from(values: dict, dims=None) -> ModelConfig:
    t, s, v, h = dims if dims is not None else (values["t"], values["s"], values["v"], values["h"])
    return ModelConfig(
        t=t,
        s=s,
        v=v,
        h=h,
        n_classes=values["n_classes"],
        conv_channels=values["conv_channels"],
        kernel=values["kernel"],
        n_attention_blocks=values["n_attention_blocks"],
        attention_enabled=values["attention"],
        fc_hidden=values["fc_hidden"],
        dropout_rate=values["dropout_rate"],
    )


def train_config_from(values: dict, seed=None, epochs=None) -> TrainConfig:
    return TrainConfig(
        learning_rate=values["learning_rate"],
        beta1=values["beta1"],
        beta2=values["beta2"],
        epsilon=values["epsilon"],
        batch_size=values["batch_size"],
        epochs=values["epochs"] if epochs is None else epochs,
        seed=values["seed"] if seed is None else seed,
        split_ratio=values["split_ratio"],
        shuffle=values["shuffle"],
    )


def spec_from_config(values: dict) -> SyntheticSpec:
    """The built-in 3-class family, scaled to the configured extents."""
    if values["n_classes"] != 3:
        raise ValueError(
            "the built-in synthetic family is 3-class; build a SyntheticSpec "
            "programmatically for other class counts"
        )
    t, s, v, h = values["t"], values["s"], values["v"], values["h"]
    amp = values["amplitude"]

    def region(fr0, fr1, fc0, fc1):
        r0 = int(round(fr0 * v))
        r1 = max(r0 + 1, int(round(fr1 * v)))
        c0 = int(round(fc0 * h))
        c1 = max(c0 + 1, int(round(fc1 * h)))
        return (r0, min(r1, v), c0, min(c1, h))

    signatures = (
        (Signature(band=min(2, s - 1), region=region(0, 0.5, 0, 5 / 9), window=(0, t), amplitude=amp),),
        (Signature(band=min(3, s - 1), region=region(0.5, 1, 4 / 9, 1), window=(0, t), amplitude=amp),),
        (Signature(band=min(4, s - 1), region=region(0.25, 0.75, 2 / 9, 7 / 9), window=(0, t), amplitude=amp),),
    )
    return SyntheticSpec(
        n_classes=3,
        n_per_class=values["n_per_class"],
        t=t,
        s=s,
        v=v,
        h=h,
        signatures=signatures,
        noise_sigma=values["noise_sigma"],
        seed=values["seed"],
        min_separation_sigmas=values["min_separation_sigmas"],
    )


def grid_from_config(values: dict):
    if values["layout"]:
        return load_layout(values["layout"]), values["layout"]
    return default_grid(), _BUILTIN_LAYOUT


def _standardized(samples, values):
    if not values["standardize"]:
        return samples
    return [FeatureTensor4D(data=standardize(s.data), label=s.label) for s in samples]


def _dims_for_training(samples, values, explicit):
    dims = samples[0].data.shape
    for key, got in zip(("t", "s", "v", "h"), dims):
        if key in explicit and values[key] != got:
            raise ValueError(
                f"config sets {key}={values[key]} but the dataset has {key}={got}"
            )
    return dims


# ---------------------------------------------------------------------------
# matched conv2d baseline for the 3-D representation rows


@dataclass
class Baseline2DState:
    convs: list[tuple[Tensor, Tensor]]
    fc1_w: Tensor
    fc1_b: Tensor
    fc2_w: Tensor
    fc2_b: Tensor

    def named_parameters(self):
        pairs = []
        for i, (w, b) in enumerate(self.convs):
            pairs += [(f"conv{i}.w", w), (f"conv{i}.b", b)]
        pairs += [
            ("fc1.w", self.fc1_w),
            ("fc1.b", self.fc1_b),
            ("fc2.w", self.fc2_w),
            ("fc2.b", self.fc2_b),
        ]
        return pairs

    def param_count(self) -> int:
        return sum(t.values.size for _, t in self.named_parameters())

    def zero_grads(self) -> None:
        for _, t in self.named_parameters():
            t.grad = None


def init_baseline2d(in_channels: int, n_classes: int, conv_channels, fc_hidden: int, seed: int) -> Baseline2DState:
    convs = []
    c_in = in_channels
    for i, c_out in enumerate(conv_channels):
        rng = np.random.default_rng([seed, 600 + i])
        fan_in = c_in * 9
        convs.append((T.uniform_init(rng, (c_out, c_in, 3, 3), fan_in), T.zeros_init(c_out)))
        c_in = c_out
    rng = np.random.default_rng([seed, 700])
    fc1_w = T.uniform_init(rng, (fc_hidden, c_in), fan_in=c_in)
    fc1_b = T.zeros_init(fc_hidden)
    rng = np.random.default_rng([seed, 701])
    fc2_w = T.uniform_init(rng, (n_classes, fc_hidden), fan_in=fc_hidden)
    fc2_b = T.zeros_init(n_classes)
    return Baseline2DState(convs=convs, fc1_w=fc1_w, fc1_b=fc1_b, fc2_w=fc2_w, fc2_b=fc2_b)


def baseline2d_forward(state: Baseline2DState, x: Tensor, training: bool, dropout_rng, dropout_rate: float) -> Tensor:
    act = x
    for w, b in state.convs:
        act = T.relu(T.conv2d(act, w, b, stride=1, padding=1))
        act = T.avg_pool2x(act)
    act = T.adaptive_avg_pool(T.adaptive_avg_pool(act, axis=3), axis=2)
    act = T.reshape(act, (x.shape[0], state.fc1_w.shape[1]))
    act = T.relu(T.linear(act, state.fc1_w, state.fc1_b))
    if training and dropout_rate > 0.0:
        keep = 1.0 - dropout_rate
        mask = (dropout_rng.random(act.shape) < keep) / keep
        act = T.mul(act, Tensor(mask))
    return T.linear(act, state.fc2_w, state.fc2_b)


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args) -> int:
    values, _ = resolve_config(args)
    spec = spec_from_config(values)
    out = Path(args.out)
    if args.kind == "raw":
        grid, layout_ref = grid_from_config(values)
        recordings, labels = generate_synthetic_raw(spec, grid)
        write_raw_set(out, recordings, labels, layout_ref=layout_ref)
        print(
            f"wrote {out}: {len(recordings)} recordings, "
            f"{grid.n_channels} channels, {spec.t} s at {spec.sample_rate:g} Hz"
        )
    else:
        samples = generate_synthetic(spec)
        write_dataset(out, samples, layout_ref="")
        print(
            f"wrote {out}: {len(samples)} samples of shape "
            f"({spec.t},{spec.s},{spec.v},{spec.h}), {spec.n_classes} classes"
        )
    return 0


def cmd_extract(args) -> int:
    values, _ = resolve_config(args)
    if read_kind(args.raw_in) != KIND_RAW:
        raise ValueError(f"{args.raw_in} is not a raw recording set; nothing to extract")
    recordings, labels, stored_ref = read_raw_set(args.raw_in)
    if values["layout"]:
        grid, layout_ref = grid_from_config(values)
    elif stored_ref and stored_ref != _BUILTIN_LAYOUT:
        grid, layout_ref = load_layout(stored_ref), stored_ref
    else:
        grid, layout_ref = default_grid(), _BUILTIN_LAYOUT
    samples = []
    for rec, label in zip(recordings, labels):
        perm = channel_order(grid, rec.channels)
        aligned = RawRecording(
            channels=tuple(rec.channels[i] for i in perm),
            samples=rec.samples[perm],
            sample_rate=rec.sample_rate,
        )
        frames = extract_de(aligned, DEFAULT_BANDS, values["slice_length_s"])
        if not frames:
            raise ValueError(
                f"recording too short: {rec.samples.shape[1]} samples is less than "
                f"one {values['slice_length_s']} s slice at {rec.sample_rate:g} Hz"
            )
        samples.append(assemble_4d(frames, grid, label=int(label)))
    write_dataset(args.out, samples, layout_ref=layout_ref)
    shape = samples[0].data.shape
    print(f"wrote {args.out}: {len(samples)} samples of shape {shape}")
    return 0


def cmd_train(args) -> int:
    values, explicit = resolve_config(args)
    samples, _ = read_dataset(args.dataset)
    dims = _dims_for_training(samples, values, explicit)
    samples = _standardized(samples, values)
    model_cfg = model_config_from(values, dims=dims)
    train_cfg = train_config_from(values)
    train_set, test_set = split(samples, train_cfg)
    if not train_set:
        raise ValueError("empty training split")
    metrics, state = fit(train_set, test_set, model_cfg, train_cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_metrics_jsonl(metrics, out / "metrics.jsonl")
    save_checkpoint(state, out / "checkpoint.bin")
    write_config_snapshot(values, out / "config_used.txt")
    print(
        f"epochs={len(metrics.train_loss)} final_train_acc={metrics.final_train_acc:.4f} "
        f"final_test_acc={metrics.final_test_acc:.4f} params={metrics.param_count} "
        f"diverged={'true' if metrics.diverged else 'false'}"
    )
    return 0


def cmd_evaluate(args) -> int:
    values, explicit = resolve_config(args)
    samples, _ = read_dataset(args.dataset)
    dims = _dims_for_training(samples, values, explicit)
    samples = _standardized(samples, values)
    model_cfg = model_config_from(values, dims=dims)
    state = state_from_arrays(model_cfg, load_checkpoint(args.checkpoint))
    acc = evaluate(samples, state, model_cfg)
    print(f"accuracy={acc:.4f} n={len(samples)}")
    return 0


_ABLATION_ROWS = (
    ("3D-CNN", "3d_cnn", (False, False, False)),
    ("3D-CNN & P-Attention", "3d_cnn_p", (True, False, False)),
    ("3D-CNN & S-Attention", "3d_cnn_s", (False, True, False)),
    ("3D-CNN & T-Attention", "3d_cnn_t", (False, False, True)),
    ("3D-CNN & PST-Attention", "3d_cnn_pst", (True, True, True)),
)


def _write_table(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def cmd_ablate(args) -> int:
    values, explicit = resolve_config(args)
    samples, _ = read_dataset(args.dataset)
    dims = _dims_for_training(samples, values, explicit)
    samples = _standardized(samples, values)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base_seed = values["seed"]
    runs = values["runs"]
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    table = []
    for label, slug, enabled in _ABLATION_ROWS:
        cfg_values = dict(values, attention=enabled)
        model_cfg = model_config_from(cfg_values, dims=dims)
        test_accs, train_accs, param_count = [], [], 0
        for r in range(runs):
            train_cfg = train_config_from(values, seed=base_seed + r)
            train_set, test_set = split(samples, train_cfg)
            metrics, _state = fit(train_set, test_set, model_cfg, train_cfg)
            write_metrics_jsonl(metrics, out / f"{slug}_seed{base_seed + r}.jsonl")
            test_accs.append(metrics.final_test_acc)
            train_accs.append(metrics.final_train_acc)
            param_count = metrics.param_count
        row = [
            label,
            runs,
            f"{np.mean(test_accs):.4f}",
            f"{np.std(test_accs):.4f}",
            f"{np.mean(train_accs):.4f}",
            param_count,
        ]
        table.append(row)
        print(
            f"{label}: test_acc={row[2]} +- {row[3]} (train {row[4]}, params {param_count})"
        )
    _write_table(
        out / "ablation.csv",
        ["label", "runs", "mean_test_acc", "std_test_acc", "mean_train_acc", "param_count"],
        table,
    )
    print(f"wrote {out / 'ablation.csv'}")
    return 0


def cmd_repr_ablate(args) -> int:
    values, explicit = resolve_config(args)
    samples, _ = read_dataset(args.dataset)
    dims = _dims_for_training(samples, values, explicit)
    samples = _standardized(samples, values)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base_seed = values["seed"]
    runs = values["runs"]
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    band = values["vht_band"] if values["vht_band"] >= 0 else None
    collapse_modes = (("3D (VHS)", "vhs", "VHS"), ("3D (VHT)", "vht", "VHT"), ("3D (PST)", "pst", "PST"))
    table = []
    for label, slug, mode in collapse_modes:

        def collapse_stack(subset, mode=mode):
            x = np.stack(
                [collapse_to_3d(s, mode, band=band if mode == "VHT" else None) for s in subset]
            )
            y = np.array([s.label for s in subset], dtype=np.int64)
            return x, y

        input_shape = collapse_to_3d(samples[0], mode, band=band if mode == "VHT" else None).shape
        test_accs, train_accs, param_count = [], [], 0
        for r in range(runs):
            train_cfg = train_config_from(values, seed=base_seed + r)
            train_s, test_s = split(samples, train_cfg)
            x_tr, y_tr = collapse_stack(train_s)
            x_te, y_te = collapse_stack(test_s) if test_s else (None, None)
            state = init_baseline2d(
                in_channels=input_shape[0],
                n_classes=values["n_classes"],
                conv_channels=values["conv_channels"],
                fc_hidden=values["fc_hidden"],
                seed=train_cfg.seed,
            )

            def forward_fn(st, batch, training, rng):
                return baseline2d_forward(st, batch, training, rng, values["dropout_rate"])

            metrics = run_loop(x_tr, y_tr, x_te, y_te, state, forward_fn, train_cfg)
            write_metrics_jsonl(metrics, out / f"{slug}_seed{base_seed + r}.jsonl")
            test_accs.append(metrics.final_test_acc)
            train_accs.append(metrics.final_train_acc)
            param_count = metrics.param_count
        row = [
            label,
            "x".join(str(d) for d in input_shape),
            runs,
            f"{np.mean(test_accs):.4f}",
            f"{np.std(test_accs):.4f}",
            f"{np.mean(train_accs):.4f}",
            param_count,
        ]
        table.append(row)
        print(f"{label}: test_acc={row[3]} +- {row[4]} (input {row[1]}, params {param_count})")
    # the 4-D row is the full model under the same protocol
    model_cfg = model_config_from(values, dims=dims)
    test_accs, train_accs, param_count = [], [], 0
    for r in range(runs):
        train_cfg = train_config_from(values, seed=base_seed + r)
        train_set, test_set = split(samples, train_cfg)
        metrics, _state = fit(train_set, test_set, model_cfg, train_cfg)
        write_metrics_jsonl(metrics, out / f"vhst_seed{base_seed + r}.jsonl")
        test_accs.append(metrics.final_test_acc)
        train_accs.append(metrics.final_train_acc)
        param_count = metrics.param_count
    row = [
        "4D (VHST)",
        "x".join(str(d) for d in dims),
        runs,
        f"{np.mean(test_accs):.4f}",
        f"{np.std(test_accs):.4f}",
        f"{np.mean(train_accs):.4f}",
        param_count,
    ]
    table.append(row)
    print(f"4D (VHST): test_acc={row[3]} +- {row[4]} (input {row[1]}, params {param_count})")
    _write_table(
        out / "repr_ablation.csv",
        ["label", "input_shape", "runs", "mean_test_acc", "std_test_acc", "mean_train_acc", "param_count"],
        table,
    )
    print(f"wrote {out / 'repr_ablation.csv'}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # keep failures single-line and machine-parsable
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common(sub, out_default: str, out_help: str):
    sub.add_argument("--config", help="key=value config file")
    sub.add_argument("--seed", dest="opt_seed", metavar="N", help="base seed")
    sub.add_argument("--out", default=out_default, help=out_help)


def _add_override(sub, key: str, flag: str | None = None, help_suffix: str = ""):
    _, default, help_text = SCHEMA[key]
    sub.add_argument(
        flag or f"--{key.replace('_', '-')}",
        dest=f"opt_{key}",
        metavar="V",
        help=f"{help_text} (default {default}){help_suffix}",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pstnet", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("generate", parents=[], help="write a synthetic dataset")
    _add_common(p, "dataset.bin", "output dataset file")
    p.add_argument("--kind", choices=("features", "raw"), default="features",
                   help="ready 4-D feature tensors, or raw signals for extract")
    for key in ("n_per_class", "noise_sigma", "amplitude", "min_separation_sigmas",
                "t", "s", "v", "h", "layout"):
        _add_override(p, key)
    p.set_defaults(func=cmd_generate)

    p = subs.add_parser("extract", help="raw recordings to band-feature dataset")
    p.add_argument("raw_in", help="raw recording set written by generate --kind raw")
    _add_common(p, "features.bin", "output dataset file")
    for key in ("slice_length_s", "layout"):
        _add_override(p, key)
    p.set_defaults(func=cmd_extract)

    p = subs.add_parser("train", help="train on a dataset file")
    p.add_argument("dataset", help="dataset file from generate or extract")
    _add_common(p, "run", "output directory (metrics, checkpoint, config)")
    p.add_argument("--lr", dest="opt_learning_rate", metavar="V", help="Adam learning rate")
    for key in ("epochs", "batch_size", "attention", "n_attention_blocks",
                "conv_channels", "fc_hidden", "dropout_rate", "n_classes",
                "split_ratio", "shuffle", "standardize"):
        _add_override(p, key)
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("evaluate", help="accuracy of a checkpoint on a dataset")
    p.add_argument("dataset", help="dataset file")
    p.add_argument("--checkpoint", required=True, help="checkpoint.bin from train")
    _add_common(p, "run", "unused; kept for flag uniformity")
    for key in ("attention", "n_attention_blocks", "conv_channels", "fc_hidden",
                "n_classes", "standardize"):
        _add_override(p, key)
    p.set_defaults(func=cmd_evaluate)

    p = subs.add_parser("ablate", help="train the five attention variants")
    p.add_argument("dataset", help="dataset file")
    _add_common(p, "ablation", "output directory")
    p.add_argument("--lr", dest="opt_learning_rate", metavar="V", help="Adam learning rate")
    for key in ("runs", "epochs", "batch_size", "n_classes", "standardize"):
        _add_override(p, key)
    p.set_defaults(func=cmd_ablate)

    p = subs.add_parser("repr-ablate", help="3-D input baselines vs the 4-D model")
    p.add_argument("dataset", help="dataset file")
    _add_common(p, "repr_ablation", "output directory")
    p.add_argument("--lr", dest="opt_learning_rate", metavar="V", help="Adam learning rate")
    for key in ("runs", "epochs", "batch_size", "n_classes", "standardize", "vht_band"):
        _add_override(p, key)
    p.set_defaults(func=cmd_repr_ablate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 1
    except (ValueError, OSError, RuntimeError) as exc:
        message = " ".join(str(exc).split())
        print(f"error: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
