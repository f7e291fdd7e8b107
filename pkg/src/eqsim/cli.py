"""Experiment runner.

Subcommands:
    generate    write an eval set and a train-stream spec from a config
    train       fit the toy dual encoder, write checkpoint + loss history
    eval        score a checkpoint on an eval set, write the full report
    benchbuild  run a benchmark-construction pipeline over annotations
    eqscore     write equivariance-score histograms for a checkpoint

Exit codes: 0 ok, 2 config/schema, 3 I/O, 4 numeric failure, 5 shape
mismatch. All outputs are deterministic given (config, seed); timing is
printed to stdout only so re-runs stay byte-identical.
"""

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import benchbuild, io, metrics, model, synthgen
from .configs import load_experiment_config, substream
from .core import DEGENERACY_TOL, SimilarityGrid
from .errors import (
    DegenerateVectorError,
    DimensionMismatchError,
    EqsimError,
    NonFiniteLossError,
    SchemaError,
)
from .losses import MODES

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4
EXIT_SHAPE = 5


# -- shared helpers ------------------------------------------------------------

def _load_config(args):
    return load_experiment_config(
        args.config, seed_override=args.seed, output_override=args.out
    )


def _apply_mode_override(cfg, mode):
    if mode is None:
        return cfg
    train = replace(cfg.train, eqsim=replace(cfg.train.eqsim, mode=mode))
    return replace(cfg, train=train)


def _rowwise_cosine(a, b):
    an = np.linalg.norm(a, axis=1)
    bn = np.linalg.norm(b, axis=1)
    if min(an.min(), bn.min()) < DEGENERACY_TOL:
        raise DegenerateVectorError("an encoded eval vector has near-zero norm")
    return (a * b).sum(axis=1) / (an * bn)


def eval_grids(params, samples):
    """Raw similarity grids (cosine / temperature) for every pair sample."""
    def encode(vectors, modality):
        stacked = np.stack(vectors)
        out, _ = model._encode_batch(params, modality, stacked)
        return out

    u1 = encode([s.image1 for s in samples], "image")
    u2 = encode([s.image2 for s in samples], "image")
    v1 = encode([s.text1 for s in samples], "text")
    v2 = encode([s.text2 for s in samples], "text")
    tau = params.temperature
    s11 = _rowwise_cosine(u1, v1) / tau
    s12 = _rowwise_cosine(u1, v2) / tau
    s21 = _rowwise_cosine(u2, v1) / tau
    s22 = _rowwise_cosine(u2, v2) / tau
    return [
        SimilarityGrid(s11=float(a), s12=float(b), s21=float(c), s22=float(d))
        for a, b, c, d in zip(s11, s12, s21, s22)
    ]


def _check_dims(params, samples, where):
    sample = samples[0]
    if sample.image1.size != params.d_img or sample.text1.size != params.d_txt:
        raise DimensionMismatchError(
            f"{where}: eval set dims ({sample.image1.size}, {sample.text1.size}) "
            f"!= checkpoint dims ({params.d_img}, {params.d_txt})"
        )


def _two_way_softmax(a, b):
    """p(a) under a softmax over {a, b}, overflow-safe."""
    hi = max(a, b)
    ea, eb = np.exp(a - hi), np.exp(b - hi)
    return ea / (ea + eb)


def _valse_scores(grids):
    """Correct/foil membership probabilities; each grid yields one VALSE
    instance per image (texts competing under a two-way softmax)."""
    correct, foil = [], []
    for g in grids:
        p1 = _two_way_softmax(g.s11, g.s12)
        p2 = _two_way_softmax(g.s22, g.s21)
        correct.extend((p1, p2))
        foil.extend((1.0 - p1, 1.0 - p2))
    return correct, foil


def _eqscore_values(grids):
    scores = [metrics.equivariance_score(g) for g in grids]
    return {
        "text_direction": [s.text_direction for s in scores],
        "image_direction": [s.image_direction for s in scores],
        "combined": [s.combined for s in scores],
    }


def _histogram_records(values_by_direction, bins):
    summaries, records = {}, []
    for direction, values in values_by_direction.items():
        hist = metrics.histogram(values, bins)
        summaries[direction] = {"mean": hist.mean, "std": hist.std}
        for lo, hi, count in zip(hist.edges[:-1], hist.edges[1:], hist.counts):
            records.append(
                {
                    "section": "equivariance_hist",
                    "direction": direction,
                    "bin_lo": float(lo),
                    "bin_hi": float(hi),
                    "count": int(count),
                }
            )
    return summaries, records


def _report_name(checkpoint_path, prefix):
    stem = Path(checkpoint_path).stem
    if "checkpoint" in stem:
        return stem.replace("checkpoint", prefix) + ".txt"
    return f"{prefix}_{stem}.txt"


# -- subcommands -----------------------------------------------------------------

def cmd_generate(args) -> int:
    cfg = _load_config(args)
    out_dir = Path(cfg.output_dir)
    rng = substream(cfg.seed, "eval")
    samples = synthgen.generate_eval_set(
        cfg.world, cfg.eval.n_eval, cfg.eval.mix_dict(), rng
    )
    header = {"seed": cfg.seed, "config": cfg.echo()}
    eval_path = io.save_eval_set(out_dir / "evalset.txt", samples, header)
    spec_path = io.write_document(
        out_dir / "trainspec.txt",
        "trainspec",
        {
            **header,
            "batch_size": cfg.train.batch_size,
            "edit_fraction": cfg.edit_fraction,
            "batches_stream": "seed substream 'batches'",
        },
        [],
    )
    counts = {}
    for s in samples:
        counts[s.edited_aspect] = counts.get(s.edited_aspect, 0) + 1
    print(f"wrote {eval_path} ({len(samples)} samples) and {spec_path}")
    for aspect in sorted(counts):
        print(f"  edited {aspect}: {counts[aspect]}")
    return EXIT_OK


def cmd_train(args) -> int:
    started = time.perf_counter()
    cfg = _apply_mode_override(_load_config(args), args.eqsim_mode)
    out_dir = Path(cfg.output_dir)
    stream = synthgen.generate_train_stream(
        cfg.world, cfg.train.batch_size, substream(cfg.seed, "batches"),
        edit_fraction=cfg.edit_fraction,
    )
    params, history = model.train(cfg.train, stream)
    mode = cfg.train.eqsim.mode
    header = {"seed": cfg.seed, "config": cfg.echo()}
    final = history[-1] if history else None
    ck_header = dict(header)
    ck_header["final_loss"] = None if final is None else {
        "retrieval": final.retrieval,
        "equivariance": final.equivariance,
        "total": final.total,
        "n_close_pairs": final.n_close_pairs,
        "n_distant_pairs": final.n_distant_pairs,
    }
    ck_path = io.save_checkpoint(out_dir / f"checkpoint_{mode}.txt", params, ck_header)
    hist_path = io.write_document(
        out_dir / f"history_{mode}.txt",
        "history",
        header,
        (
            {
                "step": i,
                "retrieval": b.retrieval,
                "equivariance": b.equivariance,
                "total": b.total,
                "n_close_pairs": b.n_close_pairs,
                "n_distant_pairs": b.n_distant_pairs,
            }
            for i, b in enumerate(history)
        ),
    )
    print(f"wrote {ck_path} and {hist_path}")
    if final is not None:
        print(
            f"final losses: retrieval {final.retrieval:.6f}, "
            f"equivariance {final.equivariance:.6f}, total {final.total:.6f}"
        )
    print(f"wall-clock seconds: {time.perf_counter() - started:.2f}")
    return EXIT_OK


def _eval_report(params, ck_header, samples, threshold, bins, recall_ks, metric_set):
    grids = eval_grids(params, samples)
    records = []
    footer = []

    if ck_header.get("final_loss"):
        records.append({"section": "final_loss", **ck_header["final_loss"]})

    if "group" in metric_set:
        overall = metrics.group_metrics(grids)
        records.append(
            {
                "section": "group_metrics",
                "text_score": overall.text_score,
                "image_score": overall.image_score,
                "group_score": overall.group_score,
                "n_samples": overall.n_samples,
            }
        )
        by_aspect = {}
        for grid, sample in zip(grids, samples):
            by_aspect.setdefault(sample.edited_aspect, []).append(grid)
        for aspect in sorted(by_aspect):
            rep = metrics.group_metrics(by_aspect[aspect])
            records.append(
                {
                    "section": "group_metrics_by_aspect",
                    "aspect": aspect,
                    "text_score": rep.text_score,
                    "image_score": rep.image_score,
                    "group_score": rep.group_score,
                    "n_samples": rep.n_samples,
                }
            )
        footer.append(
            f"group {overall.group_score:.4f} text {overall.text_score:.4f} "
            f"image {overall.image_score:.4f} over {overall.n_samples} samples"
        )
    else:
        records.append({"section": "skipped", "metric": "group"})

    if "valse" in metric_set:
        correct, foil = _valse_scores(grids)
        rep = metrics.valse_metrics(correct, foil, threshold)
        records.append(
            {
                "section": "valse",
                "acc": rep.acc,
                "p_c": rep.p_c,
                "p_f": rep.p_f,
                "min_pc_pf": rep.min_pc_pf,
                "threshold": rep.threshold,
            }
        )
        footer.append(f"valse acc {rep.acc:.4f} min(pc,pf) {rep.min_pc_pf:.4f}")
    else:
        records.append({"section": "skipped", "metric": "valse"})

    if "recall" in metric_set and len(samples) >= 2:
        m = model.forward_batch(
            params,
            np.stack([s.image1 for s in samples]),
            np.stack([s.text1 for s in samples]),
        )
        ks = [k for k in recall_ks if 1 <= k <= m.n]
        recalls = metrics.recall_at_k(m, ks)
        for direction, per_k in sorted(recalls.items()):
            for k in sorted(per_k):
                records.append(
                    {
                        "section": "recall",
                        "direction": direction,
                        "k": k,
                        "recall": per_k[k],
                    }
                )
    else:
        records.append({"section": "skipped", "metric": "recall"})

    if "eqscore" in metric_set:
        summaries, hist_records = _histogram_records(_eqscore_values(grids), bins)
        for direction in sorted(summaries):
            records.append(
                {
                    "section": "equivariance",
                    "direction": direction,
                    "mean": summaries[direction]["mean"],
                    "std": summaries[direction]["std"],
                }
            )
        records.extend(hist_records)
        footer.append(
            f"equivariance combined mean {summaries['combined']['mean']:.4f} "
            f"std {summaries['combined']['std']:.4f}"
        )
    else:
        records.append({"section": "skipped", "metric": "eqscore"})

    return records, footer


def cmd_eval(args) -> int:
    started = time.perf_counter()
    ck_header, params = io.load_checkpoint(args.checkpoint)
    _, samples = io.load_eval_set(args.evalset)
    if not samples:
        raise SchemaError(f"{args.evalset}: eval set is empty")
    _check_dims(params, samples, str(args.evalset))
    eval_settings = {
        "valse_threshold": args.valse_threshold,
        "bins": args.bins,
        "recall_ks": [1, 5, 10],
        "metrics": list(args.metrics),
    }
    records, footer = _eval_report(
        params,
        ck_header,
        samples,
        args.valse_threshold,
        args.bins,
        eval_settings["recall_ks"],
        set(args.metrics),
    )
    out_dir = Path(args.out) if args.out else Path(args.checkpoint).parent
    header = {
        "seed": ck_header.get("seed"),
        "config": ck_header.get("config"),
        "eval_settings": eval_settings,
        "n_samples": len(samples),
    }
    path = io.write_document(
        out_dir / _report_name(args.checkpoint, "report"),
        "report",
        header,
        records,
        footer_lines=footer,
    )
    print(f"wrote {path}")
    for line in footer:
        print(f"  {line}")
    print(f"wall-clock seconds: {time.perf_counter() - started:.2f}")
    return EXIT_OK


def cmd_eqscore(args) -> int:
    ck_header, params = io.load_checkpoint(args.checkpoint)
    _, samples = io.load_eval_set(args.evalset)
    if not samples:
        raise SchemaError(f"{args.evalset}: eval set is empty")
    _check_dims(params, samples, str(args.evalset))
    grids = eval_grids(params, samples)
    summaries, hist_records = _histogram_records(_eqscore_values(grids), args.bins)
    out_dir = Path(args.out) if args.out else Path(args.checkpoint).parent
    header = {
        "seed": ck_header.get("seed"),
        "config": ck_header.get("config"),
        "bins": args.bins,
        "n_samples": len(samples),
        "summaries": summaries,
    }
    path = io.write_document(
        out_dir / _report_name(args.checkpoint, "eqscore"),
        "histogram",
        header,
        hist_records,
        footer_lines=[
            f"{d} mean {s['mean']:.6f} std {s['std']:.6f}"
            for d, s in sorted(summaries.items())
        ],
    )
    print(f"wrote {path}")
    return EXIT_OK


# -- benchbuild -----------------------------------------------------------------

_AG_FIELDS = ("index", "attention_rel", "spatial_rel", "contact_rel", "object")
_GEBC_FIELDS = ("index", "caption_before", "caption_after", "frame_before", "frame_after")
_SEGMENT_FIELDS = ("start", "end", "caption")
_KUBRIC_FIELDS = ("aspect", "object", "counting", "attribute", "location")
_SD_FIELDS = ("category", "object")


def _build_ag(records, header, rng, where):
    frames = []
    for idx, rec in enumerate(records):
        io.require_fields(rec, _AG_FIELDS, idx, where)
        frames.append(
            benchbuild.AgFrame(
                index=int(rec["index"]),
                attention_rel=rec["attention_rel"],
                spatial_rel=rec["spatial_rel"],
                contact_rel=rec["contact_rel"],
                object=rec["object"],
            )
        )
    pairs = benchbuild.ag_select_pairs(frames)
    stats = {"frames": len(frames), "pairs_kept": len(pairs)}
    return pairs, stats


def _build_gebc(records, header, rng, where):
    boundaries = []
    for idx, rec in enumerate(records):
        io.require_fields(rec, _GEBC_FIELDS, idx, where)
        boundaries.append(
            benchbuild.GebcBoundary(
                index=int(rec["index"]),
                caption_before=rec["caption_before"],
                caption_after=rec["caption_after"],
                frame_before=rec["frame_before"],
                frame_after=rec["frame_after"],
            )
        )
    pairs = benchbuild.gebc_select(boundaries)
    candidates = max(0, (len(boundaries) - 1) // 2)
    stats = {
        "boundaries": len(boundaries),
        "candidate_pairs": candidates,
        "pairs_kept": len(pairs),
        "dropped_action_word": candidates - len(pairs),
    }
    return pairs, stats


def _build_youcook2(records, header, rng, where):
    segments = []
    for idx, rec in enumerate(records):
        io.require_fields(rec, _SEGMENT_FIELDS, idx, where)
        segments.append((rec["start"], rec["end"], rec["caption"]))
    rejected = header.get("rejected_frames")
    face_filter = (
        benchbuild.list_backed_face_filter(rejected) if rejected is not None else None
    )
    kept = benchbuild.youcook2_select(segments, face_filter)
    # adjacent kept picks form non-overlapping candidate pairs
    pairs = [
        benchbuild.CandidatePair(
            source="youcook2",
            item1=kept[i],
            item2=kept[i + 1],
            filter_trace=("middle_frame", "face_filter", "adjacent_pairing"),
        )
        for i in range(0, len(kept) - 1, 2)
    ]
    stats = {
        "segments": len(segments),
        "frames_kept": len(kept),
        "dropped_face_filter": len(segments) - len(kept),
        "pairs_kept": len(pairs),
    }
    return pairs, stats


def _build_kubric(records, header, rng, where):
    pairs = []
    for idx, rec in enumerate(records):
        io.require_fields(rec, _KUBRIC_FIELDS, idx, where)
        slots = {k: rec[k] for k in ("object", "counting", "attribute", "location")}
        cap1, cap2, changed = benchbuild.kubric_captions(rec["aspect"], slots, rng)
        pairs.append(
            benchbuild.CandidatePair(
                source="kubric",
                item1=(f"kubric-{idx}-a", cap1),
                item2=(f"kubric-{idx}-b", cap2),
                filter_trace=(
                    f"phrase_intervention:{rec['aspect']}",
                    f"changed:{changed[0]}->{changed[1]}",
                ),
            )
        )
    return pairs, {"requests": len(records), "pairs_kept": len(pairs)}


def _build_sd(records, header, rng, where):
    pairs = []
    for idx, rec in enumerate(records):
        io.require_fields(rec, _SD_FIELDS, idx, where)
        base = {
            "object": rec["object"],
            "scene": rec.get("scene"),
            "attribute": rec.get("attribute"),
        }
        cap1, cap2 = benchbuild.sd_caption_edit(base, rec["category"], rng)
        pairs.append(
            benchbuild.CandidatePair(
                source="sd",
                item1=(f"sd-{idx}-a", cap1),
                item2=(f"sd-{idx}-b", cap2),
                filter_trace=(f"caption_edit:{rec['category']}",),
            )
        )
    return pairs, {"requests": len(records), "pairs_kept": len(pairs)}


_BUILDERS = {
    "ag": _build_ag,
    "gebc": _build_gebc,
    "youcook2": _build_youcook2,
    "kubric": _build_kubric,
    "sd": _build_sd,
}


def cmd_benchbuild(args) -> int:
    _, ann_header, records = io.read_document(args.annotations, expect_doctype="annotations")
    seed = args.seed if args.seed is not None else int(ann_header.get("seed", 0))
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(4,)))
    pairs, stats = _BUILDERS[args.source](records, ann_header, rng, str(args.annotations))
    out_dir = Path(args.out) if args.out else Path(args.annotations).parent
    header = {
        "seed": seed,
        "config": {"source": args.source, "annotations": Path(args.annotations).name},
        "stats": stats,
    }
    path = io.save_manifest(out_dir / f"manifest_{args.source}.txt", pairs, header)
    print(f"wrote {path}")
    for key in sorted(stats):
        print(f"  {key}: {stats[key]}")
    return EXIT_OK


# -- entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eqsim",
        description="equivariant similarity lab: data generation, training, "
        "evaluation, and benchmark construction",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write eval set + train-stream spec")
    p.add_argument("--config", required=True, help="experiment config (JSON)")
    p.add_argument("--seed", type=int, default=None, help="override the run seed")
    p.add_argument("--out", default=None, help="override the output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train the dual encoder")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument(
        "--eqsim-mode",
        choices=MODES,
        default=None,
        help="override the regularizer mode from the config",
    )
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a checkpoint on an eval set")
    p.add_argument("checkpoint")
    p.add_argument("evalset")
    p.add_argument("--out", default=None)
    p.add_argument("--valse-threshold", type=float, default=0.5)
    p.add_argument("--bins", type=int, default=20)
    p.add_argument(
        "--metrics",
        nargs="+",
        choices=("group", "valse", "recall", "eqscore"),
        default=("group", "valse", "recall", "eqscore"),
    )
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("benchbuild", help="run a benchmark-construction pipeline")
    p.add_argument("source", choices=sorted(_BUILDERS))
    p.add_argument("annotations")
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_benchbuild)

    p = sub.add_parser("eqscore", help="equivariance-score histograms")
    p.add_argument("checkpoint")
    p.add_argument("evalset")
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eqscore)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except NonFiniteLossError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except DimensionMismatchError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_SHAPE
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO
    except EqsimError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
