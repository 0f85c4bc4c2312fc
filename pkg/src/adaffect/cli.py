"""``adaffect`` command line.

Every subcommand writes its artifacts atomically and records the resolved
parameters, input digests and toolkit version in ``manifest.json`` next to
its output. Flags override values from ``--config``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from ._io import SCHEMA_VERSION, atomic_write_json, atomic_write_text, dumps, file_digest, format_float
from .config import ConfigError, PipelineConfig, load_config

# built-in defaults per subcommand; config sections and flags override these
DEFAULTS: dict[str, dict[str, Any]] = {
    "agree": {"metric": "ordinal", "dim": None},
    "corr": {"q": 0.05},
    "spectrogram": {"segment_s": 10.0},
    "hanjalic": {"smooth_length": 11, "kaiser_beta": 5.0, "shot_k": 3.0,
                 "arousal_weights": None, "valence_weights": None, "ad_id": None},
    "lexicon-score": {"stem": False},
    "cv": {"clf": "rsvm", "window": "all", "repeats": 10, "folds": 5, "inner_folds": 5,
           "shrinkage": 0.1, "C": 1.0, "gamma": None, "tune": True},
    "fuse": {"grid_step": 0.01, "validation_fusion": False, "folds": 5},
    "mtl": {"alpha": 1.0, "beta": 0.0, "gamma": 1.0, "max_iter": 5000, "tol": 1e-10,
            "edges": None},
    "schedule": {"k": 5, "method": "auto", "spacing": 60.0, "w_valence": 0.6,
                 "contrast": False, "window": "all"},
    "report": {},
    "synth": {"n_ads": 3, "n_scenes": 8, "duration": 60.0},
}


class CliError(Exception):
    pass


def _weights_arg(text: str | None) -> dict[str, float] | None:
    if text is None or isinstance(text, dict):
        return text
    out = {}
    for part in text.split(","):
        name, _, value = part.partition("=")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad weight {part!r}; use name=value") from None
    return out


def _resolve(args, cfg: PipelineConfig) -> dict[str, Any]:
    """Merge built-in defaults, the config section and explicit flags."""
    params = dict(DEFAULTS[args.command])
    section = cfg.section(args.command)
    unknown = set(section) - set(params) - {"inputs"}
    if unknown:
        raise CliError(f"config section [{args.command}] has unknown keys: {sorted(unknown)}")
    params.update({k: v for k, v in section.items() if k != "inputs"})
    for key in params:
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    return params


def _input(args, name: str, cfg: PipelineConfig, required: bool = True) -> Path | None:
    value = getattr(args, name, None) or cfg.paths.get(name)
    if value is None:
        if required:
            raise CliError(f"missing required input --{name.replace('_', '-')}")
        return None
    path = Path(value)
    if not path.exists():
        raise CliError(f"input not found: {path}")
    return path


def _doc(kind: str, body: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "kind": kind, **body}


def _write_manifest(out_dir: Path, command: str, params: dict, inputs: dict[str, Path],
                    outputs: list[Path], seed: int | None):
    path = out_dir / "manifest.json"
    manifest = {"schema_version": SCHEMA_VERSION, "toolkit_version": __version__, "runs": {}}
    if path.exists():
        try:
            old = json.loads(path.read_text(encoding="utf-8"))
            manifest["runs"] = old.get("runs", {})
        except (json.JSONDecodeError, AttributeError):
            pass
    resolved = {"command": command, "params": params, "seed": seed}
    # one entry per output file, so repeated runs of a subcommand into one
    # directory (one curve file per ad, say) all stay on record
    key = outputs[0].relative_to(out_dir).as_posix()
    manifest["runs"][key] = {
        "command": command,
        "config_sha256": hashlib.sha256(dumps(resolved).encode()).hexdigest(),
        "params": params,
        "seed": seed,
        "inputs": {k: {"path": str(v), "sha256": file_digest(v)} for k, v in sorted(inputs.items())},
        "outputs": sorted(p.relative_to(out_dir).as_posix() for p in outputs),
    }
    atomic_write_json(path, manifest)


# -- subcommands ------------------------------------------------------------

def cmd_agree(args, cfg, p):
    from .agreement import agreement_report
    from .dataset import load_ads, load_ratings

    inputs = {"ratings": _input(args, "ratings", cfg)}
    ads_path = _input(args, "ads", cfg, required=False)
    ads = None
    if ads_path is not None:
        inputs["ads"] = ads_path
        ads = load_ads(ads_path)
    table = load_ratings(inputs["ratings"])
    dims = [p["dim"]] if isinstance(p["dim"], str) else p["dim"]
    report = agreement_report(table, dims, ads, p["metric"])
    return inputs, _doc("agreement", report.to_dict())


def cmd_corr(args, cfg, p):
    from .agreement import pearson_with_fdr
    from .dataset import load_ratings

    inputs = {"ratings": _input(args, "ratings", cfg)}
    report = pearson_with_fdr(load_ratings(inputs["ratings"]), p["q"])
    return inputs, _doc("correlation", report.to_dict())


def _matrix_csv(m: np.ndarray) -> str:
    return "\n".join(",".join(format_float(float(v)) for v in row) for row in m) + "\n"


def cmd_spectrogram(args, cfg, p):
    from .signal.audio import read_wav, segment_spectrograms

    inputs = {"wav": _input(args, "wav", cfg)}
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    specs = segment_spectrograms(read_wav(inputs["wav"]), p["segment_s"])
    segments = []
    for k, s in enumerate(specs):
        name = f"segment_{k:03d}.csv"
        atomic_write_text(out_dir / name, _matrix_csv(s.magnitudes))
        segments.append({"file": name, "start_s": s.segment.start_s, "end_s": s.segment.end_s,
                         "padded": s.segment.padded, "n_windows": s.n_windows,
                         "n_bins": s.n_bins})
    body = {"sample_rate_hz": specs[0].sample_rate_hz if specs else None,
            "window_s": 0.040, "hop_s": 0.020, "segments": segments}
    return inputs, _doc("spectrogram", body)


def cmd_hanjalic(args, cfg, p):
    from .signal.audio import read_wav
    from .signal.hanjalic import affect_curves, curve_mean
    from .signal.video import read_frames

    inputs = {"wav": _input(args, "wav", cfg), "frames": _input(args, "frames", cfg)}
    clip = read_wav(inputs["wav"])
    frames = read_frames(inputs["frames"])
    arousal, valence = affect_curves(clip, frames, _weights_arg(p["arousal_weights"]),
                                     _weights_arg(p["valence_weights"]),
                                     p["smooth_length"], p["kaiser_beta"], p["shot_k"])
    means = {}
    for name in ("all", "l3", "l"):
        means[name] = {c.dimension: curve_mean(c, name)._asdict() for c in (arousal, valence)}
    ad_id = p["ad_id"] or inputs["wav"].stem
    return inputs, _doc("hanjalic", {"ad_id": ad_id, "duration_s": clip.duration_s,
                                     "arousal": arousal.to_dict(), "valence": valence.to_dict(),
                                     "means": means})


def cmd_lexicon_score(args, cfg, p):
    from .lexicon import label_corpus, light_stem, load_captions, load_lexicon, score_text

    inputs = {"lexicon": _input(args, "lexicon", cfg), "captions": _input(args, "captions", cfg)}
    stop_path = _input(args, "stopwords", cfg, required=False)
    stopwords = None
    if stop_path is not None:
        inputs["stopwords"] = stop_path
        stopwords = stop_path.read_text(encoding="utf-8").split()
    lex = load_lexicon(inputs["lexicon"])
    captions = load_captions(inputs["captions"])
    stemmer = light_stem if p["stem"] else None
    scores = {ad: score_text(text, lex, stopwords, stemmer) for ad, text in captions.items()}
    labels = label_corpus({ad: (s.valence, s.arousal) for ad, s in scores.items()})
    ads = {ad: {**s._asdict(), "valence_label": None if labels[ad] is None else labels[ad][0],
                "arousal_label": None if labels[ad] is None else labels[ad][1]}
           for ad, s in scores.items()}
    n_missing = sum(v is None for v in labels.values())
    return inputs, _doc("lexicon-score", {"ads": ads, "n_missing": n_missing,
                                          "threshold": "corpus mean; ties -> L"})


def cmd_cv(args, cfg, p, seed, jobs):
    from .dataset import load_features
    from .learn.cv import ClassifierSpec, cross_validate

    inputs = {"features": _input(args, "features", cfg)}
    table = load_features(inputs["features"])
    spec = ClassifierSpec(p["clf"], C=p["C"], gamma=p["gamma"], shrinkage=p["shrinkage"],
                          tune=p["tune"])
    report = cross_validate(table, spec, p["window"], seed, p["repeats"], p["folds"],
                            p["inner_folds"], jobs)
    return inputs, _doc("cv", report.to_dict())


def _read_posteriors(path: Path) -> tuple[list[str], np.ndarray, np.ndarray]:
    from .dataset import ParseError, label_to_sign

    ids, probs, labels = [], [], []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"ad_id", "posterior", "label"} <= set(reader.fieldnames):
            raise ParseError("header must contain ad_id,posterior,label", str(path), 1)
        for row in reader:
            try:
                ids.append(row["ad_id"])
                probs.append(float(row["posterior"]))
                labels.append(label_to_sign(row["label"].strip()))
            except (ValueError, AttributeError) as exc:
                raise ParseError(str(exc), str(path), reader.line_num) from None
    return ids, np.array(probs), np.array(labels)


def cmd_fuse(args, cfg, p, seed):
    from .learn.fusion import cross_fitted_fusion, decision_fusion

    inputs = {"audio": _input(args, "audio", cfg), "video": _input(args, "video", cfg)}
    ids_a, pa, ya = _read_posteriors(inputs["audio"])
    ids_v, pv, yv = _read_posteriors(inputs["video"])
    if ids_a != ids_v or not np.array_equal(ya, yv):
        raise CliError("audio and video files must list the same ads, labels and order")
    if args.f_audio is None or args.f_video is None:
        raise CliError("--f-audio and --f-video (training F1 per modality) are required")
    if p["validation_fusion"]:
        res, per_fold = cross_fitted_fusion(pa, pv, args.f_audio, args.f_video, ya,
                                            p["folds"], seed, p["grid_step"])
        body = {**res.to_dict(), "fold_weights": [w.__dict__ for w in per_fold]}
    else:
        body = decision_fusion(pa, pv, args.f_audio, args.f_video, ya, p["grid_step"]).to_dict()
    body["ad_ids"] = ids_a
    return inputs, _doc("fusion", body)


def _parse_edges(text) -> list[tuple[int, int]]:
    if isinstance(text, list):
        return [tuple(e) for e in text]
    return [tuple(int(v) for v in part.split("-")) for part in text.split(",") if part]


def cmd_mtl(args, cfg, p):
    from .dataset import load_features
    from .learn.metrics import f1_score
    from .learn.mtl import incidence_matrix, mtl_predict, quadrant_graph, train_mtl

    inputs = {"tasks": _input(args, "tasks", cfg)}
    files = sorted(f for f in inputs["tasks"].iterdir() if f.suffix in (".csv", ".tsv"))
    if not files:
        raise CliError(f"no .csv/.tsv task files in {inputs['tasks']}")
    tables = [load_features(f) for f in files]
    if p["edges"] is not None:
        R = incidence_matrix(len(tables), _parse_edges(p["edges"]))
    elif len(tables) == 4:
        R = quadrant_graph()
    else:
        raise CliError("give --edges when there are not exactly four tasks")
    model = train_mtl(tables, R, p["alpha"], p["beta"], p["gamma"], p["max_iter"], p["tol"])
    f1 = [f1_score([mtl_predict(model, x, t) for x in tab.X], tab.y)
          for t, tab in enumerate(tables)]
    body = {**model.to_dict(), "tasks": [f.name for f in files], "training_f1": f1,
            "objective_history_length": len(model.history)}
    return inputs, _doc("mtl", body)


def cmd_schedule(args, cfg, p):
    from .scheduler import (AdScore, SchedulingProblem, load_ad_scores, load_scenes,
                            schedule_report, solve_schedule, validate_schedule)

    inputs = {"scenes": _input(args, "scenes", cfg)}
    if args.ad_curves:
        ads = []
        for k, path in enumerate(args.ad_curves):
            path = Path(path)
            if not path.exists():
                raise CliError(f"input not found: {path}")
            inputs[f"ad_curves_{k}"] = path
            doc = json.loads(path.read_text(encoding="utf-8"))
            m = doc["means"][p["window"]]
            ads.append(AdScore(doc["ad_id"], m["arousal"]["value"], m["valence"]["value"],
                               doc["duration_s"]))
    else:
        inputs["ads"] = _input(args, "ads", cfg)
        ads = load_ad_scores(inputs["ads"])
    problem = SchedulingProblem(load_scenes(inputs["scenes"]), ads, p["k"])
    weights = (p["w_valence"], 1.0 - p["w_valence"])
    schedule = solve_schedule(problem, weights, p["spacing"], p["method"], p["contrast"])
    violations = validate_schedule(schedule, problem, p["spacing"])
    if violations:
        raise CliError("solver produced an invalid schedule: " + "; ".join(violations))
    body = {**schedule.to_dict(), "report": schedule_report(schedule, problem, weights,
                                                            p["contrast"])}
    return inputs, _doc("schedule", body)


def _rows_csv(header: list[str], rows: list[list]) -> str:
    sio = io.StringIO()
    w = csv.writer(sio, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(["" if v is None else format_float(v) if isinstance(v, float) else v
                    for v in r])
    return sio.getvalue()


def cmd_report(args, cfg, p):
    """Figures (PNG) plus the tables behind them (CSV)."""
    from . import plotting
    from .agreement import agreement_report, pearson_with_fdr
    from .dataset import load_ads, load_ratings
    from .signal.audio import read_wav, segment_spectrograms
    from .signal.hanjalic import affect_curves
    from .signal.video import read_frames

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    inputs: dict[str, Path] = {}
    written: list[str] = []
    ratings = _input(args, "ratings", cfg, required=False)
    if ratings is not None:
        inputs["ratings"] = ratings
        table = load_ratings(ratings)
        ads = None
        if (ads_path := _input(args, "ads", cfg, required=False)) is not None:
            inputs["ads"] = ads_path
            ads = load_ads(ads_path)
        plotting.plot_rating_distributions(table, out / "rating_distributions.png")
        plotting.plot_mean_scatter(table, out / "mean_scatter.png")
        rep = agreement_report(table, None, ads)
        rows = [[d, rep.krippendorff_alpha[d], rep.population_kappa.get(d)]
                for d in table.dims]
        atomic_write_text(out / "agreement.csv",
                          _rows_csv(["dim", "krippendorff_alpha", "population_kappa"], rows))
        if len(table.ads) >= 3:
            corr = pearson_with_fdr(table)
            atomic_write_text(out / "correlations.csv", _rows_csv(
                ["dim_i", "dim_j", "mean_r", "max_p", "significant_after_fdr"],
                [[c.dim_i, c.dim_j, c.pearson_r, c.p_value, str(c.significant_after_fdr)]
                 for c in corr.pairs]))
            written.append("correlations.csv")
        written += ["rating_distributions.png", "mean_scatter.png", "agreement.csv"]
    wav = _input(args, "wav", cfg, required=False)
    if wav is not None:
        inputs["wav"] = wav
        inputs["frames"] = _input(args, "frames", cfg)
        clip = read_wav(wav)
        arousal, valence = affect_curves(clip, read_frames(inputs["frames"]))
        plotting.plot_curves([arousal, valence], out / "curves.png")
        atomic_write_text(out / "curves.csv", _rows_csv(
            ["second", "arousal", "valence"],
            [[t, float(a), float(v)] for t, (a, v) in enumerate(zip(arousal.values,
                                                                   valence.values))]))
        plotting.plot_spectrogram(segment_spectrograms(clip)[0], out / "spectrogram.png")
        written += ["curves.png", "curves.csv", "spectrogram.png"]
    sched = _input(args, "schedule", cfg, required=False)
    if sched is not None:
        inputs["schedule"] = sched
        rep = json.loads(sched.read_text(encoding="utf-8"))["report"]
        plotting.plot_schedule(rep, out / "schedule.png")
        atomic_write_text(out / "schedule.csv", _rows_csv(
            ["breakpoint", "after_scene", "ad_id", "program_time_s", "relevance"],
            [[i["breakpoint"], i["after_scene"], i["ad_id"], i["program_time_s"],
              i["relevance"]] for i in rep["insertions"]]))
        written += ["schedule.png", "schedule.csv"]
    if not inputs:
        raise CliError("report needs at least one of --ratings, --wav/--frames, --schedule")
    return inputs, _doc("report", {"files": sorted(written)})


def cmd_synth(args, cfg, p, seed):
    """Write a synthetic demo corpus."""
    from .dataset import save_ads, save_features, save_ratings
    from .scheduler import rows_to_csv
    from .synthetic import (synthetic_features, synthetic_ratings, synthetic_scenes,
                            write_synthetic_ad)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for k in range(p["n_ads"]):
        write_synthetic_ad(out / f"ad{k}", p["duration"], seed + k)
    table, ads = synthetic_ratings(seed=seed)
    save_ratings(table, out / "ratings.csv")
    save_ads(ads, out / "ads.csv")
    save_features(synthetic_features(seed=seed), out / "features.csv")
    atomic_write_text(out / "scenes.csv", rows_to_csv("scene_id", synthetic_scenes(p["n_scenes"], seed)))
    return {}, _doc("synth", {"seed": seed, "n_ads": p["n_ads"]})


COMMANDS: dict[str, tuple[Callable, str]] = {
    "agree": (cmd_agree, "inter-rater agreement (Krippendorff alpha, Cohen kappa)"),
    "corr": (cmd_corr, "Pearson correlations between dimensions with BH-FDR"),
    "spectrogram": (cmd_spectrogram, "STFT magnitudes per 10 s segment, one CSV each"),
    "hanjalic": (cmd_hanjalic, "per-second arousal and valence curves for one ad"),
    "lexicon-score": (cmd_lexicon_score, "lexicon valence/arousal scores for captions"),
    "cv": (cmd_cv, "repeated cross-validation of a single-task classifier"),
    "fuse": (cmd_fuse, "audio/video decision fusion"),
    "mtl": (cmd_mtl, "multi-task model over per-task feature files"),
    "schedule": (cmd_schedule, "choose ad insertion points for a program"),
    "report": (cmd_report, "figures (PNG) and tables (CSV)"),
    "synth": (cmd_synth, "write a synthetic demo corpus"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adaffect", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML file; flags override it")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--jobs", type=int, default=None, help="worker processes")
    common.add_argument("--out", help="output file (JSON) or directory")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    ps = {name: sub.add_parser(name, parents=[common], help=help_, description=help_)
          for name, (_, help_) in COMMANDS.items()}

    a = ps["agree"]
    a.add_argument("--ratings")
    a.add_argument("--ads", help="ad records CSV with expert labels (enables kappa)")
    a.add_argument("--dim", action="append", help="dimension to analyse (repeatable)")
    a.add_argument("--metric", choices=("nominal", "ordinal", "interval"))

    c = ps["corr"]
    c.add_argument("--ratings")
    c.add_argument("--q", type=float, help="FDR level")

    s = ps["spectrogram"]
    s.add_argument("--wav")
    s.add_argument("--segment-s", dest="segment_s", type=float)

    h = ps["hanjalic"]
    h.add_argument("--wav")
    h.add_argument("--frames", help="directory of <seconds>.ppm keyframes")
    h.add_argument("--ad-id", dest="ad_id")
    h.add_argument("--smooth-length", dest="smooth_length", type=int)
    h.add_argument("--kaiser-beta", dest="kaiser_beta", type=float)
    h.add_argument("--shot-k", dest="shot_k", type=float)
    h.add_argument("--arousal-weights", dest="arousal_weights",
                   help="e.g. motion=0.4,shot_rate=0.3,energy=0.3")
    h.add_argument("--valence-weights", dest="valence_weights", help="e.g. pitch=0.5,color=0.5")

    lx = ps["lexicon-score"]
    lx.add_argument("--lexicon")
    lx.add_argument("--captions")
    lx.add_argument("--stopwords", help="whitespace-separated word list")
    lx.add_argument("--stem", action="store_true", default=None)

    cv = ps["cv"]
    cv.add_argument("--features")
    cv.add_argument("--clf", choices=("lda", "lsvm", "rsvm"))
    cv.add_argument("--window", choices=("all", "l3", "l"))
    cv.add_argument("--repeats", type=int)
    cv.add_argument("--folds", type=int)
    cv.add_argument("--inner-folds", dest="inner_folds", type=int)
    cv.add_argument("--shrinkage", type=float)
    cv.add_argument("--C", dest="C", type=float)
    cv.add_argument("--gamma", type=float)
    cv.add_argument("--no-tune", dest="tune", action="store_false", default=None)

    f = ps["fuse"]
    f.add_argument("--audio", help="CSV ad_id,posterior,label")
    f.add_argument("--video", help="CSV ad_id,posterior,label")
    f.add_argument("--f-audio", dest="f_audio", type=float)
    f.add_argument("--f-video", dest="f_video", type=float)
    f.add_argument("--grid-step", dest="grid_step", type=float)
    f.add_argument("--validation-fusion", dest="validation_fusion", action="store_true",
                   default=None, help="tune weights on the other folds of each fold")
    f.add_argument("--folds", type=int)

    m = ps["mtl"]
    m.add_argument("--tasks", help="directory with one feature CSV per task (sorted by name)")
    m.add_argument("--alpha", type=float)
    m.add_argument("--beta", type=float)
    m.add_argument("--gamma", type=float)
    m.add_argument("--max-iter", dest="max_iter", type=int)
    m.add_argument("--tol", type=float)
    m.add_argument("--edges", help="task graph as i-j pairs, e.g. 0-1,1-2")

    sc = ps["schedule"]
    sc.add_argument("--scenes")
    sc.add_argument("--ads", help="CSV ad_id,arousal,valence,length_s")
    sc.add_argument("--ad-curves", dest="ad_curves", nargs="+",
                    help="hanjalic JSON files to score ads from instead of --ads")
    sc.add_argument("--k", type=int)
    sc.add_argument("--method", choices=("auto", "exact", "greedy"))
    sc.add_argument("--spacing", type=float, help="minimum program seconds between insertions")
    sc.add_argument("--w-valence", dest="w_valence", type=float)
    sc.add_argument("--contrast", action="store_true", default=None)
    sc.add_argument("--window", choices=("all", "l3", "l"))

    r = ps["report"]
    r.add_argument("--ratings")
    r.add_argument("--ads")
    r.add_argument("--wav")
    r.add_argument("--frames")
    r.add_argument("--schedule", help="JSON written by the schedule subcommand")

    sy = ps["synth"]
    sy.add_argument("--n-ads", dest="n_ads", type=int)
    sy.add_argument("--n-scenes", dest="n_scenes", type=int)
    sy.add_argument("--duration", type=float)
    return parser


_DIR_OUTPUT = {"spectrogram", "report", "synth"}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else PipelineConfig()
        seed = args.seed if args.seed is not None else cfg.seed
        jobs = args.jobs if args.jobs is not None else cfg.jobs
        if args.out is None:
            args.out = str(Path(cfg.out) / (args.command if args.command in _DIR_OUTPUT
                                            else f"{args.command}.json"))
        params = _resolve(args, cfg)
        func = COMMANDS[args.command][0]
        if args.command == "cv":
            inputs, doc = func(args, cfg, params, seed, jobs)
        elif args.command in ("fuse", "synth"):
            inputs, doc = func(args, cfg, params, seed)
        else:
            inputs, doc = func(args, cfg, params)
        out = Path(args.out)
        if args.command in _DIR_OUTPUT:
            out_dir = out
            target = out / f"{args.command}.json"
        else:
            out_dir = out.parent
            target = out
        out_dir.mkdir(parents=True, exist_ok=True)
        atomic_write_json(target, doc)
        uses_seed = args.command in ("cv", "fuse", "synth")
        _write_manifest(out_dir, args.command, params, inputs, [target],
                        seed if uses_seed else None)
    except (CliError, ConfigError) as exc:
        print(f"adaffect {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"adaffect {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
