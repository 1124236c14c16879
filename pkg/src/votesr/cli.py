"""Batch entry points: degradation, metric reports, offline ensembling,
perception-distortion plane export, plus store/server operations.

Every batch command is deterministic given its inputs and exits 0 iff no
per-item failure occurred. `--json` switches the summary to a single
machine-readable object on stdout for CI.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .ensemble import SampleSet, ensemble_pipeline, read_ballot_log, tally
from .errors import VotesrError
from .image import ScaleFactor, degrade
from .io import load_png, save_png
from .metrics import (
    MEAN_ROW_ID,
    build_report,
    load_external_scores,
    write_report_csv,
)
from .store import Store, _check_set_dir, ingest_samples
from .study import make_task1_config, make_task2_config


def _emit(payload: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(payload, indent=2, sort_keys=True))
        return
    for line in payload.get("lines", []):
        print(line)
    for failure in payload.get("failures", []):
        print(f"FAIL {failure}", file=sys.stderr)
    if "summary" in payload:
        print(payload["summary"])


def cmd_degrade(args) -> int:
    factor = ScaleFactor(args.factor)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines, failures = [], []
    for input_path in sorted(Path(p) for p in args.inputs):
        try:
            img = load_png(input_path)
            lr = degrade(img, factor)
            out_path = out_dir / f"{input_path.stem}_x{factor.value}_lr.png"
            save_png(lr, out_path)
            lines.append(f"{input_path} -> {out_path} ({lr.width}x{lr.height})")
        except VotesrError as e:
            failures.append(f"{input_path}: {e}")
    _emit(
        {
            "lines": lines,
            "failures": failures,
            "summary": f"{len(lines)} degraded, {len(failures)} failed",
            "written": len(lines),
        },
        args.json,
    )
    return 1 if failures else 0


def _stems(directory: Path) -> dict[str, Path]:
    return {p.stem: p for p in sorted(directory.glob("*.png"))}


def cmd_metrics(args) -> int:
    sr_dir, hr_dir, lr_dir = Path(args.sr), Path(args.hr), Path(args.lr)
    factor = ScaleFactor(args.factor)
    external = load_external_scores(args.external_scores) if args.external_scores else None

    sr_stems, hr_stems, lr_stems = _stems(sr_dir), _stems(hr_dir), _stems(lr_dir)
    matched = sorted(set(sr_stems) & set(hr_stems) & set(lr_stems))
    unmatched = sorted(
        (set(sr_stems) | set(hr_stems) | set(lr_stems)) - set(matched)
    )

    reports, failures = [], [f"unmatched stem: {s}" for s in unmatched]
    for stem in matched:
        try:
            report = build_report(
                stem,
                load_png(sr_stems[stem]),
                load_png(hr_stems[stem]),
                load_png(lr_stems[stem]),
                factor,
                external=external,
                psnr_on_luma=args.luma,
            )
            reports.append(report)
        except VotesrError as e:
            failures.append(f"{stem}: {e}")

    write_report_csv(reports, args.out, include_mean=True)
    _emit(
        {
            "lines": [f"{r.image_id}: psnr={r.psnr_db:.4f} ssim={r.ssim:.6f}" for r in reports],
            "failures": failures,
            "summary": f"{len(reports)} rows -> {args.out}, {len(failures)} failed",
            "rows": len(reports),
            "out": str(args.out),
        },
        args.json,
    )
    return 1 if failures else 0


def cmd_ensemble(args) -> int:
    set_dir = Path(args.set)
    failures = []
    try:
        _check_set_dir(set_dir)
        manifest = json.loads((set_dir / "manifest.json").read_text(encoding="utf-8"))
        sset = SampleSet(
            set_id=manifest["set_id"],
            lr=load_png(set_dir / "lr.png"),
            candidates=tuple(load_png(set_dir / n) for n in manifest["candidates"]),
            factor=ScaleFactor(manifest["factor"]),
            label_question=manifest.get("label_question"),
        )
        ballots = [b for b, _ts in read_ballot_log(args.ballots)]
        result_tally = tally(ballots, sset, args.max_select, label_filter=args.label)
        result = ensemble_pipeline(
            sset, ballots, k=args.k, max_select=args.max_select, label_filter=args.label
        )
        out_path = Path(args.out)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        save_png(result.image, out_path)
        tally_path = out_path.with_suffix(".tally.json")
        tally_path.write_text(
            json.dumps(result_tally.to_json_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    except VotesrError as e:
        failures.append(str(e))
        _emit({"lines": [], "failures": failures, "summary": "ensemble failed"}, args.json)
        return 1
    _emit(
        {
            "lines": [
                f"selected {list(result.selected_indices)} -> {out_path}",
                f"tally -> {tally_path}",
            ],
            "failures": [],
            "summary": f"k={args.k} ensemble of {result_tally.total_ballots} ballots",
            "selected_indices": list(result.selected_indices),
            "out": str(out_path),
            "tally": str(tally_path),
        },
        args.json,
    )
    return 0


def _read_report_rows(path: Path, columns: list[str]) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in columns:
            if col not in header:
                raise VotesrError(f"{path}: missing column {col!r}")
        rows = []
        for row in reader:
            if row["image_id"] == MEAN_ROW_ID:
                continue  # summary row, not a sample
            rows.append(row)
        return rows


def cmd_pd_plane(args) -> int:
    failures = []
    out_rows = []
    for report_path in sorted(Path(p) for p in args.reports):
        method = report_path.stem
        try:
            rows = _read_report_rows(report_path, [args.fidelity, args.perception])
        except VotesrError as e:
            failures.append(str(e))
            continue
        fsum = psum = 0.0
        count = 0
        for row in rows:
            fval = row[args.fidelity]
            pval = row[args.perception]
            if fval == "" or pval == "":
                failures.append(f"{report_path}: {row['image_id']}: empty metric cell")
                continue
            out_rows.append((method, row["image_id"], fval, pval))
            fsum += float(fval)
            psum += float(pval)
            count += 1
        if count:
            out_rows.append(
                (method, "__centroid__", repr(fsum / count), repr(psum / count))
            )

    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "image_id", "fidelity", "perception"])
        writer.writerows(out_rows)

    _emit(
        {
            "lines": [f"{len(out_rows)} rows -> {args.out}"],
            "failures": failures,
            "summary": f"fidelity={args.fidelity} perception={args.perception}",
            "rows": len(out_rows),
            "out": str(args.out),
        },
        args.json,
    )
    return 1 if failures else 0


def cmd_ingest(args) -> int:
    store = Store(args.store, create=True)
    try:
        delta = ingest_samples(store, args.directory)
    except VotesrError as e:
        _emit({"lines": [], "failures": [str(e)], "summary": "ingest failed"}, args.json)
        return 1
    _emit(
        {
            "lines": [f"added {s}" for s in delta],
            "failures": [],
            "summary": f"{len(delta)} new sets",
            "added": delta,
        },
        args.json,
    )
    return 0


def cmd_study(args) -> int:
    store = Store(args.store, create=True)
    try:
        if args.task == "task1":
            if len(args.sets) != 1:
                raise VotesrError("task1 takes exactly one set id")
            sset = store.get_set(args.sets[0])
            config = make_task1_config(
                sset.set_id,
                sset.n_candidates,
                allowed_labels=args.labels.split(",") if args.labels else None,
                shuffle_seed=args.seed,
            )
        else:
            config = make_task2_config(
                [store.get_set(s) for s in args.sets], shuffle_seed=args.seed
            )
        store.save_study(config)
    except VotesrError as e:
        _emit({"lines": [], "failures": [str(e)], "summary": "study setup failed"}, args.json)
        return 1
    _emit(
        {
            "lines": [f"study {config.study_id} -> {store.study_path}"],
            "failures": [],
            "summary": f"{config.task_kind}, rounds={config.rounds}",
            "study": config.to_json_dict(),
        },
        args.json,
    )
    return 0


def cmd_serve(args) -> int:
    from .server import serve

    store = Store(args.store)
    config = store.load_study()
    serve(config, store, bind=args.bind, ui_dir=args.ui)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="votesr",
        description="Human-feedback sample selection and ensembling for stochastic SR.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("degrade", help="bicubic-downscale images by an integer factor")
    p.add_argument("inputs", nargs="+", help="input PNG files")
    p.add_argument("--factor", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("metrics", help="full-reference metric report over SR/HR/LR triples")
    p.add_argument("--sr", required=True, help="directory of SR outputs")
    p.add_argument("--hr", required=True, help="directory of HR references")
    p.add_argument("--lr", required=True, help="directory of LR inputs")
    p.add_argument("--factor", type=int, required=True)
    p.add_argument("--external-scores", help="CSV of externally computed scores")
    p.add_argument("--luma", action="store_true", help="PSNR on luma instead of joint RGB")
    p.add_argument("--out", required=True, help="report CSV path")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("ensemble", help="tally a ballot log and ensemble the top-k")
    p.add_argument("--set", required=True, help="sample-set directory")
    p.add_argument("--ballots", required=True, help="ballot log (JSONL)")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--max-select", type=int, required=True)
    p.add_argument("--label", help="count only ballots carrying this label")
    p.add_argument("--out", required=True, help="output PNG path")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("pd-plane", help="perception-distortion scatter data from reports")
    p.add_argument("reports", nargs="+", help="report CSVs, one per method")
    p.add_argument("--fidelity", default="psnr_db", help="fidelity column name")
    p.add_argument("--perception", default="DISTS", help="perception column name")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_pd_plane)

    p = sub.add_parser("ingest", help="register sample-set directories in a store")
    p.add_argument("directory", help="directory of sample-set subdirectories")
    p.add_argument("--store", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("study", help="write a study configuration into a store")
    p.add_argument("task", choices=["task1", "task2"])
    p.add_argument("sets", nargs="+", help="set ids (task1: one; task2: one per round)")
    p.add_argument("--store", required=True)
    p.add_argument("--seed", type=int, default=0, help="shuffle seed")
    p.add_argument("--labels", help="comma-separated closed label set (task1)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("serve", help="run the study HTTP service")
    p.add_argument("--store", required=True)
    p.add_argument("--bind", default="127.0.0.1:8765")
    p.add_argument("--ui", help="static UI bundle directory to serve at /")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
