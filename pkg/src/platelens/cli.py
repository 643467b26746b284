"""The ``lens`` command line: every pipeline stage as a subcommand."""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click

from . import __version__
from .cards import (
    HeadPrediction,
    augment_orientations,
    canonicalize,
    export_catalog,
    extract_cards,
    load_cards,
    read_catalog_rows,
    upsert_record,
)
from .detect import (
    InferenceParams,
    detect_project,
    load_detection_sets,
    set_review,
    upsert_manual_detection,
)
from .errors import PlateLensError
from .evaluate import evaluate_head_files, evaluate_prediction_files
from .ingest import ingest_images, ingest_pdf, load_project, validate_project
from .latent import knn as knn_search
from .latent import load_embeddings
from .packing import PageSpec
from .raster import load_image, save_png
from .report import report_project
from .storage import ProjectStore
from .yolo_export import export_yolo

PAGE_SIZES = {"a4": (210.0, 297.0), "a3": (297.0, 420.0), "letter": (215.9, 279.4)}


@click.group()
@click.version_option(__version__)
@click.option(
    "--root",
    default="./projects",
    show_default=True,
    type=click.Path(path_type=Path),
    help="Workspace directory holding all projects.",
)
@click.pass_context
def main(ctx, root):
    ctx.obj = {"root": root}


def _fail(exc: PlateLensError):
    click.echo(f"error: {exc}", err=True)
    sys.exit(1)


@main.command()
@click.argument("source", type=click.Path(exists=True, path_type=Path))
@click.option("--project", "project_id", required=True)
@click.option("--dpi", default=300.0, show_default=True)
@click.pass_obj
def ingest(obj, source, project_id, dpi):
    """Rasterize a PDF or image directory into page files."""
    try:
        if source.is_dir():
            project, warnings = ingest_images(source, obj["root"], project_id, dpi)
            for warning in warnings:
                click.echo(f"warning: {warning}", err=True)
        else:
            project = ingest_pdf(source, obj["root"], project_id, dpi)
    except PlateLensError as exc:
        _fail(exc)
    click.echo(f"ingested {len(project.pages)} pages into {project.id}")


@main.command()
@click.option("--project", "project_id", required=True)
@click.pass_obj
def validate(obj, project_id):
    """Check a project workspace against its manifest."""
    try:
        report = validate_project(obj["root"], project_id)
    except PlateLensError as exc:
        _fail(exc)
    if not report:
        click.echo("ok")
        return
    for issue in report:
        click.echo(json.dumps(issue))
    sys.exit(2)


@main.command()
@click.option("--project", "project_id", required=True)
@click.option("--backend", "backend_spec", required=True, help="oracle:<file> or model:<file>")
@click.option("--conf", default=0.25, show_default=True)
@click.option("--dilate", default=0, show_default=True)
@click.option("--fill-holes", is_flag=True, default=False)
@click.option(
    "--min-area",
    default=None,
    type=int,
    help="Smallest kept component in px [default: 64 scaled by (dpi/300)^2].",
)
@click.pass_obj
def detect(obj, project_id, backend_spec, conf, dilate, fill_holes, min_area):
    """Run a detection backend over every page."""
    from .detect import default_min_area, load_oracle_predictions

    try:
        project = load_project(obj["root"], project_id)
        if min_area is None:
            min_area = default_min_area(project.dpi)
        if backend_spec.startswith("oracle:"):
            backend = load_oracle_predictions(backend_spec[len("oracle:") :])
        elif backend_spec.startswith("model:"):
            from .onnx_backend import load_model_backend

            backend = load_model_backend(backend_spec[len("model:") :])
        else:
            raise click.UsageError("backend must be oracle:<file> or model:<file>")
        params = InferenceParams(
            conf_threshold=conf,
            dilation_radius=dilate,
            fill_holes=fill_holes,
            min_area_px=min_area,
        )
        sets = detect_project(obj["root"], project, backend, params)
    except PlateLensError as exc:
        _fail(exc)
    total = sum(len(s.detections) for s in sets.values())
    click.echo(f"detected {total} instances across {len(sets)} pages")


@main.command()
@click.option("--project", "project_id", required=True)
@click.option("--ids", default="", help="Comma-separated detection ids; empty means all.")
@click.option(
    "--state",
    type=click.Choice(["accepted", "rejected", "unreviewed"]),
    required=True,
)
@click.pass_obj
def review(obj, project_id, ids, state):
    """Set the review state of detections."""
    try:
        project = load_project(obj["root"], project_id)
        store = ProjectStore.open(obj["root"], project_id)
        targets = [i for i in ids.split(",") if i]
        if not targets:
            sets = load_detection_sets(store)
            targets = [d.id for s in sets.values() for d in s.detections]
        changed = set_review(obj["root"], project, targets, state)
    except PlateLensError as exc:
        _fail(exc)
    click.echo(f"{changed} detections -> {state}")


@main.command("add-mask")
@click.option("--project", "project_id", required=True)
@click.option("--page", "page_no", type=int, required=True)
@click.option("--polygon", required=True, help='JSON vertices, e.g. "[[0,0],[9,0],[5,8]]"')
@click.pass_obj
def add_mask(obj, project_id, page_no, polygon):
    """Add a manually drawn detection polygon."""
    try:
        project = load_project(obj["root"], project_id)
        detection = upsert_manual_detection(
            obj["root"], project, page_no, json.loads(polygon)
        )
    except PlateLensError as exc:
        _fail(exc)
    click.echo(detection.id)


@main.command()
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--gt", "gt_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--mode", type=click.Choice(["mask", "box"]), default="mask", show_default=True)
@click.pass_obj
def eval(obj, pred_path, gt_path, mode):
    """Detection metrics between two prediction files."""
    try:
        metrics = evaluate_prediction_files(pred_path, gt_path, mode)
    except PlateLensError as exc:
        _fail(exc)
    click.echo(json.dumps(metrics, indent=2, sort_keys=True))


@main.command("eval-heads")
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--gt", "gt_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.pass_obj
def eval_heads(obj, pred_path, gt_path):
    """Classifier-head confusion matrices between two label CSVs."""
    try:
        result = evaluate_head_files(pred_path, gt_path)
    except PlateLensError as exc:
        _fail(exc)
    click.echo(json.dumps(result, indent=2, sort_keys=True))


@main.group()
def cards():
    """Card extraction, canonicalization, augmentation, catalog."""


@cards.command("extract")
@click.option("--project", "project_id", required=True)
@click.option("--padding", default=8, show_default=True)
@click.pass_obj
def cards_extract(obj, project_id, padding):
    try:
        project = load_project(obj["root"], project_id)
        extracted = extract_cards(obj["root"], project, padding)
    except PlateLensError as exc:
        _fail(exc)
    click.echo(f"extracted {len(extracted)} cards")


@cards.command("canonicalize")
@click.option("--project", "project_id", required=True)
@click.option(
    "--heads",
    "heads_csv",
    type=click.Path(exists=True, path_type=Path),
    help="CSV card_id,type_p,position_p,rotation_p[,source]; stored heads otherwise.",
)
@click.pass_obj
def cards_canonicalize(obj, project_id, heads_csv):
    try:
        project = load_project(obj["root"], project_id)
        store = ProjectStore.open(obj["root"], project_id)
        index = load_cards(store)
        heads: dict[str, HeadPrediction] = {}
        if heads_csv:
            with open(heads_csv, newline="", encoding="utf-8") as handle:
                for row in csv.DictReader(handle):
                    heads[row["card_id"]] = HeadPrediction(
                        type_p=float(row["type_p"]),
                        position_p=float(row["position_p"]),
                        rotation_p=float(row["rotation_p"]),
                        source=row.get("source", "model"),
                    )
        count = 0
        for card_id, card in sorted(index.items()):
            pred = heads.get(card_id) or card.heads or HeadPrediction()
            canonicalize(obj["root"], project, card_id, pred)
            count += 1
    except PlateLensError as exc:
        _fail(exc)
    click.echo(f"canonicalized {count} cards")


@cards.command("augment")
@click.option("--project", "project_id", required=True)
@click.option("--card", "card_id", required=True)
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--flips-only", is_flag=True, default=False)
@click.pass_obj
def cards_augment(obj, project_id, card_id, out_dir, flips_only):
    try:
        project = load_project(obj["root"], project_id)
        store = ProjectStore.open(obj["root"], project_id)
        index = load_cards(store)
        if card_id not in index:
            raise click.UsageError(f"unknown card {card_id!r}")
        image = load_image(store.dir / index[card_id].file)
        variants = augment_orientations(
            image, index[card_id].labels.type, flips_only=flips_only
        )
        out_dir.mkdir(parents=True, exist_ok=True)
        for variant in variants:
            labels = variant["labels"]
            name = (
                f"{card_id}_{variant['name']}_{labels.type}-"
                f"{labels.position}-{labels.rotation}.png"
            )
            save_png(variant["image"], out_dir / name)
    except PlateLensError as exc:
        _fail(exc)
    click.echo(f"wrote {len(variants)} variants to {out_dir}")


@cards.command("catalog")
@click.option("--project", "project_id", required=True)
@click.option("--card", "card_id", default="")
@click.option("--set", "pairs", multiple=True, help="column=value, repeatable.")
@click.option("--export", "do_export", is_flag=True, default=False)
@click.pass_obj
def cards_catalog(obj, project_id, card_id, pairs, do_export):
    try:
        project = load_project(obj["root"], project_id)
        if pairs:
            if not card_id:
                raise click.UsageError("--card is required with --set")
            fields = {}
            for pair in pairs:
                key, _, value = pair.partition("=")
                fields[key] = value
            record = upsert_record(obj["root"], project, card_id, fields)
            click.echo(f"{record.catalog_id} updated")
        if do_export or not pairs:
            path = export_catalog(obj["root"], project)
            rows = read_catalog_rows(obj["root"], project)
            click.echo(f"{path} ({len(rows)} rows)")
    except PlateLensError as exc:
        _fail(exc)


@main.command()
@click.option("--project", "project_id", required=True)
@click.option("--page", "page_name", type=click.Choice(sorted(PAGE_SIZES)), default="a4")
@click.option("--scale", default=1.0, show_default=True)
@click.option("--margin", default=15.0, show_default=True)
@click.option("--gutter", default=5.0, show_default=True)
@click.pass_obj
def report(obj, project_id, page_name, scale, margin, gutter):
    """Pack cards and render the PDF report."""
    try:
        project = load_project(obj["root"], project_id)
        width, height = PAGE_SIZES[page_name]
        spec = PageSpec(page_width=width, page_height=height, margin=margin, gutter=gutter)
        pdf_path, layout = report_project(obj["root"], project, spec, scale)
    except PlateLensError as exc:
        _fail(exc)
    click.echo(f"{pdf_path} ({layout.page_count} card pages)")


@main.command("export-yolo")
@click.option("--project", "project_id", required=True)
@click.option("--ratio", default=0.8, show_default=True)
@click.option("--seed", default=42, show_default=True)
@click.pass_obj
def export_yolo_cmd(obj, project_id, ratio, seed):
    """Write reviewed detections as a YOLO segmentation dataset."""
    try:
        project = load_project(obj["root"], project_id)
        dataset = export_yolo(obj["root"], project, ratio, seed)
    except PlateLensError as exc:
        _fail(exc)
    click.echo(str(dataset))


@main.command()
@click.option("--embeddings", "emb_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--id", "query_id", required=True)
@click.option("--k", default=5, show_default=True)
@click.pass_obj
def knn(obj, emb_path, query_id, k):
    """Nearest neighbors of a card in a precomputed embedding table."""
    try:
        table = load_embeddings(emb_path)
        neighbors = knn_search(table, query_id, k)
    except PlateLensError as exc:
        _fail(exc)
    click.echo(
        json.dumps([{"id": i, "distance": round(d, 6)} for i, d in neighbors], indent=2)
    )


@main.command()
@click.option("--listen", default="127.0.0.1:8000", show_default=True)
@click.option(
    "--ui",
    "ui_dir",
    type=click.Path(path_type=Path),
    default=None,
    help="Static directory with the built review console.",
)
@click.pass_obj
def serve(obj, listen, ui_dir):
    """Run the HTTP facade (and host the review console)."""
    import uvicorn

    from .server import create_app

    host, _, port = listen.partition(":")
    app = create_app(obj["root"], frontend_dir=ui_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000), log_level="warning")


if __name__ == "__main__":
    main()
