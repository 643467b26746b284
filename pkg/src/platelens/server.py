"""JSON-over-HTTP facade over the project lifecycle and review workflow.

Every state change routes through the same functions the CLI uses, so the
API leaves the workspace byte-identical to the equivalent CLI invocation.
Page edits use optimistic concurrency: each page's detection set carries a
version token and stale writers get 409 plus the current token.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Any

from fastapi import Body, FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from . import cards as cards_mod
from . import detect as detect_mod
from .errors import ConflictError, NotFoundError, PlateLensError, SchemaError
from .ingest import Project, ingest_images, ingest_pdf, load_project, validate_project
from .jobs import JobRegistry
from .packing import PageSpec
from .report import report_project
from .storage import ProjectStore
from .yolo_export import export_yolo


def _error(status: int, code: str, message: str, **details):
    body = {"code": code, "message": message}
    if details:
        body["details"] = details
    return JSONResponse(status_code=status, content=body)


def create_app(root: str | Path, frontend_dir: str | Path | None = None) -> FastAPI:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    app = FastAPI(title="platelens", docs_url=None, redoc_url=None)
    jobs = JobRegistry()
    write_lock = threading.Lock()
    app.state.root = root
    app.state.jobs = jobs

    def project_or_none(project_id: str) -> Project | None:
        try:
            return load_project(root, project_id)
        except NotFoundError:
            return None

    @app.exception_handler(PlateLensError)
    async def engine_error(request: Request, exc: PlateLensError):
        if isinstance(exc, NotFoundError):
            return _error(404, "not_found", str(exc))
        if isinstance(exc, ConflictError):
            return _error(409, "conflict", str(exc))
        if isinstance(exc, SchemaError):
            return _error(422, "schema_error", str(exc), pointer=exc.pointer)
        return _error(422, "invalid_input", str(exc))

    @app.get("/api/projects")
    def list_projects():
        out = []
        for project_id in ProjectStore.list_projects(root):
            project = load_project(root, project_id)
            out.append(
                {
                    "id": project.id,
                    "pages": len(project.pages),
                    "dpi": project.dpi,
                    "source_kind": project.source_kind,
                    "created_at": project.created_at,
                }
            )
        return out

    @app.get("/api/projects/{project_id}")
    def project_detail(project_id: str):
        project = project_or_none(project_id)
        if project is None:
            return _error(404, "project_not_found", f"no project {project_id!r}")
        issues = validate_project(root, project_id)
        return {
            "id": project.id,
            "dpi": project.dpi,
            "created_at": project.created_at,
            "pages": [p.to_json() for p in project.pages],
            "issues": issues,
        }

    # -- jobs ---------------------------------------------------------------

    def job_runner(project_id: str, kind: str, params: dict):
        def run(set_progress):
            if kind == "ingest":
                source = params["source"]
                dpi = float(params.get("dpi", 300))
                if params.get("source_kind") == "image-dir" or Path(source).is_dir():
                    project, warnings = ingest_images(source, root, project_id, dpi)
                    return {"pages": len(project.pages), "warnings": warnings}
                project = ingest_pdf(source, root, project_id, dpi)
                return {"pages": len(project.pages)}

            project = load_project(root, project_id)
            if kind == "detect":
                backend_spec = params.get("backend", "")
                if not backend_spec.startswith("oracle:"):
                    raise SchemaError(
                        "only oracle:<file> backends can be launched over the API",
                        "/params/backend",
                    )
                backend = detect_mod.load_oracle_predictions(backend_spec[7:])
                inference = detect_mod.InferenceParams.from_json(params)
                sets = detect_mod.detect_project(
                    root, project, backend, inference, progress=set_progress
                )
                return {"detections": sum(len(s.detections) for s in sets.values())}
            if kind == "extract":
                extracted = cards_mod.extract_cards(
                    root, project, padding=int(params.get("padding", 8))
                )
                return {"cards": len(extracted)}
            if kind == "report":
                spec_params = params.get("page", {})
                spec = PageSpec(**spec_params) if spec_params else PageSpec()
                pdf_path, layout = report_project(
                    root, project, spec, scale=float(params.get("scale", 1.0))
                )
                return {"pdf": str(pdf_path), "pages": layout.page_count}
            if kind == "export":
                dataset = export_yolo(
                    root,
                    project,
                    split_ratio=float(params.get("ratio", 0.8)),
                    seed=int(params.get("seed", 42)),
                )
                return {"dataset": str(dataset)}
            raise NotFoundError(f"unknown job kind {kind!r}")

        return run

    @app.post("/api/projects/{project_id}/jobs", status_code=202)
    def submit_job(project_id: str, body: dict):
        kind = body.get("kind")
        params = body.get("params", {})
        if kind != "ingest" and project_or_none(project_id) is None:
            return _error(404, "project_not_found", f"no project {project_id!r}")
        try:
            job = jobs.submit(project_id, kind, job_runner(project_id, kind, params))
        except ConflictError as exc:
            return _error(409, "job_overlap", str(exc))
        except NotFoundError as exc:
            return _error(422, "invalid_job", str(exc))
        return job.to_json()

    @app.get("/api/jobs/{job_id}")
    def job_state(job_id: str):
        try:
            return jobs.get(job_id).to_json()
        except NotFoundError:
            return _error(404, "job_not_found", f"no job {job_id!r}")

    # -- pages & detections ---------------------------------------------------

    @app.get("/api/projects/{project_id}/pages/{page_no}")
    def page_detail(project_id: str, page_no: int):
        project = project_or_none(project_id)
        if project is None:
            return _error(404, "project_not_found", f"no project {project_id!r}")
        pages = {p.page_no: p for p in project.pages}
        if page_no not in pages:
            return _error(404, "page_not_found", f"no page {page_no}")
        store = ProjectStore.open(root, project_id)
        detset = detect_mod.load_detection_sets(store).get(
            page_no, detect_mod.DetectionSet(page_no)
        )
        return {
            "page": pages[page_no].to_json(),
            "image_url": f"/api/projects/{project_id}/pages/{page_no}/image",
            "version": detset.version,
            "backend_id": detset.backend_id,
            "params": detset.params.to_json() if detset.params else None,
            "detections": [d.to_json() for d in detset.detections],
        }

    @app.get("/api/projects/{project_id}/pages/{page_no}/image")
    def page_image(project_id: str, page_no: int):
        project = project_or_none(project_id)
        if project is None:
            return _error(404, "project_not_found", f"no project {project_id!r}")
        pages = {p.page_no: p for p in project.pages}
        if page_no not in pages:
            return _error(404, "page_not_found", f"no page {page_no}")
        store = ProjectStore.open(root, project_id)
        return FileResponse(store.dir / pages[page_no].file, media_type="image/png")

    def _validate_patch(index: int, patch) -> list[dict]:
        problems = []
        if not isinstance(patch, dict):
            return [{"index": index, "problem": "patch must be an object"}]
        op = patch.get("op")
        if op not in ("accept", "reject", "replace_polygon", "set_heads"):
            problems.append({"index": index, "problem": f"unknown op {op!r}"})
            return problems
        if not isinstance(patch.get("detection_id"), str):
            problems.append({"index": index, "problem": "detection_id must be a string"})
        if op == "replace_polygon":
            payload = patch.get("payload")
            if not isinstance(payload, list) or len(payload) < 3:
                problems.append(
                    {"index": index, "problem": "replace_polygon needs >= 3 vertices"}
                )
        if op == "set_heads":
            payload = patch.get("payload")
            if not isinstance(payload, dict) or not all(
                isinstance(payload.get(k), (int, float))
                for k in ("type_p", "position_p", "rotation_p")
            ):
                problems.append(
                    {"index": index, "problem": "set_heads needs type_p/position_p/rotation_p"}
                )
        return problems

    @app.patch("/api/projects/{project_id}/detections")
    def patch_detections(project_id: str, body: list[Any] = Body(...)):
        project = project_or_none(project_id)
        if project is None:
            return _error(404, "project_not_found", f"no project {project_id!r}")
        if not isinstance(body, list):
            return _error(422, "invalid_patch", "body must be a list of patches")
        problems = []
        for i, patch in enumerate(body):
            problems.extend(_validate_patch(i, patch))
        if problems:
            return _error(422, "invalid_patch", "patch validation failed", items=problems)

        with write_lock:
            store = ProjectStore.open(root, project_id)
            sets = detect_mod.load_detection_sets(store)
            by_detection = {
                d.id: (page_no, d)
                for page_no, detset in sets.items()
                for d in detset.detections
            }
            # group patches per page, resolve ids
            per_page: dict[int, list] = {}
            for i, patch in enumerate(body):
                found = by_detection.get(patch["detection_id"])
                if found is None:
                    return _error(
                        404,
                        "detection_not_found",
                        f"no detection {patch['detection_id']!r}",
                    )
                per_page.setdefault(found[0], []).append(patch)
            # stale version tokens reject the whole batch (all-or-nothing)
            for page_no, patches in per_page.items():
                current = sets[page_no].version
                for patch in patches:
                    if "version" in patch and patch["version"] != current:
                        return _error(
                            409,
                            "version_conflict",
                            f"page {page_no} is at version {current}",
                            page_no=page_no,
                            current_version=current,
                        )
            applied = 0
            for page_no, patches in per_page.items():
                detset = sets[page_no]
                for patch in patches:
                    detection = by_detection[patch["detection_id"]][1]
                    op = patch["op"]
                    if op == "accept":
                        detection.review = "accepted"
                    elif op == "reject":
                        detection.review = "rejected"
                    elif op == "replace_polygon":
                        detection.polygon = detect_mod.as_polygon(patch["payload"])
                        detection.review = "edited"
                    elif op == "set_heads":
                        payload = patch["payload"]
                        card = _card_for_detection(store, detection.id)
                        if card is None:
                            return _error(
                                404,
                                "card_not_found",
                                f"detection {detection.id!r} has no extracted card",
                            )
                        card.heads = cards_mod.HeadPrediction(
                            type_p=float(payload["type_p"]),
                            position_p=float(payload["position_p"]),
                            rotation_p=float(payload["rotation_p"]),
                            source=payload.get("source", "human"),
                        )
                        index = cards_mod.load_cards(store)
                        index[card.card_id] = card
                        cards_mod.save_cards(store, index)
                    applied += 1
                detset.version += 1
            detect_mod.save_detection_sets(store, sets)
            return {
                "applied": applied,
                "versions": {str(p): sets[p].version for p in per_page},
            }

    def _card_for_detection(store: ProjectStore, detection_id: str):
        for card in cards_mod.load_cards(store).values():
            if card.detection_id == detection_id:
                return card
        return None

    # -- catalog & cards ------------------------------------------------------

    @app.get("/api/projects/{project_id}/catalog")
    def get_catalog(project_id: str):
        project = project_or_none(project_id)
        if project is None:
            return _error(404, "project_not_found", f"no project {project_id!r}")
        return cards_mod.read_catalog_rows(root, project)

    @app.put("/api/projects/{project_id}/catalog")
    def put_catalog(project_id: str, body: list[Any] = Body(...)):
        project = project_or_none(project_id)
        if project is None:
            return _error(404, "project_not_found", f"no project {project_id!r}")
        if not isinstance(body, list):
            return _error(422, "invalid_input", "body must be a list of rows")
        with write_lock:
            count = 0
            for row in body:
                card_id = row.get("card_id")
                fields = {
                    k: v for k, v in row.items() if k not in ("card_id", "catalog_id")
                }
                cards_mod.upsert_record(root, project, card_id, fields)
                count += 1
        return {"applied": count}

    @app.get("/api/projects/{project_id}/cards")
    def list_cards(project_id: str, canonical: bool | None = None):
        project = project_or_none(project_id)
        if project is None:
            return _error(404, "project_not_found", f"no project {project_id!r}")
        store = ProjectStore.open(root, project_id)
        out = []
        for card in cards_mod.load_cards(store).values():
            if canonical is not None and card.canonical != canonical:
                continue
            data = card.to_json()
            data["image_url"] = f"/api/projects/{project_id}/cards/{card.card_id}/image"
            out.append(data)
        return sorted(out, key=lambda c: c["card_id"])

    @app.get("/api/projects/{project_id}/cards/{card_id}/image")
    def card_image(project_id: str, card_id: str):
        project = project_or_none(project_id)
        if project is None:
            return _error(404, "project_not_found", f"no project {project_id!r}")
        store = ProjectStore.open(root, project_id)
        index = cards_mod.load_cards(store)
        if card_id not in index:
            return _error(404, "card_not_found", f"no card {card_id!r}")
        return FileResponse(store.dir / index[card_id].file, media_type="image/png")

    @app.get("/api/projects/{project_id}/layout")
    def layout_sidecar(project_id: str):
        project = project_or_none(project_id)
        if project is None:
            return _error(404, "project_not_found", f"no project {project_id!r}")
        store = ProjectStore.open(root, project_id)
        sidecar = store.exports_dir / "layout.json"
        if not sidecar.is_file():
            return _error(404, "layout_not_found", "run the report job first")
        return FileResponse(sidecar, media_type="application/json")

    # shared flip rule so clients can mirror canonicalization exactly
    @app.get("/api/constants")
    def constants():
        return {
            "head_threshold": cards_mod.HEAD_THRESHOLD,
            "positive_labels": {"type": "FRAG", "position": "BOTTOM", "rotation": "RIGHT"},
            "canonical": {"position": "TOP", "rotation": "LEFT"},
            "flip_rule": {
                "vertical_when_position": "BOTTOM",
                "horizontal_when_rotation": "RIGHT",
            },
        }

    if frontend_dir and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True), name="ui")

    return app
