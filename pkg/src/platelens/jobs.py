"""Background job registry for the HTTP facade.

Jobs run on worker threads; state flips to done only after the runner has
returned, so artifacts are fully persisted first (write-then-commit).
Exclusive kinds never overlap per project.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field

from .errors import ConflictError, NotFoundError

KINDS = ("ingest", "detect", "extract", "report", "export")
EXCLUSIVE_KINDS = ("detect", "extract", "report")
TERMINAL_STATES = ("done", "failed")


@dataclass
class Job:
    job_id: str
    project_id: str
    kind: str
    state: str = "queued"  # queued -> running -> done | failed
    progress: float = 0.0
    error: str | None = None
    result: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "job_id": self.job_id,
            "project_id": self.project_id,
            "kind": self.kind,
            "state": self.state,
            "progress": self.progress,
            "error": self.error,
            "result": self.result,
        }


class JobRegistry:
    def __init__(self):
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()
        self._threads: dict[str, threading.Thread] = {}

    def get(self, job_id: str) -> Job:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise NotFoundError(f"job {job_id!r} not found")
            return job

    def list(self) -> list[Job]:
        with self._lock:
            return list(self._jobs.values())

    def _has_active_exclusive(self, project_id: str) -> bool:
        return any(
            j.project_id == project_id
            and j.kind in EXCLUSIVE_KINDS
            and j.state not in TERMINAL_STATES
            for j in self._jobs.values()
        )

    def submit(self, project_id: str, kind: str, runner) -> Job:
        """Start ``runner(set_progress)`` on a worker thread.

        The runner's return value (a dict) lands in ``job.result``.
        """
        if kind not in KINDS:
            raise NotFoundError(f"unknown job kind {kind!r}")
        with self._lock:
            if kind in EXCLUSIVE_KINDS and self._has_active_exclusive(project_id):
                raise ConflictError(
                    f"project {project_id!r} already runs an exclusive job"
                )
            job = Job(job_id=uuid.uuid4().hex[:12], project_id=project_id, kind=kind)
            self._jobs[job.job_id] = job

        def set_progress(value: float):
            with self._lock:
                # monotone, clamped; terminal states are immutable
                if job.state == "running":
                    job.progress = min(1.0, max(job.progress, float(value)))

        def work():
            with self._lock:
                job.state = "running"
            try:
                result = runner(set_progress) or {}
                with self._lock:
                    job.progress = 1.0
                    job.result = result
                    job.state = "done"
            except Exception as exc:  # report, never crash the server
                with self._lock:
                    job.error = f"{type(exc).__name__}: {exc}"
                    job.state = "failed"

        thread = threading.Thread(target=work, daemon=True)
        self._threads[job.job_id] = thread
        thread.start()
        return job

    def wait(self, job_id: str, timeout: float = 60.0) -> Job:
        thread = self._threads.get(job_id)
        if thread is not None:
            thread.join(timeout)
        return self.get(job_id)
