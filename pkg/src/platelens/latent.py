"""Latent-space companion math: autoencoder objective and neighbor retrieval.

Embeddings are produced by external trainers and consumed here; this module
only verifies, evaluates, and searches.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, LabelParseError, NotFoundError

DEFAULT_BETA = 0.00025  # reference weight for the divergence term


@dataclass
class VaeBatch:
    """Inputs of one objective evaluation over a batch of N samples."""

    x: np.ndarray
    x_hat: np.ndarray
    mu: np.ndarray
    logvar: np.ndarray
    beta: float = DEFAULT_BETA

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.x_hat = np.asarray(self.x_hat, dtype=np.float64)
        self.mu = np.asarray(self.mu, dtype=np.float64)
        self.logvar = np.asarray(self.logvar, dtype=np.float64)
        if self.x.shape != self.x_hat.shape:
            raise InvalidInputError(
                f"reconstruction shape {self.x_hat.shape} != input {self.x.shape}"
            )
        if self.mu.shape != self.logvar.shape:
            raise InvalidInputError(
                f"logvar shape {self.logvar.shape} != mu {self.mu.shape}"
            )
        if self.x.ndim < 1 or self.x.shape[0] < 1:
            raise InvalidInputError("batch must hold at least one sample")
        if self.mu.shape[0] != self.x.shape[0]:
            raise InvalidInputError(
                f"latent batch {self.mu.shape[0]} != input batch {self.x.shape[0]}"
            )
        if self.beta < 0:
            raise InvalidInputError(f"beta must be >= 0, got {self.beta}")

    @property
    def n(self) -> int:
        return self.x.shape[0]


def vae_loss(batch: VaeBatch) -> dict:
    """Mean-squared reconstruction plus beta-weighted Gaussian divergence.

    The divergence against a standard normal prior is evaluated in closed
    form per sample, then averaged over the batch.
    """
    recon = float(np.mean((batch.x - batch.x_hat) ** 2))
    per_sample = -0.5 * np.sum(
        1.0 + batch.logvar - batch.mu**2 - np.exp(batch.logvar),
        axis=tuple(range(1, batch.mu.ndim)),
    )
    kl = float(np.mean(per_sample))
    return {"recon": recon, "kl": kl, "total": recon + batch.beta * kl}


@dataclass
class EmbeddingTable:
    ids: list[str]
    vectors: np.ndarray  # (N, d) float64

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2:
            raise InvalidInputError(f"vectors must be (N, d), got {self.vectors.shape}")
        if len(self.ids) != self.vectors.shape[0]:
            raise InvalidInputError(
                f"{len(self.ids)} ids vs {self.vectors.shape[0]} vectors"
            )
        if len(set(self.ids)) != len(self.ids):
            raise InvalidInputError("embedding ids must be unique")
        if not np.isfinite(self.vectors).all():
            raise InvalidInputError("embedding vectors must be finite")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def knn(table: EmbeddingTable, query_id: str, k: int = 5) -> list[tuple[str, float]]:
    """Exact k nearest Euclidean neighbors, query excluded, ties by id."""
    if query_id not in table.ids:
        raise NotFoundError(f"embedding id {query_id!r} not found")
    if not 1 <= k < len(table.ids):
        raise InvalidInputError(f"k must be in [1, N-1], got {k} with N={len(table.ids)}")
    qi = table.ids.index(query_id)
    deltas = table.vectors - table.vectors[qi]
    distances = np.sqrt(np.einsum("ij,ij->i", deltas, deltas))
    rows = [
        (float(distances[i]), table.ids[i])
        for i in range(len(table.ids))
        if i != qi
    ]
    rows.sort(key=lambda r: (r[0], r[1]))
    return [(item_id, distance) for distance, item_id in rows[:k]]


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Read an ``id,v0..v{d-1}`` CSV into a finite-checked table."""
    path = Path(path)
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().strip()
        columns = header.split(",")
        if len(columns) < 2 or columns[0] != "id":
            raise LabelParseError(
                "header must be id,v0,...,v{d-1}", str(path), 1
            )
        expected = ["id"] + [f"v{i}" for i in range(len(columns) - 1)]
        if columns != expected:
            raise LabelParseError(
                f"unexpected header {columns}", str(path), 1
            )
        dim = len(columns) - 1
        ids: list[str] = []
        rows: list[list[float]] = []
        for line_no, line in enumerate(handle, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != dim + 1:
                raise LabelParseError(
                    f"expected {dim + 1} columns, got {len(parts)}", str(path), line_no
                )
            try:
                values = [float(v) for v in parts[1:]]
            except ValueError as exc:
                raise LabelParseError(str(exc), str(path), line_no) from exc
            if any(not np.isfinite(v) for v in values):
                raise LabelParseError("non-finite value", str(path), line_no)
            ids.append(parts[0])
            rows.append(values)
    if not rows:
        raise LabelParseError("no embedding rows", str(path), 1)
    return EmbeddingTable(ids=ids, vectors=np.array(rows, dtype=np.float64))


def save_embeddings(table: EmbeddingTable, path: str | Path) -> Path:
    """Write a table back out; a fixed point under load -> save."""
    path = Path(path)
    lines = ["id," + ",".join(f"v{i}" for i in range(table.dim))]
    for item_id, row in zip(table.ids, table.vectors):
        lines.append(item_id + "," + ",".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
