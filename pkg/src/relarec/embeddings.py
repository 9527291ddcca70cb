"""Paragraph-vector (PV-DBOW) document embeddings with negative sampling.

Each document vector is trained to predict the document's own stems: for
every (document, word) pair the loss is

    -log sigmoid(d . u_w) - sum_k log sigmoid(-d . u_k)

over ``negative`` noise words u_k drawn from the unigram**0.75
distribution. Training is plain SGD with a learning rate decaying linearly
over all pair updates, single-threaded unless ``parallel`` is requested.
"""

from __future__ import annotations

import json
import logging
import struct
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numba
import numpy as np

from .corpus import Document, DocumentNotFound
from .textpipe import DEFAULT_STOPWORDS, analyze

log = logging.getLogger(__name__)

MODEL_MAGIC = b"RLRE"
MODEL_VERSION = 1
MODE = "pv-dbow"


@dataclass(frozen=True)
class EmbeddingParams:
    dim: int = 100
    epochs: int = 20
    negative: int = 5
    min_count: int = 2
    alpha: float = 0.025
    min_alpha: float = 0.0001
    seed: int = 0
    parallel: bool = False

    def __post_init__(self) -> None:
        if self.dim < 2:
            raise ValueError("embedding dimension must be >= 2")
        if self.epochs < 1 or self.negative < 1 or self.min_count < 1:
            raise ValueError("epochs, negative and min_count must be >= 1")


@dataclass
class EmbeddingModel:
    doc_ids: list[str]
    doc_vectors: np.ndarray
    vocab: dict[str, float]
    params: EmbeddingParams
    loss_history: list[float] = field(default_factory=list)
    mode: str = MODE

    def __post_init__(self) -> None:
        self._row = {d: i for i, d in enumerate(self.doc_ids)}
        norms = np.linalg.norm(self.doc_vectors, axis=1)
        self._unit = self.doc_vectors / np.where(norms == 0, 1.0, norms)[:, None]

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._row

    def vector(self, doc_id: str) -> np.ndarray:
        try:
            return self.doc_vectors[self._row[doc_id]]
        except KeyError:
            raise DocumentNotFound(doc_id) from None


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def pair_loss_and_grad(
    doc_vec: np.ndarray, out_vecs: np.ndarray, target: int, negatives: Sequence[int]
) -> tuple[float, np.ndarray, np.ndarray]:
    """Loss of one (document, word) pair and its gradients.

    Returns ``(loss, grad_doc, grad_out)`` where ``grad_out`` has the shape
    of ``out_vecs`` and is zero except on the rows touched. Noise draws
    equal to the target are skipped.
    """
    grad_doc = np.zeros_like(doc_vec)
    grad_out = np.zeros_like(out_vecs)
    f = doc_vec @ out_vecs[target]
    loss = -_log_sigmoid(f)
    g = 1.0 / (1.0 + np.exp(f))  # 1 - sigmoid(f)
    grad_doc -= g * out_vecs[target]
    grad_out[target] -= g * doc_vec
    for k in negatives:
        if k == target:
            continue
        f = doc_vec @ out_vecs[k]
        loss -= _log_sigmoid(-f)
        s = 1.0 / (1.0 + np.exp(-f))
        grad_doc += s * out_vecs[k]
        grad_out[k] += s * doc_vec
    return float(loss), grad_doc, grad_out


@numba.njit(cache=True)
def _log1pexp(x):
    if x > 0:
        return x + np.log1p(np.exp(-x))
    return np.log1p(np.exp(x))


@numba.njit(cache=True)
def _pair_step(doc_vecs, out_vecs, d, target, negs, lr, f_buf, g_buf):
    dim = doc_vecs.shape[1]
    m = negs.shape[0]
    loss = 0.0
    # gradients are evaluated at the pre-update point, then applied together
    for j in range(m + 1):
        w = target if j == 0 else negs[j - 1]
        if j > 0 and w == target:
            g_buf[j] = 0.0
            continue
        f = 0.0
        for c in range(dim):
            f += doc_vecs[d, c] * out_vecs[w, c]
        if j == 0:
            loss += _log1pexp(-f)
            g_buf[j] = -1.0 / (1.0 + np.exp(f))
        else:
            loss += _log1pexp(f)
            g_buf[j] = 1.0 / (1.0 + np.exp(-f))
    for c in range(dim):
        f_buf[c] = 0.0
    for j in range(m + 1):
        w = target if j == 0 else negs[j - 1]
        g = g_buf[j]
        if g == 0.0:
            continue
        for c in range(dim):
            f_buf[c] += g * out_vecs[w, c]
    for j in range(m + 1):
        w = target if j == 0 else negs[j - 1]
        g = g_buf[j]
        if g == 0.0:
            continue
        for c in range(dim):
            out_vecs[w, c] -= lr * g * doc_vecs[d, c]
    for c in range(dim):
        doc_vecs[d, c] -= lr * f_buf[c]
    return loss


@numba.njit(cache=True)
def _train_epoch(doc_vecs, out_vecs, pair_doc, pair_word, negs, step0, total_steps, alpha, min_alpha):
    f_buf = np.zeros(doc_vecs.shape[1])
    g_buf = np.zeros(negs.shape[1] + 1)
    loss = 0.0
    for i in range(pair_doc.shape[0]):
        lr = alpha - (alpha - min_alpha) * (step0 + i) / total_steps
        loss += _pair_step(doc_vecs, out_vecs, pair_doc[i], pair_word[i], negs[i], lr, f_buf, g_buf)
    return loss


@numba.njit(parallel=True, cache=True)
def _train_epoch_parallel(doc_vecs, out_vecs, pair_doc, pair_word, negs, step0, total_steps, alpha, min_alpha, bounds):
    # Hogwild: documents in different chunks update shared word vectors without locks.
    n_chunks = bounds.shape[0] - 1
    losses = np.zeros(n_chunks)
    for ch in numba.prange(n_chunks):
        f_buf = np.zeros(doc_vecs.shape[1])
        g_buf = np.zeros(negs.shape[1] + 1)
        for i in range(bounds[ch], bounds[ch + 1]):
            lr = alpha - (alpha - min_alpha) * (step0 + i) / total_steps
            losses[ch] += _pair_step(doc_vecs, out_vecs, pair_doc[i], pair_word[i], negs[i], lr, f_buf, g_buf)
    return losses.sum()


def pair_step(doc_vecs: np.ndarray, out_vecs: np.ndarray, d: int, target: int, negatives, lr: float) -> float:
    """One in-place SGD update on a single pair (the training kernel); returns the pre-update loss."""
    negs = np.asarray(negatives, dtype=np.int64)
    return _pair_step(doc_vecs, out_vecs, d, target, negs, lr, np.zeros(doc_vecs.shape[1]), np.zeros(len(negs) + 1))


def document_tokens(doc: Document, stopwords: frozenset[str] = DEFAULT_STOPWORDS) -> list[str]:
    return analyze(doc.title, doc.abstract, stopwords=stopwords).stems


def train_embeddings(
    docs: Iterable[Document],
    params: EmbeddingParams = EmbeddingParams(),
    stopwords: frozenset[str] = DEFAULT_STOPWORDS,
) -> EmbeddingModel:
    docs = list(docs)
    if len(docs) < 2:
        raise ValueError("need at least 2 documents to train embeddings")
    texts = [document_tokens(d, stopwords) for d in docs]
    counts = Counter(w for t in texts for w in t)
    words = sorted((w for w, c in counts.items() if c >= params.min_count), key=lambda w: (-counts[w], w))
    if not words:
        raise ValueError(f"no word occurs at least {params.min_count} times")
    word_idx = {w: i for i, w in enumerate(words)}
    noise = np.array([counts[w] for w in words], dtype=np.float64) ** 0.75
    noise /= noise.sum()
    cum = np.cumsum(noise)
    cum[-1] = 1.0

    rng = np.random.default_rng(params.seed)
    n, dim = len(docs), params.dim
    doc_vecs = (rng.random((n, dim)) - 0.5) / dim
    out_vecs = np.zeros((len(words), dim))

    doc_pairs = [np.array([word_idx[w] for w in t if w in word_idx], dtype=np.int64) for t in texts]
    n_pairs = sum(len(p) for p in doc_pairs)
    if n_pairs == 0:
        raise ValueError("no trainable (document, word) pairs")
    total_steps = params.epochs * n_pairs

    history = []
    for epoch in range(params.epochs):
        order = rng.permutation(n)
        pair_doc = np.concatenate([np.full(len(doc_pairs[d]), d, dtype=np.int64) for d in order])
        pair_word = np.concatenate([doc_pairs[d] for d in order])
        negs = np.searchsorted(cum, rng.random((n_pairs, params.negative)), side="right").astype(np.int64)
        step0 = epoch * n_pairs
        if params.parallel:
            bounds = np.linspace(0, n_pairs, numba.get_num_threads() + 1).astype(np.int64)
            loss = _train_epoch_parallel(doc_vecs, out_vecs, pair_doc, pair_word, negs, step0, total_steps,
                                         params.alpha, params.min_alpha, bounds)
        else:
            loss = _train_epoch(doc_vecs, out_vecs, pair_doc, pair_word, negs, step0, total_steps,
                                params.alpha, params.min_alpha)
        history.append(loss / n_pairs)
        log.debug("epoch %d mean loss %.5f", epoch + 1, history[-1])

    vocab = {w: float(p) for w, p in zip(words, noise)}
    return EmbeddingModel([d.doc_id for d in docs], doc_vecs, vocab, params, history)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("vectors differ in dimension")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("undefined similarity for a zero vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def recommend_embeddings(doc_id: str, model: EmbeddingModel, k: int = 6) -> list[tuple[str, float]]:
    if k < 1:
        raise ValueError("k must be >= 1")
    if doc_id not in model:
        raise DocumentNotFound(doc_id)
    row = model._row[doc_id]
    if not np.any(model.doc_vectors[row]):
        raise ValueError("undefined similarity for a zero vector")
    scores = np.clip(model._unit @ model._unit[row], -1.0, 1.0)
    ranked = [(model.doc_ids[i], float(s)) for i, s in enumerate(scores) if i != row]
    ranked.sort(key=lambda ds: (-ds[1], ds[0]))
    return ranked[:k]


def save_model(model: EmbeddingModel, path: str | Path) -> None:
    header = json.dumps({
        "mode": model.mode,
        "dim": model.params.dim,
        "epochs": model.params.epochs,
        "seed": model.params.seed,
        "params": asdict(model.params),
        "doc_ids": model.doc_ids,
        "vocab": model.vocab,
        "loss_history": model.loss_history,
    }).encode("utf-8")
    vectors = np.ascontiguousarray(model.doc_vectors, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC + struct.pack("<HQ", MODEL_VERSION, len(header)))
        fh.write(header)
        fh.write(vectors.tobytes())


def load_model(path: str | Path) -> EmbeddingModel:
    raw = Path(path).read_bytes()
    if raw[:4] != MODEL_MAGIC:
        raise ValueError(f"{path}: not an embedding model file")
    version, hlen = struct.unpack_from("<HQ", raw, 4)
    if version != MODEL_VERSION:
        raise ValueError(f"{path}: unsupported model version {version}")
    start = 4 + struct.calcsize("<HQ")
    header = json.loads(raw[start : start + hlen])
    vectors = np.frombuffer(raw[start + hlen :], dtype="<f8").reshape(len(header["doc_ids"]), header["dim"]).copy()
    return EmbeddingModel(header["doc_ids"], vectors, header["vocab"], EmbeddingParams(**header["params"]),
                          header["loss_history"], header["mode"])
