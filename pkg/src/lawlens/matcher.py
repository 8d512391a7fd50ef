"""Law-scenario matching: trainable node-wise anchors + remote yes/no scorer.

Each taxonomy node under evaluation gets a small learnable linear head
(its "anchor") over frozen hashed text features. Anchors are trained with
binary cross entropy; the anchor budget plays the capacity-knob role of a
soft-prompt length.
"""

from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import AnnotationSet, Corpus, LegalProvision
from .errors import BackendRefusal, TagLookupError, ValidationError
from .featurize import Featurizer
from .taxonomy import TagPath, TagSet, Taxonomy

ANCHOR_WIDTH = 16          # per-token width d_a; capacity = budget * width
UNIVERSAL_KEY = "*"

MATCH_SYSTEM_PROMPT = (
    "You are an expert in traffic laws. Judge whether the following "
    'statement is correct. Just answer "Yes" or "No".'
)
MATCH_USER_TEMPLATE = (
    'The traffic law "{law_text}" describes a scenario that includes "{tag}".'
)


def node_label(node: TagPath) -> str:
    return " ".join(node.segments)


@dataclass
class Anchor:
    node: str                  # serialized path, or "*" in universal mode
    parameters: np.ndarray     # shape (budget * ANCHOR_WIDTH,)
    bias: float = 0.0


@dataclass
class TrainConfig:
    budget: int = 20
    width: int = ANCHOR_WIDTH
    learning_rate: float = 0.003
    epochs: int = 200
    seed: int = 0
    mode: str = "node-wise"    # or "universal"
    threshold: float = 0.5

    def __post_init__(self):
        if self.budget < 1:
            raise ValidationError("anchor budget must be >= 1")
        if self.mode not in ("node-wise", "universal"):
            raise ValidationError(f"unknown mode {self.mode!r}")

    @property
    def dimension(self) -> int:
        return self.budget * self.width


@dataclass
class AnchorModel:
    mode: str
    anchors: dict[str, Anchor]
    featurizer: Featurizer
    threshold: float
    nodes: list[TagPath]
    budget: int
    width: int = ANCHOR_WIDTH
    untrained_nodes: list[str] = field(default_factory=list)
    loss_history: dict[str, list[float]] = field(default_factory=dict)

    def _anchor_for(self, node: TagPath) -> Anchor:
        if self.mode == "universal":
            return self.anchors[UNIVERSAL_KEY]
        key = str(node)
        if key not in self.anchors:
            raise TagLookupError(key)
        return self.anchors[key]

    def score(self, provision: LegalProvision, node: TagPath) -> float:
        anchor = self._anchor_for(node)
        x = self.featurizer.pair_vector(provision.text, node_label(node))
        logit = float(anchor.parameters @ x) + anchor.bias
        return 1.0 / (1.0 + math.exp(-logit))

    def predict_tags(self, provision: LegalProvision,
                     taxonomy: Taxonomy) -> TagSet:
        """Thresholded scores, post-filtered to exclusion consistency."""
        scores = {node: self.score(provision, node) for node in self.nodes}
        predicted = {n for n, s in scores.items() if s > self.threshold}
        # Within each violated exclusion group keep only the best-scoring
        # member; ties break toward the lexicographically smallest path.
        changed = True
        while changed:
            changed = False
            for group in taxonomy.check_consistency(TagSet(frozenset(predicted))):
                members = sorted(group & predicted)
                best = max(scores[m] for m in members)
                keep = min(m for m in members if scores[m] == best)
                predicted -= set(members)
                predicted.add(keep)
                changed = True
        return TagSet(frozenset(predicted))

    # -- checkpointing -------------------------------------------------

    def save(self, path: str) -> None:
        doc = {
            "version": 1,
            "mode": self.mode,
            "threshold": self.threshold,
            "budget": self.budget,
            "width": self.width,
            "featurizer": self.featurizer.config(),
            "nodes": [str(n) for n in self.nodes],
            "untrained_nodes": self.untrained_nodes,
            "anchors": {
                key: {
                    "parameters": base64.b64encode(
                        a.parameters.astype("<f4").tobytes()
                    ).decode("ascii"),
                    "bias": a.bias,
                }
                for key, a in self.anchors.items()
            },
        }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(doc, f)

    @classmethod
    def load(cls, path: str) -> "AnchorModel":
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
        if doc.get("version") != 1:
            raise ValidationError(f"unsupported checkpoint version {doc.get('version')}")
        anchors = {}
        for key, rec in doc["anchors"].items():
            params = np.frombuffer(
                base64.b64decode(rec["parameters"]), dtype="<f4"
            ).astype(np.float64)
            anchors[key] = Anchor(node=key, parameters=params, bias=rec["bias"])
        return cls(
            mode=doc["mode"],
            anchors=anchors,
            featurizer=Featurizer.from_config(doc["featurizer"]),
            threshold=doc["threshold"],
            nodes=[TagPath.parse(p) for p in doc["nodes"]],
            budget=doc["budget"],
            width=doc["width"],
            untrained_nodes=doc.get("untrained_nodes", []),
        )


def _fit_logistic(X: np.ndarray, y: np.ndarray, lr: float,
                  epochs: int) -> tuple[np.ndarray, float, list[float]]:
    """Full-batch Adam on summed BCE; loss tracked per epoch."""
    n_features = X.shape[1]
    theta = np.zeros(n_features + 1)        # weights + trailing bias
    Xb = np.hstack([X, np.ones((X.shape[0], 1))])
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    beta1, beta2, eps_adam = 0.9, 0.999, 1e-8
    history: list[float] = []
    for t in range(1, epochs + 1):
        logits = Xb @ theta
        p = 1.0 / (1.0 + np.exp(-logits))
        eps = 1e-12
        loss = float(-(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps)).sum())
        history.append(loss)
        grad = Xb.T @ (p - y)
        m = beta1 * m + (1 - beta1) * grad
        v = beta2 * v + (1 - beta2) * grad * grad
        m_hat = m / (1 - beta1 ** t)
        v_hat = v / (1 - beta2 ** t)
        theta -= lr * m_hat / (np.sqrt(v_hat) + eps_adam)
    return theta[:-1], float(theta[-1]), history


def train_anchors(corpus: Corpus, annotations: AnnotationSet,
                  taxonomy: Taxonomy, config: TrainConfig) -> AnchorModel:
    """Optimize anchors with BCE over the annotated (provision, node) pairs.

    Node-wise mode trains each node's anchor independently; universal mode
    shares one anchor across all pairs. Deterministic given the config.
    """
    featurizer = Featurizer(dimension=config.dimension)
    nodes = sorted({tag for (_, tag) in annotations.pairs}, key=str)
    for n in nodes:
        taxonomy.require(n)

    # Pair features; sorted canonically so input ordering cannot matter.
    items = sorted(annotations.pairs.items(), key=lambda kv: (kv[0][0], str(kv[0][1])))
    vectors: dict[tuple[str, str], np.ndarray] = {}
    for (pid, tag), _ in items:
        key = (pid, str(tag))
        if key not in vectors:
            vectors[key] = featurizer.pair_vector(corpus[pid].text, node_label(tag))

    pos_total = sum(annotations.pairs.values())
    total = len(annotations.pairs)
    prior = pos_total / total if total else 0.5
    prior = min(max(prior, 1e-6), 1 - 1e-6)
    prior_logodds = math.log(prior / (1 - prior))

    anchors: dict[str, Anchor] = {}
    untrained: list[str] = []
    loss_history: dict[str, list[float]] = {}

    if config.mode == "universal":
        X = np.stack([vectors[(pid, str(tag))] for (pid, tag), _ in items])
        y = np.array([label for _, label in items], dtype=np.float64)
        w, b, hist = _fit_logistic(X, y, config.learning_rate, config.epochs)
        anchors[UNIVERSAL_KEY] = Anchor(UNIVERSAL_KEY, w, b)
        loss_history[UNIVERSAL_KEY] = hist
    else:
        for node in nodes:
            node_items = [(pid, label) for (pid, tag), label in items
                          if tag == node]
            if not node_items:
                untrained.append(str(node))
                anchors[str(node)] = Anchor(
                    str(node), np.zeros(config.dimension), prior_logodds
                )
                continue
            X = np.stack([vectors[(pid, str(node))] for pid, _ in node_items])
            y = np.array([label for _, label in node_items], dtype=np.float64)
            w, b, hist = _fit_logistic(X, y, config.learning_rate, config.epochs)
            anchors[str(node)] = Anchor(str(node), w, b)
            loss_history[str(node)] = hist

    return AnchorModel(
        mode=config.mode,
        anchors=anchors,
        featurizer=featurizer,
        threshold=config.threshold,
        nodes=nodes,
        budget=config.budget,
        width=config.width,
        untrained_nodes=untrained,
        loss_history=loss_history,
    )


# -- evaluation --------------------------------------------------------


@dataclass
class MatchReport:
    predictions: dict[str, TagSet]
    precision: float
    recall: float
    f1: float
    averaging: str
    per_sample: dict[str, tuple[float, float, float]] = field(default_factory=dict)


def _sample_prf(truth: set[TagPath], pred: set[TagPath]) -> tuple[float, float, float]:
    if not truth and not pred:
        return 1.0, 1.0, 1.0
    inter = len(truth & pred)
    p = inter / len(pred) if pred else 0.0
    r = inter / len(truth) if truth else 0.0
    f1 = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return p, r, f1


def evaluate_matching(predictions: dict[str, TagSet],
                      annotations: AnnotationSet,
                      averaging: str = "per-sample") -> MatchReport:
    """Multi-label precision/recall/F1 over annotated provisions."""
    pids = annotations.provision_ids()
    missing = [pid for pid in pids if pid not in predictions]
    if missing:
        raise ValidationError(f"predictions missing for provisions: {missing}")
    if averaging == "per-sample":
        per_sample = {}
        for pid in pids:
            truth = annotations.positives_for(pid)
            pred = set(predictions[pid])
            per_sample[pid] = _sample_prf(truth, pred)
        n = len(pids)
        p = sum(v[0] for v in per_sample.values()) / n
        r = sum(v[1] for v in per_sample.values()) / n
        f1 = sum(v[2] for v in per_sample.values()) / n
        return MatchReport(predictions, p, r, f1, averaging, per_sample)
    if averaging == "micro":
        tp = fp = fn = 0
        for pid in pids:
            truth = annotations.positives_for(pid)
            pred = set(predictions[pid])
            tp += len(truth & pred)
            fp += len(pred - truth)
            fn += len(truth - pred)
        p = tp / (tp + fp) if tp + fp else 1.0
        r = tp / (tp + fn) if tp + fn else 1.0
        f1 = 0.0 if p + r == 0 else 2 * p * r / (p + r)
        return MatchReport(predictions, p, r, f1, averaging)
    raise ValidationError(f"unknown averaging mode {averaging!r}")


# -- remote scoring ----------------------------------------------------


def render_match_prompt(provision: LegalProvision, node: TagPath) -> list[dict]:
    return [
        {"role": "system", "content": MATCH_SYSTEM_PROMPT},
        {"role": "user", "content": MATCH_USER_TEMPLATE.format(
            law_text=provision.text, tag=str(node))},
    ]


def remote_score(backend, provision: LegalProvision, node: TagPath) -> float:
    """Yes/No probability from a remote chat backend.

    Maps the first reply token: Yes -> 1.0, No -> 0.0. When first-token
    log-probabilities are available, returns P(Yes) normalized against
    P(No). Anything else is a refusal error, never a silent 0.5.
    """
    reply = backend.chat(render_match_prompt(provision, node))
    if reply.top_logprobs:
        p_yes = p_no = 0.0
        for token, logprob in reply.top_logprobs.items():
            t = token.strip().lower()
            if t == "yes":
                p_yes += math.exp(logprob)
            elif t == "no":
                p_no += math.exp(logprob)
        if p_yes + p_no > 0:
            return p_yes / (p_yes + p_no)
    first = reply.text.strip().split()[0].strip('."\',!') if reply.text.strip() else ""
    if first.lower() == "yes":
        return 1.0
    if first.lower() == "no":
        return 0.0
    raise BackendRefusal(
        f"reply is neither Yes nor No: {reply.text[:80]!r}", raw_reply=reply.text
    )
