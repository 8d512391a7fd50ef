"""Seeded synthetic fixtures for the matching benchmarks.

Generates small law-scenario corpora where each node has a distinctive
signature token, so the trainer's behavior (convergence, capacity knob,
node-wise vs universal gap) can be exercised deterministically.
"""

from __future__ import annotations

import json
import random

from .corpus import AnnotationSet, Corpus, annotations_from_corpus, load_corpus
from .matcher import TrainConfig
from .taxonomy import TagPath, Taxonomy, parse_taxonomy


def benchmark_config(budget: int = 20, seed: int = 0) -> TrainConfig:
    """Training config used by the bundled benchmarks.

    The corpus is tiny and imbalanced, so the benchmark trains with a
    larger step size than the production default; 200 epochs still bound
    the run.
    """
    return TrainConfig(budget=budget, learning_rate=0.03, epochs=200, seed=seed)

_FILLERS = [
    "vehicle", "driver", "road", "traffic", "lane", "signal", "speed",
    "turn", "stop", "yield", "zone", "limit", "crossing", "ahead",
    "section", "area", "marking", "line", "light", "sign", "rule",
    "provision", "comply", "observe", "maintain", "reduce", "keep",
    "distance", "priority", "caution", "operate", "proceed", "enter",
    "exit", "merge", "overtake", "approach", "slow", "careful", "must",
]


def synthetic_benchmark(num_provisions: int = 60, num_nodes: int = 30,
                        seed: int = 7) -> tuple[Taxonomy, Corpus, AnnotationSet, list[TagPath]]:
    """Benchmark where a provision matches a node iff it carries that
    node's signature token."""
    rng = random.Random(seed)
    roots = ["CatA", "CatB", "CatC"]
    leaves = [f"/{roots[i % len(roots)]}/feature-{i:02d}" for i in range(num_nodes)]
    taxonomy = parse_taxonomy(json.dumps({"nodes": leaves, "exclusions": []}))
    leaf_paths = [TagPath.parse(p) for p in leaves]
    signature = {p: f"sig{i:02d}token" for i, p in enumerate(leaf_paths)}

    lines = []
    for j in range(num_provisions):
        chosen = rng.sample(leaf_paths, rng.randint(1, 3))
        words = [signature[p] for p in chosen]
        words += rng.sample(_FILLERS, 8)
        rng.shuffle(words)
        lines.append(json.dumps({
            "id": f"SYN-{j:03d}",
            "jurisdiction": "synthetic",
            "source_doc": "generator",
            "article_ref": f"art-{j}",
            "text": "When driving, " + " ".join(words) + ".",
            "tags": [str(p) for p in sorted(chosen)],
        }))
    corpus = load_corpus("\n".join(lines), taxonomy)
    annotations = annotations_from_corpus(corpus, leaf_paths)
    return taxonomy, corpus, annotations, leaf_paths


def adversarial_fixture(num_texts: int = 40, seed: int = 11,
                        ) -> tuple[Taxonomy, Corpus, AnnotationSet, list[TagPath]]:
    """Two nodes demanding opposite decisions on the same texts.

    Node 'alpha-context' is positive exactly when the text carries the
    alpha cue, node 'beta-context' exactly when it carries the beta cue.
    A single shared linear anchor cannot satisfy both orderings, so the
    universal mode degrades while node-wise mode separates cleanly.
    """
    rng = random.Random(seed)
    nodes = ["/Context/alpha-context", "/Context/beta-context"]
    taxonomy = parse_taxonomy(json.dumps({"nodes": nodes, "exclusions": []}))
    node_paths = [TagPath.parse(p) for p in nodes]
    alpha, beta = node_paths

    lines = []
    pairs: dict[tuple[str, TagPath], int] = {}
    for j in range(num_texts):
        has_alpha = j % 2 == 0
        cue = "alphacue" if has_alpha else "betacue"
        words = [cue] + rng.sample(_FILLERS, 6)
        rng.shuffle(words)
        pid = f"ADV-{j:03d}"
        lines.append(json.dumps({
            "id": pid,
            "jurisdiction": "synthetic",
            "source_doc": "generator",
            "article_ref": f"adv-{j}",
            "text": " ".join(words) + ".",
            "tags": [str(alpha if has_alpha else beta)],
        }))
        pairs[(pid, alpha)] = 1 if has_alpha else 0
        pairs[(pid, beta)] = 0 if has_alpha else 1
    corpus = load_corpus("\n".join(lines), taxonomy)
    return taxonomy, corpus, AnnotationSet(pairs), node_paths
