"""Turning provisions into mandatory/prohibitive driving requirements.

Two engines: a deterministic normative-indicator rule engine (the test
oracle) and a remote two-step chain-of-thought path with a strict JSON
reply contract.
"""

from __future__ import annotations

import datetime
import json
import re
from dataclasses import dataclass, field

from .corpus import Corpus, LegalProvision
from .errors import DerivationError, ValidationError
from .retrieval import Query, RetrievalIndex, retrieve
from .taxonomy import TagSet, Taxonomy

MANDATORY = "mandatory"
PROHIBITIVE = "prohibitive"

# A clause carrying both kinds of indicator classifies prohibitive
# ("must not" contains "must"), so prohibitive patterns are checked first.
_PROHIBITIVE_INDICATORS = [
    r"must\s+not", r"shall\s+not", r"may\s+not", r"not\s+allowed",
    r"not\s+permitted", r"prohibited", r"forbidden", r"no\s+\w+\s+is\s+allowed",
    r"不得", r"禁止", r"严禁",
]
_MANDATORY_INDICATORS = [
    r"shall", r"should", r"must", r"required\s+to", r"obliged\s+to",
    r"应当", r"必须",
]

_PROHIBITIVE_RE = re.compile("|".join(_PROHIBITIVE_INDICATORS), re.IGNORECASE)
_MANDATORY_RE = re.compile("|".join(_MANDATORY_INDICATORS), re.IGNORECASE)

# Sentence terminators plus enumerated-item markers; statutes enumerate
# behaviors clause by clause.
_CLAUSE_SPLIT_RE = re.compile(
    r"[。．.!?！？；;]+|\n+|(?:^|\s)\(\d+\)\s*|(?:^|\s)（[一二三四五六七八九十]+）\s*"
)

_TRAILING_COPULA_RE = re.compile(
    r"\s*(?:is|are|was|were|shall\s+be|being|be)\s*$", re.IGNORECASE
)


@dataclass(frozen=True)
class DrivingRequirement:
    category: str                 # mandatory | prohibitive
    behavior: str
    provision_id: str
    scenario_tags: TagSet = TagSet()

    def __post_init__(self):
        if self.category not in (MANDATORY, PROHIBITIVE):
            raise ValidationError(f"bad requirement category {self.category!r}")
        if not self.behavior:
            raise ValidationError("requirement behavior must be non-empty")


@dataclass
class RequirementSet:
    mandatory: list[DrivingRequirement] = field(default_factory=list)
    prohibitive: list[DrivingRequirement] = field(default_factory=list)
    provenance: list[str] = field(default_factory=list)

    def add(self, req: DrivingRequirement) -> None:
        bucket = self.mandatory if req.category == MANDATORY else self.prohibitive
        if all((r.category, r.behavior, r.provision_id)
               != (req.category, req.behavior, req.provision_id) for r in bucket):
            bucket.append(req)

    def to_json(self) -> dict:
        def dump(reqs):
            return [{"behavior": r.behavior, "provision_id": r.provision_id}
                    for r in reqs]
        return {
            "mandatory": dump(self.mandatory),
            "prohibitive": dump(self.prohibitive),
            "provenance": self.provenance,
        }


def split_clauses(text: str) -> list[str]:
    parts = _CLAUSE_SPLIT_RE.split(text)
    return [p.strip() for p in parts if p and p.strip()]


def _behavior_from_clause(clause: str, match: re.Match) -> str:
    after = clause[match.end():].strip(" ,:，、：").strip()
    if after:
        return after
    before = clause[:match.start()].strip(" ,:，、：").strip()
    before = _TRAILING_COPULA_RE.sub("", before).strip()
    return before


def classify_clause(clause: str) -> DrivingRequirement | None:
    """One clause -> requirement, or None for descriptive clauses."""
    m = _PROHIBITIVE_RE.search(clause)
    if m:
        behavior = _behavior_from_clause(clause, m)
        if behavior:
            return DrivingRequirement(PROHIBITIVE, behavior, provision_id="")
        return None
    m = _MANDATORY_RE.search(clause)
    if m:
        behavior = _behavior_from_clause(clause, m)
        if behavior:
            return DrivingRequirement(MANDATORY, behavior, provision_id="")
    return None


def derive_rule_based(provision: LegalProvision) -> list[DrivingRequirement]:
    """Deterministic indicator-based derivation; empty output is valid."""
    out: list[DrivingRequirement] = []
    for clause in split_clauses(provision.text):
        req = classify_clause(clause)
        if req is not None:
            out.append(DrivingRequirement(
                req.category, req.behavior, provision.id, provision.key_tags
            ))
    return out


# -- remote path -------------------------------------------------------

DERIVE_SYSTEM_PROMPT = (
    "You are an expert in traffic laws. Derive driving requirements from "
    "a legal provision in two steps. Step 1: classify each clause as "
    "mandatory or prohibitive by its normative indicators (modal verbs "
    'such as "should" or "must"; prescriptive phrases like "not allowed"). '
    "Step 2: extract the behavioral description for each clause. Reply "
    "with strict JSON only, in the form "
    '{"mandatory": ["..."], "prohibitive": ["..."]}.'
)
DERIVE_USER_TEMPLATE = 'Legal provision: "{law_text}"'


def render_derive_prompt(provision: LegalProvision) -> list[dict]:
    return [
        {"role": "system", "content": DERIVE_SYSTEM_PROMPT},
        {"role": "user",
         "content": DERIVE_USER_TEMPLATE.format(law_text=provision.text)},
    ]


def derive_remote(backend, provision: LegalProvision) -> list[DrivingRequirement]:
    """Remote CoT derivation with a strict JSON reply contract."""
    reply = backend.chat(render_derive_prompt(provision))
    try:
        data = json.loads(reply.text)
    except json.JSONDecodeError as e:
        raise DerivationError(
            f"backend reply is not valid JSON: {e.msg}", raw_reply=reply.text
        ) from e
    if not isinstance(data, dict):
        raise DerivationError("backend reply is not an object",
                              raw_reply=reply.text)
    extra = set(data) - {MANDATORY, PROHIBITIVE}
    if extra:
        raise ValidationError(
            f"backend reply contains unknown categories: {sorted(extra)}"
        )
    out = []
    for category in (MANDATORY, PROHIBITIVE):
        behaviors = data.get(category, [])
        if not isinstance(behaviors, list) or not all(
                isinstance(b, str) for b in behaviors):
            raise DerivationError(
                f"category {category!r} must be a list of strings",
                raw_reply=reply.text,
            )
        for behavior in behaviors:
            if behavior.strip():
                out.append(DrivingRequirement(
                    category, behavior.strip(), provision.id, provision.key_tags
                ))
    return out


def derive_for_scenario(index: RetrievalIndex, corpus: Corpus,
                        taxonomy: Taxonomy, tags: TagSet,
                        engine: str = "rule-based", backend=None,
                        date: datetime.date | None = None) -> RequirementSet:
    """Retrieve, derive per provision in retrieval order, aggregate."""
    query = Query.build(taxonomy, tags, date=date)
    ids = retrieve(index, query)
    result = RequirementSet(provenance=list(ids))
    for pid in ids:
        provision = corpus[pid]
        if engine == "rule-based":
            reqs = derive_rule_based(provision)
        elif engine == "remote":
            if backend is None:
                raise ValidationError("remote engine requires a backend")
            reqs = derive_remote(backend, provision)
        else:
            raise ValidationError(f"unknown derivation engine {engine!r}")
        for req in reqs:
            result.add(req)
    return result
