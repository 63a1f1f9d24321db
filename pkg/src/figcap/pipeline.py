"""Dataset ingestion and model-input construction for figure records.

A corpus is JSON Lines with one figure per line::

    {"id": str, "caption"?: str, "ocr": [str], "ocr_alt"?: [str],
     "mentions": [str], "paragraph": str}

``ocr_alt`` holds tokens from a second OCR pass over the figure image,
which is usually more accurate than the ``ocr`` field shipped with the data.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

from figcap.errors import CorpusError, FormatError, NoReferenceError
from figcap.jsonl import Source, iter_jsonl, source_name, write_jsonl
from figcap.text_core import DEFAULT_TOKENIZER, TokenizerConfig, token_spans

MERGE_POLICIES = ("prefer-alt", "prefer-official", "union")
PROVENANCES = ("rule-based", "external-llm", "passthrough")

_KNOWN_KEYS = ("id", "caption", "ocr", "ocr_alt", "mentions", "paragraph")


@dataclass
class FigureRecord:
    id: str
    ocr_official: list[str]
    mentions: list[str]
    paragraph: str
    caption: Optional[str] = None
    ocr_alt: Optional[list[str]] = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, obj: dict) -> "FigureRecord":
        rid = obj.get("id")
        if not isinstance(rid, str) or not rid:
            raise ValueError("field 'id' must be a nonempty string")
        for key in ("ocr", "mentions"):
            val = obj.get(key)
            if not isinstance(val, list) or not all(isinstance(x, str) for x in val):
                raise ValueError(f"field {key!r} must be a list of strings")
        if not isinstance(obj.get("paragraph"), str):
            raise ValueError("field 'paragraph' must be a string")
        caption = obj.get("caption")
        if caption is not None and not isinstance(caption, str):
            raise ValueError("field 'caption' must be a string when present")
        alt = obj.get("ocr_alt")
        if alt is not None and (not isinstance(alt, list) or not all(isinstance(x, str) for x in alt)):
            raise ValueError("field 'ocr_alt' must be a list of strings when present")
        return cls(
            id=rid,
            ocr_official=list(obj["ocr"]),
            mentions=list(obj["mentions"]),
            paragraph=obj["paragraph"],
            caption=caption,
            ocr_alt=None if alt is None else list(alt),
            extra={k: v for k, v in obj.items() if k not in _KNOWN_KEYS},
        )

    def to_dict(self) -> dict:
        out = {"id": self.id}
        if self.caption is not None:
            out["caption"] = self.caption
        out["ocr"] = list(self.ocr_official)
        if self.ocr_alt is not None:
            out["ocr_alt"] = list(self.ocr_alt)
        out["mentions"] = list(self.mentions)
        out["paragraph"] = self.paragraph
        out.update(self.extra)
        return out


def parse_corpus(source: Source) -> Iterator[FigureRecord]:
    """Stream records from a JSON Lines corpus, rejecting duplicates."""
    seen: set[str] = set()
    name = source_name(source)
    for lineno, obj in iter_jsonl(source):
        try:
            rec = FigureRecord.from_dict(obj)
        except ValueError as exc:
            raise FormatError(str(exc), line=lineno, path=name) from None
        if rec.id in seen:
            raise CorpusError(f"{name or '<stream>'}:line {lineno}: duplicate id {rec.id!r}")
        seen.add(rec.id)
        yield rec


def serialize_corpus(records: Iterable[FigureRecord], dest: Source) -> int:
    return write_jsonl((r.to_dict() for r in records), dest)


# ---------------------------------------------------------------------------
# figure references


@dataclass(frozen=True)
class FigureRef:
    kind: str  # "figure" | "table"
    number: int

    def __post_init__(self):
        if self.kind not in ("figure", "table"):
            raise ValueError(f"unknown reference kind {self.kind!r}")
        if self.number < 1:
            raise ValueError("reference number must be >= 1")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "number": self.number}


# Figure 3, Fig. 3, Fig 3, Figs. 3, Table 2, Tab. 2, Tab 2
REF_PATTERN = re.compile(r"\b(?P<kind>fig(?:ure)?s?|tab(?:le)?s?)\.?\s*(?P<num>\d+)", re.IGNORECASE)


def find_refs(text: str) -> list[FigureRef]:
    refs = []
    for m in REF_PATTERN.finditer(text):
        num = int(m.group("num"))
        if num < 1:
            continue
        kind = "figure" if m.group("kind").lower().startswith("fig") else "table"
        refs.append(FigureRef(kind, num))
    return refs


def most_mentioned_figure(mentions: Sequence[str]) -> FigureRef:
    """Most frequently referenced figure/table; ties go to the earliest first occurrence."""
    refs = [ref for mention in mentions for ref in find_refs(mention)]
    if not refs:
        raise NoReferenceError("no figure or table reference found in mentions")
    counts = Counter(refs)
    first_seen = {}
    for pos, ref in enumerate(refs):
        first_seen.setdefault(ref, pos)
    return max(counts, key=lambda r: (counts[r], -first_seen[r]))


# ---------------------------------------------------------------------------
# paragraph refinement


@dataclass(frozen=True)
class RefinementResult:
    target: Optional[FigureRef]
    refined_paragraph: str
    provenance: str

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")

    @property
    def char_count(self) -> int:
        return len(self.refined_paragraph)

    def to_dict(self, record_id: str) -> dict:
        return {
            "id": record_id,
            "target": None if self.target is None else self.target.to_dict(),
            "refined_paragraph": self.refined_paragraph,
            "provenance": self.provenance,
            "char_count": self.char_count,
        }


_TERMINATOR = re.compile(r"[.!?]+(?=\s|$)")
# a period right after one of these is not a sentence end
_ABBREV_TAIL = re.compile(
    r"(?:\b(?:fig|figs|tab|eq|eqs|sec|cf|vs|al|approx|resp|no|ref|refs)|\be\.g|\bi\.e)$",
    re.IGNORECASE,
)


def split_sentences(text: str) -> list[str]:
    """Terminator-based splitting with common scientific abbreviations masked."""
    sentences = []
    start = 0
    for m in _TERMINATOR.finditer(text):
        if m.group().startswith(".") and _ABBREV_TAIL.search(text, start, m.start()):
            continue
        piece = text[start : m.end()].strip()
        if piece:
            sentences.append(piece)
        start = m.end()
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def _pack(sentences: Sequence[str], budget: int) -> str:
    """Join leading sentences while the result fits in ``budget`` characters."""
    out = ""
    for s in sentences:
        candidate = s if not out else out + " " + s
        if len(candidate) > budget:
            break
        out = candidate
    return out


def refine_rule_based(paragraph: str, target: Optional[FigureRef], budget: int) -> RefinementResult:
    """Keep only the sentences that reference ``target``.

    Falls back to leading sentences when nothing matches. The result is
    truncated at a sentence boundary to fit ``budget`` characters.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    sentences = split_sentences(paragraph)
    matching = [s for s in sentences if target is not None and target in find_refs(s)]
    kept = matching or sentences
    return RefinementResult(target, _pack(kept, budget), "rule-based")


def passthrough(paragraph: str) -> RefinementResult:
    return RefinementResult(None, paragraph, "passthrough")


def fit_budget(text: str, budget: int) -> str:
    """Cut free text to ``budget`` chars, preferring a sentence boundary."""
    if len(text) <= budget:
        return text
    packed = _pack(split_sentences(text), budget)
    return packed if packed else text[:budget].rstrip()


# ---------------------------------------------------------------------------
# OCR merging and input assembly


def merge_ocr(official: Sequence[str], alt: Optional[Sequence[str]], policy: str = "prefer-alt") -> list[str]:
    if policy not in MERGE_POLICIES:
        raise ValueError(f"unknown merge policy {policy!r}; expected one of {MERGE_POLICIES}")
    official = list(official)
    if alt is None:
        return official
    alt = list(alt)
    if policy == "prefer-alt":
        return alt if alt else official
    if policy == "prefer-official":
        return official if official else alt
    return list(dict.fromkeys(official + alt))


@dataclass(frozen=True)
class AssembledInput:
    text: str
    truncated: bool
    token_count: int  # content tokens, section markers excluded


OCR_MARK, MENTION_MARK, PARAGRAPH_MARK = "<ocr>", "<mention>", "<paragraph>"


def _cut(text: str, keep: int, tokenizer: TokenizerConfig) -> str:
    if keep <= 0:
        return ""
    spans = token_spans(text, tokenizer)
    if keep >= len(spans):
        return text
    return text[: spans[keep - 1][1]]


def assemble_input(
    record: FigureRecord,
    refinement: Optional[RefinementResult],
    budget: int,
    ocr_policy: str = "prefer-alt",
    tokenizer: TokenizerConfig = DEFAULT_TOKENIZER,
) -> AssembledInput:
    """Concatenate OCR, mentions and the refined paragraph into one source text.

    When the content exceeds ``budget`` tokens the paragraph is cut first,
    then the mentions, then the OCR text. Marker strings do not count toward
    the budget.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    paragraph = record.paragraph if refinement is None else refinement.refined_paragraph
    sections = [
        " ".join(merge_ocr(record.ocr_official, record.ocr_alt, ocr_policy)),
        " ".join(record.mentions),
        paragraph,
    ]
    counts = [len(token_spans(s, tokenizer)) for s in sections]
    over = sum(counts) - budget
    truncated = over > 0
    # paragraph first, then mentions, then OCR
    for idx in (2, 1, 0):
        if over <= 0:
            break
        keep = max(0, counts[idx] - over)
        over -= counts[idx] - keep
        sections[idx] = _cut(sections[idx], keep, tokenizer)
        counts[idx] = keep
    text = f"{OCR_MARK} {sections[0]} {MENTION_MARK} {sections[1]} {PARAGRAPH_MARK} {sections[2]}"
    return AssembledInput(text, truncated, sum(counts))
