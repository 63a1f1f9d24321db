"""Paragraph refinement through an OpenAI-compatible chat-completion endpoint.

Any failure (transport, HTTP status, timeout, unusable body) degrades to the
rule-based refiner, so a batch never aborts because the model host is down.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import requests

from figcap.errors import NoReferenceError
from figcap.pipeline import (
    FigureRecord,
    RefinementResult,
    fit_budget,
    most_mentioned_figure,
    passthrough,
    refine_rule_based,
)

log = logging.getLogger(__name__)

REFINE_PROMPT = (
    "The content I provide includes two sections, namely ‘paragraph’ and ‘mention’. "
    "‘Paragraph’ and ‘mention’ are data related to figures or tables in a paper. "
    "According to the most mentioned figure in the ‘mention’ section, provide detailed "
    "information about this figure from the ‘paragraph’ section!"
)


def build_prompt(paragraph: str, mentions: Sequence[str]) -> str:
    return f"{REFINE_PROMPT}\n\nparagraph: {paragraph}\n\nmention: " + "\n".join(mentions)


@dataclass
class RefinerEndpoint:
    base_url: str = "http://localhost:8000/v1"
    model: str = "llama-2-7b-chat"
    token_env: str = "FIGCAP_REFINER_TOKEN"
    timeout: float = 30.0
    max_in_flight: int = 4
    max_tokens: int = 512
    log_path: Optional[str] = None


class RefinerClient:
    def __init__(self, endpoint: RefinerEndpoint, session: Optional[requests.Session] = None):
        self.endpoint = endpoint
        self.session = session or requests.Session()
        self._slots = threading.BoundedSemaphore(max(1, endpoint.max_in_flight))
        self._log_lock = threading.Lock()

    @property
    def url(self) -> str:
        return self.endpoint.base_url.rstrip("/") + "/chat/completions"

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.endpoint.token_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def complete(self, prompt: str) -> str:
        payload = {
            "model": self.endpoint.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0.0,
            "max_tokens": self.endpoint.max_tokens,
        }
        with self._slots:
            resp = self.session.post(self.url, json=payload, headers=self._headers(), timeout=self.endpoint.timeout)
        resp.raise_for_status()
        text = resp.json()["choices"][0]["message"]["content"]
        if not isinstance(text, str) or not text.strip():
            raise ValueError("empty completion")
        self._record(prompt, text)
        return text.strip()

    def _record(self, prompt: str, response: str) -> None:
        if not self.endpoint.log_path:
            return
        line = json.dumps({"time": time.time(), "model": self.endpoint.model, "prompt": prompt, "response": response})
        with self._log_lock, open(self.endpoint.log_path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")


def refine_external(
    paragraph: str,
    mentions: Sequence[str],
    endpoint: RefinerEndpoint | RefinerClient,
    budget: int = 2000,
    record_id: str = "",
) -> RefinementResult:
    client = endpoint if isinstance(endpoint, RefinerClient) else RefinerClient(endpoint)
    try:
        target = most_mentioned_figure(mentions)
    except NoReferenceError:
        target = None
    try:
        text = client.complete(build_prompt(paragraph, mentions))
    except (requests.RequestException, ValueError, KeyError, IndexError, TypeError) as exc:
        log.warning("refiner failed for %s, using rule-based fallback: %s", record_id or "<record>", exc)
        return refine_rule_based(paragraph, target, budget)
    return RefinementResult(target, fit_budget(text, budget), "external-llm")


def refine_record(
    record: FigureRecord,
    mode: str = "rule",
    budget: int = 2000,
    client: Optional[RefinerClient] = None,
) -> RefinementResult:
    if mode == "external":
        if client is None:
            raise ValueError("external mode needs a RefinerClient")
        return refine_external(record.paragraph, record.mentions, client, budget, record.id)
    if mode != "rule":
        raise ValueError(f"unknown refine mode {mode!r}")
    try:
        target = most_mentioned_figure(record.mentions)
    except NoReferenceError:
        return passthrough(record.paragraph)
    return refine_rule_based(record.paragraph, target, budget)


def refine_corpus(
    records: Sequence[FigureRecord],
    mode: str = "rule",
    budget: int = 2000,
    endpoint: Optional[RefinerEndpoint] = None,
    jobs: int = 1,
) -> list[RefinementResult]:
    """Refine every record; results come back in input order."""
    client = RefinerClient(endpoint or RefinerEndpoint()) if mode == "external" else None
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(lambda r: refine_record(r, mode, budget, client), records))
    return [refine_record(r, mode, budget, client) for r in records]


def endpoint_as_dict(endpoint: RefinerEndpoint) -> dict:
    return asdict(endpoint)
