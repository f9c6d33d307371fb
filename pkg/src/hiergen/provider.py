"""Completion-provider abstraction: request/response contracts, strict
structured-output parsing, token estimation, retries, and replay capture.

The only accepted output shape is dictionary-shaped text (a JSON object); the
parsers tolerate surrounding prose by locating the outermost such span.  A
bounded repair loop re-prompts with the parse error appended before giving up.

Secret hygiene: API keys are read from an environment variable at call time
and never appear in logs, error messages, or transcript files.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable

import requests

from .errors import (
    ContextOverflow,
    IllegalCategory,
    ProviderUnavailable,
    TruncatedOutput,
    UnparseableOutput,
)

logger = logging.getLogger(__name__)

#: Characters-per-token heuristic; provider-agnostic upper bound.
CHARS_PER_TOKEN = 4

#: Fraction of the context budget usable after the safety margin.
SAFETY_FACTOR = 0.9

#: Maximum re-prompts appended with the parse error before surfacing failure.
MAX_PARSE_REPAIRS = 2


def estimate_tokens(text: str) -> int:
    """Deterministic upper-bound token estimate, monotone in text length."""
    return math.ceil(len(text) / CHARS_PER_TOKEN)


# ---------------------------------------------------------------------------
# Request / response types
# ---------------------------------------------------------------------------


class FinishReason(str, Enum):
    COMPLETE = "complete"
    TRUNCATED = "truncated"
    PROVIDER_ERROR = "provider_error"


@dataclass(frozen=True)
class PromptRequest:
    """One completion request: instructions, worked examples, and the task."""

    system_instruction: str
    payload: str
    few_shot_examples: tuple[tuple[str, str], ...] = ()
    max_output_tokens: int = 4096
    temperature: float = 0.0

    def __post_init__(self) -> None:
        if not self.system_instruction:
            raise ValueError("system_instruction must be non-empty")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must lie in [0, 2]")

    def estimated_tokens(self) -> int:
        total = estimate_tokens(self.system_instruction) + estimate_tokens(self.payload)
        for shown, expected in self.few_shot_examples:
            total += estimate_tokens(shown) + estimate_tokens(expected)
        return total

    def to_dict(self) -> dict:
        return {
            "system_instruction": self.system_instruction,
            "few_shot_examples": [list(p) for p in self.few_shot_examples],
            "payload": self.payload,
            "max_output_tokens": self.max_output_tokens,
            "temperature": self.temperature,
        }


@dataclass(frozen=True)
class CompletionResponse:
    raw_text: str
    finish_reason: FinishReason = FinishReason.COMPLETE
    provider_metadata: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "raw_text": self.raw_text,
            "finish_reason": self.finish_reason.value,
            "provider_metadata": dict(self.provider_metadata),
        }


def request_hash(request: PromptRequest) -> str:
    """Stable content hash; the mock and replay files key on it."""
    canonical = json.dumps(request.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Providers
# ---------------------------------------------------------------------------


class CompletionProviderBase:
    """Common budget pre-flight shared by every provider implementation."""

    context_budget_tokens: int = 32768

    def check_budget(self, request: PromptRequest) -> None:
        usable = int(self.context_budget_tokens * SAFETY_FACTOR)
        needed = request.estimated_tokens() + request.max_output_tokens
        if needed > usable:
            raise ContextOverflow(needed, usable)

    def complete(self, request: PromptRequest) -> CompletionResponse:
        raise NotImplementedError


@dataclass
class ProviderConfig:
    """Wire settings for a real chat-completion endpoint.

    ``api_key_env_var`` names the environment variable holding the secret;
    the secret itself is never stored on this object.
    """

    endpoint: str
    model_name: str
    api_key_env_var: str = "HIERGEN_API_KEY"
    context_budget_tokens: int = 32768
    max_retries: int = 3
    timeout_s: float = 60.0
    retry_backoff_s: float = 0.5


class RealProvider(CompletionProviderBase):
    """JSON-over-HTTP chat-completion client with bounded retries.

    Issues at most 1 + max_retries wire attempts; retries cover transient
    transport failures, 429 and 5xx statuses.
    """

    TRANSIENT_STATUSES = {429, 500, 502, 503, 504}

    def __init__(self, config: ProviderConfig, session: requests.Session | None = None):
        self.config = config
        self.context_budget_tokens = config.context_budget_tokens
        self._session = session or requests.Session()
        self._sleep: Callable[[float], None] = time.sleep

    def _api_key(self) -> str:
        key = os.environ.get(self.config.api_key_env_var, "")
        if not key:
            raise ProviderUnavailable(
                f"environment variable {self.config.api_key_env_var!r} is not set"
            )
        return key

    def _messages(self, request: PromptRequest) -> list[dict[str, str]]:
        messages = [{"role": "system", "content": request.system_instruction}]
        for shown, expected in request.few_shot_examples:
            messages.append({"role": "user", "content": shown})
            messages.append({"role": "assistant", "content": expected})
        messages.append({"role": "user", "content": request.payload})
        return messages

    def complete(self, request: PromptRequest) -> CompletionResponse:
        self.check_budget(request)
        body = {
            "model": self.config.model_name,
            "messages": self._messages(request),
            "max_tokens": request.max_output_tokens,
            "temperature": request.temperature,
        }
        headers = {"Authorization": f"Bearer {self._api_key()}"}
        attempts = 1 + max(0, self.config.max_retries)
        last_failure = "no attempt made"
        for attempt in range(attempts):
            try:
                resp = self._session.post(
                    self.config.endpoint,
                    json=body,
                    headers=headers,
                    timeout=self.config.timeout_s,
                )
            except requests.RequestException as exc:
                # Exception text could echo headers; keep only the class name.
                last_failure = f"transport error ({type(exc).__name__})"
            else:
                if resp.status_code == 200:
                    return self._parse_wire_response(resp.json())
                last_failure = f"HTTP {resp.status_code}"
                if resp.status_code not in self.TRANSIENT_STATUSES:
                    break
            if attempt + 1 < attempts:
                self._sleep(self.config.retry_backoff_s * (2**attempt))
        raise ProviderUnavailable(
            f"{self.config.model_name} unavailable after {attempts} attempt(s): {last_failure}"
        )

    @staticmethod
    def _parse_wire_response(data: dict) -> CompletionResponse:
        try:
            choice = data["choices"][0]
            text = choice["message"]["content"]
        except (KeyError, IndexError, TypeError):
            return CompletionResponse(
                raw_text="",
                finish_reason=FinishReason.PROVIDER_ERROR,
                provider_metadata={"error": "malformed wire response"},
            )
        finish = choice.get("finish_reason", "stop")
        reason = FinishReason.TRUNCATED if finish == "length" else FinishReason.COMPLETE
        meta = {"model": str(data.get("model", ""))}
        return CompletionResponse(raw_text=text, finish_reason=reason, provider_metadata=meta)


class TranscriptRecorder(CompletionProviderBase):
    """Wraps a provider, appending each exchange to a line-delimited JSON
    replay file so live runs become regression fixtures.

    Record schema, one JSON object per line:
        {"request_hash": str, "request": PromptRequest dict,
         "response": CompletionResponse dict}
    """

    def __init__(self, inner: CompletionProviderBase, path: str | Path):
        self.inner = inner
        self.context_budget_tokens = inner.context_budget_tokens
        self.path = Path(path)
        self._lock = threading.Lock()

    def complete(self, request: PromptRequest) -> CompletionResponse:
        response = self.inner.complete(request)
        record = {
            "request_hash": request_hash(request),
            "request": request.to_dict(),
            "response": response.to_dict(),
        }
        line = json.dumps(record, sort_keys=True, ensure_ascii=True)
        with self._lock, self.path.open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")
        return response


class ReplayProvider(CompletionProviderBase):
    """Answers requests from a transcript file recorded earlier."""

    def __init__(self, path: str | Path, context_budget_tokens: int = 32768):
        self.context_budget_tokens = context_budget_tokens
        self._responses: dict[str, CompletionResponse] = {}
        with Path(path).open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                resp = record["response"]
                self._responses[record["request_hash"]] = CompletionResponse(
                    raw_text=resp["raw_text"],
                    finish_reason=FinishReason(resp["finish_reason"]),
                    provider_metadata=dict(resp.get("provider_metadata", {})),
                )

    def __len__(self) -> int:
        return len(self._responses)

    def complete(self, request: PromptRequest) -> CompletionResponse:
        self.check_budget(request)
        key = request_hash(request)
        try:
            return self._responses[key]
        except KeyError:
            raise ProviderUnavailable(f"no recorded response for request {key[:12]}") from None


# ---------------------------------------------------------------------------
# Structured-output parsing
# ---------------------------------------------------------------------------


def extract_json_object(text: str) -> dict:
    """Return the outermost dictionary-shaped span in ``text``.

    Scans for balanced brace spans (string-aware) left to right and returns
    the first one that parses as a JSON object.
    """
    n = len(text)
    start = text.find("{")
    while start != -1:
        depth = 0
        in_string = False
        escaped = False
        for i in range(start, n):
            ch = text[i]
            if in_string:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_string = False
                continue
            if ch == '"':
                in_string = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    candidate = text[start : i + 1]
                    try:
                        obj = json.loads(candidate)
                    except json.JSONDecodeError:
                        break
                    if isinstance(obj, dict):
                        return obj
                    break
        start = text.find("{", start + 1)
    raise UnparseableOutput("no dictionary-shaped span found in output", raw_text=text)


def parse_classification(raw_text: str, allowed_categories: set[str]) -> dict[str, set[str]]:
    """Parse ``{node label: [category, ...]}`` from model output.

    Every returned value is a non-empty subset of ``allowed_categories``.
    Raises IllegalCategory (naming the offending label) on values outside the
    allowed set, UnparseableOutput when no dictionary can be located.
    """
    if not allowed_categories:
        raise ValueError("allowed_categories must be non-empty")
    if "Other" not in allowed_categories:
        raise ValueError('allowed_categories must include the literal category "Other"')
    obj = extract_json_object(raw_text)
    result: dict[str, set[str]] = {}
    for label, value in obj.items():
        if isinstance(value, str):
            cats = [value]
        elif isinstance(value, list) and all(isinstance(v, str) for v in value):
            cats = value
        else:
            raise UnparseableOutput(
                f"value for {label!r} is not a category or list of categories",
                raw_text=raw_text,
            )
        if not cats:
            raise IllegalCategory(label, None)
        for cat in cats:
            if cat not in allowed_categories:
                raise IllegalCategory(label, cat)
        result[str(label)] = set(cats)
    return result


def parse_hierarchy(
    raw_text: str, known_nodes: set[str]
) -> tuple[list[tuple[str, str]], list[str]]:
    """Parse parent/child pairs from a nested dictionary of node labels.

    Returns ``(edges, rejected_labels)``: edges whose endpoints both resolve
    against ``known_nodes``, and the hallucinated labels that appeared in
    rejected pairs (containment, not silent drop).  Label matching falls back
    to whitespace/case-insensitive comparison.
    """
    if not known_nodes:
        raise ValueError("known_nodes must be non-empty")
    obj = extract_json_object(raw_text)
    canonical = {" ".join(k.split()).lower(): k for k in known_nodes}

    def resolve(label: str) -> str | None:
        if label in known_nodes:
            return label
        return canonical.get(" ".join(label.split()).lower())

    edges: list[tuple[str, str]] = []
    seen_edges: set[tuple[str, str]] = set()
    rejected: list[str] = []
    rejected_seen: set[str] = set()

    def reject(label: str) -> None:
        if label not in rejected_seen:
            rejected_seen.add(label)
            rejected.append(label)

    def add_pair(parent_label: str, child_label: str) -> None:
        parent = resolve(parent_label)
        child = resolve(child_label)
        if parent is None:
            reject(parent_label)
        if child is None:
            reject(child_label)
        if parent is None or child is None:
            return
        if (parent, child) not in seen_edges:
            seen_edges.add((parent, child))
            edges.append((parent, child))

    def walk(parent_label: str, value: Any) -> None:
        if isinstance(value, dict):
            for child_label, sub in value.items():
                add_pair(parent_label, str(child_label))
                walk(str(child_label), sub)
        elif isinstance(value, list):
            for item in value:
                if isinstance(item, str):
                    add_pair(parent_label, item)
        # scalars (null, "", leaf markers) end the branch

    for top_label, sub in obj.items():
        walk(str(top_label), sub)
    return edges, rejected


def parse_review_findings(raw_text: str) -> tuple[bool, list[dict[str, Any]]]:
    """Parse a review/evaluation verdict.

    Accepts ``{"verdict": "approved"}`` or ``{"findings": [...]}`` (optionally
    both).  Returns ``(approved, findings)`` where each finding is the raw
    dict; the caller validates node references.
    """
    obj = extract_json_object(raw_text)
    findings = obj.get("findings", [])
    if not isinstance(findings, list) or not all(isinstance(f, dict) for f in findings):
        raise UnparseableOutput('"findings" must be a list of objects', raw_text=raw_text)
    verdict = obj.get("verdict")
    approved = (verdict == "approved") and not findings
    if verdict is None and not findings:
        approved = True
    return approved, list(findings)


# ---------------------------------------------------------------------------
# Repair loop
# ---------------------------------------------------------------------------


def complete_and_parse(
    provider: CompletionProviderBase,
    request: PromptRequest,
    parser: Callable[[str], Any],
    max_repairs: int = MAX_PARSE_REPAIRS,
):
    """Run a request through ``parser``, re-prompting with the parse error
    appended on failure (at most ``max_repairs`` times).

    Returns the parsed value; raises the final parse error when repairs are
    exhausted.  Provider failures propagate immediately.
    """
    current = request
    last_error: Exception | None = None
    for attempt in range(1 + max_repairs):
        response = provider.complete(current)
        if response.finish_reason == FinishReason.PROVIDER_ERROR:
            raise ProviderUnavailable("provider returned an error response")
        if response.finish_reason == FinishReason.TRUNCATED:
            # not a parse problem; re-asking at the same output cap would
            # truncate again, so surface it
            raise TruncatedOutput(
                f"completion hit the {current.max_output_tokens}-token output cap"
            )
        try:
            return parser(response.raw_text)
        except (UnparseableOutput, IllegalCategory) as exc:
            last_error = exc
            logger.debug("parse failure on attempt %d: %s", attempt + 1, exc)
            current = PromptRequest(
                system_instruction=request.system_instruction,
                payload=(
                    request.payload
                    + f"\n\nYour previous reply could not be used: {exc}."
                    + " Reply again with only the required JSON dictionary."
                ),
                few_shot_examples=request.few_shot_examples,
                max_output_tokens=request.max_output_tokens,
                temperature=request.temperature,
            )
    assert last_error is not None
    raise last_error
