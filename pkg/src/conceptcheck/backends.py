"""Answering backends and prompt plumbing.

A backend turns (question, rendered prompt) into raw answer text. Four
kinds exist: a remote HTTP model, a perfect oracle that answers from the
deductive closure, a noisy oracle that flips the perfect answer with a
seeded probability, and a scripted backend replaying a fixed answer map.
Remote calls go through an on-disk cache so a warm rerun makes zero
network requests and reproduces files byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import requests

from .answers import Answer, normalize_answer
from .clusters import ClusterDataset, dataset_fingerprint
from .errors import (
    AuthMissing,
    ConfigError,
    FingerprintMismatch,
    MalformedResponse,
    MismatchedDataset,
    NetworkError,
    SchemaViolation,
    UnreadableSource,
)
from .hierarchy import DeductiveClosure

log = logging.getLogger(__name__)


# --- prompt template --------------------------------------------------------


@dataclass(frozen=True)
class PromptTemplate:
    """Preamble plus few-shot question/answer pairs."""

    preamble: str
    few_shot: tuple[tuple[str, str], ...] = ()

    def fingerprint(self) -> str:
        canonical = json.dumps(
            {"preamble": self.preamble, "few_shot": [list(p) for p in self.few_shot]},
            sort_keys=True,
            separators=(",", ":"),
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def render_prompt(
    template: PromptTemplate,
    question: str,
    context_statements: tuple[str, ...] = (),
) -> str:
    """Render the full prompt for one question.

    Context statements, when present, are inserted verbatim, each on its
    own line, directly above the final question; everything else is byte
    identical to the context-free rendering.
    """
    parts: list[str] = []
    if template.preamble:
        parts.append(template.preamble)
        parts.append("")
    for shot_q, shot_a in template.few_shot:
        parts.append(f"Q: {shot_q}")
        parts.append(f"A: {shot_a}")
        parts.append("")
    parts.extend(context_statements)
    parts.append(f"Q: {question}")
    parts.append("A:")
    return "\n".join(parts)


def load_prompt_template(path: str | Path) -> PromptTemplate:
    """Read a template file: {"preamble": str, "few_shot": [{"question","answer"}]}."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UnreadableSource(f"cannot read prompt template {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"prompt template {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or not isinstance(data.get("preamble"), str):
        raise SchemaViolation("prompt template needs a string 'preamble'")
    shots = []
    for entry in data.get("few_shot", ()):
        try:
            shots.append((entry["question"], entry["answer"]))
        except (TypeError, KeyError) as exc:
            raise SchemaViolation(f"malformed few_shot entry: {entry!r}") from exc
    return PromptTemplate(preamble=data["preamble"], few_shot=tuple(shots))


# --- response cache ---------------------------------------------------------


class ResponseCache:
    """One JSON file per request key; writes are atomic (temp then rename)."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(model: str, rendered_prompt: str, question: str) -> str:
        canonical = json.dumps(
            {"model": model, "prompt": rendered_prompt, "question": question},
            sort_keys=True,
            separators=(",", ":"),
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str) -> dict | None:
        path = self._path(key)
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            return None
        except (OSError, json.JSONDecodeError):
            # A damaged entry is a miss; the next put overwrites it.
            log.warning("discarding unreadable cache entry %s", path.name)
            return None

    def put(self, key: str, raw: str, normalized: Answer) -> None:
        payload = {"raw": raw, "normalized": normalized.value, "timestamp": time.time()}
        path = self._path(key)
        tmp = path.with_name(f"{path.name}.tmp-{os.getpid()}-{threading.get_ident()}")
        tmp.write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")
        os.replace(tmp, path)


# --- backends ---------------------------------------------------------------


class Backend:
    """Interface: raw answer text for (question, rendered prompt).

    A backend may set `concurrency` above one to tell the evaluation loop
    how many questions it can absorb in flight; `answer` must then be
    thread-safe.
    """

    id: str = "backend"
    concurrency: int = 1

    def answer(self, question: str, rendered_prompt: str) -> str:
        raise NotImplementedError


def _expected_by_question(dataset: ClusterDataset) -> dict[str, Answer]:
    # A question text repeated across clusters always carries the same
    # truth value, so last-write-wins assembly is safe.
    out: dict[str, Answer] = {}
    for cluster in dataset.clusters:
        for q in cluster.questions:
            out[q] = cluster.expected
    return out


class PerfectOracle(Backend):
    """Answers every dataset question with its closure-determined truth."""

    id = "perfect"

    def __init__(self, closure: DeductiveClosure, dataset: ClusterDataset):
        if closure.derived_from != dataset.graph_fingerprint:
            raise FingerprintMismatch(
                f"closure is for graph {closure.derived_from[:12]}..., "
                f"dataset for {dataset.graph_fingerprint[:12]}..."
            )
        self._expected = _expected_by_question(dataset)
        self._dataset_fp = dataset_fingerprint(dataset)

    def answer(self, question: str, rendered_prompt: str) -> str:
        try:
            return self._expected[question].value
        except KeyError:
            raise MismatchedDataset(f"question not in bound dataset: {question!r}") from None


class NoisyOracle(Backend):
    """Perfect oracle with each answer flipped independently.

    The flip decision is a pure function of (seed, question text), so the
    answer stream is identical across runs and processes and does not
    depend on the order questions arrive in.
    """

    def __init__(
        self,
        closure: DeductiveClosure,
        dataset: ClusterDataset,
        flip_probability: float,
        seed: int,
    ):
        if not 0.0 <= flip_probability <= 1.0:
            raise ConfigError("flip_probability must be in [0, 1]")
        self._inner = PerfectOracle(closure, dataset)
        self.flip_probability = flip_probability
        self.seed = seed
        self.id = f"noisy-p{flip_probability:g}-s{seed}"

    def _flips(self, question: str) -> bool:
        digest = hashlib.sha256(f"{self.seed}:{question}".encode("utf-8")).digest()
        draw = int.from_bytes(digest[:8], "big") / 2**64
        return draw < self.flip_probability

    def answer(self, question: str, rendered_prompt: str) -> str:
        truth = self._inner.answer(question, rendered_prompt)
        if self._flips(question):
            return Answer.NO.value if truth == Answer.YES.value else Answer.YES.value
        return truth


class ScriptedBackend(Backend):
    """Replays a fixed question -> raw answer mapping."""

    def __init__(self, answers: dict[str, str], *, default: str | None = None, id: str = "scripted"):
        self._answers = dict(answers)
        self._default = default
        self.id = id

    def answer(self, question: str, rendered_prompt: str) -> str:
        if question in self._answers:
            return self._answers[question]
        if self._default is not None:
            return self._default
        raise MismatchedDataset(f"scripted answers do not cover: {question!r}")


def load_scripted_answers(path: str | Path) -> ScriptedBackend:
    """Read an answer file: {"answers": {question: raw}, "default"?: str}."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UnreadableSource(f"cannot read answer file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"answer file {path} is not valid JSON: {exc}") from exc
    answers = data.get("answers")
    if not isinstance(answers, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in answers.items()
    ):
        raise SchemaViolation("answer file needs an 'answers' object of strings")
    default = data.get("default")
    if default is not None and not isinstance(default, str):
        raise SchemaViolation("answer file 'default' must be a string when present")
    return ScriptedBackend(answers, default=default, id=Path(path).stem)


class RemoteBackend(Backend):
    """HTTP completion endpoint speaking a minimal JSON protocol.

    Request:  POST {endpoint} {"model", "prompt", "max_tokens", "temperature"}
    Response: {"text": "..."}

    Sampling is pinned to temperature 0 for replayability. Responses are
    cached on disk when a cache is attached; retries use capped exponential
    backoff and a failure after the last retry raises NetworkError.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        *,
        auth_env: str | None = None,
        max_tokens: int = 16,
        temperature: float = 0.0,
        timeout: float = 30.0,
        concurrency: int = 1,
        cache: ResponseCache | None = None,
        retries: int = 3,
        backoff_base: float = 0.5,
        backoff_cap: float = 8.0,
        id: str | None = None,
    ):
        if concurrency < 1:
            raise ConfigError("concurrency must be >= 1")
        self.endpoint = endpoint
        self.model = model
        self.max_tokens = max_tokens
        self.temperature = temperature
        self.timeout = timeout
        self.concurrency = concurrency
        self.cache = cache
        self.retries = retries
        self.backoff_base = backoff_base
        self.backoff_cap = backoff_cap
        self.id = id or f"remote-{model}"
        self._headers = {"Content-Type": "application/json"}
        if auth_env is not None:
            token = os.environ.get(auth_env)
            if not token:
                raise AuthMissing(f"environment variable {auth_env} is not set")
            self._headers["Authorization"] = f"Bearer {token}"
        self._session = requests.Session()

    def _request(self, rendered_prompt: str) -> str:
        payload = {
            "model": self.model,
            "prompt": rendered_prompt,
            "max_tokens": self.max_tokens,
            "temperature": self.temperature,
        }
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                delay = min(self.backoff_cap, self.backoff_base * 2 ** (attempt - 1))
                time.sleep(delay)
            try:
                response = self._session.post(
                    self.endpoint, json=payload, headers=self._headers, timeout=self.timeout
                )
            except requests.RequestException as exc:
                last_error = exc
                continue
            if response.status_code >= 500:
                last_error = NetworkError(f"server error {response.status_code}")
                continue
            if response.status_code != 200:
                raise NetworkError(f"endpoint returned {response.status_code}: {response.text[:200]}")
            try:
                body = response.json()
            except ValueError as exc:
                raise MalformedResponse(f"endpoint returned non-JSON body: {exc}") from exc
            if not isinstance(body, dict) or not isinstance(body.get("text"), str):
                raise MalformedResponse(f"endpoint response missing 'text': {body!r:.200}")
            return body["text"]
        raise NetworkError(f"request failed after {self.retries + 1} attempts: {last_error}")

    def answer(self, question: str, rendered_prompt: str) -> str:
        if self.cache is not None:
            key = ResponseCache.key(self.model, rendered_prompt, question)
            hit = self.cache.get(key)
            if hit is not None:
                return hit["raw"]
        raw = self._request(rendered_prompt)
        if self.cache is not None:
            self.cache.put(key, raw, normalize_answer(raw).value)
        return raw


def backend_from_config(
    spec: dict,
    *,
    closure: DeductiveClosure | None = None,
    dataset: ClusterDataset | None = None,
) -> Backend:
    """Build a backend from one config entry: {"kind": ..., ...}.

    The oracle kinds need the closure and dataset they answer from; the
    caller supplies those, the config only selects and parameterizes.
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"backend config needs a 'kind': {spec!r}")
    kind = spec["kind"]
    explicit_id = spec.get("id")
    if kind in ("perfect", "noisy"):
        if closure is None or dataset is None:
            raise ConfigError(f"backend kind {kind!r} needs a graph closure and dataset")
    if kind == "perfect":
        backend: Backend = PerfectOracle(closure, dataset)
    elif kind == "noisy":
        try:
            backend = NoisyOracle(
                closure, dataset,
                flip_probability=float(spec["flip_probability"]),
                seed=int(spec["seed"]),
            )
        except KeyError as exc:
            raise ConfigError(f"noisy backend config missing {exc}") from exc
    elif kind == "scripted":
        if "answers" not in spec:
            raise ConfigError("scripted backend config needs 'answers' (a file path)")
        backend = load_scripted_answers(spec["answers"])
    elif kind == "remote":
        try:
            endpoint, model = spec["endpoint"], spec["model"]
        except KeyError as exc:
            raise ConfigError(f"remote backend config missing {exc}") from exc
        cache = ResponseCache(spec["cache_dir"]) if spec.get("cache_dir") else None
        backend = RemoteBackend(
            endpoint,
            model,
            auth_env=spec.get("auth_env"),
            max_tokens=int(spec.get("max_tokens", 16)),
            temperature=float(spec.get("temperature", 0.0)),
            timeout=float(spec.get("timeout", 30.0)),
            concurrency=int(spec.get("concurrency", 1)),
            cache=cache,
            retries=int(spec.get("retries", 3)),
        )
    else:
        raise ConfigError(f"unknown backend kind {kind!r}")
    if explicit_id:
        backend.id = str(explicit_id)
    return backend
