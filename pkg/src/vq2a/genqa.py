"""Question-generation / question-answering backends.

One contract, two implementations: a deterministic offline stub for tests and
dry runs, and an HTTP client speaking the /v1/generate + /v1/answer wire
protocol with bounded concurrency, retries and positional batch alignment.
"""

from __future__ import annotations

import hashlib
import json
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import requests

from .numwords import parse_number

STUB_ENDPOINT = "stub"


class BackendError(Exception):
    """Base class for backend failures."""


class RetriableBackendError(BackendError):
    """Transport-level failure that survived the whole retry budget."""


class PermanentBackendError(BackendError):
    """4xx or malformed response; retrying would not help."""


class GenerationFailedError(BackendError):
    """The backend produced no usable question for a candidate."""


@dataclass(frozen=True)
class QGRequest:
    caption: str
    answer: str
    n: int = 1


@dataclass(frozen=True)
class QGResponse:
    question: str
    score: float


@dataclass(frozen=True)
class QARequest:
    question: str
    context: str


@dataclass(frozen=True)
class QAResponse:
    answer: str  # "" means the model abstained
    score: float


@dataclass(frozen=True)
class BackendConfig:
    endpoint: str = STUB_ENDPOINT
    timeout_s: float = 30.0
    max_in_flight: int = 4
    retry_budget: int = 3
    batch_size: int = 64
    cache_dir: str | None = None

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.retry_budget < 0:
            raise ValueError("retry_budget must be non-negative")


# --- deterministic stub -------------------------------------------------------

_PLACE_PREPOSITIONS = frozenset(
    {"on", "in", "at", "under", "near", "by", "above", "below", "behind",
     "beside", "inside", "outside", "over", "around"}
)
_AUX_WORDS = frozenset(
    {"is", "are", "was", "were", "am", "be", "been", "being", "do", "does",
     "did", "has", "have", "had", "can", "could", "will", "would", "may",
     "might", "must", "should"}
)
_BOOLEAN_PREFIX = "is it true that "


def _strip_final_punct(text: str) -> str:
    return text.strip().rstrip(".!?").strip()


def _find_sublist(haystack: list[str], needle: list[str]) -> int:
    for i in range(len(haystack) - len(needle) + 1):
        if haystack[i : i + len(needle)] == needle:
            return i
    return -1


class StubBackend:
    """Pure-function template QG/QA for offline runs.

    Questions are the caption with the answer span swapped for a wh-phrase, so
    the paired extractive QA can recover the span by aligning the question back
    against the caption. Boolean candidates become "is it true that ..."
    questions, negated for "no". Reentrant; no state.
    """

    def __init__(self, config: BackendConfig | None = None):
        self.config = config or BackendConfig()

    def generate(self, caption: str, answer: str, n: int = 1) -> list[QGResponse]:
        question = self._question_for(caption, answer)
        if not question:
            return []
        return [QGResponse(question, 1.0)]

    def answer(self, question: str, context: str) -> QAResponse:
        q = _strip_final_punct(question)
        ctx = _strip_final_punct(context)
        if q.lower().startswith(_BOOLEAN_PREFIX):
            body = [t.lower() for t in q[len(_BOOLEAN_PREFIX):].split()]
            clow = [t.lower() for t in ctx.split()]
            if body == clow:
                return QAResponse("yes", 1.0)
            if "not" in body:
                i = body.index("not")
                if body[:i] + body[i + 1:] == clow:
                    return QAResponse("no", 1.0)
            return QAResponse("", 0.0)
        qt = q.split()
        ct = ctx.split()
        ql = [t.lower() for t in qt]
        cl = [t.lower() for t in ct]
        # the question is the caption with one span replaced by a wh-phrase:
        # align shared prefix/suffix, the caption leftover is the answer
        p = 0
        while p < min(len(ql), len(cl)) and ql[p] == cl[p]:
            p += 1
        s = 0
        while s < min(len(ql) - p, len(cl) - p) and ql[len(ql) - 1 - s] == cl[len(cl) - 1 - s]:
            s += 1
        leftover = ct[p : len(ct) - s]
        if not leftover:
            return QAResponse("", 0.0)
        return QAResponse(" ".join(leftover), 1.0)

    def _question_for(self, caption: str, answer: str) -> str:
        cap = _strip_final_punct(caption)
        cap_tokens = cap.split()
        ans = answer.strip()
        if ans.lower() == "yes":
            return f"{_BOOLEAN_PREFIX}{cap}?"
        if ans.lower() == "no":
            return f"{_BOOLEAN_PREFIX}{_negate(cap_tokens)}?"
        ans_tokens = ans.split()
        pos = _find_sublist([t.lower() for t in cap_tokens], [t.lower() for t in ans_tokens])
        if pos < 0:
            return ""  # not recoverable from the caption: generation failure
        if len(ans_tokens) == 1 and parse_number(ans_tokens[0]) is not None:
            wh = "how many"
        elif ans_tokens[0].lower() in _PLACE_PREPOSITIONS:
            wh = "where"
        elif pos > 0 and ans_tokens[0][:1].isupper():
            wh = "who"
        else:
            wh = "what"
        out = cap_tokens[:pos] + [wh] + cap_tokens[pos + len(ans_tokens):]
        return " ".join(out) + "?"


def _negate(tokens: list[str]) -> str:
    for i, tok in enumerate(tokens):
        if tok.lower() in _AUX_WORDS:
            return " ".join(tokens[: i + 1] + ["not"] + tokens[i + 1:])
    return " ".join(["not"] + tokens)


# --- HTTP client ---------------------------------------------------------------


class HttpBackend:
    """Client for the wire protocol.

    POST {endpoint}/v1/generate  {"caption", "answer", "n"}
        -> {"questions": [{"text", "score"}, ...]} sorted by score descending
    POST {endpoint}/v1/answer    {"question", "context"}
        -> {"answer", "score"}   ("" = abstain)

    4xx responses are permanent; 5xx and transport errors retry with
    exponential backoff up to the retry budget. An optional on-disk cache keyed
    by request hash makes retransmission free.
    """

    def __init__(self, config: BackendConfig):
        self.config = config
        self._base = config.endpoint.rstrip("/")
        self._local = threading.local()
        self._cache = Path(config.cache_dir) if config.cache_dir else None
        if self._cache is not None:
            self._cache.mkdir(parents=True, exist_ok=True)

    def generate(self, caption: str, answer: str, n: int = 1) -> list[QGResponse]:
        body = self._post("/v1/generate", {"caption": caption, "answer": answer, "n": n})
        questions = body.get("questions")
        if not isinstance(questions, list):
            raise PermanentBackendError("malformed /v1/generate response: no questions array")
        out = []
        for q in questions:
            try:
                out.append(QGResponse(str(q["text"]), float(q["score"])))
            except (KeyError, TypeError, ValueError):
                raise PermanentBackendError(f"malformed question object: {q!r}")
        if any(not math.isfinite(q.score) for q in out):
            raise PermanentBackendError("non-finite score in /v1/generate response")
        return out

    def answer(self, question: str, context: str) -> QAResponse:
        body = self._post("/v1/answer", {"question": question, "context": context})
        if "answer" not in body:
            raise PermanentBackendError("malformed /v1/answer response: no answer field")
        score = float(body.get("score", 0.0))
        if not math.isfinite(score):
            raise PermanentBackendError("non-finite score in /v1/answer response")
        return QAResponse(str(body["answer"]), score)

    def _session(self) -> requests.Session:
        if not hasattr(self._local, "session"):
            self._local.session = requests.Session()
        return self._local.session

    def _post(self, route: str, payload: dict) -> dict:
        cached = self._cache_get(route, payload)
        if cached is not None:
            return cached
        url = f"{self._base}{route}"
        attempts = self.config.retry_budget + 1
        delay = 0.1
        last: object = None
        for attempt in range(attempts):
            try:
                resp = self._session().post(url, json=payload, timeout=self.config.timeout_s)
            except (requests.Timeout, requests.ConnectionError) as exc:
                last = exc
            else:
                if resp.status_code == 200:
                    try:
                        body = resp.json()
                    except ValueError:
                        raise PermanentBackendError(f"{route}: non-JSON response body")
                    self._cache_put(route, payload, body)
                    return body
                if 400 <= resp.status_code < 500:
                    raise PermanentBackendError(
                        f"{route} -> HTTP {resp.status_code}: {resp.text[:200]}"
                    )
                last = f"HTTP {resp.status_code}"
            if attempt + 1 < attempts:
                time.sleep(delay)
                delay = min(delay * 2, 2.0)
        raise RetriableBackendError(f"{route} failed after {attempts} attempts: {last}")

    def _cache_key(self, route: str, payload: dict) -> str:
        blob = json.dumps({"route": route, "payload": payload}, sort_keys=True)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def _cache_get(self, route: str, payload: dict):
        if self._cache is None:
            return None
        f = self._cache / f"{self._cache_key(route, payload)}.json"
        if not f.exists():
            return None
        return json.loads(f.read_text(encoding="utf-8"))

    def _cache_put(self, route: str, payload: dict, body: dict) -> None:
        if self._cache is None:
            return
        f = self._cache / f"{self._cache_key(route, payload)}.json"
        f.write_text(json.dumps(body, ensure_ascii=False), encoding="utf-8")


def create_backend(config: BackendConfig):
    if config.endpoint == STUB_ENDPOINT:
        return StubBackend(config)
    if config.endpoint.startswith(("http://", "https://")):
        return HttpBackend(config)
    raise ValueError(f"backend endpoint must be 'stub' or an http(s) URL, got {config.endpoint!r}")


# --- operations ----------------------------------------------------------------


def generate_question(backend, caption: str, answer: str) -> QGResponse:
    """Top-scoring question for (caption, answer).

    Raises GenerationFailedError when the backend yields nothing usable; the
    caller drops the candidate and counts it.
    """
    if not caption or not answer:
        raise ValueError("caption and answer must be non-empty")
    responses = backend.generate(caption, answer, n=1)
    if not responses or not responses[0].question:
        raise GenerationFailedError(f"no question generated for answer {answer!r}")
    if not math.isfinite(responses[0].score):
        raise PermanentBackendError("backend returned a non-finite score")
    return responses[0]


def answer_question(backend, question: str, context: str) -> QAResponse:
    """Backend answer for `question` over `context`; "" signals abstention."""
    if not question or not context:
        raise ValueError("question and context must be non-empty")
    return backend.answer(question, context)


def run_batch(backend, requests_: Sequence[QGRequest | QARequest]) -> list:
    """Execute a request batch with bounded concurrency.

    Results align positionally with the inputs whatever the completion order;
    per-item failures come back in-band as BackendError values and never abort
    the batch.
    """
    if not requests_:
        raise ValueError("requests must be non-empty")
    cfg = getattr(backend, "config", None) or BackendConfig()

    def one(req):
        try:
            if isinstance(req, QGRequest):
                return generate_question(backend, req.caption, req.answer)
            return answer_question(backend, req.question, req.context)
        except BackendError as exc:
            return exc

    if cfg.max_in_flight == 1:
        return [one(r) for r in requests_]
    results: list = [None] * len(requests_)
    with ThreadPoolExecutor(max_workers=cfg.max_in_flight) as pool:
        for lo in range(0, len(requests_), cfg.batch_size):
            hi = min(lo + cfg.batch_size, len(requests_))
            futures = {pool.submit(one, requests_[i]): i for i in range(lo, hi)}
            for future, i in futures.items():
                results[i] = future.result()
    return results
