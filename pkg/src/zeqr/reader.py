"""The machine-reading seam: input formatting and span-extraction backends.

A backend is anything with extract_span(ReaderInput) -> SpanAnswer. Shipped
backends: OracleReader (fixture map for tests), EchoReader (whole-context
stub), RemoteReader (HTTP service), GenerativeReader (wraps a text
generator, enforcing extractiveness), TransformersReader (local extractive
checkpoint, optional dependency).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

from .datamodel import Config, DialogueContext
from .errors import NoContextError, ProtocolError, TransportError
from .text import count_tokens, truncate_tokens

SEPARATOR = "<SEP>"


@dataclass(frozen=True)
class ReaderInput:
    """A formatted (question, context) pair.

    formatted is question + separator + context, with the context cut so
    the whole input fits the token budget; the question is never cut.
    """

    question: str
    context: str
    formatted: str


@dataclass(frozen=True)
class SpanAnswer:
    """An extracted answer span; offsets index into the context string."""

    text: str
    char_start: int
    char_end: int
    score: float

    def __post_init__(self):
        if self.text and self.char_start >= self.char_end:
            raise ValueError("char_start must be < char_end for non-empty answers")


class ReaderBackend(Protocol):
    def extract_span(self, input: ReaderInput) -> SpanAnswer: ...


def build_reader_input(question: str, context: DialogueContext, config: Config) -> ReaderInput:
    """Serialize the dialogue context and join it to the question.

    Tokens are whitespace words for budgeting purposes; the separator
    counts as one. Any literal separator occurrences inside the inputs are
    neutralized so formatted contains exactly one.
    """
    if not question.strip():
        raise ValueError("question is empty")
    question = question.replace(SEPARATOR, " ").strip()
    context_str = context.serialize().replace(SEPARATOR, " ")
    budget = config.reader_max_tokens - count_tokens(question) - 1
    context_str = truncate_tokens(context_str, max(budget, 0))
    formatted = f"{question} {SEPARATOR} {context_str}".strip()
    return ReaderInput(question=question, context=context_str, formatted=formatted)


def _require_context(input: ReaderInput) -> str:
    if not input.context.strip():
        raise NoContextError("context segment is empty")
    return input.context


def _no_answer() -> SpanAnswer:
    return SpanAnswer(text="", char_start=0, char_end=0, score=0.0)


class OracleReader:
    """Fixture-backed reader: an explicit question -> answer map.

    The answer must occur verbatim in the context (offsets point at its
    first occurrence); a missing fixture entry yields a zero-score empty
    answer, which callers treat as "no answer".
    """

    def __init__(self, answers: dict[str, str]):
        self.answers = dict(answers)

    @classmethod
    def from_json(cls, path: str | Path) -> "OracleReader":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise ProtocolError(f"{path}: oracle fixture must be a JSON object")
        return cls({str(k): str(v) for k, v in data.items()})

    def extract_span(self, input: ReaderInput) -> SpanAnswer:
        context = _require_context(input)
        answer = self.answers.get(input.question)
        if answer is None:
            return _no_answer()
        start = context.find(answer)
        if start < 0:
            raise ProtocolError(
                f"oracle answer {answer!r} does not occur in the context"
            )
        return SpanAnswer(text=answer, char_start=start, char_end=start + len(answer),
                          score=1.0)


class EchoReader:
    """Trivial stub: the whole context is the answer."""

    def extract_span(self, input: ReaderInput) -> SpanAnswer:
        context = _require_context(input)
        return SpanAnswer(text=context, char_start=0, char_end=len(context), score=1.0)


class RemoteReader:
    """HTTP backend speaking the /extract wire contract.

    POST {endpoint}/extract with {"question", "context"}; the response is
    {"answer", "start", "end", "score"} with offsets in Unicode code
    points over the request's context.
    """

    def __init__(self, endpoint: str, timeout: float = 10.0, max_attempts: int = 3,
                 backoff: float = 0.5):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff = backoff

    def extract_span(self, input: ReaderInput) -> SpanAnswer:
        import requests

        context = _require_context(input)
        payload = {"question": input.question, "context": context}
        last_exc: Exception | None = None
        for attempt in range(1, self.max_attempts + 1):
            try:
                response = requests.post(f"{self.endpoint}/extract", json=payload,
                                         timeout=self.timeout)
                response.raise_for_status()
                return self._parse(response.json(), context)
            except (requests.ConnectionError, requests.Timeout, requests.HTTPError) as exc:
                last_exc = exc
                if attempt < self.max_attempts:
                    time.sleep(self.backoff * 2 ** (attempt - 1))
            except ValueError as exc:
                raise ProtocolError(f"non-JSON response from {self.endpoint}: {exc}")
        raise TransportError(str(last_exc), endpoint=self.endpoint,
                             attempts=self.max_attempts)

    @staticmethod
    def _parse(data: object, context: str) -> SpanAnswer:
        if not isinstance(data, dict):
            raise ProtocolError("response is not a JSON object")
        try:
            answer = str(data["answer"])
            start = int(data["start"])
            end = int(data["end"])
            score = float(data["score"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"response missing or mistyped field: {exc}")
        if not (0 <= start <= end <= len(context)) or context[start:end] != answer:
            raise ProtocolError(
                f"span ({start}, {end}) does not match answer {answer!r} in context"
            )
        return SpanAnswer(text=answer, char_start=start, char_end=end, score=score)


_GENERATIVE_PROMPT = (
    "Copy the contiguous substring of the context that answers the question. "
    "Reply with that substring only, nothing else.\n"
    "Question: {question}\nContext: {context}\nSubstring:"
)


class GenerativeReader:
    """Adapter for generative models behind the same extractive contract.

    The generator is instructed to copy a contiguous context substring; any
    output that is not one is rejected as non-extractive.
    """

    def __init__(self, generate: Callable[[str], str], score: float = 1.0):
        self.generate = generate
        self.score = score

    def extract_span(self, input: ReaderInput) -> SpanAnswer:
        context = _require_context(input)
        raw = self.generate(
            _GENERATIVE_PROMPT.format(question=input.question, context=context)
        ).strip()
        if not raw:
            return _no_answer()
        start = context.find(raw)
        if start < 0:
            raise ProtocolError(f"generator output {raw!r} is not a context substring")
        return SpanAnswer(text=raw, char_start=start, char_end=start + len(raw),
                          score=self.score)


class TransformersReader:
    """Local extractive checkpoint via the transformers QA pipeline.

    Requires the optional local-reader extra. Training the checkpoint is
    out of scope; any SQuAD-style extractive model works.
    """

    def __init__(self, checkpoint: str, device: int = -1):
        try:
            from transformers import pipeline
        except ImportError as exc:
            raise ImportError(
                "TransformersReader needs the 'local-reader' extra "
                "(pip install zeqr[local-reader])"
            ) from exc
        self._pipe = pipeline("question-answering", model=checkpoint,
                              tokenizer=checkpoint, device=device)

    def extract_span(self, input: ReaderInput) -> SpanAnswer:
        context = _require_context(input)
        result = self._pipe(question=input.question, context=context)
        answer = SpanAnswer(text=result["answer"], char_start=result["start"],
                            char_end=result["end"], score=float(result["score"]))
        if context[answer.char_start:answer.char_end] != answer.text:
            raise ProtocolError("model span offsets disagree with the answer text")
        return answer


def make_reader(spec: str) -> ReaderBackend:
    """Build a backend from a CLI spec string.

    Forms: `echo`, `oracle:answers.json`, `remote:http://host:port`,
    `local:/path/to/checkpoint`.
    """
    kind, _, arg = spec.partition(":")
    if kind == "echo":
        return EchoReader()
    if kind == "oracle":
        if not arg:
            raise ValueError("oracle reader needs a fixture path, e.g. oracle:answers.json")
        return OracleReader.from_json(arg)
    if kind == "remote":
        if not arg:
            raise ValueError("remote reader needs an endpoint, e.g. remote:http://host:8000")
        return RemoteReader(arg)
    if kind == "local":
        if not arg:
            raise ValueError("local reader needs a checkpoint path")
        return TransformersReader(arg)
    raise ValueError(f"unknown reader spec {spec!r}")
