"""Two-step query reformulation: coreference resolution, then omission
resolution, each phrased as a templated question to a reading backend.

The order is fixed because pronoun replacement can surface new bare words
that omission resolution must then see. Every turn produces a full audit
trace; a skipped or unanswerable step degrades to the original wording
instead of aborting the turn.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

from .datamodel import Config, DialogueContext, Turn
from .errors import ZeqrError
from .ingest import IdfTable
from .linguistics import (
    OmissionCandidate,
    PronounMention,
    Tagger,
    detect_pronouns,
    find_omission_candidates,
    tokenize_and_tag,
)
from .reader import ReaderBackend, SpanAnswer, build_reader_input

logger = logging.getLogger(__name__)

PREPOSITION_BY_KIND = {"noun": "of", "verb": "to"}


def make_coref_question(pronoun: str, query: str) -> str:
    """Fill the coreference template for one pronoun."""
    if not pronoun or not query:
        raise ValueError("pronoun and query must be non-empty")
    return f'What is {pronoun} refer to, in "{query}"'


def make_omission_question(word: str, kind: str, query: str) -> str:
    """Fill the omission template: `of` for nouns, `to` for verbs."""
    if not word or not query:
        raise ValueError("word and query must be non-empty")
    if kind not in PREPOSITION_BY_KIND:
        raise ValueError(f"kind must be 'noun' or 'verb', got {kind!r}")
    return f'{word} {PREPOSITION_BY_KIND[kind]} what, in "{query}"'


@dataclass(frozen=True)
class CorefStep:
    pronoun: PronounMention
    question: str
    answer: SpanAnswer | None
    applied: bool


@dataclass(frozen=True)
class OmissionStep:
    candidate: OmissionCandidate
    preposition: str
    question: str
    answer: SpanAnswer | None
    applied: bool


@dataclass(frozen=True)
class ReformulationTrace:
    """Complete audit of one turn's rewrite."""

    raw_query: str
    mode: str
    coref_steps: tuple[CorefStep, ...]
    q_star: str
    omission_steps: tuple[OmissionStep, ...]
    q_double_star: str

    def to_dict(self) -> dict:
        return asdict(self)


def _usable(answer: SpanAnswer, config: Config) -> bool:
    return bool(answer.text.strip()) and answer.score >= config.min_answer_score


def resolve_coreference(
    query: str,
    context: DialogueContext,
    reader: ReaderBackend,
    config: Config,
    tagger: Tagger | None = None,
    inventory: frozenset[str] | None = None,
) -> tuple[str, list[CorefStep]]:
    """Replace each detected pronoun with the reader's referent.

    Questions are built independently from the query as it stood when the
    stage started; answers are applied left to right. A step is skipped
    when the context is empty, the answer is empty or below the score
    floor, or the reader just echoed the pronoun back.
    """
    tokens = tokenize_and_tag(query, tagger)
    mentions = detect_pronouns(tokens, inventory)
    steps: list[CorefStep] = []
    current = query
    delta = 0
    for mention in mentions:
        question = make_coref_question(mention.surface, query)
        answer: SpanAnswer | None = None
        applied = False
        if not context.is_empty():
            try:
                answer = reader.extract_span(build_reader_input(question, context, config))
            except ZeqrError:
                logger.warning("coreference step failed for %r in %r",
                               mention.surface, query)
                raise
            replacement = answer.text.strip()
            if _usable(answer, config) and replacement.lower() != mention.surface.lower():
                if mention.is_possessive:
                    replacement += "'s"
                token = tokens[mention.token_index]
                start = token.char_start + delta
                end = token.char_end + delta
                current = current[:start] + replacement + current[end:]
                delta += len(replacement) - (end - start)
                applied = True
        steps.append(CorefStep(mention, question, answer, applied))
    return current, steps


def resolve_omission(
    q_star: str,
    context: DialogueContext,
    idf: IdfTable,
    reader: ReaderBackend,
    config: Config,
    tagger: Tagger | None = None,
) -> tuple[str, list[OmissionStep]]:
    """Append the reader's description after each bare important word.

    Candidates are detected on q_star (coreference output), not the raw
    query. A step is skipped when the context is empty, the answer is
    unusable, already occurs in the query, or equals the focal word.
    """
    tokens = tokenize_and_tag(q_star, tagger)
    candidates = find_omission_candidates(tokens, idf, config.idf_threshold,
                                          config.omission_strict)
    steps: list[OmissionStep] = []
    current = q_star
    delta = 0
    for candidate in candidates:
        preposition = PREPOSITION_BY_KIND[candidate.kind]
        question = make_omission_question(candidate.surface, candidate.kind, q_star)
        answer: SpanAnswer | None = None
        applied = False
        if not context.is_empty():
            try:
                answer = reader.extract_span(build_reader_input(question, context, config))
            except ZeqrError:
                logger.warning("omission step failed for %r in %r",
                               candidate.surface, q_star)
                raise
            description = answer.text.strip()
            duplicate = description.lower() in current.lower()
            if _usable(answer, config) and not duplicate \
                    and description.lower() != candidate.surface.lower():
                insertion = f" {preposition} {description}"
                end = tokens[candidate.token_index].char_end + delta
                current = current[:end] + insertion + current[end:]
                delta += len(insertion)
                applied = True
        steps.append(OmissionStep(candidate, preposition, question, answer, applied))
    return current, steps


def reformulate(
    turn: Turn,
    context: DialogueContext,
    idf: IdfTable,
    reader: ReaderBackend,
    config: Config,
    tagger: Tagger | None = None,
    inventory: frozenset[str] | None = None,
) -> ReformulationTrace:
    """Run the configured pipeline for one turn and return the full trace.

    full runs coreference then omission; coref_only stops after the first
    step; omission_only runs omission directly on the raw query;
    passthrough copies it.
    """
    raw = turn.raw_query
    mode = config.mode
    coref_steps: list[CorefStep] = []
    q_star = raw
    if mode in ("full", "coref_only"):
        q_star, coref_steps = resolve_coreference(raw, context, reader, config,
                                                  tagger=tagger, inventory=inventory)
    omission_steps: list[OmissionStep] = []
    q_double_star = q_star
    if mode in ("full", "omission_only"):
        q_double_star, omission_steps = resolve_omission(q_star, context, idf, reader,
                                                         config, tagger=tagger)
    return ReformulationTrace(
        raw_query=raw,
        mode=mode,
        coref_steps=tuple(coref_steps),
        q_star=q_star,
        omission_steps=tuple(omission_steps),
        q_double_star=q_double_star,
    )
