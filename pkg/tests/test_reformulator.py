import json

import pytest
from hypothesis import given, strategies as st

from conftest import (
    BIOPSY_COREF_QUESTION,
    BIOPSY_OMISSION_QUESTION,
    BIOPSY_Q4,
    BIOPSY_Q4_RESOLVED,
    BIOPSY_Q4_STAR,
)
from zeqr.datamodel import Config, DialogueContext, Turn, context_for_turn
from zeqr.errors import TransportError
from zeqr.reader import OracleReader
from zeqr.reformulator import (
    make_coref_question,
    make_omission_question,
    reformulate,
    resolve_coreference,
    resolve_omission,
)


# ---- templates ----

def test_coref_template_biopsy_turn():
    assert make_coref_question("that", BIOPSY_Q4) == BIOPSY_COREF_QUESTION


def test_coref_template_simple():
    assert make_coref_question("it", "Is it safe?") == 'What is it refer to, in "Is it safe?"'


def test_coref_template_possessive_surface():
    query = "What is its main economic activity?"
    assert make_coref_question("its", query) == \
        'What is its refer to, in "What is its main economic activity?"'


def test_omission_template_biopsy_turn():
    assert make_omission_question("treatments", "noun", BIOPSY_Q4_STAR) == \
        BIOPSY_OMISSION_QUESTION


def test_omission_template_verb():
    assert make_omission_question("spread", "verb", "how likely is it to spread?") == \
        'spread to what, in "how likely is it to spread?"'


def test_omission_template_noun_preposition():
    assert make_omission_question("rules", "noun", "What are the EU rules?") == \
        'rules of what, in "What are the EU rules?"'


def test_omission_template_rejects_unknown_kind():
    with pytest.raises(ValueError):
        make_omission_question("x", "adjective", "q")


# ---- resolve_coreference ----

def test_biopsy_coreference(biopsy_session, biopsy_oracle, hand_idf):
    config = Config()
    ctx = context_for_turn(biopsy_session, 4, config)
    q_star, steps = resolve_coreference(BIOPSY_Q4, ctx, biopsy_oracle, config)
    assert q_star == BIOPSY_Q4_STAR
    assert len(steps) == 1 and steps[0].applied
    assert steps[0].question == BIOPSY_COREF_QUESTION


def test_pronoun_free_query_is_untouched(biopsy_session, biopsy_oracle):
    config = Config()
    ctx = context_for_turn(biopsy_session, 4, config)
    q_star, steps = resolve_coreference("What are the EU rules?", ctx,
                                        biopsy_oracle, config)
    assert q_star == "What are the EU rules?"
    assert steps == []


def test_possessive_replacement_takes_clitic():
    config = Config()
    ctx = DialogueContext(prior_queries=("What is the population of Salt Lake City?",))
    oracle = OracleReader({
        'What is its refer to, in "What is its main economic activity?"': "Salt Lake City",
    })
    q_star, steps = resolve_coreference("What is its main economic activity?",
                                        ctx, oracle, config)
    assert q_star == "What is Salt Lake City's main economic activity?"
    assert steps[0].applied


def test_empty_context_skips_steps():
    config = Config()
    q_star, steps = resolve_coreference("Is it safe?", DialogueContext(),
                                        OracleReader({}), config)
    assert q_star == "Is it safe?"
    assert len(steps) == 1 and not steps[0].applied and steps[0].answer is None


def test_answer_equal_to_pronoun_is_skipped():
    config = Config()
    ctx = DialogueContext(prior_queries=("it it it",))
    oracle = OracleReader({'What is it refer to, in "Is it safe?"': "it"})
    q_star, steps = resolve_coreference("Is it safe?", ctx, oracle, config)
    assert q_star == "Is it safe?"
    assert not steps[0].applied


def test_low_score_answer_is_skipped():
    class LowScoreReader:
        def extract_span(self, rinput):
            from zeqr.reader import SpanAnswer
            return SpanAnswer(text="something", char_start=0, char_end=9, score=0.1)

    config = Config(min_answer_score=0.5)
    ctx = DialogueContext(prior_queries=("something else",))
    q_star, steps = resolve_coreference("Is it safe?", ctx, LowScoreReader(), config)
    assert q_star == "Is it safe?"
    assert not steps[0].applied


def test_multiple_pronouns_share_stage_start_question():
    config = Config()
    ctx = DialogueContext(prior_queries=("I had a breast biopsy.",),
                          latest_answer="Non-invasive breast cancer stays in the ducts.")
    question = 'What is it refer to, in "Once it breaks out, how likely is it to spread?"'
    oracle = OracleReader({question: "breast cancer"})
    q_star, steps = resolve_coreference(
        "Once it breaks out, how likely is it to spread?", ctx, oracle, config)
    assert q_star == "Once breast cancer breaks out, how likely is breast cancer to spread?"
    assert [s.question for s in steps] == [question, question]
    assert all(s.applied for s in steps)


# ---- resolve_omission ----

def test_biopsy_omission(biopsy_session, biopsy_oracle, hand_idf):
    config = Config()
    ctx = context_for_turn(biopsy_session, 4, config)
    q2, steps = resolve_omission(BIOPSY_Q4_STAR, ctx, hand_idf, biopsy_oracle, config)
    assert q2 == BIOPSY_Q4_RESOLVED
    assert len(steps) == 1 and steps[0].applied
    assert steps[0].preposition == "of"


def test_eu_rules_omission(hand_idf):
    config = Config()
    ctx = DialogueContext(prior_queries=("Tell me about GMO Food labeling.",),
                          latest_answer="The EU rules of GMO Food labeling are strict.")
    oracle = OracleReader({
        'rules of what, in "What are the EU rules?"': "GMO Food labeling",
    })
    q2, steps = resolve_omission("What are the EU rules?", ctx, hand_idf, oracle, config)
    assert q2 == "What are the EU rules of GMO Food labeling?"


def test_duplicate_answer_is_not_inserted(hand_idf):
    config = Config()
    ctx = DialogueContext(prior_queries=("Salt Lake City info",),
                          latest_answer="Salt Lake City is in Utah.")
    oracle = OracleReader({
        'activity of what, in "What is Salt Lake City\'s main economic activity?"':
            "Salt Lake City",
    })
    query = "What is Salt Lake City's main economic activity?"
    q2, steps = resolve_omission(query, ctx, hand_idf, oracle, config)
    assert q2 == query
    assert len(steps) == 1 and not steps[0].applied


# ---- reformulate ----

def test_biopsy_full_mode_exact(biopsy_session, biopsy_oracle, hand_idf):
    config = Config(mode="full")
    ctx = context_for_turn(biopsy_session, 4, config)
    trace = reformulate(biopsy_session.turns[3], ctx, hand_idf, biopsy_oracle, config)
    assert trace.q_double_star == BIOPSY_Q4_RESOLVED
    assert trace.q_star == BIOPSY_Q4_STAR


def test_turn1_empty_context_identity(biopsy_session, biopsy_oracle, hand_idf):
    config = Config(mode="full")
    ctx = context_for_turn(biopsy_session, 1, config)
    trace = reformulate(biopsy_session.turns[0], ctx, hand_idf, biopsy_oracle, config)
    assert trace.q_double_star == biopsy_session.turns[0].raw_query


def _footnote_fixture(hand_idf):
    raw = "That is better than I thought. What are common ones?"
    context = DialogueContext(
        prior_queries=("How deadly is Lobular Carcinoma in Situ?",),
        latest_answer="In this case it will be described as Lobular Neoplasia. "
                      "Common treatments include careful monitoring.",
    )
    oracle = OracleReader({
        f'What is That refer to, in "{raw}"': "Lobular Neoplasia",
        f'What is ones refer to, in "{raw}"': "treatments",
        'treatments of what, in "Lobular Neoplasia is better than I thought. '
        'What are common treatments?"': "Lobular Carcinoma in Situ",
    })
    return raw, context, oracle


def test_footnote_scenario_full_resolves_both(hand_idf):
    raw, context, oracle = _footnote_fixture(hand_idf)
    config = Config(mode="full")
    trace = reformulate(Turn(1, raw), context, hand_idf, oracle, config)
    assert trace.q_double_star == (
        "Lobular Neoplasia is better than I thought. "
        "What are common treatments of Lobular Carcinoma in Situ?"
    )


def test_footnote_scenario_omission_only_misses_ones(hand_idf):
    raw, context, oracle = _footnote_fixture(hand_idf)
    config = Config(mode="omission_only")
    trace = reformulate(Turn(1, raw), context, hand_idf, oracle, config)
    assert "ones" in trace.q_double_star
    assert trace.q_double_star == raw


def test_passthrough_is_identity(biopsy_session, biopsy_oracle, hand_idf):
    config = Config(mode="passthrough")
    ctx = context_for_turn(biopsy_session, 4, config)
    trace = reformulate(biopsy_session.turns[3], ctx, hand_idf, biopsy_oracle, config)
    assert trace.q_double_star == BIOPSY_Q4
    assert trace.coref_steps == () and trace.omission_steps == ()


def test_mode_algebra(biopsy_session, biopsy_oracle, hand_idf):
    ctx = context_for_turn(biopsy_session, 4, Config())
    turn = biopsy_session.turns[3]
    full = reformulate(turn, ctx, hand_idf, biopsy_oracle, Config(mode="full"))
    coref = reformulate(turn, ctx, hand_idf, biopsy_oracle, Config(mode="coref_only"))
    assert full.q_star == coref.q_double_star == coref.q_star


def test_idempotent_on_resolved_queries(hand_idf):
    config = Config(mode="full")
    ctx = DialogueContext(prior_queries=("anything",), latest_answer="more text")
    turn = Turn(1, "What are the EU rules of GMO Food labeling?")
    trace = reformulate(turn, ctx, hand_idf, OracleReader({}), config)
    assert trace.q_double_star == turn.raw_query


def test_trace_order_and_serialization(biopsy_session, biopsy_oracle, hand_idf):
    config = Config(mode="full")
    ctx = context_for_turn(biopsy_session, 4, config)
    trace = reformulate(biopsy_session.turns[3], ctx, hand_idf, biopsy_oracle, config)
    payload = json.loads(json.dumps(trace.to_dict()))
    assert payload["raw_query"] == BIOPSY_Q4
    assert payload["coref_steps"][0]["applied"] is True
    assert payload["omission_steps"][0]["preposition"] == "of"


def test_reader_errors_propagate(hand_idf):
    class FailingReader:
        def extract_span(self, rinput):
            raise TransportError("down", endpoint="http://x", attempts=3)

    config = Config(mode="full")
    ctx = DialogueContext(prior_queries=("context",), latest_answer="text")
    with pytest.raises(TransportError):
        reformulate(Turn(1, "Is it safe?"), ctx, hand_idf, FailingReader(), config)


def test_containment_on_mini_benchmark(mini_sessions, mini_idf, mini_oracle):
    # every applied fragment came verbatim out of the serialized context
    config = Config(idf_threshold=1.5, mode="full")
    for session in mini_sessions:
        for turn in session.turns:
            ctx = context_for_turn(session, turn.turn_id, config)
            trace = reformulate(turn, ctx, mini_idf, mini_oracle, config)
            serialized = ctx.serialize()
            for step in trace.coref_steps + trace.omission_steps:
                if step.applied:
                    assert step.answer.text in serialized


def test_backend_interchangeability(biopsy_session, biopsy_oracle, hand_idf):
    # a generative backend returning the same spans produces the same rewrite
    from zeqr.reader import GenerativeReader

    answers = dict(biopsy_oracle.answers)

    def generate(prompt):
        question = prompt.split("Question: ", 1)[1].split("\nContext:", 1)[0]
        return answers.get(question, "")

    config = Config(mode="full")
    ctx = context_for_turn(biopsy_session, 4, config)
    turn = biopsy_session.turns[3]
    via_oracle = reformulate(turn, ctx, hand_idf, biopsy_oracle, config)
    via_generator = reformulate(turn, ctx, hand_idf, GenerativeReader(generate), config)
    assert via_oracle.q_double_star == via_generator.q_double_star


# ---- containment property ----

@given(st.integers(min_value=0, max_value=30), st.integers(min_value=1, max_value=12))
def test_extractive_containment(start, length):
    # whatever the reader picks from the context is what lands in the query
    context_text = "alpha beta gamma delta epsilon zeta eta theta iota kappa"
    start = min(start, len(context_text) - 1)
    snippet = context_text[start:start + length].strip()
    ctx = DialogueContext(prior_queries=(context_text,))

    class FixedReader:
        def extract_span(self, rinput):
            from zeqr.reader import SpanAnswer
            begin = rinput.context.find(snippet)
            return SpanAnswer(text=snippet, char_start=begin,
                              char_end=begin + len(snippet), score=1.0)

    config = Config(mode="full")
    q_star, steps = resolve_coreference("Is it safe?", ctx, FixedReader(), config)
    inserted = q_star.replace("Is ", "").replace(" safe?", "")
    if steps[0].applied:
        assert inserted in ctx.serialize()
