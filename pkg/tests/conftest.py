from pathlib import Path

import pytest

from zeqr.datamodel import Config, Session, Turn
from zeqr.ingest import IdfTable, build_idf_table, load_collection, load_qrels, load_topics
from zeqr.reader import OracleReader
from zeqr.retrieval import build_index

FIXTURES = Path(__file__).parent / "fixtures"
MINI = FIXTURES / "mini"

# Breast-biopsy dialogue: queries and passages arranged so every referent the
# oracle returns occurs verbatim in the dialogue context.
BIOPSY_Q4 = "Wow, that is better than I thought.  What are common treatments?"
BIOPSY_Q4_STAR = "Wow, Lobular Neoplasia is better than I thought.  What are common treatments?"
BIOPSY_Q4_RESOLVED = (
    "Wow, Lobular Neoplasia is better than I thought.  "
    "What are common treatments of Lobular Carcinoma in Situ?"
)
BIOPSY_COREF_QUESTION = f'What is that refer to, in "{BIOPSY_Q4}"'
BIOPSY_OMISSION_QUESTION = f'treatments of what, in "{BIOPSY_Q4_STAR}"'


@pytest.fixture(scope="session")
def mini_dir() -> Path:
    return MINI


@pytest.fixture(scope="session")
def mini_collection():
    return load_collection(MINI / "collection.jsonl")


@pytest.fixture(scope="session")
def mini_sessions(mini_collection):
    return load_topics(MINI / "topics.json", mini_collection)


@pytest.fixture(scope="session")
def mini_qrels():
    return load_qrels(MINI / "qrels.txt")


@pytest.fixture(scope="session")
def mini_idf(mini_collection):
    return build_idf_table(mini_collection)


@pytest.fixture(scope="session")
def mini_index(mini_collection):
    return build_index(mini_collection)


@pytest.fixture(scope="session")
def mini_oracle():
    return OracleReader.from_json(MINI / "oracle.json")


@pytest.fixture(scope="session")
def mini_config():
    # eta below the 2.65 default: ln(N/df) on a 20-doc corpus tops out at ln(40)
    return Config(idf_threshold=1.5)


@pytest.fixture
def hand_idf():
    """Hand-built table for paper-string fixtures, default eta 2.65."""
    high = 3.5
    low = 0.5
    return IdfTable(
        term_idf={
            "treatments": high, "lobular": high, "carcinoma": high, "situ": high,
            "neoplasia": high, "types": high, "biopsy": high, "breast": high,
            "difference": high, "bologna": low, "mortadella": high,
            "rules": high, "gmo": high, "labeling": low,
            "licenses": high, "permits": high, "activity": high, "spread": 3.0,
            "common": low, "economic": low, "eu": low, "main": low, "city": low,
            "food": low, "thought": low, "needed": low, "cancer": low,
        },
        num_docs=100,
        default_idf=0.3,
    )


@pytest.fixture
def biopsy_session():
    return Session(session_id="79", turns=(
        Turn(1, "I just had a breast biopsy for cancer. What are the most common types?",
             "The most common types of breast cancer are invasive and non-invasive. "
             "Non-invasive breast cancer is when the cancer is still contained in the "
             "milk ducts."),
        Turn(2, "Once it breaks out, how likely is it to spread?",
             "How is Lobular Carcinoma in Situ diagnosed? You often find it through a "
             "biopsy done for some other breast problem."),
        Turn(3, "How deadly is Lobular Carcinoma in Situ?",
             "It is not deadly in most cases. In this case it will be described as "
             "Lobular Neoplasia rather than a true cancer."),
        Turn(4, BIOPSY_Q4),
    ))


@pytest.fixture
def biopsy_oracle():
    return OracleReader({
        BIOPSY_COREF_QUESTION: "Lobular Neoplasia",
        BIOPSY_OMISSION_QUESTION: "Lobular Carcinoma in Situ",
    })
