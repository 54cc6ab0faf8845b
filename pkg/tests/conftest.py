import json
from pathlib import Path

import pytest

from cooccur import WindowConfig, compile, default_lexicon
from cooccur.aggregate import CooccurrenceMatrix
from cooccur.cli import build_run_meta

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def lexicon():
    return default_lexicon()


@pytest.fixture(scope="session")
def matcher(lexicon):
    return compile(lexicon)


@pytest.fixture(scope="session")
def windows():
    return WindowConfig()


def write_jsonl(path: Path, records: list[dict]) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return path


def table1_matrix(lexicon) -> CooccurrenceMatrix:
    """A matrix whose 100-word shares reproduce the pinned proportions
    37.66/45.70/5.58/7.89/2.31/0.86 and 43.64/56.36."""
    meta = build_run_meta(lexicon, WindowConfig())
    m = CooccurrenceMatrix(run_meta=meta)
    race = {
        "White": 3766,
        "Black": 4570,
        "Asian": 558,
        "Hispanic": 789,
        "Native American": 231,
        "Pacific Islander": 86,
    }
    gender = {"female": 4364, "male": 5636}
    src, dis, win = "web", "hypertension", 100
    for cat, n in race.items():
        m.cells[(src, dis, win, "race", cat)] = n
    for cat, n in gender.items():
        m.cells[(src, dis, win, "gender", cat)] = n
    # 120k windows overall; most windows carry no demographic context.
    m.totals[(src, dis, win)] = 120_000
    m.no_demo[(src, dis, win, "race")] = 120_000 - sum(race.values())
    m.no_demo[(src, dis, win, "gender")] = 120_000 - sum(gender.values())
    return m


@pytest.fixture()
def t1_matrix(lexicon):
    return table1_matrix(lexicon)
