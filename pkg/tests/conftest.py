from pathlib import Path

import pytest

from fanrec import parse_artist_catalog

DATA = Path(__file__).parent / "data"

TABLE1_CSV = """Name,Gender,Debut,Agency,Size,Active
(G)I-DLE,Female,2/05/18,Cube,5,Yes
KARA,Female,29/03/07,DSP,5,No
14U,Male,17/04/17,BG,14,No
15&,Female,5/10/12,JYP,2,No
1TEAM,Male,27/03/19,Liveworks,5,No
iKON,Male,15/09/15,YG,6,Yes
"""


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def table1():
    return parse_artist_catalog(TABLE1_CSV)


@pytest.fixture
def golden_catalog():
    return parse_artist_catalog((DATA / "golden_catalog.csv").read_text(encoding="utf-8"))


_ACCEPTANCE: list[str] = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
