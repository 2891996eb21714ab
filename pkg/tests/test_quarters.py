import pytest

from opdpipe.errors import InvalidValueError
from opdpipe.quarters import FIRST_QUARTER, LAST_QUARTER, Quarter, study_quarters


def test_index_and_labels() -> None:
    assert FIRST_QUARTER.index == 0
    assert str(LAST_QUARTER) == "2025Q1"
    assert LAST_QUARTER.index == 32
    assert len(study_quarters()) == 33
    assert Quarter.parse(" 2019q3 ") == Quarter(2019, 3)
    assert Quarter.from_index(Quarter(2021, 2).index) == Quarter(2021, 2)
    assert Quarter(2019, 4).shift(1) == Quarter(2020, 1)


def test_ordering_follows_index() -> None:
    quarters = study_quarters()
    assert quarters == sorted(quarters)
    assert [q.index for q in quarters] == list(range(33))


@pytest.mark.parametrize("text", ["2019Q5", "2019", "Q1 2019", ""])
def test_bad_labels(text: str) -> None:
    with pytest.raises(InvalidValueError):
        Quarter.parse(text)
