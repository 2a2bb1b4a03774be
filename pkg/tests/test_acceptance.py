"""Acceptance criteria at their stated tolerances, one printed line each."""

import pytest

from ifacesim import acceptance


@pytest.mark.parametrize("number", sorted(acceptance.CRITERIA))
def test_criterion(number, capsys):
    kwargs = {} if number not in (6, 9, 10) else {"workers": None}
    result = acceptance.CRITERIA[number](**kwargs)
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.detail
