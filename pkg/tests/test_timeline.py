import pytest

from afcmem.errors import InvalidParameterError, SchedulingError
from afcmem.timeline import PHASE_ORDER, Phase, Timeline, build_timeline


@pytest.mark.parametrize("kind", ["single_afc", "double_afc"])
def test_default_sequence(kind):
    tl = build_timeline(kind)
    assert [p.name for p in tl.phases] == list(PHASE_ORDER)
    assert tl.phase("initialization").duration == pytest.approx(1.5)
    assert tl.phase("wait").duration == pytest.approx(0.2)
    assert tl.phase("storage_trials").duration == pytest.approx(0.25)
    assert tl.phase("storage_trials").repetitions == 5000


def test_preparation_durations():
    assert build_timeline("single_afc").phase("afc_preparation").duration == pytest.approx(1.25)
    dbl = build_timeline("double_afc").phase("afc_preparation")
    assert dbl.repetitions == 9000
    assert dbl.duration == pytest.approx(0.45)


def test_phases_tile_the_cycle():
    tl = build_timeline("single_afc")
    t = 0.0
    for p in tl.phases:
        assert p.start == pytest.approx(t)
        t = p.end
    assert tl.total_duration == pytest.approx(sum(p.duration for p in tl.phases))
    assert tl.total_duration == pytest.approx(1.5 + 1.25 + 0.2 + 0.25)
    rows = tl.rows()
    assert rows[-1]["start_ms"] + rows[-1]["duration_ms"] == pytest.approx(tl.total_duration * 1e3)


def test_zero_repetitions_drop_phase():
    tl = build_timeline("single_afc", {"initialization": 0})
    assert "initialization" not in [p.name for p in tl.phases]
    assert tl.phases[0].start == 0.0
    with pytest.raises(KeyError):
        tl.phase("initialization")


def test_bad_inputs():
    with pytest.raises(InvalidParameterError):
        build_timeline("triple_afc")
    with pytest.raises(InvalidParameterError):
        build_timeline("single_afc", {"cooldown": 3})
    with pytest.raises(InvalidParameterError):
        build_timeline("single_afc", {"wait": -1})
    with pytest.raises(InvalidParameterError):
        build_timeline("single_afc", {"wait": 1.5})


def test_timeline_validation():
    a = Phase("initialization", 1e-3, 10, 0.0)
    with pytest.raises(SchedulingError):
        Timeline("x", (a, Phase("wait", 0.2, 1, 0.5)))  # gap
    with pytest.raises(SchedulingError):
        Timeline("x", (Phase("wait", 0.2, 1, 0.0), Phase("initialization", 1e-3, 10, 0.2)))
    with pytest.raises(SchedulingError):
        Timeline("x", (Phase("wait", 0.0, 1, 0.0),))
