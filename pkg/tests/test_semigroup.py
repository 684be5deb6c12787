import pytest

from kleinsigma import semigroup as sg
from kleinsigma.errors import InfiniteComplement

NAMED = {
    (3, 7, 8): {"gaps": [1, 2, 4, 5], "alpha": (0, 0, 1, 1), "young": (2, 2, 1, 1)},
    (3, 7): {"gaps": [1, 2, 4, 5, 8, 11], "young": (6, 4, 2, 2, 1, 1)},
    (3, 8): {"gaps": [1, 2, 4, 5, 7, 10, 13], "young": (7, 5, 3, 2, 2, 1, 1)},
    (6, 13, 14, 15, 16): {"gaps": [1, 2, 3, 4, 5, 7, 8, 9, 10, 11, 17, 23],
                          "alpha": (0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 6, 11),
                          "young": (12, 7, 2, 2, 2, 2, 2, 1, 1, 1, 1, 1)},
}


def brute_gaps(gens, top):
    reach = [True] + [False] * top
    for n in range(1, top + 1):
        reach[n] = any(n >= a and reach[n - a] for a in gens)
    return [n for n in range(top + 1) if not reach[n]]


@pytest.mark.parametrize("gens", list(NAMED))
def test_named_semigroups(gens):
    s = sg.NumericalSemigroup(gens)
    want = NAMED[gens]
    assert list(s.gaps) == want["gaps"]
    assert s.genus == len(want["gaps"])
    prof = sg.profile(s)
    if "alpha" in want:
        assert prof.alpha == want["alpha"]
    assert prof.young == want["young"]
    assert sg.young_diagram(s) == want["young"]
    assert prof.weight == sum(prof.alpha)
    assert prof.alpha_min == min(gens)


@pytest.mark.parametrize("gens", list(NAMED) + [(2, 5), (5, 7, 9), (4, 6, 9)])
def test_gaps_against_brute_force(gens):
    s = sg.NumericalSemigroup(gens)
    top = 4 * max(s.gaps)
    assert brute_gaps(gens, top) == list(s.gaps)
    # disjoint union with the semigroup
    assert sorted(list(s.gaps) + s.non_gaps(top)) == list(range(top + 1))


@pytest.mark.parametrize("gens", list(NAMED))
def test_young_rows_shift_alpha(gens):
    # rows are alpha read backwards, each raised by one
    s = sg.NumericalSemigroup(gens)
    prof = sg.profile(s)
    g = s.genus
    assert all(prof.young[i - 1] == prof.alpha[g - i] + 1 for i in range(1, g + 1))
    assert all(a >= b >= 0 for a, b in zip(prof.young, prof.young[1:]))


def test_trivial_semigroup():
    assert sg.gaps([1]) == []
    assert sg.NumericalSemigroup([1]).genus == 0


def test_infinite_complement():
    with pytest.raises(InfiniteComplement):
        sg.gaps([4, 6])


def test_minimal_generators():
    assert sg.minimal_generators([3, 6, 7, 8, 10]) == (3, 7, 8)
    assert sg.NumericalSemigroup([6, 12, 13, 14, 15, 16]).generators == (6, 13, 14, 15, 16)


def test_symmetry():
    assert not sg.is_symmetric(sg.NumericalSemigroup(sg.H4))
    assert sg.is_symmetric(sg.NumericalSemigroup((2, 5)))
    assert sg.is_symmetric(sg.NumericalSemigroup(sg.H12))


def test_buchweitz():
    assert sg.buchweitz_l2(sg.NumericalSemigroup(sg.H_BUCHWEITZ)) == (46, 45, True)
    for gens in (sg.H4, sg.H12):
        s = sg.NumericalSemigroup(gens)
        sums = {a + b for a in s.gaps for b in s.gaps}
        count, bound, obstructed = sg.buchweitz_l2(s)
        assert count == len(sums) and bound == 3 * s.genus - 3 and not obstructed


def test_summary_keys():
    info = sg.summary(sg.NumericalSemigroup(sg.H12))
    assert set(info) >= {"gaps", "genus", "alpha", "weight", "young", "symmetric", "buchweitz"}
    assert info["weight"] == 22
