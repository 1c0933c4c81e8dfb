import textwrap

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import pulseopt as po

ABSOLUTE = textwrap.dedent("""\
    [levels]
    alpha = 0.0
    beta = 0.017671
    p = 0.035282

    [couplings]
    alpha beta = 0.073
    beta p = 0.098

    [target]
    alpha = alpha
    beta = beta

    [perturbers]
    p = beta

    [drive]
    F0 = 4.07606e-4
    n_half = 1
    shape = sin2
    mode = optimized

    [numerics]
    rtol = 1e-10
    grid = 2000
    """)

PAIRWISE = textwrap.dedent("""\
    [levels]
    reference = alpha
    pair beta alpha = 0.017671 +1 0.073
    pair p beta = 0.017611 +1 0.098

    [couplings]

    [target]
    alpha = alpha
    beta = beta

    [perturbers]
    p = beta

    [drive]
    F0 = 4.07606e-4
    n_half = 1
    """)


def scn(text: str) -> po.Scenario:
    return po.parse_scenario(text)


def reject(text: str, match: str):
    with pytest.raises(po.ScenarioError, match=match):
        scn(text)


def test_parse_absolute_form():
    sc = scn(ABSOLUTE)
    assert sc.system.labels == ("alpha", "beta", "p")
    assert sc.system.energies == pytest.approx([0.0, 0.017671, 0.035282])
    assert sc.system.moments[0, 1] == 0.073
    assert sc.system.moments[1, 2] == 0.098
    assert sc.system.moments[0, 2] == 0.0
    assert sc.pair == po.TargetPair(0, 1)
    assert sc.perturbers == (po.PerturberSpec(attached_to=1, level=2),)
    assert sc.drive.f0 == 4.07606e-4
    assert sc.drive.n_half == 1
    assert sc.drive.mode == "optimized"
    assert sc.numerics.rtol == 1e-10
    assert sc.numerics.grid == 2000


def test_pairwise_form_matches_absolute():
    # the pair lines fix E_beta - E_alpha and E_p - E_beta; couplings ride
    # along on the same lines
    a = scn(ABSOLUTE)
    b = scn(PAIRWISE)
    assert b.system.labels == ("alpha", "beta", "p")
    assert b.system.energies == pytest.approx(a.system.energies - a.system.energies[0])
    assert b.system.moments[0, 1] == a.system.moments[0, 1]
    assert b.system.moments[1, 2] == a.system.moments[1, 2]
    assert b.pair == a.pair
    assert b.perturbers == a.perturbers


def test_bundled_scenarios_parse(scenario_dir):
    for path in sorted(scenario_dir.glob("*.scn")):
        sc = po.load_scenario(path)
        assert sc.system.n == 3
        assert sc.drive.f0 > 0


def test_round_trip_bundled(scenario_dir):
    for path in sorted(scenario_dir.glob("*.scn")):
        sc = po.load_scenario(path)
        again = scn(po.serialize_scenario(sc))
        assert again == sc


def test_defaults():
    sc = scn(PAIRWISE)
    assert sc.drive.shape == po.SIN2
    assert sc.drive.mode == "optimized"
    assert sc.drive.manual_duration is None
    assert sc.numerics == po.Numerics()


def test_comments_and_blank_lines():
    text = "# top comment\n" + ABSOLUTE.replace(
        "[drive]", "# about the drive\n\n[drive]")
    assert scn(text) == scn(ABSOLUTE)


def test_error_unknown_section():
    reject(ABSOLUTE + "\n[extra]\nx = 1\n", "unknown section")


def test_error_duplicate_section():
    reject(ABSOLUTE + "\n[drive]\nF0 = 1e-4\n", "duplicate section")


def test_error_entry_before_section():
    reject("x = 1\n" + ABSOLUTE, "before any section")


def test_error_garbage_line_number():
    bad = ABSOLUTE.replace("alpha = 0.0", "alpha 0.0")
    with pytest.raises(po.ScenarioError, match="line 2"):
        scn(bad)


def test_error_duplicate_level():
    reject(ABSOLUTE.replace("beta = 0.017671", "alpha = 0.017671"),
           "duplicate level")


def test_error_unknown_level_in_coupling():
    reject(ABSOLUTE.replace("alpha beta = 0.073", "alpha gamma = 0.073"),
           "unknown level")


def test_error_conflicting_coupling():
    reject(ABSOLUTE.replace("beta p = 0.098",
                            "beta p = 0.098\np beta = 0.07"),
           "conflicting coupling")


def test_error_coupling_same_level():
    reject(ABSOLUTE.replace("beta p = 0.098", "beta beta = 0.098"),
           "distinct")


def test_error_missing_target():
    reject(ABSOLUTE.replace("alpha = alpha\n", ""), "needs an alpha")


def test_error_missing_drive_key():
    reject(ABSOLUTE.replace("n_half = 1\n", ""), "needs an n_half")


def test_error_negative_f0():
    reject(ABSOLUTE.replace("F0 = 4.07606e-4", "F0 = -1e-4"), "nonnegative")


def test_error_zero_f0_without_manual():
    reject(ABSOLUTE.replace("F0 = 4.07606e-4", "F0 = 0.0"),
           "only meaningful with mode = manual")


def test_zero_f0_with_manual_accepted():
    text = ABSOLUTE.replace("F0 = 4.07606e-4", "F0 = 0.0").replace(
        "mode = optimized", "mode = manual\nT = 1000.0")
    sc = scn(text)
    assert sc.drive.f0 == 0.0
    assert sc.drive.manual_duration == 1000.0


def test_error_manual_without_duration():
    reject(ABSOLUTE.replace("mode = optimized", "mode = manual"),
           "needs a T line")


def test_error_unknown_mode():
    reject(ABSOLUTE.replace("mode = optimized", "mode = fancy"),
           "unknown mode")


def test_error_unknown_shape():
    reject(ABSOLUTE.replace("shape = sin2", "shape = box"), "unknown shape")


def test_error_bad_number():
    reject(ABSOLUTE.replace("F0 = 4.07606e-4", "F0 = four"), "not a number")


def test_error_bad_rtol():
    reject(ABSOLUTE.replace("rtol = 1e-10", "rtol = 0"), "rtol")


def test_error_bad_grid():
    reject(ABSOLUTE.replace("grid = 2000", "grid = 1"), "grid")


def test_error_pair_sign_token():
    reject(PAIRWISE.replace("+1 0.073", "2 0.073"), "sign")


def test_error_pairwise_needs_reference():
    reject(PAIRWISE.replace("reference = alpha\n", ""), "reference")


def test_error_pairwise_disconnected():
    text = PAIRWISE.replace(
        "pair p beta = 0.017611 +1 0.098",
        "pair p q = 0.017611 +1 0.098")
    with pytest.raises(po.ScenarioError):
        scn(text)


def test_error_pairwise_conflict():
    # a second pair line that contradicts an energy fixed earlier
    text = PAIRWISE.replace(
        "pair p beta = 0.017611 +1 0.098",
        "pair p beta = 0.017611 +1 0.098\npair p alpha = 0.01 +1 0.05")
    reject(text, "contradicts")


def test_error_perturber_coupled_to_both():
    text = ABSOLUTE.replace("beta p = 0.098", "beta p = 0.098\nalpha p = 0.01")
    with pytest.raises(po.ScenarioError):
        scn(text)


def test_serialization_is_canonical_absolute():
    sc = scn(PAIRWISE)
    text = po.serialize_scenario(sc)
    assert "[levels]" in text
    assert "reference" not in text
    assert "pair " not in text
    assert scn(text) == sc


label_st = st.from_regex(r"[a-z][a-z0-9_]{0,5}", fullmatch=True)


@settings(max_examples=40, deadline=None)
@given(
    labels=st.lists(label_st, min_size=3, max_size=3, unique=True),
    gap1=st.floats(0.001, 1.0),
    gap2=st.floats(0.001, 1.0),
    mu1=st.floats(0.001, 1.0),
    mu2=st.floats(0.001, 1.0),
    f0=st.floats(1e-6, 1e-2),
    n_half=st.integers(1, 12),
    shape=st.sampled_from([po.SIN2, po.CONSTANT]),
    mode=st.sampled_from(["unoptimized", "frequency_only", "optimized"]),
)
def test_round_trip_random_scenarios(labels, gap1, gap2, mu1, mu2, f0,
                                     n_half, shape, mode):
    a, b, p = labels
    moments = np.zeros((3, 3))
    moments[0, 1] = moments[1, 0] = mu1
    moments[1, 2] = moments[2, 1] = mu2
    system = po.build_system(labels, [0.0, gap1, gap1 + gap2], moments)
    sc = po.Scenario(
        system=system,
        pair=po.TargetPair(0, 1),
        perturbers=(po.PerturberSpec(attached_to=1, level=2),),
        drive=po.DriveSpec(f0=f0, n_half=n_half, shape=shape, mode=mode),
        numerics=po.Numerics(),
    )
    again = scn(po.serialize_scenario(sc))
    assert again == sc
    assert np.array_equal(again.system.energies, sc.system.energies)
    assert np.array_equal(again.system.moments, sc.system.moments)
