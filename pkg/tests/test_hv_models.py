import itertools
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qcontrol import hv_models as hv
from qcontrol.core import probabilities
from qcontrol.delayed_choice import joint_table, qdc_state

unit = st.floats(0, 1, allow_nan=False)
angle = st.floats(-np.pi, np.pi, allow_nan=False)
nondegenerate_alpha = st.floats(0.05, np.pi / 2 - 0.05)


def brute_residuals(f, x, y, z, v, phi, alpha):
    """Residuals written out term by term; independent of residuals_array."""
    c = np.cos(phi / 2) ** 2
    return (v * (1 - f) * (x - 0.5), f * (1 - z) * (y - c), z * f + v * (1 - f) - np.cos(alpha) ** 2)


def brute_grid(phi, alpha, n, tol=1e-9, classical=False):
    """Full mesh over [0, 1]^5 (v tied to z when classical); slow, only for small n."""
    g = np.arange(n + 1) / n
    hits = []
    for f in g:
        x, y, z, v = np.meshgrid(g, g, g, g if not classical else np.array([0.0]), indexing="ij")
        if classical:
            v = z
        r = brute_residuals(f, x, y, z, v, phi, alpha)
        ok = (np.abs(r[0]) < tol) & (np.abs(r[1]) < tol) & (np.abs(r[2]) < tol)
        hits.append(np.stack([np.full(ok.sum(), f), x[ok], y[ok], z[ok], v[ok]], axis=1))
    return np.concatenate(hits)


def as_set(points):
    return {tuple(np.round(p, 12)) for p in points}


# ---------------------------------------------------------------- distributions

def test_binary_distribution_validation():
    assert hv.BinaryDistribution(0.25, 0.75).as_array().tolist() == [0.25, 0.75]
    with pytest.raises(ValueError):
        hv.BinaryDistribution(0.5, 0.6)
    with pytest.raises(ValueError):
        hv.BinaryDistribution(-0.1, 1.1)


def test_model_validation():
    with pytest.raises(ValueError):
        hv.HVModel(f=1.2, x=0, y=0, z=0, v=0, alpha=0, phi=0)


def test_quantum_joint_examples():
    t = hv.quantum_joint(1.0, 0.0).table
    np.testing.assert_allclose(t, [[0.5, 0], [0.5, 0]], atol=1e-15)
    assert hv.quantum_joint(np.pi, np.pi / 2).table[1, 1] == pytest.approx(1, abs=1e-15)
    np.testing.assert_allclose(hv.quantum_joint(np.pi / 2, np.pi / 4).table, np.full((2, 2), 0.25), atol=1e-15)


@given(angle, angle)
def test_quantum_joint_matches_simulation(phi, alpha):
    assert np.max(np.abs(hv.quantum_joint(phi, alpha).table - joint_table(qdc_state(phi, alpha)))) < 1e-12


def test_hv_joint_examples():
    m = hv.HVModel(f=1, x=0.3, y=0.9, z=1, v=0.4, alpha=0.3, phi=1.0)
    np.testing.assert_allclose(hv.hv_joint(m).table, [[0.5, 0], [0.5, 0]], atol=1e-15)
    m = hv.HVModel(f=0, x=0.5, y=0.1, z=0.2, v=1, alpha=0.3, phi=1.0)
    np.testing.assert_allclose(hv.hv_joint(m).table[:, 0], [0.5, 0.5], atol=1e-15)


@given(angle, angle, unit, unit)
def test_conspiratorial_model_is_adequate(phi, alpha, x, y):
    m = hv.HVModel.conspiratorial(phi, alpha, x, y)
    assert hv.hv_joint(m).max_deviation(hv.quantum_joint(phi, alpha)) < 1e-12
    assert max(abs(r) for r in hv.adequacy_residuals(m)) < 1e-15
    assert m.correlation_signature() == pytest.approx(1, abs=1e-12)
    assert m.p_b_given_lambda()["p"].as_array().tolist() == [1, 0]
    assert m.p_b_given_lambda()["w"].as_array().tolist() == [0, 1]


def test_residual_examples():
    m = hv.HVModel(f=0, x=0.9, y=0.3, z=0.37, v=0.5, alpha=np.pi / 4, phi=1.0)
    r1, r2, r3 = hv.adequacy_residuals(m)
    assert r1 == pytest.approx(0.2, abs=1e-15)  # 1/2 * 1 * 0.4
    assert r3 == pytest.approx(0.0, abs=1e-15)
    phi, alpha = 0.7, 0.5
    m = hv.HVModel(f=0.4, x=0.5, y=np.cos(phi / 2) ** 2, z=0.9, v=(np.cos(alpha) ** 2 - 0.36) / 0.6, alpha=alpha, phi=phi)
    assert max(abs(r) for r in hv.adequacy_residuals(m)) < 1e-15


@given(unit, unit, unit, unit, unit, angle, angle)
def test_residuals_match_brute_formula(f, x, y, z, v, phi, alpha):
    m = hv.HVModel(f, x, y, z, v, alpha, phi)
    np.testing.assert_allclose(hv.adequacy_residuals(m), brute_residuals(f, x, y, z, v, phi, alpha), atol=1e-15)


def test_residuals_vanish_iff_joint_matches():
    rng = np.random.default_rng(0)
    agree = 0
    for _ in range(10**4):
        phi, alpha = rng.uniform(-np.pi, np.pi, 2)
        vals = rng.random(5)
        # mix in adequate models so both sides of the equivalence are exercised
        u = rng.random()
        if u < 0.15:
            vals = hv.HVModel.conspiratorial(phi, alpha, *rng.random(2)).values()
        elif u < 0.3:
            f, z = rng.random(2)
            C = np.cos(alpha) ** 2
            v = (C - z * f) / (1 - f)
            if 0 <= v <= 1:
                vals = (f, 0.5, np.cos(phi / 2) ** 2, z, v)
        m = hv.HVModel(*vals, alpha=alpha, phi=phi)
        small_r = max(abs(r) for r in hv.adequacy_residuals(m)) < 1e-9
        small_d = hv.hv_joint(m).max_deviation(hv.quantum_joint(phi, alpha)) < 1e-8
        assert small_r == small_d
        agree += small_r
    assert agree > 1000


# ---------------------------------------------------------------- families

def test_six_families_at_quarter_bias():
    fams = hv.enumerate_solution_families(np.pi / 3, np.pi / 4)
    assert len(fams) == 6
    consp = [f for f in fams if f.interpretation == hv.CONSPIRATORIAL]
    assert len(consp) == 1
    (c,) = consp
    assert c.pinned_values() == pytest.approx({"v": 0.0, "z": 1.0, "f": 0.5})
    assert set(c.free) == {"x", "y"}
    assert set(c.unreachable) == {"b0_wave", "b1_particle"}
    assert sum(f.interpretation == hv.DUALITY for f in fams) == 5


def test_family_report_is_json():
    fams = hv.enumerate_solution_families(np.pi / 3, np.pi / 4)
    blob = json.loads(json.dumps([f.to_dict() for f in fams]))
    assert {"label", "constraints", "pinned_values", "free", "interpretation", "residual_bound"} <= set(blob[0])


def test_reachability_annotations():
    fams = {f.label: f for f in hv.enumerate_solution_families(1.0, 0.6)}
    only_particles = fams["f=1, y=cos^2(phi/2)"]
    assert "x" in only_particles.free
    assert {"b0_wave", "b1_wave"} <= set(only_particles.unreachable)
    # every free behaviour variable belongs to a branch that never occurs
    for fam in fams.values():
        if "x" in fam.free:
            assert "b0_wave" in fam.unreachable
        if "y" in fam.free:
            assert "b1_particle" in fam.unreachable


@given(angle, nondegenerate_alpha)
def test_duality_families_make_behaviour_lambda_independent(phi, alpha):
    rng = np.random.default_rng(1)
    for fam in hv.enumerate_solution_families(phi, alpha, n_annotate=32):
        if fam.interpretation != hv.DUALITY:
            continue
        gaps = hv.behaviour_gaps(fam.sample(rng, 200), phi)
        assert np.max(gaps) < 1e-9


@given(angle, nondegenerate_alpha)
def test_family_soundness(phi, alpha):
    rng = np.random.default_rng(2)
    for fam in hv.enumerate_solution_families(phi, alpha, n_annotate=16):
        members = fam.sample(rng, 1000)
        assert np.max(np.abs(hv.residuals_array(members, phi, alpha))) < 1e-9
        assert fam.contains(members).all()


def test_grid_oracle_matches_full_mesh():
    for phi, alpha in [(np.pi / 3, np.pi / 4), (2 * np.pi / 3, np.pi / 3)]:
        fast = hv.grid_oracle(phi, alpha, step=1 / 16)
        assert as_set(fast) == as_set(brute_grid(phi, alpha, 16))
        fast = hv.grid_oracle(phi, alpha, step=1 / 16, classical=True, workers=4)
        assert as_set(fast) == as_set(brute_grid(phi, alpha, 16, classical=True))


@pytest.mark.parametrize(
    "phi, alpha",
    [(np.pi / 3, np.pi / 4), (2 * np.pi / 3, np.pi / 3), (np.pi / 2, np.pi / 6), (np.pi, np.pi / 4), (0.0, np.pi / 4)],
)
def test_family_completeness_coarse_grid(phi, alpha):
    fams = hv.enumerate_solution_families(phi, alpha)
    pts = brute_grid(phi, alpha, 32)
    assert len(pts) > 0
    assert hv.in_any_family(pts, fams).all()


@pytest.mark.parametrize("alpha", [0.0, np.pi / 2, -np.pi / 2])
def test_degenerate_bias(alpha):
    with pytest.raises(hv.DegenerateBiasError):
        hv.enumerate_solution_families(1.0, alpha)
    fams = hv.enumerate_solution_families(1.0, alpha, allow_degenerate=True)
    assert all("degenerate bias" in " ".join(f.notes) for f in fams)
    assert not any(f.interpretation == hv.CONSPIRATORIAL for f in fams)
    pts = hv.grid_oracle(1.0, alpha, step=1 / 32)
    assert hv.in_any_family(pts, fams).all()
    with pytest.raises(hv.DegenerateBiasError):
        hv.classical_control_analysis(1.0, alpha)


def test_degenerate_phase_is_annotated():
    fams = hv.enumerate_solution_families(0.0, np.pi / 4)
    assert all("degenerate phase" in " ".join(f.notes) for f in fams)
    assert len(fams) == 6


# ---------------------------------------------------------------- classical control

def test_classical_analysis_example():
    phi, alpha = np.pi / 3, np.pi / 4
    rep = hv.classical_control_analysis(phi, alpha)
    assert rep.z_forced == pytest.approx(0.5)
    assert not rep.conspiratorial_present and rep.lambda_independent
    assert {f.label for f in rep.families} == {"f=1, y=cos^2(phi/2)", "x=1/2, f=0", "x=1/2, y=cos^2(phi/2)"}
    c = np.cos(np.pi / 6) ** 2
    rng = np.random.default_rng(3)
    for fam in rep.families:
        f, x, y, z, v = fam.sample(rng, 500).T
        np.testing.assert_allclose(z, 0.5, atol=1e-12)
        np.testing.assert_allclose(v, z, atol=0)
        assert np.max(np.abs((1 - f) * (x - 0.5))) < 1e-12
        assert np.max(np.abs(f * (y - c))) < 1e-12


def test_classical_duality_model_adequate_and_conspiracy_rejected():
    phi, alpha = np.pi / 3, np.pi / 4
    m = hv.HVModel(f=0.5, x=0.5, y=np.cos(phi / 2) ** 2, z=0.5, v=0.5, alpha=alpha, phi=phi)
    assert hv.is_adequate(m)
    fams = hv.enumerate_solution_families(phi, alpha, classical=True)
    assert hv.in_any_family(m.values(), fams).all()
    consp = hv.HVModel.conspiratorial(phi, alpha)
    assert not hv.in_any_family(consp.values(), fams).any()


@given(angle, nondegenerate_alpha)
def test_classical_exclusion_property(phi, alpha):
    rep = hv.classical_control_analysis(phi, alpha, n_samples=200)
    assert not rep.conspiratorial_present
    assert rep.lambda_independent


# ---------------------------------------------------------------- predicates

def test_strong_determinism_examples():
    t = hv.deterministic_theory(lambda s, lam: (lam,), (1,), (2,), 2)
    assert hv.check_strong_determinism(t)
    t = hv.deterministic_theory(lambda s, lam: (s[0] ^ lam, s[1]), (2, 2), (2, 2), 2)
    assert hv.check_strong_determinism(t)
    realist = hv.mzi_theory(hv.HVModel(f=0.5, x=0.5, y=0.5, z=0.5, v=0.5, alpha=np.pi / 4, phi=np.pi / 2))
    assert not hv.check_strong_determinism(realist)


def test_parameter_independence_examples():
    rng = np.random.default_rng(4)
    pa = rng.dirichlet(np.ones(2), size=(2, 3))  # [A, lam, a]
    pb = rng.dirichlet(np.ones(2), size=(2, 3))  # [B, lam, b]
    response = np.einsum("ila,jlb->ijlab", pa, pb)
    product = hv.HVTheory(response, np.full((2, 2, 3), 1 / 3))
    assert hv.check_parameter_independence(product)
    signalling = response.copy()
    signalling[0, 1, 0] = [[1, 0], [0, 0]]
    assert not hv.check_parameter_independence(hv.HVTheory(signalling, np.full((2, 2, 3), 1 / 3)))
    with pytest.warns(hv.VacuousPredicateWarning):
        assert hv.check_parameter_independence(hv.mzi_theory(hv.HVModel.conspiratorial(1.0, 0.4)))


def test_strong_determinism_implies_parameter_independence():
    rng = np.random.default_rng(5)
    strong = 0
    for _ in range(1000):
        t = hv.random_deterministic_theory(rng)
        if hv.check_strong_determinism(t):
            strong += 1
            assert hv.check_parameter_independence(t)
    assert strong >= 300


def test_lambda_independence_examples():
    uniform = hv.HVTheory(np.full((3, 2, 2), 0.5), np.full((3, 2), 0.5))
    assert hv.check_lambda_independence(uniform)
    same = hv.HVTheory(np.full((2, 2, 2), 0.5), np.array([[0.3, 0.7], [0.3, 0.7]]))
    assert hv.check_lambda_independence(same)
    assert not hv.check_lambda_independence(hv.bias_setting_theory(1.0, [np.pi / 4, np.pi / 8]))
    with pytest.raises(ValueError):
        hv.check_lambda_independence(hv.HVTheory(np.full((1, 2, 2), 0.5), np.full((1, 2), 0.5)))


def test_weak_determinism_examples():
    table = hv.deterministic_theory(lambda s, lam: (s[0], lam), (2, 2), (2, 2), 2)
    assert hv.check_weak_determinism(table, ((1, 0), 1))
    realist = hv.mzi_theory(hv.HVModel(f=0.5, x=0.5, y=0.5, z=0.5, v=0.5, alpha=np.pi / 4, phi=np.pi / 2))
    assert not hv.check_weak_determinism(realist, ((0,), 0))
    # outcome of measurement 0 reads the remote setting: weakly but not strongly deterministic
    joint_only = hv.deterministic_theory(lambda s, lam: (s[0] ^ s[1] ^ lam, s[1]), (2, 2), (2, 2), 2)
    assert all(
        hv.check_weak_determinism(joint_only, (s, lam))
        for s in itertools.product((0, 1), repeat=2)
        for lam in (0, 1)
    )
    assert not hv.check_strong_determinism(joint_only)
    with pytest.raises(ValueError):
        hv.check_weak_determinism(joint_only, ((0,), 0))
    with pytest.raises(ValueError):
        hv.check_weak_determinism(joint_only, ((0, 1), None))


def test_theory_validation():
    with pytest.raises(ValueError):
        hv.HVTheory(np.full((2, 2, 2), 0.4), np.full((2, 2), 0.5))
    with pytest.raises(ValueError):
        hv.HVTheory(np.full((2, 2, 2), 0.5), np.full((3, 2), 0.5))


def test_mzi_theory_hidden_distribution_uses_bayes():
    m = hv.HVModel.conspiratorial(1.0, 0.5)
    t = hv.mzi_theory(m)
    np.testing.assert_allclose(t.hidden, [[1, 0], [0, 1]], atol=1e-12)
    assert not hv.check_lambda_independence(t)
    # the photon marginal of the quantum state is reproduced
    p1 = sum(t.response[b, lam, 1] * t.hidden[b, lam] * [np.cos(0.5) ** 2, np.sin(0.5) ** 2][b] for b in (0, 1) for lam in (0, 1))
    assert p1 == pytest.approx(probabilities(qdc_state(1.0, 0.5), [0])[1], abs=1e-12)
