import numpy as np
import pytest
from dataclasses import replace
from sklearn.exceptions import NotFittedError

from indexcast.anfis import (
    AnfisModel,
    AnfisRegressor,
    GaussianMF,
    TriangularMF,
    build_grid_rules,
    consequent_lse,
    hybrid_epoch,
    mf_from_dict,
    online_init,
    online_update,
    premise_gradient,
)
from indexcast.linalg import rls_init, rls_update


def sse(model, X, t):
    r = model.forward(X) - t
    return float(r @ r)


def fd_premise_gradient(model, X, t, h=1e-6):
    theta = model.premise_params()
    out = np.zeros_like(theta)
    for i in range(theta.size):
        tp = theta.copy()
        tm = theta.copy()
        tp[i] += h
        tm[i] -= h
        out[i] = (
            sse(model.with_premise_params(tp), X, t)
            - sse(model.with_premise_params(tm), X, t)
        ) / (2 * h)
    return out


def small_random_model(rng, kind):
    """Random 2-input grid model with bounded consequents and jittered premises."""
    model = build_grid_rules([(0.0, 1.0), (0.0, 1.0)], mfs_per_input=2, kind=kind)
    theta = model.premise_params()
    theta = theta + rng.uniform(-0.03, 0.03, size=theta.shape)
    model = model.with_premise_params(theta).project_premises()
    return replace(model, consequents=rng.normal(size=model.consequents.shape))


# ---------------------------------------------------------------------------
# membership functions


def test_triangular_values_piecewise():
    mf = TriangularMF(0.0, 0.5, 1.0)
    x = np.array([-0.5, 0.0, 0.25, 0.5, 0.75, 1.0, 1.5])
    got = mf.value(x)
    assert np.allclose(got, [0.0, 0.0, 0.5, 1.0, 0.5, 0.0, 0.0], atol=1e-15)


def test_triangular_asymmetric_hand_values():
    mf = TriangularMF(0.0, 0.2, 1.0)
    assert mf.value(np.array([0.1]))[0] == pytest.approx(0.5, abs=1e-15)
    assert mf.value(np.array([0.6]))[0] == pytest.approx(0.5, abs=1e-15)


def test_triangular_validates_ordering():
    with pytest.raises(ValueError):
        TriangularMF(1.0, 0.5, 0.0)
    with pytest.raises(ValueError):
        TriangularMF(0.5, 0.5, 0.5)


def test_gaussian_hand_values():
    mf = GaussianMF(center=1.0, sigma=2.0)
    assert mf.value(np.array([1.0]))[0] == 1.0
    assert mf.value(np.array([3.0]))[0] == pytest.approx(np.exp(-0.5), rel=1e-14)


@pytest.mark.parametrize("mf", [TriangularMF(0.1, 0.45, 0.9), GaussianMF(0.4, 0.3)])
def test_mf_param_grads_match_fd(mf):
    rng = np.random.default_rng(0)
    x = rng.uniform(0.12, 0.88, size=30)
    x = x[np.abs(x - 0.45) > 1e-3]  # keep clear of the triangle kink
    _, G = mf.value_and_param_grads(x)
    h = 1e-7
    p0 = mf.params
    for i in range(p0.size):
        pp, pm = p0.copy(), p0.copy()
        pp[i] += h
        pm[i] -= h
        fd = (mf.with_params(pp).value(x) - mf.with_params(pm).value(x)) / (2 * h)
        assert np.max(np.abs(G[i] - fd)) < 1e-7


def test_mf_parameter_repair():
    # a raw gradient step can disorder a triangle; the repair sorts it
    fixed = TriangularMF.repair_params(np.array([0.5, 0.2, 0.3]))
    assert fixed[0] <= fixed[1] <= fixed[2]
    assert np.array_equal(fixed, [0.2, 0.3, 0.5])
    # a collapsed triple regains a minimum span
    tight = TriangularMF.repair_params(np.array([0.4, 0.4, 0.4]))
    assert tight[2] - tight[0] > 0
    # widths are clamped positive
    g = GaussianMF.repair_params(np.array([0.1, -3.0]))
    assert g[1] > 0
    assert GaussianMF(0.1, g[1]).sigma == g[1]


def test_model_premise_vector_projection():
    model = build_grid_rules([(0.0, 1.0)], 2, kind="triangular")
    theta = model.premise_params()
    theta[0], theta[1] = theta[1] + 0.2, theta[0] - 0.2  # disorder the first triple
    fixed = model.project_premise_vector(theta)
    repaired = model.with_premise_params(fixed)  # must construct cleanly
    assert repaired.mfs[0][0].left <= repaired.mfs[0][0].peak <= repaired.mfs[0][0].right


def test_mf_dict_round_trip():
    for mf in (TriangularMF(0.0, 0.3, 0.9), GaussianMF(0.5, 0.25)):
        again = mf_from_dict(mf.to_dict())
        assert again == mf


# ---------------------------------------------------------------------------
# model structure


def test_grid_rule_counts():
    assert build_grid_rules([(0, 1)] * 3, 3).n_rules == 27
    assert build_grid_rules([(0, 1)] * 4, 3).n_rules == 81
    assert build_grid_rules([(0, 1)] * 2, 2).n_rules == 4


def test_grid_triangle_layout():
    model = build_grid_rules([(0.0, 2.0)], 3, kind="triangular")
    mfs = model.mfs[0]
    # peaks evenly spaced across the range, feet at the neighboring peaks
    assert [m.peak for m in mfs] == [0.0, 1.0, 2.0]
    assert mfs[1].left == 0.0 and mfs[1].right == 2.0
    # edge functions extend one spacing beyond the range
    assert mfs[0].left == -1.0 and mfs[2].right == 3.0


def test_grid_gaussian_layout():
    model = build_grid_rules([(0.0, 2.0)], 3, kind="gaussian")
    mfs = model.mfs[0]
    assert [m.center for m in mfs] == [0.0, 1.0, 2.0]
    assert all(m.sigma == 0.5 for m in mfs)


def test_normalized_strengths_sum_to_one():
    rng = np.random.default_rng(1)
    for kind in ("triangular", "gaussian"):
        model = build_grid_rules([(0, 1), (0, 1), (0, 1)], 3, kind=kind)
        X = rng.uniform(0, 1, size=(50, 3))
        _, wbar = model.strengths(X)
        assert np.max(np.abs(wbar.sum(axis=1) - 1.0)) < 1e-12


def test_strengths_product_tnorm_hand_case():
    model = build_grid_rules([(0.0, 1.0), (0.0, 1.0)], 2, kind="gaussian")
    x = np.array([[0.25, 0.75]])
    mus = [mf.value(x[:, j]) for j, dim in enumerate(model.mfs) for mf in dim]
    raw, _ = model.strengths(x)
    # rule (i, j) fires with mu_i(x1) * mu_j(x2)
    m1 = [model.mfs[0][i].value(x[:, 0])[0] for i in range(2)]
    m2 = [model.mfs[1][i].value(x[:, 1])[0] for i in range(2)]
    expected = [m1[i] * m2[j] for (i, j) in model.rules]
    assert np.allclose(raw[0], expected, atol=1e-15)


def test_design_matrix_block_structure():
    rng = np.random.default_rng(2)
    model = small_random_model(rng, "gaussian")
    X = rng.uniform(0, 1, size=(6, 2))
    D = model.design_matrix(X)
    assert D.shape == (6, model.n_rules * 3)
    _, wbar = model.strengths(X)
    # block r holds wbar_r * (x1, x2, 1)
    r = 2
    assert np.allclose(D[:, 3 * r : 3 * r + 2], wbar[:, [r]] * X, atol=1e-14)
    assert np.allclose(D[:, 3 * r + 2], wbar[:, r], atol=1e-14)
    assert np.allclose(model.design_row(X[0]), D[0], atol=1e-15)


def test_forward_is_design_times_consequents():
    rng = np.random.default_rng(3)
    model = small_random_model(rng, "triangular")
    X = rng.uniform(0, 1, size=(9, 2))
    assert np.allclose(
        model.forward(X), model.design_matrix(X) @ model.consequents.ravel(), atol=1e-13
    )


def test_model_dict_round_trip():
    rng = np.random.default_rng(4)
    for kind in ("triangular", "gaussian"):
        model = small_random_model(rng, kind)
        again = AnfisModel.from_dict(model.to_dict())
        X = rng.uniform(0, 1, size=(5, 2))
        assert np.array_equal(model.forward(X), again.forward(X))


# ---------------------------------------------------------------------------
# consequent estimation


def test_single_rule_lse_recovers_linear_map():
    model = build_grid_rules([(0.0, 1.0)], 2, kind="gaussian")
    rng = np.random.default_rng(5)
    X = rng.uniform(0, 1, size=(40, 1))
    t = 2.0 * X[:, 0] + 1.0
    fitted = consequent_lse(model, X, t)
    # an exactly-representable target: every rule learns the same line
    assert np.allclose(fitted.forward(X), t, atol=1e-9)


def test_batch_lse_is_a_local_minimum():
    rng = np.random.default_rng(6)
    model = build_grid_rules([(0, 1), (0, 1)], 2, kind="gaussian")
    X = rng.uniform(0, 1, size=(60, 2))
    t = np.sin(3 * X[:, 0]) + X[:, 1]
    fitted = consequent_lse(model, X, t)
    base = sse(fitted, X, t)
    flat = fitted.consequents.ravel()
    for _ in range(150):
        bumped = flat + rng.choice([-1e-3, 1e-3], size=flat.size)
        candidate = replace(fitted, consequents=bumped.reshape(fitted.consequents.shape))
        assert sse(candidate, X, t) >= base - 1e-9


def test_sequential_lse_equals_manual_rls_fold():
    rng = np.random.default_rng(7)
    model = small_random_model(rng, "gaussian")
    X = rng.uniform(0, 1, size=(30, 2))
    t = rng.normal(size=30)
    fitted = consequent_lse(model, X, t, mode="sequential", gamma=1e8)
    st = rls_init(model.n_consequent_params, gamma=1e8)
    for i in range(30):
        st = rls_update(st, model.design_row(X[i]), float(t[i]), lam=1.0)
    assert np.array_equal(fitted.consequents.ravel(), st.x)


def test_sequential_lse_approaches_batch_on_overdetermined_system():
    rng = np.random.default_rng(8)
    model = build_grid_rules([(0, 1)], 2, kind="gaussian")  # 4 consequent params
    X = rng.uniform(0, 1, size=(200, 1))
    t = 1.5 * X[:, 0] - 0.25 + 0.01 * rng.normal(size=200)
    batch = consequent_lse(model, X, t, mode="batch")
    seq = consequent_lse(model, X, t, mode="sequential", gamma=1e8)
    rel = np.max(np.abs(batch.consequents - seq.consequents)) / (
        1.0 + np.max(np.abs(batch.consequents))
    )
    assert rel < 1e-4


def test_consequent_lse_warns_when_underdetermined():
    rng = np.random.default_rng(9)
    model = build_grid_rules([(0, 1), (0, 1)], 3)  # 27 params
    X = rng.uniform(0, 1, size=(10, 2))
    with pytest.warns(UserWarning):
        consequent_lse(model, X, rng.normal(size=10))


# ---------------------------------------------------------------------------
# premise learning


@pytest.mark.parametrize("kind", ["gaussian", "triangular"])
def test_premise_gradient_matches_fd(kind):
    rng = np.random.default_rng(10)
    for _ in range(6):
        model = small_random_model(rng, kind)
        X = rng.uniform(0.05, 0.95, size=(25, 2))
        t = rng.normal(size=25)
        g = premise_gradient(model, X, t)
        fd = fd_premise_gradient(model, X, t)
        assert np.max(np.abs(g - fd) / (1.0 + np.abs(fd))) < 1e-5


def test_hybrid_epoch_reduces_error():
    rng = np.random.default_rng(11)
    model = build_grid_rules([(0, 1), (0, 1)], 2, kind="gaussian")
    X = rng.uniform(0, 1, size=(80, 2))
    t = np.tanh(2 * X[:, 0]) - 0.5 * X[:, 1] ** 2
    errs = []
    for _ in range(8):
        model, err = hybrid_epoch(model, X, t, eta=0.01)
        errs.append(err)
    assert errs[-1] < errs[0]


def test_hybrid_epoch_eta_zero_freezes_premises():
    rng = np.random.default_rng(12)
    model = small_random_model(rng, "triangular")
    X = rng.uniform(0, 1, size=(40, 2))
    t = rng.normal(size=40)
    theta0 = model.premise_params()
    model2, _ = hybrid_epoch(model, X, t, eta=0.0)
    assert np.array_equal(model2.premise_params(), theta0)
    with pytest.raises(ValueError):
        hybrid_epoch(model, X, t, eta=-0.1)


# ---------------------------------------------------------------------------
# online adaptation


def test_online_matches_sequential_bitwise():
    rng = np.random.default_rng(13)
    model = small_random_model(rng, "gaussian")
    X = rng.uniform(0, 1, size=(40, 2))
    t = rng.normal(size=40)
    state = online_init(model, gamma=1e8, lam=1.0)
    for i in range(40):
        state = online_update(state, X[i], float(t[i]))
    ref = consequent_lse(model, X, t, mode="sequential", gamma=1e8)
    assert np.array_equal(state.model.consequents, ref.consequents)


def test_online_forgetting_adapts_faster():
    """After a regime flip, lam=0.9 needs strictly fewer updates to re-fit.

    The equally-weighted filter must grind through enough new-regime samples
    to outvote its history, so the post-flip stream is made long enough for
    both filters to eventually cross the error threshold.
    """
    model = build_grid_rules([(0.0, 1.0)], 2, kind="gaussian")
    rng = np.random.default_rng(14)
    n_pre, n_post = 120, 1200
    xs = rng.uniform(0, 1, size=n_pre + n_post)
    ts = np.where(np.arange(n_pre + n_post) < n_pre, 2.0 * xs, -2.0 * xs)
    probe = np.linspace(0.05, 0.95, 20)[:, None]
    target = -2.0 * probe[:, 0]
    updates_needed = {}
    for lam in (1.0, 0.9):
        state = online_init(model, lam=lam)
        for i in range(n_pre):
            state = online_update(state, xs[i : i + 1], float(ts[i]))
        needed = None
        for j in range(n_pre, n_pre + n_post):
            state = online_update(state, xs[j : j + 1], float(ts[j]))
            err = np.sqrt(np.mean((state.model.forward(probe) - target) ** 2))
            if err < 0.5:
                needed = j - n_pre + 1
                break
        assert needed is not None, f"lam={lam} never adapted"
        updates_needed[lam] = needed
    assert updates_needed[0.9] < updates_needed[1.0]


def test_online_state_validation():
    model = build_grid_rules([(0, 1)], 2)
    with pytest.raises(ValueError):
        online_init(model, lam=0.0)
    with pytest.raises(ValueError):
        online_init(model, lam=1.2)


# ---------------------------------------------------------------------------
# estimator


def test_regressor_fits_smooth_surface():
    rng = np.random.default_rng(15)
    X = rng.uniform(0, 1, size=(150, 2))
    t = 0.8 * X[:, 0] - 0.3 * X[:, 1] + 0.2
    reg = AnfisRegressor(n_mfs=3, mf_kind="triangular", epochs=4).fit(X, t)
    assert np.sqrt(np.mean((reg.predict(X) - t) ** 2)) < 1e-6
    assert len(reg.epoch_errors_) == 4


def test_regressor_gaussian_kind_and_params():
    reg = AnfisRegressor(n_mfs=2, mf_kind="gaussian", epochs=2, eta=0.005)
    assert reg.get_params()["mf_kind"] == "gaussian"
    rng = np.random.default_rng(16)
    X = rng.uniform(0, 1, size=(60, 2))
    reg.fit(X, X[:, 0] ** 2)
    assert reg.model_.n_rules == 4
    with pytest.raises(NotFittedError):
        AnfisRegressor().predict(X)
