import math

import numpy as np
import pytest

from nestpred import model, predictor
from nestpred.harness.train import train_model
from nestpred.numerics import ParamStore, Tensor, backward, grad_check
from nestpred.scenario import generate_synthetic

from conftest import tiny_config


@pytest.fixture
def setup():
    cfg = tiny_config(K=3)
    return cfg, model.init_params(cfg)


def _zero(p, prefix):
    for name in p.names():
        if name.startswith(prefix):
            p[name].data = np.zeros(p[name].shape)


# -------------------------------------------------------------- fusion
def test_fuse_without_lanes_is_identity(setup):
    cfg, p = setup
    F_i = Tensor(np.random.default_rng(0).normal(size=(2, cfg.d)))
    out = predictor.fuse_context(F_i, np.zeros((2, 0, cfg.d)), np.zeros((2, 0)), p)
    assert np.array_equal(out.data, F_i.data)


def test_fuse_all_lanes_masked_is_identity(setup):
    cfg, p = setup
    F_i = np.random.default_rng(0).normal(size=(1, cfg.d))
    F_l = np.random.default_rng(1).normal(size=(1, 3, cfg.d))
    out = predictor.fuse_context(F_i, F_l, np.zeros((1, 3)), p)
    np.testing.assert_array_equal(out.data, F_i)


def test_fuse_single_lane(setup):
    cfg, p = setup
    rng = np.random.default_rng(2)
    F_i = rng.normal(size=(1, cfg.d))
    F_l = rng.normal(size=(1, 1, cfg.d))
    out = predictor.fuse_context(F_i, F_l, np.ones((1, 1)), p).data
    want = F_i + F_l[:, 0] @ p["fuse.v"].data @ p["fuse.o"].data
    np.testing.assert_allclose(out, want, rtol=0, atol=1e-14)
    twice = predictor.fuse_context(F_i, np.concatenate([F_l, F_l], axis=1), np.ones((1, 2)), p).data
    np.testing.assert_allclose(twice, out, rtol=0, atol=1e-14)


# ------------------------------------------------------------- decoding
def test_prediction_shapes_and_positivity(setup):
    cfg, p = setup
    rng = np.random.default_rng(3)
    for _ in range(20):
        pred = predictor.predict_modes(rng.normal(0, 3, (4, cfg.d)), rng.normal(0, 3, (4, cfg.d)), p, cfg)
        assert pred.trajectories().shape == (4, 3, cfg.t_f, 4)
        assert pred.probs.shape == (4, 3)
        assert np.all(pred.b.data > 0)
        np.testing.assert_allclose(pred.probs.data.sum(-1), 1.0, atol=1e-12)


def test_softplus_scales_positive():
    cfg = tiny_config(b_activation="softplus")
    p = model.init_params(cfg)
    pred = predictor.predict_modes(np.full((1, cfg.d), 30.0), np.full((1, cfg.d), -30.0), p, cfg)
    assert np.all(pred.b.data > 0)


def test_zero_generators_identical_modes_uniform_probs(setup):
    cfg, p = setup
    _zero(p, "predictor")
    rng = np.random.default_rng(4)
    pred = predictor.predict_modes(rng.normal(size=(2, cfg.d)), rng.normal(size=(2, cfg.d)), p, cfg)
    mu = pred.mu.data
    assert np.all(mu == mu[:, :1])
    np.testing.assert_allclose(pred.probs.data, 1 / 3, rtol=0, atol=1e-15)


def test_positions_accumulate_steps(setup):
    cfg, p = setup
    _zero(p, "predictor.generators")
    # constant per-step displacement of 0.2 * pos_scale along x
    bias = np.zeros((cfg.modes, 1, cfg.t_f * 4))
    bias[..., 0::4] = 0.2
    p["predictor.generators.1.bias"].data = bias
    pred = predictor.predict_modes(np.zeros((1, cfg.d)), np.zeros((1, cfg.d)), p, cfg)
    steps = np.arange(1, cfg.t_f + 1) * 0.2 * cfg.pos_scale
    np.testing.assert_allclose(pred.mu.data[0, 0, :, 0], steps, rtol=0, atol=1e-12)


# -------------------------------------------------------------- loss
def test_nll_exact_gt_unit_scale():
    mu = np.zeros((4, 2))
    v = predictor.laplace_nll(mu, np.ones((4, 2)), mu).item()
    assert v == pytest.approx(2 * math.log(2), abs=1e-15)
    assert v == pytest.approx(1.3863, abs=1e-4)


def test_nll_closed_form_step():
    t_f = 3
    mu = np.zeros((t_f, 2))
    gt = mu.copy()
    gt[1, 0] = 1.0
    b = np.ones((t_f, 2))
    b[1] = [0.5, 0.8]
    v = predictor.laplace_nll(mu, b, gt).item()
    step1 = math.log(1.0) + 2.0 + math.log(2 * 0.8) + 0.0
    others = 2 * (2 * math.log(2))
    assert v == pytest.approx((step1 + others) / t_f, abs=1e-14)


def test_nll_gradient_matches_finite_differences():
    rng = np.random.default_rng(5)
    gt = rng.normal(size=(6, 2))
    p = ParamStore({"mu": Tensor(gt + rng.normal(0, 0.5, size=(6, 2)), requires_grad=True),
                    "b": Tensor(rng.uniform(0.3, 2.0, size=(6, 2)), requires_grad=True)})
    report = grad_check(lambda q: predictor.laplace_nll(q["mu"], q["b"], gt), p, eps=1e-6)
    assert report.ok(1e-4), report.worst()


def test_training_loss_single_mode():
    cfg = tiny_config(multimodal=False)
    p = model.init_params(cfg)
    rng = np.random.default_rng(6)
    pred = predictor.predict_modes(rng.normal(size=(2, cfg.d)), rng.normal(size=(2, cfg.d)), p, cfg)
    gt = rng.normal(size=(2, cfg.t_f, 2))
    loss, best = predictor.training_loss(pred, gt, 0.5)
    nll = predictor.laplace_nll(pred.mu.data[:, 0], pred.b.data[:, 0], gt).data
    assert best.tolist() == [0, 0]
    assert loss.item() == pytest.approx(nll.mean(), abs=1e-14)


def test_training_loss_picks_exact_mode():
    t_f = 3
    gt = np.random.default_rng(7).normal(size=(1, t_f, 2))
    mu = np.stack([gt[0] + 2.0, gt[0]])[None]
    b = np.ones((1, 2, t_f, 2))
    logits = np.array([[0.3, -0.4]])
    pred = predictor.Prediction(Tensor(mu), Tensor(b), Tensor(logits), Tensor(np.exp(logits) / np.exp(logits).sum()))
    loss, best = predictor.training_loss(pred, gt, 0.5)
    assert best.tolist() == [1]
    P2 = math.exp(-0.4) / (math.exp(0.3) + math.exp(-0.4))
    assert loss.item() == pytest.approx(2 * math.log(2) + 0.5 * -math.log(P2), abs=1e-14)


def test_wta_selection_ignores_scales():
    rng = np.random.default_rng(8)
    gt = rng.normal(size=(5, 4, 2))
    mu = gt[:, None] + rng.normal(0, 1, size=(5, 3, 4, 2))
    logits = rng.normal(size=(5, 3))
    probs = np.exp(logits) / np.exp(logits).sum(-1, keepdims=True)
    b = rng.uniform(0.1, 3, size=mu.shape)
    _, best = predictor.training_loss(predictor.Prediction(Tensor(mu), Tensor(b), Tensor(logits), Tensor(probs)), gt, 0.5)
    for scale in (1e-3, 7.0):
        _, again = predictor.training_loss(
            predictor.Prediction(Tensor(mu), Tensor(b * scale), Tensor(logits), Tensor(probs)), gt, 0.5)
        assert again.tolist() == best.tolist()


def test_training_loss_gradient_reaches_mu_b_and_logits(setup):
    cfg, p = setup
    rng = np.random.default_rng(9)
    F_c = Tensor(rng.normal(size=(2, cfg.d)), requires_grad=True)
    pred = predictor.predict_modes(F_c, rng.normal(size=(2, cfg.d)), p, cfg)
    loss, _ = predictor.training_loss(pred, rng.normal(size=(2, cfg.t_f, 2)), 0.5)
    grads = backward(loss, p)
    assert np.any(grads["predictor.prob.0.weight"] != 0)
    assert np.any(grads["predictor.generators.1.weight"] != 0)
    assert np.any(F_c.grad != 0)


def test_loss_decreases_monotonically_on_repeated_scenario():
    # the Laplace term is non-smooth in mu, so a step size small enough to
    # stay inside one linear piece per step is used; noise is held fixed
    cfg = tiny_config(t_f=12, resample_noise=False, lr=1e-4, batch=1)
    r = train_model(cfg, generate_synthetic("chain", 1, 0), steps=200)
    assert np.all(np.diff(r.losses) < 0)
    assert r.losses[-1] < 0.75 * r.losses[0]


def test_single_mode_model_trains():
    cfg = tiny_config(multimodal=False, t_f=12, batch=4)
    r = train_model(cfg, generate_synthetic("chain", 4, 0), steps=20)
    assert r.params["predictor.generators.0.weight"].shape[0] == 1
    assert np.all(np.isfinite(r.losses))
