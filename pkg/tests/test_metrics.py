import math

import numpy as np
import pytest

import oracles
from nestpred.harness import metrics


def _instance(rng, K=3, t_f=6):
    gt = rng.normal(0, 5, size=(t_f, 2))
    traj = np.concatenate([gt[None] + rng.normal(0, 2, size=(K, t_f, 2)),
                           rng.uniform(0.1, 1, size=(K, t_f, 2))], axis=-1)
    probs = rng.dirichlet(np.ones(K))
    return traj, probs, gt


def test_trivial_examples():
    gt = np.random.default_rng(0).normal(size=(5, 2))
    traj = np.stack([gt, gt + [1.0, 0.0]])
    assert metrics.min_ade(traj, [0.7, 0.3], gt, 1) == 0.0
    assert metrics.min_ade(traj[::-1], [0.7, 0.3], gt, 1) == pytest.approx(1.0, abs=1e-15)
    off = gt.copy()
    off[-1] += [3.0, 4.0]
    assert metrics.min_fde(np.stack([gt]), [1.0], gt, 1) == 0.0
    assert metrics.min_fde(np.stack([off]), [1.0], gt, 1) == pytest.approx(5.0, abs=1e-14)


def test_k_out_of_range():
    traj, probs, gt = _instance(np.random.default_rng(0))
    with pytest.raises(ValueError):
        metrics.min_ade(traj, probs, gt, 4)
    with pytest.raises(ValueError):
        metrics.min_fde(traj, probs, gt, 0)


def test_topk_uses_probability_ranking():
    gt = np.zeros((3, 2))
    traj = np.stack([gt + 5.0, gt])          # mode 1 is exact but less probable
    assert metrics.min_ade(traj, [0.9, 0.1], gt, 1) == pytest.approx(5 * math.sqrt(2))
    assert metrics.min_ade(traj, [0.9, 0.1], gt, 2) == 0.0


def test_ties_keep_generator_order():
    assert metrics.rank_modes([0.25, 0.5, 0.25]).tolist() == [1, 0, 2]


@pytest.mark.parametrize("seed", range(100))
def test_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    K = int(rng.integers(1, 6))
    traj, probs, gt = _instance(rng, K=K)
    for k in range(1, K + 1):
        assert abs(metrics.min_ade(traj, probs, gt, k) - oracles.ade(traj, probs, gt, k)) <= 1e-12
        assert abs(metrics.min_fde(traj, probs, gt, k) - oracles.fde(traj, probs, gt, k)) <= 1e-12


def test_rmse_examples():
    gts = np.zeros((2, 12, 2))
    trajs = np.zeros((2, 1, 12, 4))
    probs = np.ones((2, 1))
    assert metrics.rmse_horizon(trajs, probs, gts, 3.0, 0.5) == 0.0
    const = trajs.copy()
    const[:, 0, :, 0] = 2.0
    assert metrics.rmse_horizon(const, probs, gts, 3.0, 0.5) == pytest.approx(2.0)
    mixed = trajs.copy()
    mixed[1, 0, :, 1] = 2.0
    assert metrics.rmse_horizon(mixed, probs, gts, 3.0, 0.5) == pytest.approx(math.sqrt(2))


def test_rmse_horizon_out_of_range():
    with pytest.raises(ValueError):
        metrics.rmse_horizon(np.zeros((1, 1, 4, 4)), np.ones((1, 1)), np.zeros((1, 4, 2)), 3.0, 0.5)


def test_horizon_step():
    assert metrics.horizon_step(3.0, 0.5, 12) == 5
    assert metrics.horizon_step(0.6, 0.5, 12) == 0


@pytest.mark.parametrize("seed", range(100))
def test_rmse_matches_brute_force(seed):
    rng = np.random.default_rng(1000 + seed)
    M, K = 4, 3
    inst = [_instance(rng, K=K, t_f=12) for _ in range(M)]
    trajs = np.stack([i[0] for i in inst])
    probs = np.stack([i[1] for i in inst])
    gts = np.stack([i[2] for i in inst])
    for h in (1.0, 2.5, 6.0):
        assert abs(metrics.rmse_horizon(trajs, probs, gts, h, 0.5) -
                   oracles.rmse(trajs, probs, gts, h, 0.5)) <= 1e-12


def test_dataset_metrics_monotone_and_nonnegative():
    rng = np.random.default_rng(3)
    inst = [_instance(rng, K=5, t_f=12) for _ in range(10)]
    m = metrics.dataset_metrics(np.stack([i[0] for i in inst]), np.stack([i[1] for i in inst]),
                                np.stack([i[2] for i in inst]), 0.5)
    ade = [m["min_ade"][k] for k in range(1, 6)]
    assert all(a >= b for a, b in zip(ade, ade[1:]))
    assert m["min_fde_1"] >= 0
    assert sorted(m["rmse"]) == [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
    assert all(v >= 0 for v in m["rmse"].values())
