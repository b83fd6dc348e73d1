import math

import numpy as np
import pytest

import evae


def test_vga_operators():
    assert evae.sample_rc(0.5) == pytest.approx(1.0)
    a, b = evae.crossover(2.0, 4.0, 0.5)
    assert (a, b) == pytest.approx((3.5, 2.5))
    assert a + b == pytest.approx(6.0)
    assert evae.mutate_with(1.0, 1e9) == 100.0
    assert evae.mutate_with(1.0, -1e9) == 1e-4
    assert evae.fitness(5.0, 4.0, 12.0, set_point=10.0) == pytest.approx(3.0)


def test_kl_matches_closed_form():
    mu = np.array([[0.0, 1.0], [0.0, -1.0]])
    log_var = np.array([[0.0, 1.0], [0.0, 1.0]])
    kl = evae.kl_per_dim(mu, log_var)
    assert kl[0] == pytest.approx(0.0)
    assert kl[1] == pytest.approx(0.5 * (math.e - 1.0))
    with pytest.raises(ValueError):
        evae.kl_per_dim(np.zeros(3), np.zeros(3))


def test_recon_loss_at_zero_logits():
    x = np.array([[0.0, 1.0, 1.0, 0.0]])
    assert evae.bernoulli_recon_loss(np.zeros_like(x), x) == pytest.approx(4 * math.log(2))


def test_schedules():
    assert evae.cost_anneal_beta(0, horizon=100) == pytest.approx(0.01)
    assert evae.cost_anneal_beta(50, horizon=100) == pytest.approx(0.5)
    assert evae.cyclical_beta(0, horizon=100, cycles=2) == 0.0
    pid = evae.PidController(set_point=3.0)
    betas = [pid.step(10.0) for _ in range(5)]
    assert betas[-1] == pid.beta
    assert all(0.0 <= b <= 100.0 for b in betas)


def test_dataset_and_render():
    images, labels, digest = evae.generate_dataset(canvas=16, scales=2, orientations=2, positions=4)
    assert images.shape == (3 * 2 * 2 * 4 * 4, 16, 16)
    assert labels.shape == (images.shape[0], 5)
    assert set(np.unique(images)) <= {0, 1}
    assert images.reshape(len(images), -1).sum(axis=1).min() > 0
    assert len(digest) == 40
    img = evae.render_sprite("heart", scale=0.4, canvas=32)
    assert img.shape == (32, 32) and img.sum() > 0
    with pytest.raises(ValueError):
        evae.render_sprite("triangle")
    with pytest.raises(evae.SpecificationError):
        evae.render_sprite("square", scale=0.9, pos_x=0.1)


def test_driver_on_quadratic_plant():
    target = 3.0

    def plant(beta):
        return (beta - target) ** 2, 0.0, 10.0

    d = evae.VgaDriver(population=10, pr_m=0.3, pr_c=0.7, seed=4)
    d.initialize(plant)
    for it in range(400):
        d.step(plant, it)
    assert d.generations > 0
    assert abs(d.applied_beta - target) < 0.5


def test_run_quick_preset_is_reproducible():
    a = evae.run("quick", seed=3)
    b = evae.run("quick", seed=3)
    assert a["checkpoint_hash"] == b["checkpoint_hash"]
    np.testing.assert_array_equal(a["beta"], b["beta"])
    assert a["kl_per_dim"].shape == (200, 4)
    np.testing.assert_allclose(a["rate"], a["kl_per_dim"].sum(axis=1), rtol=1e-12)
    np.testing.assert_allclose(a["total"], a["recon"] + a["beta"] * a["rate"], rtol=1e-12)
    assert a["candidate_evaluations"] > 0
    c = evae.run("quick", seed=3, controller="constant")
    assert np.all(c["beta"] == 4.0) and c["candidate_evaluations"] == 0
    with pytest.raises(evae.ConfigError):
        evae.run("no_such_preset")
