import math

import numpy as np
import pytest

from fedcell import netsim
from fedcell.encoder import build_datasets, build_splits
from fedcell.fed import (
    ClientUpdate,
    FedConfig,
    RoundRecord,
    _select_clients,
    client_seed,
    fedavg,
    pool_datasets,
    run_centralized,
    run_federated,
    run_round,
    write_history_csv,
)
from fedcell.nn import ModelConfig, ModelParams, init_params, train_local
from fedcell.scenario import ScenarioConfig


def _scalar(value: float) -> ModelParams:
    return ModelParams([np.array([[float(value)]])], [np.array([float(value)])])


def _prepared(cfg):
    log = netsim.run(cfg)
    per_gnb, _ = build_datasets(log, cfg)
    return build_splits(per_gnb, cfg)


def test_fed_config_defaults_and_validation():
    cfg = FedConfig()
    assert (cfg.rounds, cfg.local_epochs, cfg.centralized_epochs, cfg.participation) == (
        50,
        10,
        10,
        1.0,
    )
    with pytest.raises(ValueError, match="rounds"):
        FedConfig(rounds=0)
    with pytest.raises(ValueError, match="local_epochs"):
        FedConfig(local_epochs=0)
    with pytest.raises(ValueError, match="participation"):
        FedConfig(participation=0.0)
    with pytest.raises(ValueError, match="participation"):
        FedConfig(participation=1.5)
    with pytest.raises(ValueError, match="centralized_epochs"):
        FedConfig(centralized_epochs=-1)


def test_fedavg_single_client_is_identity():
    update = ClientUpdate(0, _scalar(0.7), 5)
    out = fedavg([update])
    assert out.weights[0][0, 0] == 0.7
    assert out.biases[0][0] == 0.7
    assert not np.shares_memory(out.weights[0], update.params.weights[0])


def test_fedavg_symmetry_cancels():
    cfg = ModelConfig(input_dim=3, hidden_dims=(4,), output_dim=2)
    theta = init_params(cfg, seed=1)
    minus = ModelParams([-w for w in theta.weights], [-b for b in theta.biases])
    out = fedavg([ClientUpdate(0, theta, 7), ClientUpdate(1, minus, 7)])
    assert all(np.allclose(w, 0.0, atol=1e-15) for w in out.weights)
    assert all(np.allclose(b, 0.0, atol=1e-15) for b in out.biases)


def test_fedavg_scalar_weighted_mean():
    out = fedavg([ClientUpdate(0, _scalar(0.0), 1), ClientUpdate(1, _scalar(4.0), 3)])
    assert out.weights[0][0, 0] == pytest.approx(3.0, abs=1e-15)


def test_fedavg_weights_sum_to_one():
    counts = [3, 11, 5, 1, 9]
    total = sum(counts)
    assert abs(sum(n / total for n in counts) - 1.0) <= 1e-12
    # equal params with arbitrary counts come back unchanged
    out = fedavg([ClientUpdate(i, _scalar(2.5), n) for i, n in enumerate(counts)])
    assert out.weights[0][0, 0] == pytest.approx(2.5, abs=1e-12)


def test_fedavg_is_permutation_invariant():
    cfg = ModelConfig(input_dim=4, hidden_dims=(5,), output_dim=3)
    updates = [ClientUpdate(i, init_params(cfg, seed=i), 2 * i + 1) for i in range(5)]
    base = fedavg(updates)
    for perm in ([4, 3, 2, 1, 0], [2, 0, 4, 1, 3]):
        shuffled = fedavg([updates[i] for i in perm])
        for a, b in zip(base.weights, shuffled.weights):
            assert np.array_equal(a, b)
        for a, b in zip(base.biases, shuffled.biases):
            assert np.array_equal(a, b)


def test_fedavg_stays_within_client_envelope():
    cfg = ModelConfig(input_dim=4, hidden_dims=(5,), output_dim=3)
    updates = [ClientUpdate(i, init_params(cfg, seed=10 + i), i + 1) for i in range(4)]
    out = fedavg(updates)
    for layer in range(out.num_layers):
        stack = np.stack([u.params.weights[layer] for u in updates])
        assert np.all(out.weights[layer] >= stack.min(axis=0) - 1e-12)
        assert np.all(out.weights[layer] <= stack.max(axis=0) + 1e-12)


def test_fedavg_rejects_bad_update_sets():
    with pytest.raises(ValueError, match="at least one"):
        fedavg([])
    with pytest.raises(ValueError, match="duplicate"):
        fedavg([ClientUpdate(0, _scalar(1.0), 1), ClientUpdate(0, _scalar(2.0), 1)])
    with pytest.raises(ValueError, match="num_samples"):
        fedavg([ClientUpdate(0, _scalar(1.0), 0)])
    other = ModelParams([np.zeros((2, 2))], [np.zeros(2)])
    with pytest.raises(ValueError, match="shapes"):
        fedavg([ClientUpdate(0, _scalar(1.0), 1), ClientUpdate(1, other, 1)])


def test_client_seed_is_stable_and_distinct():
    assert client_seed(42, 1, 0) == client_seed(42, 1, 0)
    seeds = {client_seed(42, r, c) for r in range(1, 4) for c in range(3)}
    assert len(seeds) == 9


def test_select_clients_full_participation():
    ids = [3, 1, 2]
    assert _select_clients(ids, FedConfig(), 42, 1) == ids


def test_select_clients_partial_is_seeded_subset():
    ids = list(range(8))
    fed_cfg = FedConfig(participation=0.5)
    a = _select_clients(ids, fed_cfg, 42, 1)
    b = _select_clients(ids, fed_cfg, 42, 1)
    c = _select_clients(ids, fed_cfg, 42, 2)
    assert a == b
    assert len(a) == 4
    assert set(a) <= set(ids)
    assert a == sorted(a)
    assert any(_select_clients(ids, fed_cfg, 42, r) != a for r in range(2, 10))
    assert len(c) == 4
    # floor() with a small fraction still selects someone
    assert len(_select_clients(ids, FedConfig(participation=0.01), 42, 1)) == 1


def test_run_round_single_client_equals_local_training(tiny_cfg):
    client_train, _, _, _ = _prepared(tiny_cfg)
    only = {0: client_train[0]}
    cfg_m = tiny_cfg.model
    init = init_params(cfg_m, seed=100)
    new_global, updates = run_round(init, only, cfg_m, tiny_cfg.fed, tiny_cfg.master_seed, 1)
    expected, _ = train_local(
        init, only[0], tiny_cfg.fed.local_epochs, cfg_m, client_seed(tiny_cfg.master_seed, 1, 0)
    )
    assert len(updates) == 1
    for a, b in zip(new_global.weights, expected.weights):
        assert np.array_equal(a, b)


def test_run_round_accounting(tiny_cfg):
    client_train, _, pooled_train, _ = _prepared(tiny_cfg)
    init = init_params(tiny_cfg.model, seed=100)
    new_global, updates = run_round(
        init, client_train, tiny_cfg.model, tiny_cfg.fed, tiny_cfg.master_seed, 1
    )
    assert len(updates) == tiny_cfg.num_gnbs
    assert sum(u.num_samples for u in updates) == len(pooled_train)
    assert [u.client_id for u in updates] == sorted(client_train)
    assert new_global.allfinite()


def test_run_round_partial_participation(tiny_cfg):
    client_train, _, _, _ = _prepared(tiny_cfg)
    fed_cfg = FedConfig(rounds=1, local_epochs=1, participation=0.5)
    _, updates = run_round(
        init_params(tiny_cfg.model, seed=1),
        client_train,
        tiny_cfg.model,
        fed_cfg,
        tiny_cfg.master_seed,
        1,
    )
    assert len(updates) == 1  # floor(0.5 * 2 clients)


def test_run_federated_history_and_determinism(tiny_cfg):
    client_train, client_test, _, _ = _prepared(tiny_cfg)
    params_a, history = run_federated(
        client_train, client_test, tiny_cfg.model, tiny_cfg.fed, tiny_cfg.master_seed
    )
    assert [r.round_idx for r in history] == list(range(1, tiny_cfg.fed.rounds + 1))
    for rec in history:
        assert 0.0 <= rec.exact_match <= 1.0
        assert math.isfinite(rec.test_loss)
        assert rec.secs >= 0.0
    params_b, _ = run_federated(
        client_train, client_test, tiny_cfg.model, tiny_cfg.fed, tiny_cfg.master_seed
    )
    for a, b in zip(params_a.weights, params_b.weights):
        assert np.array_equal(a, b)


def test_run_federated_respects_init_override(tiny_cfg):
    client_train, client_test, _, _ = _prepared(tiny_cfg)
    fed_cfg = FedConfig(rounds=1, local_epochs=1)
    init_a = init_params(tiny_cfg.model, seed=1)
    init_b = init_params(tiny_cfg.model, seed=2)
    pa, _ = run_federated(
        client_train, client_test, tiny_cfg.model, fed_cfg, tiny_cfg.master_seed, init=init_a
    )
    pa2, _ = run_federated(
        client_train, client_test, tiny_cfg.model, fed_cfg, tiny_cfg.master_seed, init=init_a
    )
    pb, _ = run_federated(
        client_train, client_test, tiny_cfg.model, fed_cfg, tiny_cfg.master_seed, init=init_b
    )
    assert all(np.array_equal(a, b) for a, b in zip(pa.weights, pa2.weights))
    assert not all(np.array_equal(a, b) for a, b in zip(pa.weights, pb.weights))


def test_run_federated_requires_matching_clients(tiny_cfg):
    client_train, client_test, _, _ = _prepared(tiny_cfg)
    with pytest.raises(ValueError, match="same client ids"):
        run_federated(
            client_train, {0: client_test[0]}, tiny_cfg.model, tiny_cfg.fed, tiny_cfg.master_seed
        )


def test_run_centralized_zero_epochs_returns_untrained_metrics(tiny_cfg):
    _, _, pooled_train, pooled_test = _prepared(tiny_cfg)
    fed_cfg = FedConfig(centralized_epochs=0)
    init = init_params(tiny_cfg.model, seed=4)
    params, m = run_centralized(
        pooled_train, pooled_test, tiny_cfg.model, fed_cfg, tiny_cfg.master_seed, init=init
    )
    assert all(np.array_equal(a, b) for a, b in zip(params.weights, init.weights))
    assert 0.0 <= m.exact_match <= 1.0


def test_run_centralized_is_deterministic(tiny_cfg):
    _, _, pooled_train, pooled_test = _prepared(tiny_cfg)
    a, ma = run_centralized(
        pooled_train, pooled_test, tiny_cfg.model, tiny_cfg.fed, tiny_cfg.master_seed
    )
    b, mb = run_centralized(
        pooled_train, pooled_test, tiny_cfg.model, tiny_cfg.fed, tiny_cfg.master_seed
    )
    assert ma == mb
    assert all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights))


def test_pool_datasets_orders_by_client(tiny_cfg):
    client_train, _, pooled_train, _ = _prepared(tiny_cfg)
    pooled = pool_datasets(client_train)
    assert len(pooled) == len(pooled_train)
    assert [id(w) for w in pooled.windows] == [id(w) for w in pooled_train.windows]
    with pytest.raises(ValueError, match="empty"):
        pool_datasets({})


def test_raw_data_isolation_after_update_emission(tiny_cfg):
    client_train, _, _, _ = _prepared(tiny_cfg)
    init = init_params(tiny_cfg.model, seed=2)
    _, updates = run_round(
        init, client_train, tiny_cfg.model, tiny_cfg.fed, tiny_cfg.master_seed, 1
    )
    before = fedavg(updates)
    for ds in client_train.values():
        for w in ds.windows:
            w.features[:] = 1e9
            w.labels[:] = 1
        ds.normalization.mean[:] = -1e9
    after = fedavg(updates)
    for a, b in zip(before.weights, after.weights):
        assert np.array_equal(a, b)
    for a, b in zip(before.biases, after.biases):
        assert np.array_equal(a, b)


def test_write_history_csv_zeroes_timing_by_default(tmp_path):
    history = [
        RoundRecord(1, 0.5, 0.25, (1.0, None, 0.5, 0.75), 1.234),
        RoundRecord(2, 0.4, 0.5, (1.0, 1.0, 1.0, 1.0), 2.345),
    ]
    path = tmp_path / "history.csv"
    write_history_csv(history, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "round,test_loss,exact_match,prec_sinr,prec_jitter,prec_delay,prec_tbsize,secs"
    assert lines[1] == "1,0.500000,0.250000,1.000000,nan,0.500000,0.750000,0.000000"
    assert lines[2].endswith(",0.000000")

    write_history_csv(history, path, include_timing=True)
    lines = path.read_text().splitlines()
    assert lines[1].endswith(",1.234000")
