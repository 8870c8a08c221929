import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fedcell import netsim, rng
from fedcell.netsim import ChannelModel, TelemetryLog, TelemetryRecord
from fedcell.scenario import ScenarioConfig, build_topology


def test_sinr_at_reference_distance_is_reference_sinr():
    model = ChannelModel()
    assert netsim.sinr_at(model.ref_distance_m, model) == pytest.approx(model.ref_sinr_db)


def test_sinr_at_300m_matches_closed_form():
    # 50 - 30*log10(30)
    assert netsim.sinr_at(300.0, ChannelModel()) == pytest.approx(50.0 - 30.0 * math.log10(30.0))
    assert netsim.sinr_at(300.0, ChannelModel()) == pytest.approx(5.6864, abs=1e-3)


def test_sinr_at_near_distance_clears_fault_threshold():
    assert netsim.sinr_at(10.0, ChannelModel()) == pytest.approx(50.0)
    assert netsim.sinr_at(10.0, ChannelModel()) > 20.0


def test_sinr_at_rejects_nonpositive_distance():
    with pytest.raises(ValueError, match="distance"):
        netsim.sinr_at(0.0, ChannelModel())
    with pytest.raises(ValueError, match="distance"):
        netsim.sinr_at(-5.0, ChannelModel())


@given(
    st.floats(min_value=0.1, max_value=1000.0),
    st.floats(min_value=0.1, max_value=1000.0),
)
def test_sinr_strictly_decreasing_in_distance(d1, d2):
    model = ChannelModel().noiseless()
    if d1 == d2:
        return
    lo, hi = sorted((d1, d2))
    assert netsim.sinr_at(lo, model) > netsim.sinr_at(hi, model)


def test_tb_map_saturates_at_reference_sinr():
    model = ChannelModel()
    assert netsim.tb_size_for_sinr(model.ref_sinr_db, model) == pytest.approx(model.tb_max_bytes)
    assert netsim.tb_size_for_sinr(model.ref_sinr_db + 40.0, model) == model.tb_max_bytes


@given(st.floats(min_value=-60.0, max_value=120.0), st.floats(min_value=-60.0, max_value=120.0))
def test_tb_map_is_nondecreasing_in_sinr(s1, s2):
    model = ChannelModel()
    lo, hi = sorted((s1, s2))
    assert netsim.tb_size_for_sinr(lo, model) <= netsim.tb_size_for_sinr(hi, model)


def test_tb_map_stays_in_range():
    model = ChannelModel()
    for sinr in (-50.0, 0.0, 25.0, 50.0, 200.0):
        assert 0.0 <= netsim.tb_size_for_sinr(sinr, model) <= model.tb_max_bytes


def test_channel_model_validation():
    with pytest.raises(ValueError, match="path_loss_exponent"):
        ChannelModel(path_loss_exponent=0.0)
    with pytest.raises(ValueError, match="sigma"):
        ChannelModel(shadowing_sigma_db=-1.0)
    with pytest.raises(ValueError, match="fault_delay_ms"):
        ChannelModel(fault_delay_ms=0.2, fault_jitter_ms=0.5)


def test_first_sample_has_zero_jitter():
    cfg = ScenarioConfig(num_gnbs=2, num_users=4)
    topo = build_topology(cfg)
    gen = rng.substream(1, rng.TELEMETRY)
    rec = netsim.sample_kpis(0, topo, ChannelModel(), 0.0, None, gen)
    assert rec.jitter_ms == 0.0
    assert rec.gnb_id == int(topo.serving_gnb[0])


def test_noiseless_near_delay_below_threshold():
    cfg = ScenarioConfig(num_gnbs=2, num_users=4, master_seed=3)
    topo = build_topology(cfg)
    model = ChannelModel().noiseless()
    gen = rng.substream(1, rng.TELEMETRY)
    near_ue = 0
    assert topo.placement_class[near_ue] == "near"
    rec = netsim.sample_kpis(near_ue, topo, model, 0.0, None, gen)
    d = topo.distance(near_ue)
    assert rec.delay_ms == pytest.approx(0.3 + 0.0015 * d)
    assert rec.delay_ms < 0.8


def test_run_record_count_and_ordering(tiny_cfg):
    log = netsim.run(tiny_cfg)
    steps = int(round(tiny_cfg.duration / tiny_cfg.sample_interval)) + 1
    assert len(log.records) == steps * tiny_cfg.num_users
    keys = [(r.time, r.ue_id) for r in log.records]
    assert keys == sorted(keys)
    assert len(set(keys)) == len(keys)


def test_run_default_s1_shape():
    cfg = ScenarioConfig()
    log = netsim.run(cfg)
    assert len(log.records) == 201 * 10


def test_run_is_deterministic(tiny_cfg, tmp_path):
    a, b = netsim.run(tiny_cfg), netsim.run(tiny_cfg)
    pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
    netsim.export_csv(a, pa)
    netsim.export_csv(b, pb)
    assert pa.read_bytes() == pb.read_bytes()


def test_jitter_identity_holds_for_all_records(tiny_cfg):
    log = netsim.run(tiny_cfg)
    last_delay: dict[int, float] = {}
    for rec in log.records:
        if rec.ue_id in last_delay:
            assert rec.jitter_ms == pytest.approx(
                abs(rec.delay_ms - last_delay[rec.ue_id]), abs=1e-12
            )
        else:
            assert rec.jitter_ms == 0.0
        last_delay[rec.ue_id] = rec.delay_ms


def test_record_ranges(tiny_cfg):
    log = netsim.run(tiny_cfg)
    for rec in log.records:
        assert 0.0 <= rec.time <= tiny_cfg.duration + 1e-9
        assert rec.jitter_ms >= 0.0
        assert rec.delay_ms > 0.0
        assert rec.tb_size_bytes >= 0.0


def test_inject_faults_is_seeded_and_distinct():
    cfg = ScenarioConfig(num_gnbs=10, num_users=10, num_failed_gnbs=4, master_seed=21)
    a = netsim.inject_faults(cfg)
    b = netsim.inject_faults(cfg)
    assert a == b
    assert len(a) == 4
    assert len(set(a)) == 4
    assert all(0 <= g < 10 for g in a)


def test_no_faults_requested_yields_empty_set():
    cfg = ScenarioConfig(num_failed_gnbs=0)
    assert netsim.inject_faults(cfg) == ()
    log = netsim.run(cfg)
    assert log.failed_gnbs == frozenset()
    assert all(r.tb_size_bytes > 50.0 for r in log.records)


def test_total_failure_puts_every_ue_in_fault_regime():
    cfg = ScenarioConfig(num_gnbs=3, num_users=6, num_failed_gnbs=3, master_seed=9)
    log = netsim.run(cfg)
    post = [r for r in log.records if r.time >= cfg.fault_time]
    assert post
    assert all(r.tb_size_bytes == 50.0 for r in post)


def test_fault_regime_starts_at_fault_time(tiny_cfg):
    log = netsim.run(tiny_cfg)
    failed = log.failed_gnbs
    assert len(failed) == 1
    for rec in log.records:
        if rec.gnb_id in failed and rec.time >= tiny_cfg.fault_time:
            assert rec.tb_size_bytes == 50.0
        else:
            assert rec.tb_size_bytes != 50.0


def test_fault_records_violate_all_thresholds_noiseless():
    cfg = ScenarioConfig(master_seed=13)
    log = netsim.run(cfg, ChannelModel().noiseless())
    fault_records = [
        r for r in log.records if r.gnb_id in log.failed_gnbs and r.time >= cfg.fault_time
    ]
    assert fault_records
    for rec in fault_records:
        assert rec.sinr_db < 20.0
        assert rec.jitter_ms > 0.1
        assert rec.delay_ms > 0.8
        assert rec.tb_size_bytes < 500.0


def test_near_healthy_records_violate_no_thresholds_noiseless():
    cfg = ScenarioConfig(master_seed=13)
    topo = build_topology(cfg)
    log = netsim.run(cfg, ChannelModel().noiseless())
    near_healthy = [
        r
        for r in log.records
        if topo.placement_class[r.ue_id] == "near" and r.gnb_id not in log.failed_gnbs
    ]
    assert near_healthy
    for rec in near_healthy:
        assert rec.sinr_db >= 20.0
        assert rec.jitter_ms <= 0.1
        assert rec.delay_ms <= 0.8
        assert rec.tb_size_bytes >= 500.0


def test_fault_mean_tb_drops_across_boundary(tiny_cfg):
    log = netsim.run(tiny_cfg)
    failed = log.failed_gnbs
    pre = [r.tb_size_bytes for r in log.records if r.gnb_id in failed and r.time < 0.2]
    post = [r.tb_size_bytes for r in log.records if r.gnb_id in failed and r.time >= 0.2]
    assert np.mean(post) < 0.5 * np.mean(pre)


def test_export_header_and_roundtrip(tiny_cfg, tmp_path):
    log = netsim.run(tiny_cfg)
    path = tmp_path / "telemetry.csv"
    netsim.export_csv(log, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "time,ue_id,gnb_id,sinr_db,jitter_ms,delay_ms,tb_size_bytes"
    assert len(lines) == len(log.records) + 1
    back = netsim.read_csv(path)
    assert len(back.records) == len(log.records)
    for a, b in zip(log.records, back.records):
        assert (a.ue_id, a.gnb_id) == (b.ue_id, b.gnb_id)
        assert b.time == pytest.approx(a.time, abs=1e-6)
        assert b.sinr_db == pytest.approx(a.sinr_db, abs=1e-6)
        assert b.jitter_ms == pytest.approx(a.jitter_ms, abs=1e-6)
        assert b.delay_ms == pytest.approx(a.delay_ms, abs=1e-6)
        assert b.tb_size_bytes == pytest.approx(a.tb_size_bytes, abs=1e-6)


def test_export_empty_log_is_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    netsim.export_csv(TelemetryLog([], frozenset(), 0.5), path)
    assert path.read_text() == "time,ue_id,gnb_id,sinr_db,jitter_ms,delay_ms,tb_size_bytes\n"


def test_read_csv_rejects_wrong_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("time,ue\n0.0,1\n", encoding="utf-8")
    with pytest.raises(ValueError, match="header"):
        netsim.read_csv(path)


def test_fault_sidecar_roundtrip(tiny_cfg, tmp_path):
    log = netsim.run(tiny_cfg)
    path = tmp_path / "faults.json"
    netsim.export_fault_json(log, path)
    fault_time, failed = netsim.read_fault_json(path)
    assert fault_time == tiny_cfg.fault_time
    assert failed == log.failed_gnbs


def test_custom_channel_is_used(tiny_cfg):
    loud = ChannelModel(ref_sinr_db=80.0).noiseless()
    log = netsim.run(tiny_cfg, loud)
    healthy = [r for r in log.records if r.gnb_id not in log.failed_gnbs and r.time == 0.0]
    assert all(r.sinr_db > 30.0 for r in healthy)
