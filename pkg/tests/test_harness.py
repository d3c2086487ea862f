import copy

import numpy as np
import pytest
import yaml
from hypothesis import given
from hypothesis import strategies as st

from irstrack.channel import SystemConfig, db_to_linear
from irstrack.exceptions import ConfigurationError
from irstrack.harness import cli
from irstrack.harness.config import config_from_mapping, config_hash, load_config, load_hyper
from irstrack.harness.experiments import overhead_table, run_experiment, summarize, write_results
from irstrack.harness.metrics import (
    anmse,
    convergence_interval,
    max_window_rise,
    nmse,
    plateau_level,
    training_knee,
    trend_slope,
)
from irstrack.harness.protocol import (
    ProtocolSchedule,
    continue_tracking,
    run_channel_estimation,
    run_first_stage,
    run_second_stage,
    trial_streams,
)
from irstrack.predictor import load_checkpoint


class ReplayPredictor:
    """Emits a fixed list of blocks one interval at a time."""

    input_len = 1
    pred_len = 1

    def __init__(self, ys):
        self.ys = list(ys)

    def predict(self, X):
        return self.ys.pop(0)[None, None]


def small_cfg(**kw):
    base = dict(n_elements=4, tau1=2, t1=4, t2=3)
    base.update(kw)
    return SystemConfig.special_case(**base)


def noiseless_observations(cfg, stage):
    return [np.sqrt(cfg.p) * b.v @ h for b, h in zip(stage.blocks, stage.truth)]


class TestMetrics:
    def test_nmse_examples(self):
        truth = np.array([1.0, 1j])
        assert nmse(truth, truth) == 0.0
        assert nmse(np.zeros(2), truth) == 1.0
        assert nmse(2 * truth, truth) == 1.0
        assert nmse(np.array([1.0, 0.0]), truth) == pytest.approx(0.5)

    def test_nmse_rejects_zero_truth_and_mismatch(self):
        with pytest.raises(ValueError):
            nmse(np.ones(2), np.zeros(2))
        with pytest.raises(ValueError):
            nmse(np.ones(3), np.ones(2))

    def test_nmse_batched(self, rng):
        truth = rng.standard_normal((5, 3))
        assert nmse(truth + 1, truth).shape == (5,)

    @given(st.lists(st.floats(0, 10), min_size=1, max_size=30))
    def test_anmse_is_running_mean(self, values):
        out = anmse(values)
        assert out[-1] == pytest.approx(np.mean(values))
        assert out[0] == pytest.approx(values[0])

    def test_convergence_interval(self):
        curve = np.r_[[10.0, 5.0, 2.0], np.ones(20)]
        assert plateau_level(curve) == 1.0
        assert convergence_interval(curve) == 4
        assert convergence_interval(np.ones(12)) == 1

    def test_training_knee_and_window_rise(self):
        loss = np.r_[np.linspace(10, 1, 10), np.ones(20)]
        assert training_knee(loss) == 9
        assert max_window_rise(loss, start=9) == 0.0
        bumpy = loss.copy()
        bumpy[20] = 1.2
        assert max_window_rise(bumpy, start=9) == pytest.approx(0.2)

    def test_trend_slope(self):
        assert trend_slope([1, 2, 3]) == pytest.approx(1.0)
        assert trend_slope([3, 3, 3]) == pytest.approx(0.0, abs=1e-12)


class TestSchedule:
    @given(
        st.integers(1, 500), st.integers(0, 10), st.integers(0, 10), st.integers(1, 100), st.booleans()
    )
    def test_slot_accounting(self, total, t1, t2, tau1, cycling):
        if t1 + t2 == 0 or (cycling and t1 + t2 > total):
            with pytest.raises(ConfigurationError):
                ProtocolSchedule(total, t1, t2, tau1, cycling=cycling)
            return
        s = ProtocolSchedule(total, t1, t2, tau1, cycling=cycling)
        assert s.pilot_slots() + s.data_slots() == s.tau * total
        assert s.pilot_slots() == tau1 * s.training_mask().sum()

    def test_reference_overheads(self):
        table = overhead_table()
        assert table["ct"]["pilot_slots"] == 21600
        assert table["ce"]["pilot_slots"] == 129600
        assert table["two_stage_a"]["pilot_slots"] == 10800
        assert table["two_stage_b"]["pilot_slots"] == 14400

    def test_mask_pattern(self):
        mask = ProtocolSchedule(10, 2, 3, 1).training_mask()
        np.testing.assert_array_equal(mask, [1, 1, 0, 0, 0, 1, 1, 0, 0, 0])
        assert ProtocolSchedule(10, 2, 3, 1, cycling=False).training_mask().sum() == 2

    def test_invalid_pilot_length(self):
        with pytest.raises(ConfigurationError):
            ProtocolSchedule(10, 1, 1, 0)


class TestProtocol:
    def test_seeded_reproducibility(self):
        cfg = small_cfg()
        a = run_first_stage(cfg, "special", *trial_streams(3)[:2], n_intervals=5)
        b = run_first_stage(cfg, "special", *trial_streams(3)[:2], n_intervals=5)
        np.testing.assert_array_equal(a.estimates, b.estimates)

    def test_streams_are_independent(self):
        c, n, q = trial_streams(0)
        assert len({c.random(), n.random(), q.random()}) == 3

    def test_continue_leaves_first_stage_untouched(self):
        cfg = small_cfg()
        c, n, _ = trial_streams(1)
        first = run_first_stage(cfg, "special", c, n)
        before = copy.deepcopy(first.tracker.state_)
        cont = continue_tracking(first, c, noise_rng=n)
        assert len(cont.blocks) == cfg.t2 and len(first.blocks) == cfg.t1
        np.testing.assert_array_equal(first.tracker.state_.h, before.h)
        assert [b.t for b in cont.blocks] == list(range(cfg.t1 + 1, cfg.t1 + cfg.t2 + 1))

    @pytest.mark.parametrize("kind", ["special", "general"])
    def test_oracle_predictor_matches_noiseless_tracking(self, kind):
        maker = SystemConfig.special_case if kind == "special" else SystemConfig.general_case
        cfg = maker(n_elements=4, tau1=2, t1=4, t2=3)
        c, n, _ = trial_streams(11)
        first = run_first_stage(cfg, kind, c, n)
        c_copy = copy.deepcopy(c)
        ref = continue_tracking(first, c, observation_noise=False)
        sec = run_second_stage(first, ReplayPredictor(noiseless_observations(cfg, ref)), "B", c_copy)
        scale = np.abs(ref.estimates).max()
        assert np.abs(sec.estimates - ref.estimates).max() <= 1e-9 * scale
        np.testing.assert_array_equal(sec.truth, ref.truth)

    def test_truth_never_reaches_the_filter(self):
        cfg = small_cfg()
        c, n, _ = trial_streams(4)
        first = run_first_stage(cfg, "special", c, n)
        ys = [np.ones(cfg.tau1, complex)] * cfg.t2
        # different channel draws for stage 2 change the truth but not the estimates
        a = run_second_stage(first, ReplayPredictor(ys), "B", np.random.default_rng(0))
        b = run_second_stage(first, ReplayPredictor(ys), "B", np.random.default_rng(1))
        np.testing.assert_array_equal(a.estimates, b.estimates)
        assert not np.allclose(a.truth, b.truth)
        assert not np.allclose(a.nmse, b.nmse)

    def test_strategy_a_length_mismatch(self):
        cfg = small_cfg()
        c, n, _ = trial_streams(0)
        first = run_first_stage(cfg, "special", c, n)
        with pytest.raises(ConfigurationError):
            run_second_stage(first, ReplayPredictor([]), "A", c)

    def test_cga1_rejected_without_pilots(self):
        cfg = SystemConfig.general_case(n_elements=4, tau1=2, t1=3, t2=2)
        c, n, _ = trial_streams(0)
        first = run_first_stage(cfg, "general", c, n, cga="I")
        with pytest.raises(ConfigurationError):
            run_second_stage(first, ReplayPredictor([]), "B", c)

    def test_channel_estimation_shape(self):
        out = run_channel_estimation(small_cfg(), 0, n_intervals=3)
        assert out.shape == (3,) and np.all(out > 0) and np.all(out < 1)


class TestConfig:
    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigurationError):
            config_from_mapping({"n_elemnts": 3})

    def test_decibel_keys_converted(self):
        cfg = config_from_mapping({"l0_db": -30})
        assert cfg.l0 == pytest.approx(db_to_linear(-30))
        with pytest.raises(ConfigurationError):
            config_from_mapping({"l0_db": -30, "l0": 1e-3})

    def test_file_overrides_base(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text(yaml.safe_dump({"n_elements": 6, "irs_shape": [2, 3], "tau1": 3}))
        cfg = load_config(path, SystemConfig.special_case())
        assert cfg.n == 6 and cfg.irs_shape == (2, 3) and cfg.tau1 == 3
        assert cfg.alpha_ia == 0.0

    def test_element_count_change_rederives_shape(self):
        cfg = config_from_mapping({"n_elements": 4}, SystemConfig.special_case())
        assert cfg.irs_shape == (1, 4)

    def test_hash_tracks_values(self):
        a = SystemConfig.special_case()
        assert config_hash(a) == config_hash(SystemConfig.special_case())
        assert config_hash(a) != config_hash(a.replace(tau1=a.tau1 + 1))

    def test_hyper_keys_checked(self, tmp_path):
        path = tmp_path / "h.yaml"
        path.write_text("max_iter: 5\nlearnin_rate: 1\n")
        with pytest.raises(ConfigurationError):
            load_hyper(path)


class TestExperiments:
    def test_unknown_scenario(self):
        with pytest.raises(ConfigurationError):
            run_experiment("fig99")

    def test_csv_deterministic_under_seed(self, tmp_path):
        cfg = small_cfg()
        outs = []
        for k in range(2):
            res = run_experiment("fig7", trials=2, seed=5, cfg=cfg, horizon=3)
            write_results(res, tmp_path / str(k))
            outs.append((tmp_path / str(k) / "fig7_dft_nmse.csv").read_text())
        assert outs[0] == outs[1]
        assert outs[0].splitlines()[0] == "interval,mean,std,trials"
        assert len(outs[0].splitlines()) == 4

    def test_manifest_and_summary(self, tmp_path):
        res = run_experiment("table2", trials=1)
        write_results(res, tmp_path)
        manifest = (tmp_path / "manifest.txt").read_text()
        assert "config_hash" in manifest and "seed: 0" in manifest
        assert (tmp_path / "table2_overhead.csv").read_text().splitlines()[1] == "ct,3600,3600,0,6,21600"
        assert summarize(tmp_path) == {}


class TestCli:
    def test_invalid_scenario_exits_nonzero(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["run", "nope"])
        assert exc.value.code != 0

    def test_bad_config_returns_error_code(self, tmp_path, capsys):
        path = tmp_path / "c.yaml"
        path.write_text("bogus: 1\n")
        assert cli.main(["run", "custom", "--config", str(path), "--out", str(tmp_path)]) == 2
        assert "bogus" in capsys.readouterr().err

    def test_run_and_report(self, tmp_path, capsys):
        cfg = tmp_path / "c.yaml"
        cfg.write_text("n_elements: 4\ntau1: 2\n")
        out = tmp_path / "res"
        args = ["run", "custom", "--config", str(cfg), "--trials", "2", "--intervals", "3", "--out", str(out)]
        assert cli.main(args) == 0
        assert (out / "custom_tracking_nmse.csv").exists()
        capsys.readouterr()
        assert cli.main(["report", str(out)]) == 0
        assert "custom_tracking_nmse: 3 intervals" in capsys.readouterr().out

    def test_train_writes_checkpoint(self, tmp_path):
        hyper = tmp_path / "h.yaml"
        hyper.write_text("max_iter: 5\neval_every: 5\nn_samples: 30\nexpansion: 1.0\nn_layers: 1\n")
        ckpt = tmp_path / "net.npz"
        assert cli.main(["train", "--hyper", str(hyper), "--checkpoint", str(ckpt), "--strategy", "A"]) == 0
        est = load_checkpoint(ckpt)
        assert est.input_len == 6 and est.pred_len == 6
