import dataclasses
import json
from pathlib import Path

import numpy as np
import pytest
from starlette.testclient import TestClient

from adaptvs.estimator import EstimatorConfig
from adaptvs.plant import DisturbanceSpec, disturbance_map, preset
from adaptvs.scenario import Scenario, load_scenario
from adaptvs.teleop import (
    PROTOCOL_SCHEMA,
    STEER_HOLD_TICKS,
    TeleopSession,
    create_app,
    replay,
)

REPO = Path(__file__).resolve().parents[1]

STATE_KEYS = {
    "type",
    "t",
    "target_px",
    "theta_hat",
    "gate_open",
    "error_norm",
    "adaptation_on",
    "alpha",
    "env",
    "features",
}


def make_scenario(**kw) -> Scenario:
    from adaptvs.controller import ControllerConfig

    defaults = dict(
        environment="one_bend",
        estimator=EstimatorConfig(alpha=0.95, flow_threshold=1.2),
        # cap above the 6 px test steers; the override path norm-caps like
        # any other command
        controller=ControllerConfig(Kp=2.07, step_cap=6.0),
        seed=3,
    )
    defaults.update(kw)
    return Scenario(**defaults)


class TestSessionCore:
    def test_idle_ticks_advance_state(self):
        s = TeleopSession(make_scenario())
        first = s.tick_once()
        for _ in range(99):
            last = s.tick_once()
        assert first["t"] == 1 and last["t"] == 100
        assert set(last.keys()) == STATE_KEYS
        assert last["theta_hat"] == 0.0  # zero steer keeps the gate closed

    def test_steer_reflected_within_one_tick(self):
        s = TeleopSession(make_scenario())
        before = np.array(s.state.target_px)
        assert s.apply_message({"type": "steer", "dx": 6.0, "dy": 0.0}) is None
        msg = s.tick_once()
        moved = np.array(msg["target_px"]) - before
        # pre-correction steer through the disturbed plant: -s R(phi) steer
        expected = -disturbance_map(preset("one_bend").disturbance, 0) @ [6.0, 0.0]
        np.testing.assert_allclose(moved, expected, atol=1e-9)

    def test_steer_is_pre_correction_command(self):
        s = TeleopSession(make_scenario())
        s.est = dataclasses.replace(s.est, theta_hat=0.4)
        before = np.array(s.state.target_px)
        s.apply_message({"type": "steer", "dx": 6.0, "dy": 0.0})
        s.tick_once()
        moved = np.array(s.state.target_px) - before
        phi = preset("one_bend").disturbance.rotation_phi
        c, si = np.cos(phi + 0.4), np.sin(phi + 0.4)
        expected = -0.8 * np.array([[c, -si], [si, c]]) @ [6.0, 0.0]
        np.testing.assert_allclose(moved, expected, atol=1e-6)

    def test_latest_steer_wins(self):
        s = TeleopSession(make_scenario())
        before = np.array(s.state.target_px)
        s.apply_message({"type": "steer", "dx": 6.0, "dy": 0.0})
        s.apply_message({"type": "steer", "dx": 0.0, "dy": 6.0})
        s.tick_once()
        moved = np.array(s.state.target_px) - before
        expected = -disturbance_map(preset("one_bend").disturbance, 0) @ [0.0, 6.0]
        np.testing.assert_allclose(moved, expected, atol=1e-9)

    def test_steer_expires_after_hold_window(self):
        s = TeleopSession(make_scenario())
        s.apply_message({"type": "steer", "dx": 6.0, "dy": 0.0})
        positions = [np.array(s.tick_once()["target_px"]) for _ in range(STEER_HOLD_TICKS + 3)]
        deltas = [np.hypot(*(b - a)) for a, b in zip(positions, positions[1:])]
        moving = [d > 1e-9 for d in deltas]
        assert all(moving[: STEER_HOLD_TICKS - 1])
        assert not any(moving[STEER_HOLD_TICKS - 1 :])

    def test_set_alpha_takes_effect_next_tick(self):
        s = TeleopSession(make_scenario())
        s.apply_message({"type": "set_alpha", "alpha": 0.5})
        assert s.ctx.estimator.alpha == 0.95  # not yet
        msg = s.tick_once()
        assert s.ctx.estimator.alpha == 0.5
        assert msg["alpha"] == 0.5

    def test_adaptation_off_uses_identity_and_freezes_estimator(self):
        s = TeleopSession(make_scenario())
        # train theta a little first
        s.apply_message({"type": "steer", "dx": 6.0, "dy": 0.0})
        for _ in range(5):
            s.tick_once()
            s.apply_message({"type": "steer", "dx": 6.0, "dy": 0.0})
        trained = s.est.theta_hat
        assert trained != 0.0
        s.apply_message({"type": "set_adaptation", "on": False})
        s.apply_message({"type": "steer", "dx": 6.0, "dy": 0.0})
        before = np.array(s.state.target_px)
        msg = s.tick_once()
        assert s.est.theta_hat == trained
        assert msg["adaptation_on"] is False
        assert not msg["gate_open"]
        moved = np.array(msg["target_px"]) - before
        expected = -disturbance_map(preset("one_bend").disturbance, 0) @ [6.0, 0.0]
        np.testing.assert_allclose(moved, expected, atol=1e-9)

    def test_set_env_swaps_disturbance_and_keeps_theta(self):
        s = TeleopSession(make_scenario())
        s.apply_message({"type": "steer", "dx": 6.0, "dy": 0.0})
        for _ in range(5):
            s.tick_once()
            s.apply_message({"type": "steer", "dx": 6.0, "dy": 0.0})
        trained = s.est.theta_hat
        s.apply_message({"type": "set_env", "name": "two_bend"})
        s.apply_message({"type": "steer", "dx": 6.0, "dy": 0.0})
        before = np.array(s.state.target_px)
        msg = s.tick_once()
        assert msg["env"] == "two_bend"
        assert s.est.theta_hat != trained  # estimator keeps training from old value
        moved = np.array(msg["target_px"]) - before
        c, si = np.cos(trained), np.sin(trained)
        corrected = np.array([[c, -si], [si, c]]) @ [6.0, 0.0]
        expected = -disturbance_map(preset("two_bend").disturbance, 0) @ corrected
        np.testing.assert_allclose(moved, expected, atol=1e-9)

    def test_reset_restarts_plant_but_keeps_operator_settings(self):
        s = TeleopSession(make_scenario())
        s.apply_message({"type": "set_alpha", "alpha": 0.6})
        s.apply_message({"type": "set_env", "name": "no_bend"})
        s.apply_message({"type": "steer", "dx": 6.0, "dy": 0.0})
        for _ in range(20):
            s.tick_once()
        features_before = s.state.features_px.copy()
        s.apply_message({"type": "reset"})
        msg = s.tick_once()
        assert msg["t"] == 1
        assert msg["alpha"] == 0.6
        assert msg["env"] == "no_bend"
        assert s.est.theta_hat == 0.0
        assert not np.array_equal(s.state.features_px, features_before)

    def test_resets_draw_fresh_streams(self):
        s = TeleopSession(make_scenario())
        s.apply_message({"type": "reset"})
        s.tick_once()
        first = s.state.features_px.copy()
        s.apply_message({"type": "reset"})
        s.tick_once()
        assert not np.array_equal(s.state.features_px, first)


class TestMessageValidation:
    def setup_method(self):
        self.s = TeleopSession(make_scenario())

    def test_unknown_type(self):
        reply = self.s.apply_message({"type": "warp"})
        assert reply["type"] == "error" and "warp" in reply["reason"]

    def test_missing_type(self):
        assert self.s.apply_message({"dx": 1})["type"] == "error"
        assert self.s.apply_message("steer")["type"] == "error"

    @pytest.mark.parametrize(
        "bad",
        [
            {"type": "steer", "dx": float("nan"), "dy": 0.0},
            {"type": "steer", "dx": float("inf"), "dy": 0.0},
            {"type": "steer", "dx": "left", "dy": 0.0},
            {"type": "steer", "dy": 0.0},
            {"type": "steer", "dx": True, "dy": 0.0},
        ],
    )
    def test_bad_steer_rejected_state_unchanged(self, bad):
        baseline = TeleopSession(make_scenario())
        reply = self.s.apply_message(bad)
        assert reply["type"] == "error"
        assert self.s.tick_once() == baseline.tick_once()

    def test_bad_alpha(self):
        assert self.s.apply_message({"type": "set_alpha", "alpha": 0.0})["type"] == "error"
        assert self.s.apply_message({"type": "set_alpha", "alpha": 1.5})["type"] == "error"
        assert self.s.apply_message({"type": "set_alpha", "alpha": float("nan")})["type"] == "error"

    def test_bad_env(self):
        reply = self.s.apply_message({"type": "set_env", "name": "three_bend"})
        assert reply["type"] == "error" and "no_bend" in reply["reason"]

    def test_bad_adaptation_flag(self):
        assert self.s.apply_message({"type": "set_adaptation", "on": 1})["type"] == "error"

    def test_session_survives_errors(self):
        self.s.apply_message({"type": "warp"})
        assert self.s.apply_message({"type": "steer", "dx": 1.0, "dy": 0.0}) is None
        assert self.s.tick_once()["t"] == 1


class TestReplayDeterminism:
    LOG = [
        (0, {"type": "steer", "dx": 5.0, "dy": 1.0}),
        (2, {"type": "steer", "dx": -2.0, "dy": 4.0}),
        (4, {"type": "set_adaptation", "on": False}),
        (6, {"type": "set_adaptation", "on": True}),
        (8, {"type": "set_env", "name": "two_bend"}),
        (10, {"type": "reset"}),
        (12, {"type": "steer", "dx": 3.0, "dy": 0.0}),
    ]

    def test_replays_identical(self):
        scn = make_scenario()
        assert replay(scn, self.LOG, 20) == replay(scn, self.LOG, 20)

    def test_replay_matches_live_session(self):
        scn = make_scenario()
        live = TeleopSession(scn)
        by_tick = {}
        for tick, msg in self.LOG:
            by_tick.setdefault(tick, []).append(msg)
        broadcasts = []
        for t in range(20):
            for msg in by_tick.get(t, []):
                live.apply_message(msg)
            broadcasts.append(live.tick_once())
        assert broadcasts == replay(scn, self.LOG, 20)


class TestSharedPipeline:
    def test_teleop_matches_direct_closed_loop(self):
        """The tick path must be the autonomous step with an override, nothing more."""
        from adaptvs.controller import closed_loop_step
        from adaptvs.harness import prepare_trial, trial_rng

        scn = make_scenario()
        steers = [(6.0, 0.0)] * 4 + [(0.0, 6.0)] * 4
        session = TeleopSession(scn)
        for dx, dy in steers:
            session.apply_message({"type": "steer", "dx": dx, "dy": dy})
            session.tick_once()

        state, est, ctx = prepare_trial(scn, trial_rng(scn.seed, 0))
        for dx, dy in steers:
            state, est, _ = closed_loop_step(
                state, est, ctx, pixel_cmd_override=np.array([dx, dy])
            )
        np.testing.assert_array_equal(session.state.target_px, state.target_px)
        assert session.est.theta_hat == est.theta_hat


class TestWebSocket:
    def app(self, auto_tick=True):
        return create_app(make_scenario(), auto_tick=auto_tick)

    def test_hello_carries_schema_and_role(self):
        with TestClient(self.app(auto_tick=False)) as client:
            with client.websocket_connect("/ws") as ws:
                hello = json.loads(ws.receive_text())
                assert hello == {"type": "hello", "schema": PROTOCOL_SCHEMA, "role": "driver"}

    def test_second_client_is_viewer_and_read_only(self):
        with TestClient(self.app(auto_tick=False)) as client:
            with client.websocket_connect("/ws") as ws1:
                json.loads(ws1.receive_text())
                with client.websocket_connect("/ws") as ws2:
                    assert json.loads(ws2.receive_text())["role"] == "viewer"
                    ws2.send_text(json.dumps({"type": "steer", "dx": 1.0, "dy": 0.0}))
                    reply = json.loads(ws2.receive_text())
                    assert reply["type"] == "error"
                    assert "read-only" in reply["reason"]

    def test_driver_slot_freed_on_disconnect(self):
        with TestClient(self.app(auto_tick=False)) as client:
            with client.websocket_connect("/ws") as ws1:
                assert json.loads(ws1.receive_text())["role"] == "driver"
            with client.websocket_connect("/ws") as ws2:
                assert json.loads(ws2.receive_text())["role"] == "driver"

    def test_malformed_json_gets_error_reply(self):
        with TestClient(self.app(auto_tick=False)) as client:
            with client.websocket_connect("/ws") as ws:
                json.loads(ws.receive_text())
                ws.send_text("{nope")
                reply = json.loads(ws.receive_text())
                assert reply["type"] == "error" and "JSON" in reply["reason"]

    def test_steer_moves_state_broadcasts(self):
        with TestClient(self.app(auto_tick=True)) as client:
            with client.websocket_connect("/ws") as ws:
                json.loads(ws.receive_text())
                first = json.loads(ws.receive_text())
                assert first["type"] == "state"
                ws.send_text(json.dumps({"type": "steer", "dx": 6.0, "dy": 0.0}))
                moved = False
                last = first["target_px"]
                for _ in range(8):
                    msg = json.loads(ws.receive_text())
                    if msg["type"] == "state" and msg["target_px"] != last:
                        moved = True
                        break
                assert moved

    def test_serves_console_when_ui_dir_given(self, tmp_path):
        (tmp_path / "index.html").write_text("<!doctype html><title>console</title>")
        app = create_app(make_scenario(), auto_tick=False, ui_dir=str(tmp_path))
        with TestClient(app) as client:
            page = client.get("/")
            assert page.status_code == 200
            assert "console" in page.text
