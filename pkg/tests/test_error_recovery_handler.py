import json

import numpy as np
import pytest

from check_report import CheckReport
from error_recovery_handler import CheckRecoveryHandler
from errors import ConfigError, ConvergenceError, PoleProximityError, QuadratureError


def test_clean_run_logs_nothing():
    handler = CheckRecoveryHandler(rng_seed=1)
    assert handler.run("job", lambda rng: [1, 2]) == [1, 2]
    assert handler.get_recovery_stats()["total_recoveries"] == 0


def test_job_rng_is_keyed_by_name_and_attempt():
    handler = CheckRecoveryHandler(rng_seed=3)
    a = handler.job_rng("a").uniform(size=3)
    assert np.array_equal(a, CheckRecoveryHandler(rng_seed=3).job_rng("a").uniform(size=3))
    assert not np.array_equal(a, handler.job_rng("b").uniform(size=3))
    assert not np.array_equal(a, handler.job_rng("a", 1).uniform(size=3))


def test_pole_triggers_retry_with_fresh_draws():
    handler = CheckRecoveryHandler(retry_limit=2, rng_seed=0)
    calls = []

    def job(rng):
        calls.append(rng.uniform())
        if len(calls) == 1:
            raise PoleProximityError("T+", -0.5j, 0.0)
        return ["ok"]

    assert handler.run("pole", job) == ["ok"]
    assert calls[0] != calls[1]
    stats = handler.get_recovery_stats()
    assert stats["retry"] == 1.0 and stats["success_rate"] == 1.0


def test_retry_limit_then_safe_fail_report():
    handler = CheckRecoveryHandler(retry_limit=2, rng_seed=0, error_reporter=CheckReport.from_error)

    def job(rng):
        raise PoleProximityError("S", 1j, 0.0)

    out = handler.run("always-pole", job)
    assert len(out) == 1 and not out[0].passed
    assert out[0].error.startswith("PoleProximityError")
    entry = json.loads(handler.recovery_log[0])
    assert entry["error_recovery_pattern"] == "retry"
    assert "limit reached" in entry["recovery_outcome"]


def test_convergence_error_uses_fallback():
    handler = CheckRecoveryHandler()

    def job(rng):
        raise ConvergenceError("stalled", [1.0, 0.5])

    assert handler.run("bae", job, fallback=lambda rng: ["lm"]) == ["lm"]
    assert handler.get_recovery_stats()["fallback"] == 1.0


def test_config_error_escalates():
    handler = CheckRecoveryHandler(error_reporter=CheckReport.from_error)

    def job(rng):
        raise ConfigError("bad rank")

    with pytest.raises(ConfigError):
        handler.run("cfg", job)
    assert handler.get_recovery_stats()["escalate"] == 1.0


def test_safe_fail_without_reporter_reraises():
    handler = CheckRecoveryHandler()

    def job(rng):
        raise QuadratureError("no convergence")

    with pytest.raises(QuadratureError):
        handler.run("quad", job)
    assert handler.recovered_jobs() == ["quad"]


def test_stats_do_not_depend_on_job_order():
    def failing(rng):
        raise QuadratureError("x")

    def pole(rng):
        raise PoleProximityError("T", 0j, 0.0)

    first = CheckRecoveryHandler(error_reporter=CheckReport.from_error)
    second = CheckRecoveryHandler(error_reporter=CheckReport.from_error)
    for name, job in (("a", failing), ("b", pole)):
        first.run(name, job)
    for name, job in (("b", pole), ("a", failing)):
        second.run(name, job)
    assert first.get_recovery_stats() == second.get_recovery_stats()
