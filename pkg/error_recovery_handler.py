# error_recovery_handler.py
# Recovery orchestration for check and solver jobs: retry, fallback, escalate or safe-fail.
from __future__ import annotations

import json
import logging
import threading
import time
import zlib
from typing import Any, Callable, Dict, List, Optional, Protocol, Sequence

import numpy as np

from errors import (
    ConfigError,
    ConvergenceError,
    DimensionCapError,
    PoleProximityError,
    SingularJacobianError,
    StateFormatError,
)

logger = logging.getLogger(__name__)


class Job(Protocol):
    """A unit of work drawing its random parameters from the generator it is handed."""

    def __call__(self, rng: np.random.Generator) -> List[Any]: ...


ErrorReporter = Callable[[str, BaseException], Any]


class CheckRecoveryHandler:
    def __init__(
        self,
        retry_limit: int = 2,
        rng_seed: Optional[int] = None,
        error_reporter: Optional[ErrorReporter] = None,
    ):
        self.categories: List[str] = ["retry", "fallback", "escalate", "safe-fail"]
        self.retry_limit = retry_limit
        self.rng_seed = 0 if rng_seed is None else int(rng_seed)
        self.error_reporter = error_reporter
        self.recovery_log: List[str] = []
        self._lock = threading.Lock()

    def job_rng(self, name: str, attempt: int = 0) -> np.random.Generator:
        # keyed by job name so concurrent scheduling order never changes the draws
        seq = np.random.SeedSequence([self.rng_seed, zlib.crc32(name.encode("utf-8")), attempt])
        return np.random.default_rng(seq)

    def run(self, name: str, job: Job, fallback: Optional[Job] = None) -> List[Any]:
        try:
            return job(self.job_rng(name))
        except Exception as e:  # noqa: BLE001
            return self.classify_and_recover(name, job, e, fallback)

    def classify_and_recover(
        self, name: str, job: Job, error: BaseException, fallback: Optional[Job] = None
    ) -> List[Any]:
        start = time.time()
        trace: Dict[str, Any] = {"job": name, "exception": type(error).__name__, "message": str(error)}
        if isinstance(error, PoleProximityError):
            pattern = "retry"
            result = self._retry(name, job, trace)
        elif isinstance(error, (ConvergenceError, SingularJacobianError)) and fallback is not None:
            pattern = "fallback"
            result = self._fallback(name, fallback, trace)
        elif isinstance(error, (ConfigError, DimensionCapError, StateFormatError)):
            pattern = "escalate"
            result = None
        else:
            pattern = "safe-fail"
            result = None

        trace["error_recovery_pattern"] = pattern
        trace["latency_ms"] = int((time.time() - start) * 1000)
        if pattern == "escalate":
            trace["recovery_outcome"] = f"Escalate for {name}"
            self._log(trace)
            raise error
        try:
            if result is None:
                result = self._safe_fail(name, error, trace)
        finally:
            self._log(trace)
        return result

    def _retry(self, name: str, job: Job, trace: Dict[str, Any]) -> Optional[List[Any]]:
        for attempt in range(1, self.retry_limit + 1):
            trace["retry_attempt"] = attempt
            try:
                result = job(self.job_rng(name, attempt))
            except PoleProximityError as e:
                logger.warning("retry %d of %s hit a pole again: %s", attempt, name, e)
                continue
            except Exception as e:  # noqa: BLE001
                trace["recovery_outcome"] = f"Retry {attempt} failed for {name}: {type(e).__name__}"
                trace["message"] = str(e)
                return None
            trace["recovery_outcome"] = f"Retry {attempt} successful for {name}"
            return result
        trace["recovery_outcome"] = f"Retry {self.retry_limit} failed for {name} (limit reached)"
        return None

    def _fallback(self, name: str, fallback: Job, trace: Dict[str, Any]) -> Optional[List[Any]]:
        try:
            result = fallback(self.job_rng(name))
        except Exception as e:  # noqa: BLE001
            trace["recovery_outcome"] = f"Fallback failed for {name}: {type(e).__name__}"
            trace["message"] = str(e)
            return None
        trace["recovery_outcome"] = f"Fallback used for {name}"
        return result

    def _safe_fail(self, name: str, error: BaseException, trace: Dict[str, Any]) -> List[Any]:
        trace.setdefault("recovery_outcome", f"Safe-fail for {name}")
        logger.warning("%s failed: %s: %s", name, type(error).__name__, error)
        if self.error_reporter is None:
            raise error
        return [self.error_reporter(name, error)]

    def _log(self, trace: Dict[str, Any]) -> None:
        with self._lock:
            self.recovery_log.append(json.dumps(trace, ensure_ascii=False, sort_keys=True))

    def get_recovery_stats(self) -> Dict[str, float]:
        if not self.recovery_log:
            return {"total_recoveries": 0, "success_rate": 0.0, **{c: 0.0 for c in self.categories}}
        # sorted so the stats never depend on job completion order
        entries = [json.loads(e) for e in sorted(self.recovery_log)]
        pats = [e.get("error_recovery_pattern", "none") for e in entries]
        success = 0
        for e in entries:
            out = e.get("recovery_outcome", "")
            if ("successful" in out and out.startswith("Retry")) or out.startswith("Fallback used"):
                success += 1
        total = len(pats)
        dist = {c: round(pats.count(c) / total, 4) for c in self.categories}
        return {"total_recoveries": total, "success_rate": round(success / total, 4), **dist}

    def recovered_jobs(self) -> Sequence[str]:
        return sorted(json.loads(e)["job"] for e in self.recovery_log)
