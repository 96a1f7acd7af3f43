import logging
from typing import List

import numpy as np
import pytest

# Import module to access internals for controlled setup in tests
from src.utils import system_logger as sl
from src.utils.system_logger import (
    EXIT_BREACH,
    EXIT_INVALID,
    EXIT_PASS,
    init_system_logger,
    log_command_event,
    log_function,
)


def _reset_logger():
    # Ensure clean logger between tests
    for h in list(sl._base_logger.handlers):
        sl._base_logger.removeHandler(h)
    sl._base_logger.setLevel(logging.NOTSET)


def _split_log(line: str) -> List[str]:
    return [part.strip() for part in line.strip().split("|")]


def test_command_log_success_format(capsys):
    _reset_logger()
    init_system_logger(level=logging.DEBUG, enable_colors=False)

    log_command_event(
        log_type="INFO",
        command="calc",
        target="diag:-1,-2",
        exit_code=EXIT_PASS,
        latency_ms=12.34,
        remark="computed 1 matrices",
    )

    out = capsys.readouterr().out.strip()
    # Example: HINF-SYSTEM-LOG | INFO | CALC | diag:-1,-2 | 0 | 12.34 ms | computed 1 matrices | ✔
    parts = _split_log(out)
    assert parts[0] == "HINF-SYSTEM-LOG"
    assert parts[1] == "INFO"
    assert parts[2] == "CALC"
    assert parts[3] == "diag:-1,-2"
    assert parts[4] == "0"
    # For command logs, latency is at index 5
    assert parts[5].endswith("ms")
    assert parts[6] == "computed 1 matrices"
    assert parts[7] == "✔"


def test_command_log_exit_code_markers(capsys):
    _reset_logger()
    init_system_logger(level=logging.DEBUG, enable_colors=False)

    # Invalid input
    log_command_event("ALERT", "sweep", "geometric", EXIT_INVALID, 5.0)
    parts1 = _split_log(capsys.readouterr().out.strip())
    assert parts1[7] == "⚠"

    # Invariant breach
    log_command_event("ERROR", "sweep", "geometric", EXIT_BREACH, 5.0, error="InvariantBreachError: 2 rows")
    parts2 = _split_log(capsys.readouterr().out.strip())
    assert parts2[6].startswith("InvariantBreachError")
    assert parts2[7] == "✖"


def test_function_log_success_and_error_sync(capsys):
    _reset_logger()
    init_system_logger(level=logging.DEBUG, enable_colors=False)

    @log_function("INFO", "OK_DONE")
    def add(a: int, b: int) -> int:
        return a + b

    @log_function("INFO")
    def fail(_: int) -> None:
        raise RuntimeError("bad")

    assert add(2, 3) == 5
    parts = _split_log(capsys.readouterr().out.strip())
    # HINF-SYSTEM-LOG | INFO | add | a=2(int), b=3(int) | <start> | <end> | <ms> | <caller> | <called> | int | OK_DONE | - | ✔
    assert parts[0] == "HINF-SYSTEM-LOG"
    assert parts[1] == "INFO"
    assert parts[2] == "add"
    assert "a=2(int)" in parts[3]
    assert "b=3(int)" in parts[3]
    # For function logs, latency is at index 6
    assert parts[6].endswith("ms")
    assert parts[7] == "test_function_log_success_and_error_sync"
    assert parts[9] == "int"
    assert parts[10] == "OK_DONE"
    assert parts[12] == "✔"

    with pytest.raises(RuntimeError):
        fail(1)
    parts_err = _split_log(capsys.readouterr().out.strip())
    assert parts_err[1] == "ERROR"
    assert parts_err[2] == "fail"
    assert parts_err[11] == "RuntimeError: bad"
    assert parts_err[12] == "✖"


def test_function_log_summarises_arrays(capsys):
    _reset_logger()
    init_system_logger(level=logging.DEBUG, enable_colors=False)

    @log_function("DEBUG", "NORM_OK")
    def norm(M):
        return float(np.linalg.norm(M))

    norm(np.eye(3))
    parts = _split_log(capsys.readouterr().out.strip())
    assert "M=ndarray(3, 3)<float64>(ndarray)" in parts[3]
    assert parts[9] == "float"


def test_success_lines_skipped_below_level(capsys):
    _reset_logger()
    init_system_logger(level=logging.INFO, enable_colors=False)

    @log_function("DEBUG", "QUIET")
    def quiet() -> int:
        return 1

    @log_function("DEBUG")
    def loud() -> None:
        raise ValueError("still logged")

    quiet()
    assert capsys.readouterr().out == ""
    with pytest.raises(ValueError):
        loud()
    assert "still logged" in capsys.readouterr().out


def test_init_idempotent_does_not_duplicate(capsys):
    _reset_logger()
    init_system_logger(level=logging.DEBUG, enable_colors=False)
    # Second init should not add another handler
    init_system_logger(level=logging.DEBUG, enable_colors=False)

    log_command_event("INFO", "verify", "-", 0, 1.0, remark="OK")
    out1 = capsys.readouterr().out

    log_command_event("INFO", "verify", "-", 0, 1.0, remark="OK")
    out2 = capsys.readouterr().out

    assert out1.count("HINF-SYSTEM-LOG") == 1
    assert out2.count("HINF-SYSTEM-LOG") == 1
