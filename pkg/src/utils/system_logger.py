"""Central HinfCalc System Logging Utilities
Structured, color-coded logging for CLI commands and numerical routines.

Log Formats:
Command:
  HINF-SYSTEM-LOG | <LogType> | <Command> | <Target> | <Exit Code> | <Latency ms> | <Error Description / Remark> | <Marker>
Function:
  HINF-SYSTEM-LOG | <LogType> | <Function> | <Parameters with type> | <Start Time> | <End Time> | <Latency ms> | <Caller> | <Called> | <Response Type> | <Success Remarks> | <Error Description> | <Marker>

Log Types: INFO, DEBUG, REMARK, METRIC, ALERT, ERROR
Markers: ✔ success (green), ⚠ warning/alert (yellow), ✖ failure (red)
"""
from __future__ import annotations

import functools
import inspect
import logging
import re
import sys
from datetime import datetime, timezone
from time import perf_counter
from typing import Any, Callable, Dict

import numpy as np

LOG_PREFIX = "HINF-SYSTEM-LOG"

RESET = "\033[0m"
COLORS: Dict[str, str] = {
    "INFO": "\033[32m",
    "DEBUG": "\033[36m",
    "REMARK": "\033[35m",
    "METRIC": "\033[94m",
    "ALERT": "\033[33m",
    "ERROR": "\033[31m",
}
MARKERS = {
    "success": "\033[32m✔\033[0m",
    "alert": "\033[33m⚠\033[0m",
    "error": "\033[31m✖\033[0m",
}

# Exit codes shared with the CLI.
EXIT_PASS = 0
EXIT_BREACH = 1
EXIT_INVALID = 2

LOGGER_NAME = "hinf.system"
_base_logger = logging.getLogger(LOGGER_NAME)
_ANSI = re.compile(r"\x1b\[[0-9;]*m")


def init_system_logger(level: int = logging.INFO, enable_colors: bool | None = None) -> None:
    """Attach the stdout handler once. ANSI codes are stripped when colors are off;
    colorama, when installed, makes them work on Windows consoles.
    """
    if enable_colors is None:
        enable_colors = sys.stdout.isatty()
    if _base_logger.handlers:
        return  # Already initialized
    _base_logger.setLevel(level)
    handler = logging.StreamHandler(sys.stdout)

    if enable_colors and sys.platform.startswith("win"):
        try:  # optional dependency
            import colorama  # type: ignore
            colorama.just_fix_windows_console()
        except Exception:  # pragma: no cover - optional improvement only
            pass

    class _PassthroughFormatter(logging.Formatter):
        def format(self, record: logging.LogRecord) -> str:  # noqa: D401
            msg = record.getMessage()
            if not enable_colors:
                msg = _ANSI.sub("", msg)
            return msg

    handler.setFormatter(_PassthroughFormatter())
    _base_logger.addHandler(handler)
    _base_logger.propagate = False


def _colorize(log_type: str, text: str) -> str:
    color = COLORS.get(log_type.upper(), "")
    return f"{color}{text}{RESET}" if color else text


def _select_marker(log_type: str, exit_code: int | None = None, error: str | None = None) -> str:
    if error or log_type.upper() == "ERROR" or exit_code == EXIT_BREACH:
        return MARKERS["error"]
    if log_type.upper() == "ALERT" or exit_code == EXIT_INVALID:
        return MARKERS["alert"]
    return MARKERS["success"]


def log_command_event(
    log_type: str,
    command: str,
    target: str,
    exit_code: int,
    latency_ms: float,
    error: str | None = None,
    remark: str | None = None,
) -> None:
    """Emit a structured CLI command log line."""
    log_type_up = log_type.upper()
    marker = _select_marker(log_type_up, exit_code=exit_code, error=error)
    desc = error or remark or "-"
    line = " | ".join([
        LOG_PREFIX,
        _colorize(log_type_up, log_type_up),
        command.upper(),
        target or "-",
        str(exit_code),
        f"{latency_ms:.2f} ms",
        desc,
        marker,
    ])
    _base_logger.log(_map_level(log_type_up), line)


def log_function_event(
    log_type: str,
    function: str,
    params: str,
    start_time: datetime,
    end_time: datetime,
    latency_ms: float,
    caller: str,
    called: str,
    response_type: str,
    success_remark: str | None,
    error: str | None,
) -> None:
    log_type_up = log_type.upper()
    marker = _select_marker(log_type_up, error=error)
    line = " | ".join([
        LOG_PREFIX,
        _colorize(log_type_up, log_type_up),
        function,
        params or "-",
        start_time.isoformat(timespec="milliseconds"),
        end_time.isoformat(timespec="milliseconds"),
        f"{latency_ms:.2f} ms",
        caller,
        called,
        response_type,
        success_remark or ("-" if error else "OK"),
        error or "-",
        marker,
    ])
    _base_logger.log(_map_level(log_type_up), line)


def _map_level(log_type: str) -> int:
    return {
        "DEBUG": logging.DEBUG,
        "INFO": logging.INFO,
        "REMARK": logging.INFO,
        "METRIC": logging.INFO,
        "ALERT": logging.WARNING,
        "ERROR": logging.ERROR,
    }.get(log_type, logging.INFO)


def _describe(value: Any) -> str:
    if isinstance(value, np.ndarray):
        return f"ndarray{value.shape}<{value.dtype}>"
    try:
        rep = repr(value)
    except Exception:  # pragma: no cover
        return "<unrepr>"
    return rep if len(rep) <= 120 else rep[:117] + "..."


def _format_params(bound_args: inspect.BoundArguments) -> str:
    parts = [f"{name}={_describe(value)}({type(value).__name__})" for name, value in bound_args.arguments.items()]
    joined = ", ".join(parts)
    return joined if len(joined) <= 400 else joined[:397] + "..."


def _now() -> datetime:
    return datetime.now(timezone.utc)


def log_function(log_type: str = "DEBUG", success_remark: str | None = "SUCCESS") -> Callable:
    """Log one function-format line per call of the wrapped numerical routine.

    Successful calls are only formatted when the system logger would emit them;
    failures are always logged at ERROR before the exception propagates.
    """
    level = _map_level(log_type.upper())

    def decorator(fn: Callable) -> Callable:
        sig = inspect.signature(fn)
        called = f"{fn.__module__}.{fn.__name__}"

        @functools.wraps(fn)
        def _wrapper(*args, **kwargs):
            start_perf = perf_counter()
            start_dt = _now()
            frame = inspect.currentframe()
            caller_fn = frame.f_back.f_code.co_name if frame is not None and frame.f_back is not None else "-"
            del frame
            try:
                result = fn(*args, **kwargs)
            except Exception as e:  # noqa: BLE001
                latency = (perf_counter() - start_perf) * 1000
                bound = sig.bind(*args, **kwargs)
                log_function_event("ERROR", fn.__name__, _format_params(bound), start_dt, _now(), latency,
                                   caller_fn, called, "-", None, f"{type(e).__name__}: {e}")
                raise
            if _base_logger.isEnabledFor(level):
                latency = (perf_counter() - start_perf) * 1000
                bound = sig.bind(*args, **kwargs)
                bound.apply_defaults()
                log_function_event(log_type, fn.__name__, _format_params(bound), start_dt, _now(), latency,
                                   caller_fn, called, type(result).__name__, success_remark, None)
            return result

        return _wrapper

    return decorator


def log_metric_function(success_remark: str | None = "SUCCESS") -> Callable:
    return log_function("METRIC", success_remark)


__all__ = [
    "EXIT_BREACH",
    "EXIT_INVALID",
    "EXIT_PASS",
    "init_system_logger",
    "log_command_event",
    "log_function",
    "log_metric_function",
]
