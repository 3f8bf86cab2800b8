import os
from dataclasses import dataclass

from services.errors import InputError

DEFAULT_TOLERANCE = 1e-9
DEFAULT_STEPS = 1000
DEFAULT_SEED = 0
DEFAULT_LOG_LEVEL = "WARNING"


def _read_number(name: str, default, cast):
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return cast(raw)
    except ValueError:
        raise InputError(f"{name} must be a number, got {raw!r}")


def get_tolerance(override: float | None = None) -> float:
    """
    Resolve the float tolerance: explicit override, then FOCALFRAMES_TOLERANCE,
    then the built-in default.
    """
    tolerance = override if override is not None else _read_number(
        "FOCALFRAMES_TOLERANCE", DEFAULT_TOLERANCE, float
    )
    if not tolerance > 0:
        raise InputError(f"tolerance must be positive, got {tolerance}")
    return tolerance


def get_steps(override: int | None = None) -> int:
    steps = override if override is not None else _read_number(
        "FOCALFRAMES_STEPS", DEFAULT_STEPS, int
    )
    if steps < 2:
        raise InputError(f"step count must be at least 2, got {steps}")
    return steps


def get_seed(override: int | None = None) -> int:
    if override is not None:
        return override
    return _read_number("FOCALFRAMES_SEED", DEFAULT_SEED, int)


def get_log_level() -> str:
    return os.getenv("FOCALFRAMES_LOG_LEVEL", DEFAULT_LOG_LEVEL).upper()


@dataclass(frozen=True)
class Settings:
    tolerance: float = DEFAULT_TOLERANCE
    steps: int = DEFAULT_STEPS
    seed: int = DEFAULT_SEED
    log_level: str = DEFAULT_LOG_LEVEL
    timings: bool = False


def get_settings(
    tolerance: float | None = None,
    steps: int | None = None,
    seed: int | None = None,
    timings: bool = False,
) -> Settings:
    """
    Build the settings for one CLI invocation or HTTP request.
    Command-line values win over the environment.
    """
    return Settings(
        tolerance=get_tolerance(tolerance),
        steps=get_steps(steps),
        seed=get_seed(seed),
        log_level=get_log_level(),
        timings=timings,
    )
