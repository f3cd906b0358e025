"""Thread cap from ``STRATUM_THREADS``; imported before numpy so BLAS sees it."""
import os

_BLAS_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def thread_cap() -> int | None:
    """Parsed ``STRATUM_THREADS`` (None when unset); ValueError when invalid."""
    raw = os.environ.get("STRATUM_THREADS")
    if raw is None:
        return None
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise ValueError(f"STRATUM_THREADS must be a positive integer, got {raw!r}")
    return n


def apply_thread_cap() -> None:
    try:
        n = thread_cap()
    except ValueError:
        return  # reported by the CLI
    if n is not None:
        for var in _BLAS_VARS:
            os.environ[var] = str(n)
