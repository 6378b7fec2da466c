"""Iteration-kernel backend selection.

The compiled Cython kernel is preferred when the extension built; the
pure numpy kernel is the fallback and the reference. Both expose the
same run_iterations contract. Override the default with set_default(),
a per-call backend= argument, or the PSADMM_BACKEND environment
variable ("compiled" or "pure").
"""

import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

_default = None


def available():
    """Backend names usable on this install, preferred first."""
    return ("compiled", "pure") if _compiled is not None else ("pure",)


def default_name():
    global _default
    if _default is None:
        env = os.environ.get("PSADMM_BACKEND")
        if env:
            resolve(env)  # fail fast on a bad value
            _default = env
        else:
            _default = "compiled" if _compiled is not None else "pure"
    return _default


def set_default(name):
    """Set the process-wide default backend (validates the name)."""
    global _default
    resolve(name)
    _default = name


def resolve(name=None):
    """Return the kernel module for a backend name (None = default)."""
    if name is None:
        name = default_name()
    if name == "pure":
        return _kernels_py
    if name == "compiled":
        if _compiled is None:
            raise ValueError("compiled kernel is not available on this install")
        return _compiled
    raise ValueError(f"unknown backend {name!r}; expected 'compiled' or 'pure'")
