"""Backend selection for the SGD hot loop.

The compiled extension is preferred when importable; otherwise the numpy
fallback is used. Set ``COLDSTART_RL_BACKEND`` to ``cython`` or ``python`` to
force a backend (``cython`` raises if the extension is missing).
"""

import os

from . import _sgd_python


def _select():
    choice = os.environ.get("COLDSTART_RL_BACKEND", "auto").lower()
    if choice not in ("auto", "cython", "python"):
        raise ValueError(
            f"COLDSTART_RL_BACKEND must be auto, cython or python, got {choice!r}"
        )
    if choice in ("auto", "cython"):
        try:
            from . import _sgd_cython

            return _sgd_cython.sgd_pass, "cython"
        except ImportError:
            if choice == "cython":
                raise
    return _sgd_python.sgd_pass, "python"


sgd_pass, BACKEND = _select()
