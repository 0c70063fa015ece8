"""Backend selection for the daily step kernel.

The compiled extension is used when it imports; otherwise the pure-Python
twin. Setting ``AGPL_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _kernel_py

_compiled = None
if os.environ.get("AGPL_PURE_PYTHON", "").strip() not in ("1", "true", "yes"):
    try:
        from . import _kernel as _compiled
    except ImportError:
        _compiled = None


def _advance_day_py(s, p, srad, tmax, tmin, rain, n_fert, water, f):
    # Python floats are much faster than numpy scalars for this scalar loop
    sl, fl = s.tolist(), f.tolist()
    _kernel_py.advance_day(sl, p.tolist(), srad, tmax, tmin, rain, n_fert, water, fl)
    s[:] = sl
    f[:] = fl


def _run_season_py(s, p, wx, start, actions, max_days, obs_out, flux_out):
    sl = s.tolist()
    obs, flux = [None] * len(actions), [None] * len(actions)
    n = _kernel_py.run_season(sl, p.tolist(), wx.tolist(), start, actions.tolist(), max_days, obs, flux)
    s[:] = sl
    obs_out[:n] = obs[:n]
    flux_out[:n] = flux[:n]
    return n


def _resolve(name):
    if name is None:
        name = "cython" if _compiled is not None else "python"
    if name not in ("cython", "python"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "cython" and _compiled is None:
        raise ImportError("compiled kernel is not available; build with `pip install -e .`")
    return name


def get_backend(name=None):
    """Return ``(backend_name, advance_day)``; ``name`` may be 'cython' or 'python'."""
    name = _resolve(name)
    return name, (_compiled.advance_day if name == "cython" else _advance_day_py)


def get_season_runner(name=None):
    """Return ``(backend_name, run_season)`` for open-loop whole-season runs."""
    name = _resolve(name)
    return name, (_compiled.run_season if name == "cython" else _run_season_py)


def compiled_available():
    return _compiled is not None


BACKEND, advance_day = get_backend()
