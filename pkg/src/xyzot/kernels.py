"""Backend selection for the hot loops.

The compiled extension ``xyzot._ckernels`` is used when it was built at
install time; otherwise the numpy fallback in ``xyzot._kernels_py`` is
selected.  Both expose the same three functions with identical results.
"""

from contextlib import contextmanager

from . import _kernels_py

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _kernels_py}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels

DEFAULT_BACKEND = "cython" if _ckernels is not None else "python"
_active = _BACKENDS[DEFAULT_BACKEND]


def available():
    return sorted(_BACKENDS)


def active_name():
    return next(name for name, mod in _BACKENDS.items() if mod is _active)


def get(name=None):
    """Kernel module by name, or the active one."""
    if name is None:
        return _active
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} not available; have {available()}") from None


def set_backend(name):
    global _active
    _active = get(name)


@contextmanager
def backend(name):
    """Temporarily switch the active backend."""
    global _active
    previous = _active
    _active = get(name)
    try:
        yield _active
    finally:
        _active = previous
