"""Kernel backend chosen at import: compiled if built, NumPy otherwise."""
try:
    from . import _ckernels as _impl
except ImportError:  # extension not built
    from . import _pykernels as _impl

BACKEND = _impl.BACKEND
products = _impl.products
merge = _impl.merge


def backends() -> dict:
    """All importable backends by name."""
    from . import _pykernels

    out = {"numpy": _pykernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
