"""flatmoduli package"""

# flatmoduli.py runs standalone; the package exposes its entry points lazily
# so "from flatmoduli import main" keeps working from a checkout.

def _load_cli():
    """Load flatmoduli.py once (under an alias) and cache it."""
    import sys
    import os
    import importlib.util

    if '_flatmoduli_cli' in sys.modules:
        return sys.modules['_flatmoduli_cli']

    pkg_dir = os.path.dirname(__file__)
    if pkg_dir not in sys.path:
        sys.path.insert(0, pkg_dir)

    spec = importlib.util.spec_from_file_location("_flatmoduli_cli", os.path.join(pkg_dir, 'flatmoduli.py'))
    module = importlib.util.module_from_spec(spec)
    sys.modules['_flatmoduli_cli'] = module
    spec.loader.exec_module(module)
    return module


def __getattr__(name):
    """Lazy passthrough to the public symbols defined in flatmoduli.py."""
    if name in __all__:
        return getattr(_load_cli(), name)
    raise AttributeError(f"module '{__name__}' has no attribute '{name}'")


__all__ = ['main', 'execute', 'build_parser']
