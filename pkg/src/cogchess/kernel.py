"""Move-kernel selection.

The compiled Cython kernel is used when it imported cleanly; otherwise the
pure-Python twin takes over. COGCHESS_PURE=1 forces the pure kernel, which
the parity tests and the benchmark use to pin both implementations down.
"""

import os

from . import _kernel_py

_impl = _kernel_py
if os.environ.get("COGCHESS_PURE") != "1":
    try:
        from . import _kernel_cy as _compiled
    except ImportError:
        _compiled = None
    if _compiled is not None:
        _impl = _compiled

IMPLEMENTATION = _impl.IMPLEMENTATION

generate_moves = _impl.generate_moves
make_move = _impl.make_move
attacked = _impl.attacked
king_square = _impl.king_square
in_check = _impl.in_check
perft = _impl.perft


def available_kernels() -> dict:
    """Importable kernels by name, for parity tests and benchmarks."""
    kernels = {"pure-python": _kernel_py}
    try:
        from . import _kernel_cy
    except ImportError:
        pass
    else:
        kernels[_kernel_cy.IMPLEMENTATION] = _kernel_cy
    return kernels
