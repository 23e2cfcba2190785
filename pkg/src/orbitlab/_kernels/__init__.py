"""Hot-kernel backend selection.

The compiled extension is preferred; the numpy fallback is used when the
extension is absent or when ORBITLAB_FORCE_FALLBACK=1 is set.  Both expose
the same functions with identical semantics (see _fallback.py).
"""

import os

from . import _fallback

_forced = os.environ.get("ORBITLAB_FORCE_FALLBACK") == "1"
if not _forced:
    try:
        from . import _speedups as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _fallback
        BACKEND = "fallback"
else:
    _impl = _fallback
    BACKEND = "fallback"

hyp_dist = _impl.hyp_dist
sup_dist_many = _impl.sup_dist_many
max_pairwise_dist = _impl.max_pairwise_dist
greedy_select = _impl.greedy_select
expand_round_int = _impl.expand_round_int
reduce_modular = _impl.reduce_modular
concave_flags_int = _impl.concave_flags_int

# the fallback stays importable for the benchmark and equivalence tests
fallback = _fallback
