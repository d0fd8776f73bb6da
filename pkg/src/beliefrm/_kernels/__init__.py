"""Kernel backend selection.

The compiled Cython extension is preferred when it imported cleanly; the
pure-Python fallback has identical semantics.  Set ``BELIEFRM_PURE=1`` to
force the fallback (used by the test suite and the benchmark to exercise
both paths).
"""

import os

from . import pure

BACKEND = "pure"

if not os.environ.get("BELIEFRM_PURE"):
    try:
        from . import _core  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _core = None
else:
    _core = None

if BACKEND == "compiled":
    belief_step = _core.belief_step
    belief_potential = _core.belief_potential
    trie_replay = _core.trie_replay
else:
    belief_step = pure.belief_step
    belief_potential = pure.belief_potential
    trie_replay = pure.trie_replay
