"""Hot numeric kernels with a numba fast path and a numpy fallback.

The two implementations follow one shared specification:

* Trees are grown depth-first with an explicit stack (right child pushed
  before left), splits minimize weighted Gini mass (classification) or
  within-node squared error (regression), candidate thresholds sit at
  midpoints between consecutive distinct sorted values, and the first
  strictly better candidate wins in (feature scan order, position) order.
* Per-node feature subsets come from an in-kernel splitmix64 stream seeded
  per tree, so parallel and serial fits agree and both backends consume
  identical draw sequences.
* Prefix statistics use sequential accumulation (``np.cumsum`` semantics)
  in both paths. On tie-free feature values the backends agree bit for bit;
  when distinct rows carry equal values the stable sorts still agree, and
  only sub-ulp distance ties in ``knn_indices`` may resolve differently.

Backend selection: the environment variable ``EATSENSE_NUMBA`` set to ``0``
(or ``false``/``no``/``off``) forces the numpy path; anything else uses
numba when it is importable. ``BACKEND`` records the active choice.
"""
from __future__ import annotations

import os

_flag = os.environ.get("EATSENSE_NUMBA", "1").strip().lower()
_want_numba = _flag not in ("0", "false", "no", "off")

if _want_numba:
    try:
        from . import _numba_impl as _impl

        BACKEND = "numba"
    except ImportError:
        from . import _numpy_impl as _impl

        BACKEND = "numpy"
else:
    from . import _numpy_impl as _impl

    BACKEND = "numpy"

grow_tree_cls = _impl.grow_tree_cls
grow_tree_reg = _impl.grow_tree_reg
tree_apply = _impl.tree_apply
knn_indices = _impl.knn_indices


def backends() -> dict[str, object]:
    """All importable kernel implementations, keyed by name."""
    from . import _numpy_impl

    found: dict[str, object] = {"numpy": _numpy_impl}
    try:
        from . import _numba_impl

        found["numba"] = _numba_impl
    except ImportError:
        pass
    return found
