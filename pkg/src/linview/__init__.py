"""linview: runtime verification of linearizability from inside the run.

The pieces, bottom to top: histories and similarity (`history`),
sequential specs (`seqspec`), membership checking (`membership`), a
deterministic shared-memory simulator (`sim`), the view-announcing
wrapper and view/history round trips (`views`, `enforce`), online
verification (`verifier`), and text formats plus a CLI (`trace`, `cli`).
"""

from .history import (Event, History, HistoryError, Op, equivalent, inv,
                      is_similar, res)
from .membership import (AbstractObject, brute_force_linearizable,
                         is_linearizable, lin_object)
from .seqspec import EMPTY, SeqSpec, accepts, catalog, get_spec
from .views import ViewTuple, build_history, lambda_of, tighten, validate_views

__all__ = [
    "AbstractObject", "EMPTY", "Event", "History", "HistoryError", "Op",
    "SeqSpec", "ViewTuple", "accepts", "brute_force_linearizable",
    "build_history", "catalog", "equivalent", "get_spec", "inv",
    "is_linearizable", "is_similar", "lambda_of", "lin_object", "res",
    "tighten", "validate_views",
]

__version__ = "0.1.0"
