"""Static analysis and optimization of lambda-letrec terms.

The pipeline detects repetitive reduction patterns (parameter cycles,
dominated binders) in recursive definitions, removes the responsible
binders, verifies each step against a bounded operational-equivalence
oracle, and quantifies the beta steps saved per recursive iteration.
"""

from .binding import (
    BLACKHOLE,
    BindingGraph,
    ExprNode,
    VarNode,
    binding_graph,
    decorate,
    parameter_cycles,
    spine_search_graph,
    to_dot,
)
from .corpus import bench_corpus, bench_term, load_corpus
from .dominators import (
    dominates,
    strong_dom_fixpoint,
    strong_dominators_of,
    strongly_dominates,
)
from .equivalence import Verdict, applicative_experiments, check_op_eq
from .infer import infer_types, parse_signature
from .reduction import (
    boehm_approx,
    contract,
    count_steps_to_depth,
    find_redexes,
    normal_order_eval,
)
from .terms import (
    Abs,
    App,
    Letrec,
    Term,
    Var,
    alpha_eq,
    ensure_distinctly_bound,
    free_vars,
    parse,
    pretty,
    substitute,
)
from .transform import (
    eliminate_vacuous_binders,
    lift_recurrent_parameter,
    optimize,
    substitute_dominated,
    unfold_once,
)

__version__ = "0.1.0"
