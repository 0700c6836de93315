"""viewforge: design and verification of distributed views.

Computes minimally informative useful views over multi-source schemas,
decides query determinacy by chase rounds, and decides or refutes
non-disclosure of secret queries against the critical instance.
"""

from .model import (
    Atom,
    ConjunctiveQuery,
    Constant,
    DInstance,
    DSchema,
    DisjunctiveQuery,
    DView,
    EqualityRule,
    ExistentialRule,
    InputError,
    Instance,
    LabeledNull,
    NullFactory,
    Pair,
    RelationSymbol,
    Tri,
    Variable,
    View,
    active_domain,
    boolean_closure,
    build_canondb,
    freeze_nulls,
    pair_height,
    validate_dschema,
)
from .homomorphism import (
    all_homomorphisms,
    cq_homomorphism,
    enumerate_matches,
    find_homomorphism,
    query_holds,
    verify_homomorphism,
)
from .chase import (
    ChaseConfig,
    ChaseResult,
    EqualityClash,
    is_weakly_acyclic,
    rules_satisfied,
    run_chase,
)
from .canonical import (
    canonical_context,
    canonical_dview,
    canonical_view,
    is_monadic_frontier,
    source_vars,
    sjvars,
)
from .minimization import (
    equivalent,
    equivalent_under_rules,
    is_minimal,
    minimize,
    minimize_under_rules,
)
from .determinacy import (
    check_determinacy,
    make_view_rules,
)
from .shuffles import (
    build_shuffle_views,
    has_only_trivial_shuffles,
    shuffle_equivalent,
)
from .ra import (
    compile_dcq_to_ra,
    eval_dcq,
    eval_ra,
    to_lisp,
    view_image,
)
from .oracle import (
    refute_determinacy,
    sq_equivalence_exact,
    views_agree,
)
from .disclosure import (
    check_un_disclosure_cq,
    check_un_disclosure_oracle,
    entails_under_rules,
    exists_useful_nondisclosing_cq,
    validate_escape_witness,
)
from .replication import (
    full_replication_design,
    min_replicated_height,
    replication_rules,
    str_equivalent,
    str_transform,
    synchronous_product,
)
from .workspace import (
    Workspace,
    parse_workspace,
    print_query,
    print_rule,
    print_view,
    print_workspace,
)
from .design import (
    RunConfig,
    run_design,
    verify_report,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
