"""skotrim: two-sided Skorokhod reflection, h-cuts and tree trimming.

The package turns the equivalence between the h-cut of a contour path and
the depth-h pruning of the tree it encodes into executable form, plus a
stochastic harness reproducing the associated binary-tree and sticky-path
laws at random-walk scale.
"""

from .grafting import GraftSequence, build_from_grafts, verify_main1
from .paths import (
    DomainError,
    ExcursionPath,
    PiecewiseLinearPath,
    add,
    merge_times,
    paste,
    path_from_csv_file,
    path_to_csv_file,
    paths_equal,
    read_csv,
    subtract,
    write_csv,
)
from .reflection import (
    CutDecomposition,
    ReflectionResult,
    event_times_direct,
    h_cut,
    local_time_compensator,
    local_time_window_estimate,
    reflect_one_sided_high,
    reflect_one_sided_low,
    reflect_two_sided,
)
from .stochastic import (
    MarkedTreeSample,
    RandomWalkConfig,
    SamplingBudgetError,
    build_marked_sample,
    close_off,
    couple_and_extend,
    pn_statistics,
    sample_binary_tree,
    sample_excursion_conditioned,
    sample_excursion_first_return,
    sample_stop_counts,
    sample_walk,
    verify_teo1,
)
from .trees import (
    LeafProfile,
    PlaneTree,
    TreeNode,
    contour_to_tree,
    leaf_profile,
    mrca_height,
    profiles_equal,
    total_branch_length,
    tree_distance,
    tree_from_json_file,
    tree_from_json_obj,
    tree_to_contour,
    tree_to_json_file,
    tree_to_json_obj,
    trees_isometric,
    trees_structurally_equal,
    trim,
)

__version__ = "0.1.0"
