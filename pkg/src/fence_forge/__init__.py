"""fence-forge: finite fence towers over the 2-shift, with receipts.

The package builds finite-depth inverse approximations of fences
(Cantor fans of vertical fibers over cylinder graphs), lifts shift
dynamics onto them when the per-level deviations stay summable, and
certifies every structural or dynamical claim as an exact rational
that a test can pin down.

Layers, bottom up:

* :mod:`fence_forge.rationals`: exact values, interning, formatting.
* :mod:`fence_forge.graph_systems`: levels, bonds, threads, the base
  metric, and graded shift determinism on the base.
* :mod:`fence_forge.fence_systems`: fibers over the base, validation,
  exact rate certificates, family classification.
* :mod:`fence_forge.lifting`: per-level deviation certificates and the
  lifted maps they control.
* :mod:`fence_forge.constructors`: the bundled tower families.
* :mod:`fence_forge.verify`: claim checkers producing certificates.
* :mod:`fence_forge.serialize` / :mod:`fence_forge.render`: canonical
  JSON reports and deterministic SVG sketches.
"""

from . import errors
from .rationals import ValueTable, format_frac, parse_frac, pow2
from .graph_systems import (
    Level,
    Thread,
    Tower,
    all_threads,
    base_image,
    base_preimage,
    compose_bond,
    iterate_base,
    level_diameter,
    thread_distance,
    thread_from_vertex,
    validate_c_structure,
    validate_graph_c_system,
)
from .fence_systems import (
    FencePoint,
    FSystem,
    classify,
    default_rate,
    eta_exact,
    eta_level,
    eta_lower_bound,
    eta_one_sided,
    eta_report,
    fence_distance,
    fence_slab,
    validate_f_system,
)
from .lifting import (
    condition_gamma,
    gamma_level,
    gamma_report,
    lift_apply,
    lift_inverse,
)
from .constructors.basic import (
    build_cantor,
    build_fraisse,
    build_lelek,
    build_twosided,
)
from .constructors.cycles import build_isometry_lift, build_warmup_isometry
from .constructors.odometer import (
    build_minimal_fraisse_lift,
    build_odometer_tower,
    pair_tour,
    refine_cycle_odometer,
)
from .constructors.orbit import (
    build_chaotic_lift,
    build_mixing_lift,
    build_template,
    build_transitive_lift,
)
from .constructors.shift import (
    KMask,
    ZeroBackedPoint,
    build_shift_tower,
    invariant_point_mask,
    masked_path_profile,
    mixing_points,
)
from .verify import (
    certificate,
    check_entropy,
    check_factor,
    check_isometry,
    check_mixing,
    check_periodic,
    check_transitive,
    check_twosided_inheritance,
)

__version__ = "0.1.0"

__all__ = [
    "errors",
    "ValueTable", "format_frac", "parse_frac", "pow2",
    "Level", "Thread", "Tower", "all_threads", "base_image",
    "base_preimage", "compose_bond", "iterate_base", "level_diameter",
    "thread_distance", "thread_from_vertex", "validate_c_structure",
    "validate_graph_c_system",
    "FencePoint", "FSystem", "classify", "default_rate", "eta_exact",
    "eta_level", "eta_lower_bound", "eta_one_sided", "eta_report",
    "fence_distance", "fence_slab", "validate_f_system",
    "condition_gamma", "gamma_level", "gamma_report", "lift_apply",
    "lift_inverse",
    "build_cantor", "build_fraisse", "build_lelek", "build_twosided",
    "build_isometry_lift", "build_warmup_isometry",
    "build_minimal_fraisse_lift", "build_odometer_tower", "pair_tour",
    "refine_cycle_odometer",
    "build_chaotic_lift", "build_mixing_lift", "build_template",
    "build_transitive_lift",
    "KMask", "ZeroBackedPoint", "build_shift_tower",
    "invariant_point_mask", "masked_path_profile", "mixing_points",
    "certificate", "check_entropy", "check_factor", "check_isometry",
    "check_mixing", "check_periodic", "check_transitive",
    "check_twosided_inheritance",
    "__version__",
]
