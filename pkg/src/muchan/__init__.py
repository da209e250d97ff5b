"""Mixed-unitary structure analysis for unital channels and their generators.

The package answers, for unital quantum channels on d x d matrices and for
the GKLS generators of unital semigroups:

- representation handling and verification (Kraus / Choi / superoperator),
- heuristic mixed-unitary decomposition with certified residuals,
- dual-cone witness search and analytic transpose-type witnesses,
- structural decompositions (peripheral algebras, automorphism parts,
  mixed-unitary index),
- semigroup evolution, all-times and eventual mixed-unitarity scans,
- exact Weyl-covariant and finite-family cone analysis.

Every submodule re-exports here; the ``muchan`` console script exposes the
same analyses as subcommands.
"""

from .channels import (
    Channel,
    InvalidChannelError,
    ParseError,
    VerifyReport,
    ad_unitary,
    apply,
    channel_from_dict,
    channel_from_json,
    channel_to_dict,
    channel_to_json,
    choi_of,
    choi_to_superop,
    compose,
    depolarizing,
    dual_of,
    holevo_werner,
    identity_channel,
    kraus_of,
    kraus_to_choi,
    kraus_to_superop,
    matrix_from_lists,
    matrix_to_lists,
    pair,
    superop_of,
    superop_to_choi,
    transpose_map,
    transpose_superop,
    unvec,
    vec,
    verify,
)
from .config import (
    DELTA_WIT,
    EPS_CONE,
    EPS_MU,
    TAU_WIT,
    FWConfig,
    RunConfig,
    WitnessConfig,
    parse_grid,
)
from .dynamics import (
    AllTimesMUReport,
    GeneratorReport,
    GKLSData,
    InvalidGeneratorError,
    ScanReport,
    closed_form_g,
    eventual_mu_scan,
    evolve,
    example59_generator,
    find_root_t0,
    generator_from_dict,
    generator_peripheral_split,
    generator_to_dict,
    gkls_data,
    gkls_superop,
    kummerer_maassen_generator,
    mu_all_times,
    scan_to_csv,
    scan_to_dict,
    transpose_witness_bank,
    validate_generator,
    witness_curve,
)
from .matcore import (
    cmat,
    dag,
    eig_general,
    eig_herm,
    expm,
    hs_inner,
    is_hermitian,
    polar_retract,
    random_unitary,
    svd_values,
)
from .mucone import (
    MUDecomposition,
    Witness,
    conj_floor,
    decomposition_to_dict,
    fw_decompose,
    lmo_unitary,
    min_trace_a_abar,
    simplex_lsq,
    transpose_witness,
    unvech,
    vech,
    witness_search,
    witness_to_dict,
    witness_value,
)
from .structure import (
    AutomorphismError,
    BlockAlgebra,
    MUIndexReport,
    PeripheralSplit,
    asymptotic_parts,
    automorphism_unitary,
    block_algebra_from_dict,
    block_algebra_to_dict,
    conditional_expectation,
    mu_index,
    mu_index_to_dict,
    peripheral_split,
)
from .weyl import (
    ConeMembershipResult,
    WeylSystem,
    cone_result_to_dict,
    g_cone_membership,
    g_mixed_decompose,
    is_weyl_covariant,
    mixed_weyl_decompose,
    weyl_coeffs,
    weyl_coeffs_to_dict,
    weyl_cone_membership,
    weyl_system,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # channels
    "Channel", "InvalidChannelError", "ParseError", "VerifyReport",
    "ad_unitary", "apply", "channel_from_dict", "channel_from_json",
    "channel_to_dict", "channel_to_json", "choi_of", "choi_to_superop",
    "compose", "depolarizing", "dual_of", "holevo_werner", "identity_channel",
    "kraus_of", "kraus_to_choi", "kraus_to_superop", "matrix_from_lists",
    "matrix_to_lists", "pair", "superop_of", "superop_to_choi",
    "transpose_map", "transpose_superop", "unvec", "vec", "verify",
    # config
    "DELTA_WIT", "EPS_CONE", "EPS_MU", "TAU_WIT",
    "FWConfig", "RunConfig", "WitnessConfig", "parse_grid",
    # dynamics
    "AllTimesMUReport", "GeneratorReport", "GKLSData",
    "InvalidGeneratorError", "ScanReport", "closed_form_g",
    "eventual_mu_scan", "evolve", "example59_generator", "find_root_t0",
    "generator_from_dict", "generator_peripheral_split", "generator_to_dict",
    "gkls_data", "gkls_superop", "kummerer_maassen_generator",
    "mu_all_times", "scan_to_csv", "scan_to_dict", "transpose_witness_bank",
    "validate_generator", "witness_curve",
    # matcore
    "cmat", "dag", "eig_general", "eig_herm", "expm", "hs_inner",
    "is_hermitian", "polar_retract", "random_unitary", "svd_values",
    # mucone
    "MUDecomposition", "Witness", "conj_floor", "decomposition_to_dict",
    "fw_decompose", "lmo_unitary", "min_trace_a_abar", "simplex_lsq",
    "transpose_witness", "unvech", "vech", "witness_search",
    "witness_to_dict", "witness_value",
    # structure
    "AutomorphismError", "BlockAlgebra", "MUIndexReport", "PeripheralSplit",
    "asymptotic_parts", "automorphism_unitary", "block_algebra_from_dict",
    "block_algebra_to_dict", "conditional_expectation", "mu_index",
    "mu_index_to_dict", "peripheral_split",
    # weyl
    "ConeMembershipResult", "WeylSystem", "cone_result_to_dict",
    "g_cone_membership", "g_mixed_decompose", "is_weyl_covariant",
    "mixed_weyl_decompose", "weyl_coeffs", "weyl_coeffs_to_dict",
    "weyl_cone_membership", "weyl_system",
]
