//! Exact-arithmetic matrix semigroups over idempotent semifields.
//!
//! Core objects: square matrices over the Boolean semifield or max-plus
//! rationals; idempotent constructions A⁺ and A*; generalized Green's
//! relations on finite Boolean families; factorization of full-diagonal
//! upper triangular matrices into idempotents; deficiency invariants and
//! the classification of generalized H-classes for small sizes.

pub mod deficiency;
pub mod error;
pub mod factorization;
pub mod finite_green;
pub mod matrix;
pub mod plusstar;
pub mod sample;
pub mod semiring;
pub mod suites;

pub use deficiency::{
    bordered, d_related_unitriangular, deficiency, deficiency_equal, first_deficiency_mismatch,
    ht_class_descriptor, ht_closure_check, ht_closure_check_with, ht_member_sample, ht_membership,
    idempotent_with_pattern, is_bounded_monotone, leftcong_check, rtilde_noncommute_witness,
    sample_bounded_monotone, simple_triples, theta_embed, tight_all_idempotent, tightness_pattern,
    uni_rstar_separator, DRelation, DeficiencyMode, HtCase, HtClassDescriptor, HtClosureReport,
    HtClosureWitness, LeftCongReport, NoncommuteWitness, Path, TightnessPattern,
};
pub use error::Error;

pub use finite_green::{
    bool_exactness_check, check_not_abundant_witness, check_not_fountain_witness, classify,
    colstab_colfix, compute_relation, enumerate, ClassificationReport, ColFixReport, Family,
    FamilySpec, FiniteMonoidTable, Flags, Relation, RelationPartition, RelationSummary,
    WitnessReport, WitnessStep,
};
pub use factorization::{
    aperiodicity_check, ef_power_identities, full_decompose, idempotent_factorize,
    meet_idempotent, normal_form, semidirect_law_check, EfPowerReport, FactorizationResult,
    TriangularNormalForm,
};
pub use matrix::{Matrix, PackedBool, Shape, ShapeFlags};
pub use plusstar::{
    alpha_beta_decompose, is_idempotent, is_regular, ltilde_related, plus_of, plus_star_of,
    residual_left, residual_right, rtilde_related, sandwich, scalar_product, star_of, AlphaBeta,
    ExtMatrix, PlusStarPair, TildeScope,
};
pub use semiring::{Ext, Kind, Value};
pub use suites::{run_all, run_suite, Assertion, SuiteReport, SUITE_NAMES};
