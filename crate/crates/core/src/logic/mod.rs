//! Clause-form reasoning: third form, finite-domain satisfaction and
//! pattern-matching analysis.

pub mod matching;
pub mod satisfy;
pub mod third;

pub use matching::{analyze_matching, default_analysis_domain, infer_domain, infer_third_domain, CaseReport, MatchError, MatchReport, Valuation};
pub use satisfy::{literal_holds, satisfy, satisfy_relation, satisfy_rows, Assignment, OpEval};
pub use third::{form_to_clauses, print_third_program, reduce_to_third, third_from_box, Clause, ClauseSet, Literal, NotThird, ThirdBox};
