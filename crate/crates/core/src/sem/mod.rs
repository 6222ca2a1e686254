//! Finite structural equation models: sampling, exact laws, d-separation,
//! counterfactual checks and empirical parity audits.

pub mod audit;
pub mod counterfactual;
pub mod dsep;
pub mod format;
pub mod graph;
pub mod joint;

pub use audit::{parity_audit, AuditMode};
pub use counterfactual::{check_cf, check_cf_with, CfMethod, CfOptions, CfResult, CounterfactualLaw, EvidenceSpec};
pub use dsep::d_separated;
pub use format::{parse_sem, to_json};
pub use graph::{Intervention, Mechanism, Node, Roles, SemGraph};
pub use joint::{conditional_mutual_information, joint_pmf, marginal, JointPmf};
