pub mod corpus;
pub mod numparse;
pub mod perturb;
pub mod prompts;
pub mod ledger;
pub mod eval;
