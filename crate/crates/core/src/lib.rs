//! Watson-Crick quantum finite automata: two heads over a complementary
//! pair of strands, evolved by unitary operators indexed by the symbol pair
//! under the heads and measured after every step.

pub mod amplitude;
pub mod compiler;
pub mod corpus;
pub mod machine;
pub mod simulator;
pub mod strand;
