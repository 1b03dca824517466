//! One module per subcommand family.

pub mod bpe;
pub mod decode;
pub mod filter;
pub mod score;
pub mod segments;
pub mod seqkd;
pub mod train;
