//! One module per subcommand. Each exposes an `Args` struct (clap) and a
//! `run(&Ctx, Args) -> CliResult<()>`.

pub mod align;
pub mod eval_retrieval;
pub mod index;
pub mod ingest;
pub mod respond;
pub mod search;
pub mod serve;
pub mod sft;
pub mod train_retriever;
pub mod train_reward;
