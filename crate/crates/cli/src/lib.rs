//! Command-line front end: batch filtering, augmentation, spectrum analytics
//! and rendering over directories of clips.

pub mod args;
pub mod commands;
pub mod discover;

use anyhow::Result;

pub use args::{Cli, Command};
pub use commands::RunSummary;

pub fn run(cli: &Cli) -> Result<RunSummary> {
    match &cli.command {
        Command::Filter(c) => commands::cmd_filter(c),
        Command::Augment(c) => commands::cmd_augment(c),
        Command::Analyze(c) => commands::cmd_analyze(c),
        Command::RenderSpectrum(c) => commands::cmd_render_spectrum(c),
    }
}
