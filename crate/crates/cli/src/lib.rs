//! Command implementations behind the `nvpol` binary: simulate runs, angle
//! sweeps, the built-in oracle suite, and the default-config printer.

pub mod run;

pub use run::{
    cmd_angle_sweep, cmd_simulate, cmd_validate, print_defaults, CliError, OutputFormat,
};
