fn main() {
    std::process::exit(discourse_workbench::cli::run_cli(std::env::args_os()));
}
