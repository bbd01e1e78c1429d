fn main() {
    teamlq_cli::init_logging();
    let code = teamlq_cli::run_command(std::env::args_os(), &mut std::io::stdout().lock());
    std::process::exit(code);
}
