fn main() {
    std::process::exit(session_equiv::cli::cmd_dispatch(std::env::args().collect()));
}
