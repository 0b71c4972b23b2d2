fn main() {
    std::process::exit(erl_quadruped::harness::cli::run(std::env::args_os()));
}
