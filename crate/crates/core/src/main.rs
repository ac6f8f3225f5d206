fn main() {
    std::process::exit(cloakbound::cli::main_with_args(std::env::args_os()));
}
