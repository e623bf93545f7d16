fn main() {
    std::process::exit(qed_cli::run(std::env::args_os()));
}
