fn main() {
    std::process::exit(seqbandit_cli::main_with(std::env::args_os()));
}
