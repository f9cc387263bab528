fn main() {
    std::process::exit(jc_pcs::cli::main_with_args(std::env::args_os()));
}
