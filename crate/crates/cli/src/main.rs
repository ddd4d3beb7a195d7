fn main() {
    std::process::exit(relcrypt_cli::main_with(std::env::args_os()));
}
