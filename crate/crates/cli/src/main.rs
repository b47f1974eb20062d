fn main() {
    std::process::exit(maccrypt_cli::run(std::env::args_os()));
}
