fn main() {
    std::process::exit(friendsim_cli::run(std::env::args_os()));
}
