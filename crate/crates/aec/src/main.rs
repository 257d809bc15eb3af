use std::io;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = aec::cli::run(
        std::env::args_os(),
        &|name| std::env::var(name).ok(),
        &mut io::stdout(),
        &mut io::stderr(),
    );
    std::process::exit(code);
}
