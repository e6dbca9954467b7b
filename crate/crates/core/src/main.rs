use formatprobe::cli;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(err) = cli::main() {
        // machine-readable error record on stderr
        let record = serde_json::json!({ "error": err.to_string() });
        eprintln!("{record}");
        std::process::exit(1);
    }
}
