use clap::Parser;

fn main() {
    let cli = fermi_scatter_cli::Cli::parse();
    let r = fermi_scatter_cli::run(&cli);
    if r.exit_code == fermi_scatter_cli::EXIT_ERROR {
        eprintln!("{}", r.message);
    } else {
        println!("{}", r.message);
    }
    if let Some(d) = &r.dir {
        println!("artifacts: {}", d.display());
    }
    std::process::exit(r.exit_code);
}
