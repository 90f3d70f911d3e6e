//! Parse a run document, report a mistyped key, and print the fully expanded form.

use flexswim::io::parse_config;

fn main() {
    let doc = r#"{
        "version": 1,
        "gait": {"mode": "fully_flexible", "beta": 0.5},
        "sim": {"n_cycles": 4}
    }"#;
    match parse_config(doc) {
        Ok(run) => println!("{}", run.to_json()),
        Err(e) => eprintln!("{e}"),
    }

    let typo = r#"{"version": 1, "gait": {"k_mx": 10}}"#;
    if let Err(e) = parse_config(typo) {
        println!("rejected: {e}");
    }
}
