//! Regenerate the repo's bundled fixture CSVs (fixtures/ at the workspace
//! root). The data is synthetic and fully determined by the default seed,
//! so reruns are byte-identical.
//!
//!     cargo run -p finq --example gen_fixtures [out_dir]

use finq::fixtures::{generate, FixtureConfig};

fn main() {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| String::from("fixtures"));
    let data = generate(&FixtureConfig::default());
    data.write_to(&out).expect("fixture files written");
    println!(
        "wrote {out}/prices.csv ({} bytes), {out}/fundamentals.csv ({} bytes), {out}/companies.csv ({} bytes)",
        data.prices_csv.len(),
        data.fundamentals_csv.len(),
        data.companies_csv.len(),
    );
}
