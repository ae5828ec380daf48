//! Seeded synthetic table with the bone-marrow schema (37 columns, 187 rows
//! by default). Values are invented; only the layout, level sets, missing
//! markers and the 1000000 "never happened" sentinel mimic the real file.

use std::fmt::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Col {
    Num,
    Nom(&'static [&'static str]),
}

const YN: &[&str] = &["yes", "no"];
const ABO: &[&str] = &["0", "A", "B", "AB"];
const CMV: &[&str] = &["present", "absent"];

const SCHEMA: &[(&str, Col)] = &[
    ("donor_age", Col::Num),
    ("donor_age_below_35", Col::Nom(YN)),
    ("donor_ABO", Col::Nom(ABO)),
    ("donor_CMV", Col::Nom(CMV)),
    ("recipient_age", Col::Num),
    ("recipient_age_below_10", Col::Nom(YN)),
    ("recipient_age_int", Col::Nom(&["0_5", "5_10", "10_20"])),
    ("recipient_gender", Col::Nom(&["male", "female"])),
    ("recipient_body_mass", Col::Num),
    ("recipient_ABO", Col::Nom(ABO)),
    ("recipient_rh", Col::Nom(&["plus", "minus"])),
    ("recipient_CMV", Col::Nom(CMV)),
    ("disease", Col::Nom(&["ALL", "AML", "chronic", "nonmalignant", "lymphoma"])),
    ("disease_group", Col::Nom(&["malignant", "nonmalignant"])),
    ("gender_match", Col::Nom(&["other", "female_to_male"])),
    ("ABO_match", Col::Nom(&["matched", "mismatched"])),
    ("CMV_status", Col::Nom(&["0", "1", "2", "3"])),
    ("HLA_match", Col::Nom(&["10/10", "9/10", "8/10", "7/10"])),
    ("HLA_mismatch", Col::Nom(&["matched", "mismatched"])),
    ("antigen", Col::Nom(&["0", "1", "2", "3"])),
    ("allele", Col::Nom(&["0", "1", "2", "3", "4"])),
    (
        "HLA_group_1",
        Col::Nom(&["matched", "one_antigen", "one_allele", "DRB1_cell", "two_diffs", "three_diffs", "mismatched"]),
    ),
    ("risk_group", Col::Nom(&["high", "low"])),
    ("stem_cell_source", Col::Nom(&["bone_marrow", "peripheral_blood"])),
    ("tx_post_relapse", Col::Nom(YN)),
    ("CD34_x1e6_per_kg", Col::Num),
    ("CD3_x1e8_per_kg", Col::Num),
    ("CD3_to_CD34_ratio", Col::Num),
    ("ANC_recovery", Col::Num),
    ("PLT_recovery", Col::Num),
    ("acute_GvHD_II_III_IV", Col::Nom(YN)),
    ("acute_GvHD_III_IV", Col::Nom(YN)),
    ("time_to_acute_GvHD_III_IV", Col::Num),
    ("extensive_chronic_GvHD", Col::Nom(YN)),
    ("relapse", Col::Nom(YN)),
    ("survival_time", Col::Num),
    ("survival_status", Col::Nom(&["0", "1"])),
];

/// Number of predictors after drop-first encoding of the schema above.
pub const ENCODED_WIDTH: usize = 58;

/// Columns that may hold `?` in the generated data.
const MAY_BE_MISSING: &[&str] = &[
    "donor_CMV",
    "recipient_body_mass",
    "recipient_ABO",
    "recipient_rh",
    "recipient_CMV",
    "ABO_match",
    "CMV_status",
    "antigen",
    "allele",
    "CD3_x1e8_per_kg",
    "CD3_to_CD34_ratio",
    "extensive_chronic_GvHD",
];

const SENTINEL: f64 = 1_000_000.0;

fn pick<'a>(rng: &mut ChaCha8Rng, levels: &[&'a str]) -> &'a str {
    levels[rng.random_range(0..levels.len())]
}

pub fn synthetic_arff(n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = String::from("% synthetic stand-in with the bone-marrow layout\n@relation bone-marrow-synthetic\n\n");
    for (name, col) in SCHEMA {
        match col {
            Col::Num => writeln!(s, "@attribute {name} numeric").unwrap(),
            Col::Nom(levels) => writeln!(s, "@attribute {name} {{{}}}", levels.join(",")).unwrap(),
        }
    }
    s.push_str("\n@data\n");
    for _ in 0..n {
        let dead = rng.random_bool(0.45);
        let risk = if dead { 0.7 } else { 0.3 };
        let mut cells: Vec<String> = Vec::with_capacity(SCHEMA.len());
        for (name, col) in SCHEMA {
            if MAY_BE_MISSING.contains(name) && rng.random_bool(0.03) {
                cells.push("?".into());
                continue;
            }
            let v = match (*name, col) {
                ("survival_status", _) => (if dead { "1" } else { "0" }).to_string(),
                ("donor_age", _) => format!("{:.6}", rng.random_range(18.6..55.6)),
                ("recipient_age", _) => format!("{:.1}", rng.random_range(0.6..20.2)),
                ("recipient_body_mass", _) => format!("{:.1}", rng.random_range(6.0..103.4)),
                ("CD34_x1e6_per_kg", _) => format!("{:.2}", rng.random_range(0.79..57.78) + if dead { 0.0 } else { 4.0 }),
                ("CD3_x1e8_per_kg", _) => format!("{:.6}", rng.random_range(0.04..20.02)),
                ("CD3_to_CD34_ratio", _) => format!("{:.6}", rng.random_range(0.2..99.56)),
                ("ANC_recovery", _) => {
                    if rng.random_bool(if dead { 0.06 } else { 0.02 }) {
                        format!("{SENTINEL}")
                    } else {
                        format!("{}", rng.random_range(9..26))
                    }
                }
                ("PLT_recovery", _) => {
                    if rng.random_bool(if dead { 0.35 } else { 0.05 }) {
                        format!("{SENTINEL}")
                    } else {
                        format!("{}", rng.random_range(9..90))
                    }
                }
                ("time_to_acute_GvHD_III_IV", _) => {
                    if rng.random_bool(if dead { 0.7 } else { 0.9 }) {
                        format!("{SENTINEL}")
                    } else {
                        format!("{}", rng.random_range(10..100))
                    }
                }
                ("survival_time", _) => {
                    let t = if dead { rng.random_range(6..700) } else { rng.random_range(400..3364) };
                    t.to_string()
                }
                ("relapse", _) | ("extensive_chronic_GvHD", _) | ("risk_group", _) => {
                    let yes = rng.random_bool(risk);
                    let levels = match col {
                        Col::Nom(l) => *l,
                        Col::Num => unreachable!(),
                    };
                    (if yes { levels[0] } else { levels[1] }).to_string()
                }
                (_, Col::Nom(levels)) => pick(&mut rng, levels).to_string(),
                (_, Col::Num) => format!("{:.3}", rng.random_range(0.0..10.0)),
            };
            cells.push(v);
        }
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Writes the 187-row fixture into `dir` and returns its path.
pub fn write_fixture(dir: &Path, seed: u64) -> PathBuf {
    let path = dir.join("bone-marrow-synthetic.arff");
    std::fs::write(&path, synthetic_arff(187, seed)).unwrap();
    path
}
