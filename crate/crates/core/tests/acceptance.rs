//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any failed.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relaysim::association::{associate, LinkTable};
use relaysim::experiment::{base_scene, drop_seed};
use relaysim::propagation::{
    knife_edge_loss_db, pathloss_db, shadow_sample_db, LinkId, LinkKind, PathlossParams,
};
use relaysim::relay_math::{
    af_dl_sinr, capacity, fddf_rate, hddf_rate, nhop_af_sinr, nhop_fddf_rate, nhop_hddf_rate,
    AfParams, CapacityLaw, Rate, Sinr,
};
use relaysim::{emit_cdfs, run_experiment, run_experiment_on, RelayCase, ScenarioConfig};

const SEEDS: std::ops::RangeInclusive<u64> = 1..=10;
const SLOTS: usize = 100;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

/// Downlink repeater chain simulated as powers: the repeater amplifies its
/// input (signal plus its own noise) by the largest gain its power budget
/// and stability limit allow, and the UE sees that output through the access
/// beam plus its own noise.
fn brute_af_dl(
    sinr_bh: f64,
    sinr_ac: f64,
    delta: f64,
    g_max: f64,
    f_bf: f64,
    sigma1: f64,
    p_max: f64,
) -> f64 {
    let p_signal = sinr_bh * sigma1;
    let p_noise = delta * sigma1;
    let p_in = p_signal + p_noise;
    let gain = g_max.min(p_max / p_in);
    let sigma2 = 1.0;
    let channel = sinr_ac * sigma2 / p_max;
    let s = gain * p_signal * channel * f_bf;
    let n = gain * p_noise * channel * f_bf + sigma2;
    s / n
}

/// Half-duplex rate evaluated directly from the split definition.
fn brute_hddf(c_bh: f64, c_ac: f64) -> f64 {
    let beta_bh = c_ac / (c_bh + c_ac);
    let beta_ac = 1.0 - beta_bh;
    (beta_bh * c_bh).min(beta_ac * c_ac)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let sinr_bh = db(rng.random_range(-10.0..40.0));
        let sinr_ac = db(rng.random_range(-10.0..40.0));
        let delta = db(rng.random_range(0.0..3.0));
        let g_max = db(rng.random_range(30.0..90.0));
        let f_bf = db(rng.random_range(-10.0..0.0));
        let sigma1 = db(rng.random_range(-120.0..-60.0));
        let p_max = db(rng.random_range(0.0..30.0));

        let params = AfParams::new(g_max, delta, p_max, sigma1, f_bf).unwrap();
        let got = af_dl_sinr(
            Sinr::new(sinr_bh).unwrap(),
            Sinr::new(sinr_ac).unwrap(),
            &params,
        )
        .value();
        worst = worst.max(rel_err(
            got,
            brute_af_dl(sinr_bh, sinr_ac, delta, g_max, f_bf, sigma1, p_max),
        ));

        let (c_bh, c_ac) = ((1.0 + sinr_bh).log2(), (1.0 + sinr_ac).log2());
        let rb = capacity(Sinr::new(sinr_bh).unwrap(), CapacityLaw::SHANNON);
        let ra = capacity(Sinr::new(sinr_ac).unwrap(), CapacityLaw::SHANNON);
        worst = worst.max(rel_err(rb.value(), c_bh));
        worst = worst.max(rel_err(fddf_rate(rb, ra).value(), c_bh.min(c_ac)));
        worst = worst.max(rel_err(hddf_rate(rb, ra).0.value(), brute_hddf(c_bh, c_ac)));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-9 && secs < 5.0,
        format!("max relative error {worst:.2e} over 10^4 tuples in {secs:.2} s"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let c_bh = rng.random_range(0.01..10.0);
        let c_ac = rng.random_range(0.01..10.0);
        let best = (0..=10_000)
            .map(|k| {
                let b = k as f64 * 1e-4;
                (b * c_bh).min((1.0 - b) * c_ac)
            })
            .fold(0.0, f64::max);
        let opt = hddf_rate(Rate::new(c_bh).unwrap(), Rate::new(c_ac).unwrap())
            .0
            .value();
        worst = worst.max((best - opt) / opt);
    }
    outcome(
        worst <= 1e-3,
        format!("largest grid-search excess over the optimal split {worst:.2e} (relative)"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..100_000 {
        let a = Rate::new(rng.random_range(1e-3..20.0)).unwrap();
        let b = Rate::new(rng.random_range(1e-3..20.0)).unwrap();
        let alpha = hddf_rate(a, b).0.value() / fddf_rate(a, b).value();
        lo = lo.min(alpha);
        hi = hi.max(alpha);
    }
    let equal = [0.1, 1.0, 3.7, 12.0].iter().all(|&c| {
        let r = Rate::new(c).unwrap();
        hddf_rate(r, r).0.value() / fddf_rate(r, r).value() == 0.5
    });
    outcome(
        lo >= 0.5 && hi < 1.0 && equal,
        format!("alpha in [{lo:.6}, {hi:.6}], exactly 0.5 at equal rates: {equal}"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut exact = true;
    for _ in 0..1000 {
        let a = Rate::new(rng.random_range(0.0..12.0)).unwrap();
        let b = Rate::new(rng.random_range(0.0..12.0)).unwrap();
        exact &= nhop_fddf_rate(&[a, b]).unwrap() == fddf_rate(a, b);
        exact &= nhop_hddf_rate(&[a, b]).unwrap() == hddf_rate(a, b).0;

        let sinr_bh = Sinr::new(db(rng.random_range(-5.0..30.0))).unwrap();
        let sinr_ac = Sinr::new(db(rng.random_range(-5.0..30.0))).unwrap();
        let p = AfParams::new(db(70.0), db(1.0), db(25.0), db(-80.0), 1.0).unwrap();
        // Adjusted hop SINRs of the two-hop downlink chain.
        let hop1 = Sinr::new(sinr_bh.value() / p.delta_nf).unwrap();
        let f_p = relaysim::relay_math::af_loss_fp(&p, sinr_bh);
        let f_n = relaysim::relay_math::af_loss_fn(sinr_bh, p.delta_nf);
        let hop2 = Sinr::new(p.f_bf * f_p * f_n * sinr_ac.value()).unwrap();
        exact &= nhop_af_sinr(&[hop1, hop2]).unwrap() == af_dl_sinr(sinr_bh, sinr_ac, &p);
    }
    let mut worst: f64 = 0.0;
    for n in 1..=12 {
        for s in [0.3, 1.0, 10.0, 250.0] {
            let hops = vec![Sinr::new(s).unwrap(); n];
            worst = worst.max(rel_err(nhop_af_sinr(&hops).unwrap().value(), s / n as f64));
        }
    }
    outcome(
        exact && worst <= 1e-9,
        format!("two-hop identities exact: {exact}; equal-hop AF max relative error {worst:.2e}"),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let cfg = ScenarioConfig::default();
    let base = base_scene(&cfg).unwrap();
    let cases = [
        (RelayCase::ConventionalRepeater, 32.0),
        (RelayCase::SemiSmartRepeater, 38.5),
        (RelayCase::SmartRepeater, 45.7),
    ];
    let mut sums = [0.0; 3];
    for seed in SEEDS {
        let s = drop_seed(seed, 0);
        let scene = base.with_ues(s);
        let links = LinkTable::build(&scene, &cfg.radio, s).unwrap();
        for (k, (case, _)) in cases.iter().enumerate() {
            let assoc = associate(&scene, &links, &cfg.radio, &case.profile(&cfg.relay));
            sums[k] += 100.0 * assoc.indirect_share();
        }
    }
    let n = SEEDS.count() as f64;
    let means: Vec<f64> = sums.iter().map(|s| s / n).collect();
    let pass = cases
        .iter()
        .zip(&means)
        .all(|((_, target), m)| (m - target).abs() <= 5.0);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        pass && secs < 600.0,
        format!(
            "mean indirect % (conventional, semi-smart, smart) = ({:.1}, {:.1}, {:.1}) vs (32, 38.5, 45.7) over {} seeds, {secs:.1} s",
            means[0], means[1], means[2], n
        ),
    )
}

type Summary = BTreeMap<(String, String), BTreeMap<String, f64>>;

fn read_summary(path: &Path) -> Summary {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let mut out = Summary::new();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let mut fields = BTreeMap::new();
        for (h, v) in headers.iter().zip(rec.iter()).skip(2) {
            fields.insert(h.to_string(), v.parse::<f64>().unwrap());
        }
        out.insert((rec[0].to_string(), rec[1].to_string()), fields);
    }
    out
}

fn stat(s: &Summary, case: RelayCase, metric: &str, field: &str) -> f64 {
    s.get(&(case.name().to_string(), metric.to_string()))
        .and_then(|f| f.get(field).copied())
        .unwrap_or(f64::NAN)
}

/// One single-drop run of every case per seed; summaries are read back from
/// the emitted CSV files.
fn seed_summaries(dir: &Path) -> Vec<Summary> {
    SEEDS
        .map(|seed| {
            let cfg = ScenarioConfig {
                seed,
                drops: 1,
                slots: SLOTS,
                ..Default::default()
            };
            let results = run_experiment(&cfg, &RelayCase::ALL).unwrap();
            let out = dir.join(format!("seed{seed}"));
            emit_cdfs(results.iter().map(|(c, s)| (c.name(), s)), &out).unwrap();
            read_summary(&out.join("summary.csv"))
        })
        .collect()
}

fn criterion_6(summaries: &[Summary]) -> Outcome {
    use RelayCase::*;
    let m = "sinr_indirect_db";
    let mut ok = 0;
    let mut medians = Vec::new();
    for s in summaries {
        let gap = stat(s, NoRepeaterRelay, "sinr_gap_db", "median");
        let conv = stat(s, ConventionalRepeater, m, "median");
        let semi = stat(s, SemiSmartRepeater, m, "median");
        let smart = stat(s, SmartRepeater, m, "median");
        let fd = stat(s, FdRelayNoReuse, m, "median").min(stat(s, FdRelayReuse, m, "median"));
        if gap < conv && conv < semi && semi < smart && smart <= fd {
            ok += 1;
        }
        medians.push(format!("{gap:.1}<{conv:.1}<{semi:.1}<{smart:.1}<={fd:.1}"));
    }
    outcome(
        ok >= 9,
        format!(
            "ordering held on {ok}/{} seeds; seed 1 medians (dB) {}",
            summaries.len(),
            medians[0]
        ),
    )
}

fn criterion_7(summaries: &[Summary]) -> Outcome {
    use RelayCase::*;
    let m = "se_indirect";
    let mut ok = 0;
    let mut first = String::new();
    for s in summaries {
        let smart = stat(s, SmartRepeater, m, "median");
        let hd = stat(s, HdRelayNoReuse, m, "median").max(stat(s, HdRelayReuse, m, "median"));
        let fd = stat(s, FdRelayNoReuse, m, "median").min(stat(s, FdRelayReuse, m, "median"));
        if smart >= hd && smart <= fd {
            ok += 1;
        }
        if first.is_empty() {
            first = format!("hd {hd:.2} <= smart {smart:.2} <= fd {fd:.2}");
        }
    }
    outcome(
        ok >= 9,
        format!(
            "ordering held on {ok}/{} seeds; seed 1 medians (bit/s/Hz) {first}",
            summaries.len()
        ),
    )
}

fn criterion_8(summaries: &[Summary]) -> Outcome {
    use RelayCase::*;
    let m = "sector_throughput_mbps";
    let total = |case| {
        summaries
            .iter()
            .map(|s| stat(s, case, m, "mean"))
            .sum::<f64>()
            / summaries.len() as f64
    };
    let (hd0, hd1) = (total(HdRelayNoReuse), total(HdRelayReuse));
    let (fd0, fd1) = (total(FdRelayNoReuse), total(FdRelayReuse));
    let aggregated = hd1 > hd0 && fd1 > fd0;

    // Interference-free oracle: reuse may only add throughput, drop by drop.
    let mut oracle = true;
    for seed in SEEDS {
        let cfg = ScenarioConfig {
            seed,
            drops: 1,
            slots: 40,
            interference: false,
            ..Default::default()
        };
        let res = run_experiment(
            &cfg,
            &[HdRelayNoReuse, HdRelayReuse, FdRelayNoReuse, FdRelayReuse],
        )
        .unwrap();
        let per_sector = |k: usize| res[k].1.get(relaysim::Metric::SectorThroughput).to_vec();
        for (a, b) in [(0, 1), (2, 3)] {
            let (without, with) = (per_sector(a), per_sector(b));
            let sum_without: f64 = without.iter().sum();
            let sum_with: f64 = with.iter().sum();
            oracle &= sum_with >= sum_without * (1.0 - 1e-12);
        }
    }
    outcome(
        aggregated && oracle,
        format!(
            "mean sector throughput (Mbit/s) hd {hd0:.0} -> {hd1:.0}, fd {fd0:.0} -> {fd1:.0}; interference-free per-drop gain nonnegative: {oracle}"
        ),
    )
}

fn criterion_9(dir: &Path) -> Outcome {
    let cfg = ScenarioConfig {
        seed: 9,
        drops: 3,
        slots: 20,
        grid: relaysim::topology::GridSpec {
            avenues: 6,
            streets: 13,
            ue_count: 210,
            ..Default::default()
        },
        ..Default::default()
    };
    let mut outputs = Vec::new();
    for threads in [1, 3] {
        let res = run_experiment_on(&cfg, &RelayCase::ALL, threads).unwrap();
        let out = dir.join(format!("threads{threads}"));
        let files = emit_cdfs(res.iter().map(|(c, s)| (c.name(), s)), &out).unwrap();
        let mut contents: Vec<(String, Vec<u8>)> = files
            .iter()
            .map(|p| {
                (
                    p.file_name().unwrap().to_string_lossy().into_owned(),
                    fs::read(p).unwrap(),
                )
            })
            .collect();
        contents.sort();
        outputs.push(contents);
    }
    let identical = outputs[0] == outputs[1];
    outcome(
        identical,
        format!(
            "{} CSV files byte-identical with 1 and 3 worker threads: {identical}",
            outputs[0].len()
        ),
    )
}

fn criterion_10() -> Outcome {
    let p = PathlossParams::default();
    let mut jump: f64 = 0.0;
    for (kind, bp) in [
        (LinkKind::Bh, p.breakpoint_bh_m),
        (LinkKind::Ac, p.breakpoint_ac_m),
    ] {
        let below = pathloss_db(bp * (1.0 - 1e-12), kind, &p).unwrap();
        let at = pathloss_db(bp, kind, &p).unwrap();
        let above = pathloss_db(bp * (1.0 + 1e-12), kind, &p).unwrap();
        jump = jump.max((at - below).abs()).max((above - at).abs());
    }
    let j0 = knife_edge_loss_db(0.0);

    let n = 100_000;
    let sigma = 8.0;
    let samples: Vec<f64> = (0..n)
        .map(|i| shadow_sample_db(LinkId::new(i, i + n), sigma, 10))
        .collect();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let std = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let std_err = (std - sigma).abs() / sigma;

    outcome(
        jump <= 1e-6 && (j0 - 6.03).abs() <= 0.05 && std_err <= 0.02,
        format!(
            "breakpoint jump {jump:.1e} dB, J(0) = {j0:.3} dB, shadow std {std:.3} dB for sigma {sigma} ({:.2}% off)",
            100.0 * std_err
        ),
    )
}

fn main() {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let mut failed = 0;
    let mut report = |id: u32, name: &str, o: Outcome| {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!("[{tag}] {id:>2}. {name}: {}", o.detail);
    };

    println!("acceptance suite");
    report(1, "AF/DF formula oracle", criterion_1());
    report(2, "half-duplex split optimality", criterion_2());
    report(3, "half-duplex efficiency bounds", criterion_3());
    report(4, "N-hop consistency", criterion_4());
    report(5, "indirect-UE share", criterion_5());
    let summaries = seed_summaries(tmp.path());
    report(
        6,
        "indirect effective SINR ordering",
        criterion_6(&summaries),
    );
    report(
        7,
        "indirect spectral efficiency ordering",
        criterion_7(&summaries),
    );
    report(8, "spatial-reuse throughput gain", criterion_8(&summaries));
    report(
        9,
        "determinism across worker pools",
        criterion_9(tmp.path()),
    );
    report(10, "propagation unit checks", criterion_10());

    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
