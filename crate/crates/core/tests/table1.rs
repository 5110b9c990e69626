use gradcomp::classes::{table1, verify_membership, ClassParams, Claim, Expectation, VectorSampler};
use gradcomp::compressors::{Compressor, CompressorSpec};

fn check(d: usize, n_vectors: usize, mode: Expectation) {
    let sampler = VectorSampler::default_for(d, n_vectors);
    for row in table1(d) {
        for claim in &row.claims {
            let c = row.compressor_for(claim);
            let r = verify_membership(&c, &claim.params, &sampler, mode, 7).unwrap();
            assert!(r.passed(), "{} d={d} {}: {}", row.name, claim.params, r.to_json());
        }
    }
}

#[test]
fn table_rows_hold_at_d10() {
    check(10, 200, Expectation::default());
}

#[test]
fn table_rows_hold_at_d100() {
    check(100, 200, Expectation::default());
}

#[test]
fn table_rows_hold_exactly() {
    check(10, 200, Expectation::Exact);
    check(100, 200, Expectation::Exact);
}

#[test]
fn reduced_pass_at_d10000() {
    check(10_000, 3, Expectation::MonteCarlo { n_mc: 100 });
}

#[test]
fn unscaled_top_k_dithering_misses_its_b3_entry() {
    // The tabulated δ = dζ/k holds for (1/ζ)𝒞, not for 𝒞 itself.
    let d = 10;
    let row = table1(d).into_iter().find(|r| r.name == "top_k_plus_dithering").unwrap();
    let claim: &Claim = row.claims.iter().find(|c| matches!(c.params, ClassParams::B3 { .. })).unwrap();
    let unscaled = Compressor::new(row.compressor.spec.clone());
    let r = verify_membership(&unscaled, &claim.params, &VectorSampler::default_for(d, 50), Expectation::Exact, 0).unwrap();
    assert!(!r.passed());
    assert!(matches!(unscaled.spec, CompressorSpec::TopKPlusDithering { .. }));
}
