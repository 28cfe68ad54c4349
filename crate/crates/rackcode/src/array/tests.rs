use super::*;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn spec13() -> ArrayCodeSpec {
    ArrayCodeSpec {
        q: 13,
        rack_size: 3,
        racks: 4,
        k: 7,
        helper_racks: 3,
        error_budget: 0,
        seed: 0,
    }
}

fn params13() -> ArrayCodeParams {
    ArrayCodeParams::new(&spec13()).unwrap()
}

#[test]
fn derived_quantities_for_the_reference_instance() {
    let p = params13();
    assert_eq!(p.n(), 12);
    assert_eq!(p.r(), 5);
    assert_eq!(p.k_racks(), 2);
    assert_eq!(p.k_rem(), 1);
    assert_eq!(p.radix(), 2);
    assert_eq!(p.rows(), 16);
    let f = p.field();
    assert_eq!(*p.xi(), f.from_int(2));
    // 2^((13-1)/3) = 3 has multiplicative order 3.
    assert_eq!(*p.rack_root(), f.from_int(3));
}

#[test]
fn error_tolerant_instance_constructs() {
    let p = ArrayCodeParams::new(&ArrayCodeSpec {
        q: 19,
        rack_size: 3,
        racks: 6,
        k: 4,
        helper_racks: 4,
        error_budget: 1,
        seed: 0,
    })
    .unwrap();
    assert_eq!(p.radix(), 2);
    assert_eq!(p.rows(), 64);
    assert_eq!(p.r(), 14);
    assert_eq!(*p.rack_root(), p.field().from_int(7));
}

#[test]
fn digit_arithmetic() {
    let p = params13();
    // 6 = 0 + 1*2 + 1*4 in base 2.
    assert_eq!(p.digit(6, 0), 0);
    assert_eq!(p.digit(6, 1), 1);
    assert_eq!(p.digit(6, 2), 1);
    assert_eq!(p.digit(6, 3), 0);
    assert_eq!(p.with_digit(6, 1, 0), 4);
    assert_eq!(p.with_digit(6, 1, 1), 6);
    assert_eq!(p.shift_digit(6, 1, 1), 4);
    assert_eq!(p.shift_digit(6, 3, 1), 14);
    for j in 0..p.rows() {
        let mut back = 0usize;
        for i in 0..p.racks() {
            back += p.digit(j, i) * p.radix().pow(i as u32);
        }
        assert_eq!(back, j);
    }
}

#[test]
fn scale_run_counts_wraps_through_zero() {
    let p = params13();
    let f = p.field();
    for i in 0..p.racks() {
        for ji in 0..p.radix() {
            for t in 0..=20 {
                // Independent count of the positions where the running digit
                // value passes zero.
                let mut hits = 0u64;
                for a in 0..t {
                    if (ji + a) % p.radix() == 0 {
                        hits += 1;
                    }
                }
                let expect = f.pow(p.xi(), i as u64 * hits);
                assert_eq!(p.scale_run(i, ji, t), expect, "i={i} ji={ji} t={t}");
            }
        }
    }
    // Spot values: one wrap picks up xi^i, a full rack_size*radix run picks
    // up xi^(i*rack_size).
    assert_eq!(p.scale_run(2, 0, 1), f.from_int(4));
    assert_eq!(p.scale_run(1, 1, 1), f.from_int(1));
    assert_eq!(p.scale_run(1, 0, 2), f.from_int(2));
    assert_eq!(p.scale_run(1, 1, 2), f.from_int(2));
    assert_eq!(p.scale_run(1, 0, 6), f.from_int(8));
}

#[test]
fn scale_run_cocycle() {
    let p = params13();
    let f = p.field();
    for i in 0..p.racks() {
        for ji in 0..p.radix() {
            for t1 in 0..8 {
                for t2 in 0..8 {
                    let whole = p.scale_run(i, ji, t1 + t2);
                    let split = f.mul(
                        &p.scale_run(i, ji, t1),
                        &p.scale_run(i, (ji + t1) % p.radix(), t2),
                    );
                    assert_eq!(whole, split);
                }
            }
        }
    }
}

#[test]
fn operator_powers_compose() {
    let p = params13();
    let f = p.field();
    let mut rng = ChaCha12Rng::seed_from_u64(1);
    let x: Vec<_> = (0..p.rows()).map(|_| f.random(&mut rng)).collect();
    for i in 0..p.racks() {
        for g in 0..p.rack_size() {
            assert_eq!(p.apply_operator(i, g, 0, &x), x, "t=0 is the identity");
            let once = p.apply_operator(i, g, 1, &x);
            let twice = p.apply_operator(i, g, 1, &once);
            assert_eq!(twice, p.apply_operator(i, g, 2, &x));
            let t5 = p.apply_operator(i, g, 5, &x);
            assert_eq!(p.apply_operator(i, g, 2, &t5), p.apply_operator(i, g, 7, &x));
            // A full cycle of rack_size * radix steps scales by
            // xi^(i * rack_size).
            let full = p.apply_operator(i, g, p.rack_size() * p.radix(), &x);
            let scale = f.pow(p.xi(), (i * p.rack_size()) as u64);
            let expect: Vec<_> = x.iter().map(|v| f.mul(&scale, v)).collect();
            assert_eq!(full, expect);
        }
    }
    // Operators of different racks commute.
    let a_then_b = p.apply_operator(0, 1, 3, &p.apply_operator(2, 0, 2, &x));
    let b_then_a = p.apply_operator(2, 0, 2, &p.apply_operator(0, 1, 3, &x));
    assert_eq!(a_then_b, b_then_a);
}

#[test]
fn encode_produces_codewords() {
    let p = params13();
    let mut rng = ChaCha12Rng::seed_from_u64(2);
    let msg = p.random_message(&mut rng);
    let cols = p.encode(&msg).unwrap();
    assert_eq!(cols.len(), p.n());
    assert!(p.is_codeword(&cols));
    // Systematic: data columns pass through unchanged.
    for c in 0..p.k() {
        assert_eq!(cols[c], msg[c]);
    }
    // Wrong shape is rejected.
    assert!(matches!(
        p.encode(&msg[..3]),
        Err(CodeError::BadMessageShape { .. })
    ));
}

#[test]
fn decode_recovers_erased_columns() {
    let p = params13();
    let mut rng = ChaCha12Rng::seed_from_u64(3);
    let cols = p.encode(&p.random_message(&mut rng)).unwrap();
    // Erase the maximum r columns, mixed across racks.
    for erased in [vec![0, 4, 7, 9, 11], vec![1, 2, 3, 4, 5], vec![7, 8, 9, 10, 11]] {
        let known: BTreeMap<usize, Vec<FieldElement>> = (0..p.n())
            .filter(|c| !erased.contains(c))
            .map(|c| (c, cols[c].clone()))
            .collect();
        let back = p.decode_from_columns(&known).unwrap();
        assert_eq!(back, cols, "erased {erased:?}");
    }
    // Fewer than k known columns is refused.
    let known: BTreeMap<usize, Vec<FieldElement>> =
        (0..p.k() - 1).map(|c| (c, cols[c].clone())).collect();
    assert!(matches!(
        p.decode_from_columns(&known),
        Err(CodeError::NotEnoughColumns { need: 7, got: 6 })
    ));
    // A corrupted symbol among redundant known columns is detected.
    let mut known: BTreeMap<usize, Vec<FieldElement>> = (0..p.n())
        .filter(|&c| c != 5)
        .map(|c| (c, cols[c].clone()))
        .collect();
    let f = p.field();
    let cell = known.get_mut(&0).unwrap();
    cell[3] = f.add(&cell[3], &f.one());
    assert!(matches!(
        p.decode_from_columns(&known),
        Err(CodeError::InconsistentColumns)
    ));
}

#[test]
fn verify_mds_exhaustive_and_sampled() {
    let p = ArrayCodeParams::new(&ArrayCodeSpec {
        q: 13,
        rack_size: 1,
        racks: 4,
        k: 2,
        helper_racks: 3,
        error_budget: 0,
        seed: 0,
    })
    .unwrap();
    assert_eq!(p.r(), 2);
    let report = p.verify_mds(100, 0);
    assert!(report.exhaustive);
    assert_eq!(report.total_patterns, 6);
    assert_eq!(report.checked, 6);
    assert!(report.all_ok(), "violations: {:?}", report.violations);
    let sampled = p.verify_mds(3, 7);
    assert!(!sampled.exhaustive);
    assert_eq!(sampled.checked, 3);
    assert!(sampled.all_ok());
}

#[test]
fn rate_one_code_passes_vacuously() {
    // No parity columns: nothing to check, and the strict constructor
    // refuses the shape.
    let spec = ArrayCodeSpec {
        q: 13,
        rack_size: 2,
        racks: 2,
        k: 4,
        helper_racks: 1,
        error_budget: 0,
        seed: 0,
    };
    assert!(matches!(
        ArrayCodeParams::new(&spec),
        Err(CodeError::InvalidParams(_))
    ));
    let p = ArrayCodeParams::new_unchecked(&spec).unwrap();
    assert_eq!(p.r(), 0);
    let report = p.verify_mds(10, 0);
    assert!(report.exhaustive);
    assert_eq!(report.checked, 1);
    assert!(report.all_ok());
}

#[test]
fn parameter_validation_names_the_violated_constraint() {
    let base = spec13();
    let mut s = base.clone();
    s.helper_racks = 4;
    let err = ArrayCodeParams::new(&s).unwrap_err();
    assert!(err.to_string().contains("helper_racks=4"), "{err}");
    let mut s = base.clone();
    s.helper_racks = 1;
    let err = ArrayCodeParams::new(&s).unwrap_err();
    assert!(err.to_string().contains("k/rack_size + 2*error_budget"), "{err}");
    let mut s = base.clone();
    s.rack_size = 5; // 5 does not divide 12
    s.k = 11;
    let err = ArrayCodeParams::new(&s).unwrap_err();
    assert!(err.to_string().contains("divide q-1"), "{err}");
    // rack_size 2 with radix 2 collide.
    let s = ArrayCodeSpec {
        q: 13,
        rack_size: 2,
        racks: 4,
        k: 4,
        helper_racks: 3,
        error_budget: 0,
        seed: 0,
    };
    let err = ArrayCodeParams::new(&s).unwrap_err();
    assert!(err.to_string().contains("coprime"), "{err}");
    let mut s = base.clone();
    s.q = 22; // passes the divisibility check but is 2 * 11
    let err = ArrayCodeParams::new(&s).unwrap_err();
    assert!(err.to_string().contains("prime power"), "{err}");
    let mut s = base;
    s.k = 12;
    assert!(ArrayCodeParams::new(&s).is_err());
}

#[test]
fn construction_and_encode_are_deterministic() {
    let a = params13();
    let b = params13();
    assert_eq!(a.xi(), b.xi());
    assert_eq!(a.rack_root(), b.rack_root());
    let mut rng1 = ChaCha12Rng::seed_from_u64(9);
    let mut rng2 = ChaCha12Rng::seed_from_u64(9);
    let m1 = a.random_message(&mut rng1);
    let m2 = b.random_message(&mut rng2);
    assert_eq!(m1, m2);
    assert_eq!(a.encode(&m1).unwrap(), b.encode(&m2).unwrap());
}

#[test]
fn spec_roundtrips_through_json() {
    let s = spec13();
    let js = serde_json::to_string(&s).unwrap();
    let back: ArrayCodeSpec = serde_json::from_str(&js).unwrap();
    assert_eq!(back, s);
}
