use mixcor::kendall::{tau_a, tau_b, tau_statistics};
use proptest::prelude::*;

// O(n²) pair enumeration.
fn brute(x: &[f64], y: &[f64]) -> (i64, i64, i64, i64) {
    let (mut c, mut d, mut tx, mut ty) = (0, 0, 0, 0);
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            let s = (x[i] - x[j]).signum() * (y[i] - y[j]).signum();
            if x[i] == x[j] {
                tx += 1;
            }
            if y[i] == y[j] {
                ty += 1;
            }
            if x[i] != x[j] && y[i] != y[j] {
                if s > 0.0 {
                    c += 1;
                } else {
                    d += 1;
                }
            }
        }
    }
    (c, d, tx, ty)
}

fn column(levels: Option<u8>) -> BoxedStrategy<f64> {
    match levels {
        Some(p) => (0..p).prop_map(f64::from).boxed(),
        None => (-100.0f64..100.0).boxed(),
    }
}

fn mixed_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop_oneof![Just(None), (2u8..6).prop_map(Some)],
        prop_oneof![Just(None), (2u8..6).prop_map(Some)],
        2usize..120,
    )
        .prop_flat_map(|(lx, ly, n)| {
            (
                proptest::collection::vec(column(lx), n),
                proptest::collection::vec(column(ly), n),
            )
        })
}

proptest! {
    #[test]
    fn counts_match_enumeration((x, y) in mixed_pair()) {
        let s = tau_statistics(&x, &y).unwrap();
        let (c, d, tx, ty) = brute(&x, &y);
        prop_assert_eq!((s.concordant as i64, s.discordant as i64), (c, d));
        prop_assert_eq!((s.ties_j as i64, s.ties_k as i64), (tx, ty));
        let n0 = (x.len() * (x.len() - 1) / 2) as f64;
        prop_assert_eq!(s.tau_a, (c - d) as f64 / n0);
    }

    #[test]
    fn symmetric_in_arguments((x, y) in mixed_pair()) {
        let a = tau_statistics(&x, &y).unwrap();
        let b = tau_statistics(&y, &x).unwrap();
        prop_assert_eq!(a.tau_a, b.tau_a);
        prop_assert!(a.tau_b == b.tau_b || (a.tau_b.is_nan() && b.tau_b.is_nan()));
    }

    #[test]
    fn rank_invariant(x in proptest::collection::vec(-10.0f64..10.0, 2..60), y in proptest::collection::vec(-10.0f64..10.0, 60)) {
        let y = &y[..x.len()];
        let t = tau_a(&x, y).unwrap();
        let tx: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        prop_assert_eq!(t, tau_a(&tx, y).unwrap());
    }
}

#[test]
fn tau_b_reference() {
    let x = [0.0, 0.0, 1.0, 1.0, 2.0];
    let y = [1.0, 3.0, 2.0, 2.0, 5.0];
    let s = tau_b(&x, &y).unwrap();
    let (c, d, tx, ty) = brute(&x, &y);
    let expected = (c - d) as f64 / (((10 - tx) * (10 - ty)) as f64).sqrt();
    assert_eq!(s.tau_b, expected);
}
