use polyostat::families::{gluing_count, horizontal_increment, placement_contributions, spec};
use polyostat::FamilyId;
use proptest::prelude::*;

#[test]
fn gluing_examples() {
    assert_eq!(gluing_count(FamilyId::Dcc, 5, 3), 5);
    assert_eq!(gluing_count(FamilyId::Dc, 2, 4), 0);
    assert_eq!(gluing_count(FamilyId::Cc, 3, 2), 4);
    assert_eq!(gluing_count(FamilyId::St, 2, 5), 2);
    assert_eq!(gluing_count(FamilyId::St, 5, 2), 2);
    assert_eq!(gluing_count(FamilyId::Es, 4, 2), 0);
    assert_eq!(gluing_count(FamilyId::Es, 4, 3), 1);
}

#[test]
fn horizontal_increments() {
    assert_eq!(horizontal_increment(FamilyId::Dcc), 2);
    assert_eq!(horizontal_increment(FamilyId::Dc), 0);
    assert_eq!(horizontal_increment(FamilyId::Wa), 2);
    for f in FamilyId::ALL {
        let s = spec(f);
        assert!(s.horizontal_increment == 0 || s.horizontal_increment == 2);
        assert_eq!(s.horizontal_increment == 0, f == FamilyId::Dc);
        assert_eq!(s.supports_known_gf, !matches!(f, FamilyId::Dc | FamilyId::Es));
    }
}

#[test]
fn names_round_trip() {
    assert_eq!(FamilyId::ALL.len(), 6);
    for f in FamilyId::ALL {
        assert_eq!(f.name().parse::<FamilyId>().unwrap(), f);
        assert_eq!(f.to_string(), f.name());
    }
    assert!("xx".parse::<FamilyId>().is_err());
}

#[test]
fn placements_count_gluings() {
    for f in FamilyId::ALL {
        for k in 1..=15 {
            for j in 1..=15 {
                assert_eq!(placement_contributions(f, k, j).len() as u64, gluing_count(f, k, j), "{f} {k} {j}");
            }
        }
    }
}

fn family() -> impl Strategy<Value = FamilyId> {
    prop::sample::select(FamilyId::ALL.to_vec())
}

proptest! {
    #[test]
    fn dcc_ignores_the_new_column(k in 1u32..=50, j1 in 1u32..=50, j2 in 1u32..=50) {
        prop_assert_eq!(gluing_count(FamilyId::Dcc, k, j1), gluing_count(FamilyId::Dcc, k, j2));
    }

    #[test]
    fn cc_is_symmetric(k in 1u32..=50, j in 1u32..=50) {
        prop_assert_eq!(gluing_count(FamilyId::Cc, k, j), gluing_count(FamilyId::Cc, j, k));
    }

    #[test]
    fn no_dead_ends(f in family(), k in 1u32..=50) {
        prop_assert!((1..=50).any(|j| gluing_count(f, k, j) > 0));
    }

    #[test]
    fn contribution_parity(f in family(), k in 1u32..=30, j in 1u32..=30) {
        for t in placement_contributions(f, k, j) {
            prop_assert_eq!(t % 2, (k + j) % 2 * u32::from(f != FamilyId::Dc));
        }
    }
}
