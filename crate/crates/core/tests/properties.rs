mod common;

use common::props;

#[test]
fn mask_algebra() {
    props::mask_algebra().unwrap();
}

#[test]
fn sup_conventions() {
    props::sup_conventions().unwrap();
}

#[test]
fn cr_monotone_in_q() {
    props::cr_monotone_in_q().unwrap();
}

#[test]
fn worker_determinism() {
    props::worker_determinism().unwrap();
}

#[test]
fn decreasing_limits() {
    props::decreasing_limits().unwrap();
}
