//! The README's library example, kept compiling and correct.

use tropicode::tropical::TropicalVector;
use tropicode::{fano_plane, zero_error_certificate, ScheduleMatrix};

#[test]
fn readme_example() {
    let design = fano_plane().double(); // 2-doubly disjunct on 14 vertices
    assert!(zero_error_certificate(&design, 3).unwrap());

    let schedule = ScheduleMatrix::from_design(&design).unwrap();
    let x: TropicalVector = "0,inf,inf,5,inf,2,inf".parse().unwrap();
    let y = schedule.encode(&x).unwrap();
    let decoded = schedule.decode(&y, 3).unwrap();
    assert!(decoded.unique);
    assert_eq!(decoded.x_hat, x);
}
