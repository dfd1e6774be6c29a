use hodograph::curvature::{CurvatureProfile, ProfileKind};
use hodograph::exact;
use hodograph::grid::{Grid, SampledField};
use hodograph::volterra::{solve_picard, verify_contour_identity, ContourCase, PicardOptions};

fn main() {
    let p = CurvatureProfile::new(ProfileKind::Linear, &[1.0], 8.0).unwrap();
    let (_, data) = exact::arcsine(1.0);
    for &pt in &[(2.0, 1.5), (2.5, 1.0), (1.25, 2.75)] {
        let mut rs = Vec::new();
        for &n in &[16usize, 32, 64] {
            let grid = Grid::truncated_cone(1.0, 3.0, 3.0, 1.0 / n as f64).unwrap();
            let (x, _) = solve_picard(&data, &p, grid, PicardOptions::default()).unwrap();
            let sf = SampledField::new(&x);
            rs.push(verify_contour_identity(&sf, &data, &p, pt, ContourCase::Unified).unwrap());
        }
        println!("{:?}: {:e} {:e} {:e} rates {:.2} {:.2}", pt, rs[0], rs[1], rs[2], (rs[0]/rs[1]).log2(), (rs[1]/rs[2]).log2());
    }
}
