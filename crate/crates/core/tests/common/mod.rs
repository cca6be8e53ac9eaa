//! Independent oracles shared by the integration tests.

fn cross(a: [i64; 3], b: [i64; 3]) -> [i64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [i64; 3], b: [i64; 3]) -> i64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn det3(a: [i64; 3], b: [i64; 3], c: [i64; 3]) -> i64 {
    dot(a, cross(b, c))
}

/// Every point of `[-10, 10]³` in the real span of `vectors` is an integer
/// combination of them.
pub fn brute_saturated(vectors: &[[i64; 3]]) -> bool {
    let mut box_points = (-10i64..=10)
        .flat_map(|x| (-10i64..=10).flat_map(move |y| (-10i64..=10).map(move |z| [x, y, z])));
    match vectors {
        [v] => box_points.filter(|&p| cross(*v, p) == [0, 0, 0]).all(|p| {
            let i = (0..3).find(|&i| v[i] != 0).unwrap();
            p[i] % v[i] == 0
        }),
        [v, w] => {
            let n = cross(*v, *w);
            box_points.filter(|&p| dot(n, p) == 0).all(|p| {
                // p = a v + b w; n_i is the minor of the other two coordinates.
                let i = (0..3).find(|&i| n[i] != 0).unwrap();
                let (r, s) = ((i + 1) % 3, (i + 2) % 3);
                let a_num = p[r] * w[s] - p[s] * w[r];
                let b_num = v[r] * p[s] - v[s] * p[r];
                a_num % n[i] == 0 && b_num % n[i] == 0
            })
        }
        [u, v, w] => {
            let d = det3(*u, *v, *w);
            box_points.all(|p| {
                det3(p, *v, *w) % d == 0 && det3(*u, p, *w) % d == 0 && det3(*u, *v, p) % d == 0
            })
        }
        _ => unreachable!(),
    }
}
