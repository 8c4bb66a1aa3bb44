use std::time::Instant;
use steerlib::*;

fn main() {
    // Werner feasibility sweep.
    for eta in [0.5, 0.68, 0.70, 0.71, 0.74, 0.9, 1.0] {
        let asm = werner_assemblage(eta).unwrap();
        let t0 = Instant::now();
        let rep = lhs_feasibility(&asm).unwrap();
        println!(
            "werner {eta:.2}: {:?} residual={:.3e} witness={:+.3e} iters={} ({:.0?})",
            rep.status, rep.residual, rep.witness_value, rep.iterations, t0.elapsed()
        );
    }
    // Restricted relative entropy on the singlet assemblage.
    let singlet = werner_assemblage(1.0).unwrap();
    let t0 = Instant::now();
    let r = restricted_res(&singlet).unwrap();
    println!("singlet rres: lo={:.6} hi={:.6} (outer={} inner={} in {:.1?})",
        r.lo, r.hi, r.diagnostics.outer_iterations, r.diagnostics.inner_iterations, t0.elapsed());
    let t0 = Instant::now();
    let rx = restricted_res_exchanged(&singlet).unwrap();
    println!("singlet exch: lo={:.6} hi={:.6} ({:.1?})", rx.lo, rx.hi, t0.elapsed());

    // LHS assemblage bracket.
    let lhs_asm = werner_assemblage(0.5).unwrap();
    let t0 = Instant::now();
    let r0 = restricted_res(&lhs_asm).unwrap();
    println!("werner0.5 rres: lo={:.2e} hi={:.2e} ({:.1?})", r0.lo, r0.hi, t0.elapsed());

    // Random steerable-ish assemblage.
    let asm = random_assemblage(2, 2, 2, &mut Rng::new(5));
    let t0 = Instant::now();
    let r1 = restricted_res(&asm).unwrap();
    let r2 = restricted_res_exchanged(&asm).unwrap();
    println!("random rres: [{:.5},{:.5}] exch [{:.5},{:.5}] ({:.1?})", r1.lo, r1.hi, r2.lo, r2.hi, t0.elapsed());
    let chain = restricted_upper_bound(&asm).unwrap();
    println!("chain: cmi={:.5} ent={:.5} dim={:.5}", chain.cmi_layer, chain.entropy_layer, chain.dimension_layer);

    // Upper bound for singlet.
    let chain = restricted_upper_bound(&singlet).unwrap();
    println!("singlet chain: cmi={:.5} ent={:.5} dim={:.5}", chain.cmi_layer, chain.entropy_layer, chain.dimension_layer);
}
