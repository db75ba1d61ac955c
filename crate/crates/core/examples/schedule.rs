//! Print the broadcast schedule: which symbol each user learns in every SIC
//! slot and which ones are left for the zero-forcing stage.
//!
//!     cargo run --example schedule -- 7

use mwrelay::prelude::*;

fn main() -> Result<()> {
    let users: usize = std::env::args().nth(1).map_or(Ok(7), |s| s.parse()).unwrap_or(7);
    let idx = SlotIndexer::new(users)?;
    println!(
        "K = {users}: t' = {}, proposed slots = {}, conventional slots = {}",
        idx.sic_slots(),
        idx.proposed_total_slots(),
        idx.conventional_total_slots()
    );
    for k in 1..=users {
        let learned: Vec<usize> = (1..=idx.sic_slots()).map(|t| idx.partner(k as i64, t as i64)).collect();
        println!(
            "user {k:>2}: SIC order {:?}, known after t' {:?}, ZF unknowns {:?}",
            learned,
            idx.known_set(k, idx.sic_slots())?,
            idx.remaining_unknowns(k)?
        );
    }

    // A_k column n holds g_k^H g_{j(k, t'+n-m)} in row m.
    let (rows, cols) = (idx.sic_slots(), idx.zf_unknowns());
    println!("\nZF offsets (row = slot, column = unknown):");
    for m in 1..=rows {
        let offsets: Vec<usize> = (1..=cols).map(|n| idx.zf_coefficient_offset(m, n).unwrap()).collect();
        println!("  slot {m}: {offsets:?}");
    }
    Ok(())
}
