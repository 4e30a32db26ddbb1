use serde::{Deserialize, Serialize};

use super::{wang_bound, GuaranteeError, RicTable};

/// Constants at or below this are treated as zero.
pub const ZERO_RIC: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl NamedCheck {
    fn new(name: impl Into<String>, passed: bool, detail: String) -> Self {
        Self { name: name.into(), passed, detail }
    }
}

/// Evaluates the RIC inequalities used by the recovery proofs on a table of
/// exact constants:
///
/// * `δ_{cr} < c·δ_{2r}` for every `c, r ≥ 1` with `cr` and `2r` in the table
///   (zero constants are compared as `δ_{cr} = 0`);
/// * `δ_{k+1} ≥ δ_{3⌈k/2⌉}/3`, with equality allowed only at zero;
/// * if `δ_{3⌈k/2⌉} ≥ 3/(√k + 1)` then `δ_{k+1} ≥ 1/(√k + 1)`.
pub fn ric_inequality_suite(ric: &RicTable, k: usize) -> Result<Vec<NamedCheck>, GuaranteeError> {
    if k == 0 {
        return Err(GuaranteeError::InvalidInput("k must be at least 1".into()));
    }
    let mut checks = Vec::new();
    let orders: Vec<usize> = {
        let mut o: Vec<usize> = ric.deltas.iter().map(|e| e.k).collect();
        o.sort_unstable();
        o
    };
    let top = orders.last().copied().unwrap_or(0);
    for r in 1..=top / 2 {
        let Ok(d2r) = ric.get_exact(2 * r) else { continue };
        for c in 1..=top / r {
            let Ok(dcr) = ric.get_exact(c * r) else { continue };
            let passed = if d2r <= ZERO_RIC { dcr <= ZERO_RIC } else { dcr < c as f64 * d2r };
            checks.push(NamedCheck::new(
                format!("cr_bound(c={c},r={r})"),
                passed,
                format!("delta_{} = {dcr:.6e}, {c}*delta_{} = {:.6e}", c * r, 2 * r, c as f64 * d2r),
            ));
        }
    }

    let hi = 3 * k.div_ceil(2);
    let dk1 = ric.get_exact(k + 1)?;
    let dhi = ric.get_exact(hi)?;
    let passed = if dk1 <= ZERO_RIC && dhi <= ZERO_RIC { true } else { dk1 > dhi / 3.0 };
    checks.push(NamedCheck::new(
        format!("three_halves(k={k})"),
        passed,
        format!("delta_{} = {dk1:.6e}, delta_{hi}/3 = {:.6e}", k + 1, dhi / 3.0),
    ));

    let premise = dhi >= 3.0 * wang_bound(k);
    let passed = !premise || dk1 >= wang_bound(k);
    checks.push(NamedCheck::new(
        format!("wang_violation(k={k})"),
        passed,
        if premise {
            format!("delta_{hi} = {dhi:.6e} >= {:.6e}; delta_{} = {dk1:.6e}", 3.0 * wang_bound(k), k + 1)
        } else {
            "vacuous".to_string()
        },
    ));
    Ok(checks)
}
