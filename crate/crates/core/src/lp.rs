//! Dense-tableau two-phase simplex with Bland's anti-cycling rule.
//!
//! Maximization over rows `A_i x {<=,=,>=} b_i` with optional per-variable
//! bounds. The lowest-index pivoting rule guarantees termination; the price
//! is speed, which is acceptable at the sizes built here. Artificial columns
//! are kept through phase two (banned from entering) so that duals can be
//! read off the objective row under each row's original identity column, and
//! infeasible systems come back with a Farkas certificate assembled from the
//! phase-one duals.

use crate::FEAS_TOL;

/// Entries smaller than this never serve as pivots.
const PIVOT_TOL: f64 = 1e-9;

const PIVOT_STRONG: f64 = 1e-7;

const STALL_LIMIT: usize = 40;
/// Ratio-test ties are broken by Bland's rule inside this band.
const RATIO_TIE_TOL: f64 = 1e-12;
/// Phase-one artificial mass above this means the system is infeasible.
const PHASE1_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rel {
    Le,
    Eq,
    Ge,
}

/// One dense constraint row `coeffs . x  rel  rhs`.
#[derive(Clone, Debug)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub rel: Rel,
    pub rhs: f64,
}

/// A linear program in maximization form. Variables are free unless bounded.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

/// Solver output. `primal`, `dual`, and `value` are meaningful only when
/// `status == Optimal`; `farkas` is populated only when `status == Infeasible`
/// and then certifies infeasibility over the original rows and bounds.
#[derive(Clone, Debug)]
pub struct LpResult {
    pub status: LpStatus,
    pub value: f64,
    pub primal: Vec<f64>,
    pub dual: Vec<f64>,
    pub farkas: Option<Vec<f64>>,
    pub iterations: usize,
}

impl LpResult {
    fn failed(n_vars: usize, n_rows: usize, iterations: usize) -> Self {
        LpResult {
            status: LpStatus::NumericalFailure,
            value: f64::NAN,
            primal: vec![0.0; n_vars],
            dual: vec![0.0; n_rows],
            farkas: None,
            iterations,
        }
    }
}

/// How an original variable maps into the nonnegative tableau coordinates.
#[derive(Clone, Copy, Debug)]
enum VarMap {
    /// x = at + t[col], t >= 0 (also used for two-sided bounds, which add a
    /// synthetic row t <= u - l).
    Shift { col: usize, at: f64 },
    /// x = at - t[col], t >= 0.
    NegShift { col: usize, at: f64 },
    /// x = t[pos] - t[neg].
    Split { pos: usize, neg: usize },
}

impl LinearProgram {
    /// A program over `n_vars` free variables with zero objective and no rows.
    pub fn new(n_vars: usize) -> Self {
        LinearProgram {
            objective: vec![0.0; n_vars],
            rows: Vec::new(),
            lower: vec![None; n_vars],
            upper: vec![None; n_vars],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, rel: Rel, rhs: f64) {
        assert_eq!(coeffs.len(), self.n_vars(), "row width mismatch");
        self.rows.push(Row { coeffs, rel, rhs });
    }

    pub fn set_lower(&mut self, var: usize, bound: f64) {
        self.lower[var] = Some(bound);
    }

    pub fn set_upper(&mut self, var: usize, bound: f64) {
        self.upper[var] = Some(bound);
    }

    /// Solve to proven optimality, infeasibility, or unboundedness.
    pub fn solve(&self) -> LpResult {
        let n = self.n_vars();
        let n_rows = self.rows.len();
        let finite = self.objective.iter().all(|c| c.is_finite())
            && self.rows.iter().all(|r| {
                r.rhs.is_finite() && r.coeffs.iter().all(|c| c.is_finite())
            });
        if !finite {
            return LpResult::failed(n, n_rows, 0);
        }

        // Map variables onto nonnegative tableau columns.
        let mut maps = Vec::with_capacity(n);
        let mut ncols = 0usize;
        let mut synth = Vec::new(); // (col, width) rows t_col <= width
        for j in 0..n {
            match (self.lower[j], self.upper[j]) {
                (Some(l), Some(u)) => {
                    if u < l {
                        // Empty box; certify with the trivial empty certificate
                        // is impossible over rows alone, so report bare
                        // infeasibility.
                        return LpResult {
                            status: LpStatus::Infeasible,
                            value: f64::NAN,
                            primal: vec![0.0; n],
                            dual: vec![0.0; n_rows],
                            farkas: None,
                            iterations: 0,
                        };
                    }
                    maps.push(VarMap::Shift { col: ncols, at: l });
                    synth.push((ncols, u - l));
                    ncols += 1;
                }
                (Some(l), None) => {
                    maps.push(VarMap::Shift { col: ncols, at: l });
                    ncols += 1;
                }
                (None, Some(u)) => {
                    maps.push(VarMap::NegShift { col: ncols, at: u });
                    ncols += 1;
                }
                (None, None) => {
                    maps.push(VarMap::Split {
                        pos: ncols,
                        neg: ncols + 1,
                    });
                    ncols += 2;
                }
            }
        }

        // Transformed rows: original rows first, synthetic bound rows after.
        let m = n_rows + synth.len();
        let mut a = vec![vec![0.0; ncols]; m];
        let mut b = vec![0.0; m];
        let mut rel = vec![Rel::Le; m];
        for (i, row) in self.rows.iter().enumerate() {
            rel[i] = row.rel;
            b[i] = row.rhs;
            for j in 0..n {
                let c = row.coeffs[j];
                if c == 0.0 {
                    continue;
                }
                match maps[j] {
                    VarMap::Shift { col, at } => {
                        a[i][col] += c;
                        b[i] -= c * at;
                    }
                    VarMap::NegShift { col, at } => {
                        a[i][col] -= c;
                        b[i] -= c * at;
                    }
                    VarMap::Split { pos, neg } => {
                        a[i][pos] += c;
                        a[i][neg] -= c;
                    }
                }
            }
        }
        for (k, &(col, width)) in synth.iter().enumerate() {
            let i = n_rows + k;
            a[i][col] = 1.0;
            b[i] = width;
            rel[i] = Rel::Le;
        }

        // Transformed objective and its constant offset.
        let mut c_t = vec![0.0; ncols];
        let mut c_off = 0.0;
        for j in 0..n {
            let c = self.objective[j];
            if c == 0.0 {
                continue;
            }
            match maps[j] {
                VarMap::Shift { col, at } => {
                    c_t[col] += c;
                    c_off += c * at;
                }
                VarMap::NegShift { col, at } => {
                    c_t[col] -= c;
                    c_off += c * at;
                }
                VarMap::Split { pos, neg } => {
                    c_t[pos] += c;
                    c_t[neg] -= c;
                }
            }
        }

        // Normalize rhs signs; `sign[i]` maps tableau duals back to row duals.
        let mut sign = vec![1.0; m];
        for i in 0..m {
            if b[i] < 0.0 {
                sign[i] = -1.0;
                b[i] = -b[i];
                for v in a[i].iter_mut() {
                    *v = -*v;
                }
                rel[i] = match rel[i] {
                    Rel::Le => Rel::Ge,
                    Rel::Eq => Rel::Eq,
                    Rel::Ge => Rel::Le,
                };
            }
        }

        // Column layout: real columns, then one slack or surplus per
        // inequality row, then one artificial per Ge or Eq row.
        let mut slack_col = vec![usize::MAX; m];
        let mut artif_col = vec![usize::MAX; m];
        let mut total = ncols;
        for i in 0..m {
            if rel[i] != Rel::Eq {
                slack_col[i] = total;
                total += 1;
            }
        }
        let artif_start = total;
        for i in 0..m {
            if rel[i] != Rel::Le {
                artif_col[i] = total;
                total += 1;
            }
        }

        let mut tab = vec![vec![0.0; total + 1]; m];
        let mut basis = vec![usize::MAX; m];
        for i in 0..m {
            tab[i][..ncols].copy_from_slice(&a[i]);
            tab[i][total] = b[i];
            match rel[i] {
                Rel::Le => {
                    tab[i][slack_col[i]] = 1.0;
                    basis[i] = slack_col[i];
                }
                Rel::Ge => {
                    tab[i][slack_col[i]] = -1.0;
                    tab[i][artif_col[i]] = 1.0;
                    basis[i] = artif_col[i];
                }
                Rel::Eq => {
                    tab[i][artif_col[i]] = 1.0;
                    basis[i] = artif_col[i];
                }
            }
        }
        // Pristine copy: anomalies and final answers re-derive the tableau
        // from here, discarding accumulated roundoff.
        let tab0 = tab.clone();

        let max_iter = 1000 + 50 * (m + total);
        let mut iterations = 0usize;

        // Phase one: maximize minus the artificial mass. Raw costs are -1
        // per artificial column, stored negated in the objective row.
        let phase1_raw = |obj: &mut [f64]| {
            for v in obj.iter_mut() {
                *v = 0.0;
            }
            for v in obj[artif_start..total].iter_mut() {
                *v = 1.0;
            }
        };
        let have_artif = artif_start < total;
        if have_artif {
            let mut obj = vec![0.0; total + 1];
            phase1_raw(&mut obj);
            reduce_by_basis(&mut obj, &tab, &basis, total);
            let no_ban = vec![false; total];
            // Phase one cannot be unbounded, so anything but a clean
            // optimum after a rebuild means degradation: rebuild and finish
            // under Bland's rule.
            for attempt in 0..4 {
                let end = run_simplex(
                    &mut tab, &mut obj, &mut basis, &no_ban, total,
                    2 * max_iter, &mut iterations, attempt > 0,
                );
                if !refresh(&mut tab, &tab0, &mut basis, total) {
                    return LpResult::failed(n, n_rows, iterations);
                }
                phase1_raw(&mut obj);
                reduce_by_basis(&mut obj, &tab, &basis, total);
                let clean = (0..total)
                    .all(|j| basis.contains(&j) || obj[j] > -PIVOT_TOL);
                if matches!(end, SimplexEnd::Optimal) && clean {
                    break;
                }
                if attempt == 3 {
                    return LpResult::failed(n, n_rows, iterations);
                }
            }
            let mass = -obj[total];
            if mass > PHASE1_TOL {
                // Infeasible. Phase-one duals live in the objective row: the
                // entry under a slack column is y_i, under a surplus column
                // -y_i, and under an artificial column y_i + 1.
                let mut farkas = vec![0.0; n_rows];
                for i in 0..n_rows {
                    let y = match rel[i] {
                        Rel::Le => obj[slack_col[i]],
                        Rel::Ge => -obj[slack_col[i]],
                        Rel::Eq => obj[artif_col[i]] - 1.0,
                    };
                    farkas[i] = sign[i] * y;
                }
                return LpResult {
                    status: LpStatus::Infeasible,
                    value: f64::NAN,
                    primal: vec![0.0; n],
                    dual: vec![0.0; n_rows],
                    farkas: Some(farkas),
                    iterations,
                };
            }

            // Drive surviving basic artificials out on any usable real pivot;
            // rows that stay artificial-basic are redundant and inert from
            // here on (all their non-artificial entries are zero, and only
            // non-artificial columns may enter later).
            for r in 0..m {
                if basis[r] >= artif_start {
                    if tab[r][total].abs() <= PHASE1_TOL {
                        tab[r][total] = 0.0;
                    }
                    if let Some(j) = (0..artif_start)
                        .find(|&j| tab[r][j].abs() > PIVOT_TOL)
                    {
                        pivot_rows_only(&mut tab, r, j, total);
                        basis[r] = j;
                    }
                }
            }
        }

        // Phase two: the real objective over the feasible tableau.
        let phase2_raw = |obj: &mut [f64]| {
            for v in obj.iter_mut() {
                *v = 0.0;
            }
            for (v, c) in obj.iter_mut().zip(&c_t) {
                *v = -c;
            }
        };
        let mut obj = vec![0.0; total + 1];
        phase2_raw(&mut obj);
        reduce_by_basis(&mut obj, &tab, &basis, total);
        let mut banned = vec![false; total];
        for col in artif_start..total {
            banned[col] = true;
        }
        let mut unbounded = false;
        // Optimality must survive a clean rebuild of the tableau: rerun on
        // any reduced cost that refreshing reveals as negative, and trust an
        // improving ray only when the rebuilt tableau still shows it.
        for attempt in 0..4 {
            let end = run_simplex(
                &mut tab, &mut obj, &mut basis, &banned, total,
                2 * max_iter, &mut iterations, attempt > 0,
            );
            if matches!(end, SimplexEnd::IterationCap) {
                return LpResult::failed(n, n_rows, iterations);
            }
            if !refresh(&mut tab, &tab0, &mut basis, total) {
                return LpResult::failed(n, n_rows, iterations);
            }
            phase2_raw(&mut obj);
            reduce_by_basis(&mut obj, &tab, &basis, total);
            if let SimplexEnd::Unbounded(col) = end {
                if obj[col] < -PIVOT_TOL
                    && tab.iter().all(|row| row[col] <= PIVOT_TOL)
                {
                    unbounded = true;
                    break;
                }
            }
            let clean = (0..total)
                .all(|j| banned[j] || basis.contains(&j) || obj[j] > -PIVOT_TOL);
            if clean {
                break;
            }
            if attempt == 3 {
                return LpResult::failed(n, n_rows, iterations);
            }
        }
        if unbounded {
            return LpResult {
                status: LpStatus::Unbounded,
                value: f64::INFINITY,
                primal: vec![0.0; n],
                dual: vec![0.0; n_rows],
                farkas: None,
                iterations,
            };
        }

        // Read the solution back through the variable maps.
        let mut t = vec![0.0; total];
        for i in 0..m {
            t[basis[i]] = tab[i][total];
        }
        let mut primal = vec![0.0; n];
        for j in 0..n {
            primal[j] = match maps[j] {
                VarMap::Shift { col, at } => at + t[col],
                VarMap::NegShift { col, at } => at - t[col],
                VarMap::Split { pos, neg } => t[pos] - t[neg],
            };
        }
        let mut dual = vec![0.0; n_rows];
        for i in 0..n_rows {
            let y = match rel[i] {
                Rel::Le => obj[slack_col[i]],
                Rel::Ge => -obj[slack_col[i]],
                Rel::Eq => obj[artif_col[i]],
            };
            dual[i] = sign[i] * y;
        }
        LpResult {
            status: LpStatus::Optimal,
            value: obj[total] + c_off,
            primal,
            dual,
            farkas: None,
            iterations,
        }
    }
}

enum SimplexEnd {
    Optimal,
    /// No leaving row for this entering column.
    Unbounded(usize),
    IterationCap,
}

/// Rebuild `tab` from the pristine tableau for the current basis by
/// Gauss-Jordan elimination, discarding accumulated roundoff. Rows are
/// processed largest-pivot-first; a pivot below 1e-11 means the basis
/// matrix is numerically singular and the rebuild fails.
fn refresh(
    tab: &mut [Vec<f64>],
    tab0: &[Vec<f64>],
    basis: &mut [usize],
    total: usize,
) -> bool {
    let m = tab.len();
    for (row, fresh) in tab.iter_mut().zip(tab0) {
        row.copy_from_slice(fresh);
    }
    // Full pivoting over (unprocessed row, unmatched basis column). Only the
    // basis set matters, so rows may swap which member they carry.
    let cols: Vec<usize> = basis.to_vec();
    let mut done = vec![false; m];
    let mut open = vec![true; m];
    for _ in 0..m {
        let mut r = usize::MAX;
        let mut k = usize::MAX;
        let mut best = 1e-11;
        for i in 0..m {
            if done[i] {
                continue;
            }
            for (j, &c) in cols.iter().enumerate() {
                if open[j] && tab[i][c].abs() > best {
                    best = tab[i][c].abs();
                    r = i;
                    k = j;
                }
            }
        }
        if r == usize::MAX {
            return false;
        }
        done[r] = true;
        open[k] = false;
        basis[r] = cols[k];
        pivot_rows_only(tab, r, cols[k], total);
    }
    true
}

/// Subtract each basic row's contribution so reduced costs vanish on the
/// basis. `obj` holds raw (negated) costs on entry.
fn reduce_by_basis(obj: &mut [f64], tab: &[Vec<f64>], basis: &[usize], total: usize) {
    for (row, &b) in tab.iter().zip(basis) {
        let w = obj[b];
        if w != 0.0 {
            for (o, t) in obj.iter_mut().zip(row.iter().take(total + 1)) {
                *o -= w * t;
            }
        }
    }
    debug_assert_eq!(obj.len(), total + 1);
}

/// Ratio test. Pivots below `PIVOT_STRONG` are used only when nothing
/// stronger exists; among near-minimal ratios the tie goes to the largest
/// pivot for stability, or to the lowest basic column index under Bland's
/// rule.
fn choose_leaving(
    tab: &[Vec<f64>],
    basis: &[usize],
    enter: usize,
    total: usize,
    bland: bool,
) -> Option<usize> {
    let m = tab.len();
    for accept in [PIVOT_STRONG, PIVOT_TOL] {
        let mut best = f64::INFINITY;
        for i in 0..m {
            let aij = tab[i][enter];
            if aij > accept {
                best = best.min(tab[i][total].max(0.0) / aij);
            }
        }
        if !best.is_finite() {
            continue;
        }
        let window = best + RATIO_TIE_TOL + 1e-9 * best;
        let mut leave = usize::MAX;
        for i in 0..m {
            let aij = tab[i][enter];
            if aij > accept && tab[i][total].max(0.0) / aij <= window {
                if leave == usize::MAX {
                    leave = i;
                } else if bland {
                    if basis[i] < basis[leave] {
                        leave = i;
                    }
                } else if aij > tab[leave][enter] {
                    leave = i;
                }
            }
        }
        return Some(leave);
    }
    None
}

/// One simplex run on a feasible tableau. Entering is by most negative
/// reduced cost while the objective moves; after `STALL_LIMIT` consecutive
/// degenerate pivots (or when `force_bland` is set) it switches to Bland's
/// rule, lowest eligible index, which cannot cycle.
fn run_simplex(
    tab: &mut [Vec<f64>],
    obj: &mut [f64],
    basis: &mut [usize],
    banned: &[bool],
    total: usize,
    max_iter: usize,
    iterations: &mut usize,
    force_bland: bool,
) -> SimplexEnd {
    let mut bland = force_bland;
    let mut stall = 0usize;
    let mut local = 0usize;
    // A basic column's reduced cost is zero by construction; drift there is
    // noise, and re-entering it would duplicate a basis index.
    let mut in_basis = vec![false; total];
    for &b in basis.iter() {
        in_basis[b] = true;
    }
    loop {
        let mut enter = usize::MAX;
        if bland {
            for j in 0..total {
                if !banned[j] && !in_basis[j] && obj[j] < -PIVOT_TOL {
                    enter = j;
                    break;
                }
            }
        } else {
            let mut most = -PIVOT_TOL;
            for j in 0..total {
                if !banned[j] && !in_basis[j] && obj[j] < most {
                    most = obj[j];
                    enter = j;
                }
            }
        }
        if enter == usize::MAX {
            return SimplexEnd::Optimal;
        }
        let Some(leave) = choose_leaving(tab, basis, enter, total, bland) else {
            return SimplexEnd::Unbounded(enter);
        };
        let degenerate = tab[leave][total] <= RATIO_TIE_TOL;
        pivot_with_obj(tab, obj, leave, enter, total);
        in_basis[basis[leave]] = false;
        in_basis[enter] = true;
        basis[leave] = enter;
        *iterations += 1;
        local += 1;
        if local > max_iter {
            return SimplexEnd::IterationCap;
        }
        if degenerate {
            stall += 1;
            if stall >= STALL_LIMIT {
                bland = true;
            }
        } else {
            stall = 0;
        }
    }
}

fn pivot_with_obj(
    tab: &mut [Vec<f64>],
    obj: &mut [f64],
    r: usize,
    c: usize,
    total: usize,
) {
    let m = tab.len();
    let piv = tab[r][c];
    for j in 0..=total {
        tab[r][j] /= piv;
    }
    tab[r][c] = 1.0;
    for i in 0..m {
        if i != r {
            let f = tab[i][c];
            if f != 0.0 {
                for j in 0..=total {
                    tab[i][j] -= f * tab[r][j];
                }
                tab[i][c] = 0.0;
            }
        }
    }
    let f = obj[c];
    if f != 0.0 {
        for j in 0..=total {
            obj[j] -= f * tab[r][j];
        }
        obj[c] = 0.0;
    }
}

/// Row pivot without an objective row (used when driving artificials out).
fn pivot_rows_only(tab: &mut [Vec<f64>], r: usize, c: usize, total: usize) {
    let m = tab.len();
    let piv = tab[r][c];
    for j in 0..=total {
        tab[r][j] /= piv;
    }
    tab[r][c] = 1.0;
    for i in 0..m {
        if i != r {
            let f = tab[i][c];
            if f != 0.0 {
                for j in 0..=total {
                    tab[i][j] -= f * tab[r][j];
                }
                tab[i][c] = 0.0;
            }
        }
    }
}

/// Check a Farkas certificate against the original rows and bounds.
///
/// The certificate aggregates the rows with weights `y` (nonnegative on Le
/// rows, nonpositive on Ge rows, free on Eq rows), so every feasible point
/// satisfies `y.Ax <= y.b`. Infeasibility is certified when the infimum of
/// `y.Ax` over the bound box exceeds `y.b`. Returns the positive margin, or
/// a reason the certificate fails.
pub fn verify_farkas(
    lp: &LinearProgram,
    y: &[f64],
) -> std::result::Result<f64, String> {
    if y.len() != lp.rows.len() {
        return Err("certificate length mismatch".into());
    }
    let scale = 1.0 + y.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let tol = FEAS_TOL * scale;
    for (i, row) in lp.rows.iter().enumerate() {
        match row.rel {
            Rel::Le if y[i] < -tol => {
                return Err(format!("row {i}: Le row has negative weight"));
            }
            Rel::Ge if y[i] > tol => {
                return Err(format!("row {i}: Ge row has positive weight"));
            }
            _ => {}
        }
    }
    let n = lp.n_vars();
    let mut yb = 0.0;
    for (i, row) in lp.rows.iter().enumerate() {
        yb += y[i] * row.rhs;
    }
    let mut inf = 0.0;
    for j in 0..n {
        let mut coef = 0.0;
        for (i, row) in lp.rows.iter().enumerate() {
            coef += y[i] * row.coeffs[j];
        }
        if coef.abs() <= tol {
            continue;
        }
        let pick = if coef > 0.0 { lp.lower[j] } else { lp.upper[j] };
        match pick {
            Some(bound) => inf += coef * bound,
            None => {
                return Err(format!(
                    "variable {j}: aggregated coefficient {coef} unbounded below"
                ));
            }
        }
    }
    let margin = inf - yb;
    if margin > tol {
        Ok(margin)
    } else {
        Err(format!("aggregated system is satisfiable (margin {margin})"))
    }
}

/// Residuals of the optimality conditions for a claimed optimal pair.
#[derive(Clone, Copy, Debug)]
pub struct KktReport {
    /// Worst violation of rows and bounds by the primal point.
    pub primal_infeas: f64,
    /// Worst dual sign violation or reduced cost charged to a missing bound.
    pub dual_infeas: f64,
    /// Worst complementary slackness product.
    pub comp_slack: f64,
    /// Absolute primal-dual objective gap.
    pub gap: f64,
}

/// Evaluate the optimality conditions of `res` for `lp`. All four fields of
/// a clean optimum sit at roundoff level.
pub fn verify_kkt(lp: &LinearProgram, res: &LpResult) -> KktReport {
    let n = lp.n_vars();
    let x = &res.primal;
    let y = &res.dual;
    let mut primal_infeas = 0.0f64;
    let mut dual_infeas = 0.0f64;
    let mut comp_slack = 0.0f64;
    for (i, row) in lp.rows.iter().enumerate() {
        let ax: f64 = (0..n).map(|j| row.coeffs[j] * x[j]).sum();
        let resid = ax - row.rhs;
        let viol = match row.rel {
            Rel::Le => resid.max(0.0),
            Rel::Ge => (-resid).max(0.0),
            Rel::Eq => resid.abs(),
        };
        primal_infeas = primal_infeas.max(viol);
        let sign_viol = match row.rel {
            Rel::Le => (-y[i]).max(0.0),
            Rel::Ge => y[i].max(0.0),
            Rel::Eq => 0.0,
        };
        dual_infeas = dual_infeas.max(sign_viol);
        comp_slack = comp_slack.max((y[i] * resid).abs());
    }
    let mut dual_obj: f64 = (0..lp.rows.len()).map(|i| y[i] * lp.rows[i].rhs).sum();
    for j in 0..n {
        if let Some(l) = lp.lower[j] {
            primal_infeas = primal_infeas.max(l - x[j]);
        }
        if let Some(u) = lp.upper[j] {
            primal_infeas = primal_infeas.max(x[j] - u);
        }
        let ya: f64 = (0..lp.rows.len())
            .map(|i| y[i] * lp.rows[i].coeffs[j])
            .sum();
        let rc = lp.objective[j] - ya;
        if rc > 0.0 {
            match lp.upper[j] {
                Some(u) => {
                    dual_obj += rc * u;
                    comp_slack = comp_slack.max((rc * (u - x[j])).abs());
                }
                None => dual_infeas = dual_infeas.max(rc),
            }
        } else if rc < 0.0 {
            match lp.lower[j] {
                Some(l) => {
                    dual_obj += rc * l;
                    comp_slack = comp_slack.max((rc * (x[j] - l)).abs());
                }
                None => dual_infeas = dual_infeas.max(-rc),
            }
        }
    }
    let primal_obj: f64 = (0..n).map(|j| lp.objective[j] * x[j]).sum();
    KktReport {
        primal_infeas,
        dual_infeas,
        comp_slack,
        gap: (primal_obj - dual_obj).abs(),
    }
}
