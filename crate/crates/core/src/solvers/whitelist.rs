use super::SolverError;

/// Whitelist/blocklist partition of the rows with per-row sample and block-vote
/// counters.
///
/// Both lists are kept sorted, so sampling from the whitelist is a pure
/// function of its membership. Every mutation re-verifies the partition
/// invariant and fails with [`SolverError::InvariantViolation`] if it breaks.
#[derive(Debug, Clone)]
pub struct WhitelistState {
    whitelist: Vec<usize>,
    blocklist: Vec<usize>,
    listed: Vec<bool>,
    sample_count: Vec<u32>,
    block_votes: Vec<u32>,
    q_current: f64,
    corrupted: Option<Vec<bool>>,
    wl_corrupted: usize,
    checks: usize,
}

impl WhitelistState {
    /// All `m` rows whitelisted.
    pub fn new(m: usize, q: f64) -> Self {
        Self {
            whitelist: (0..m).collect(),
            blocklist: Vec::new(),
            listed: vec![true; m],
            sample_count: vec![0; m],
            block_votes: vec![0; m],
            q_current: q,
            corrupted: None,
            wl_corrupted: 0,
            checks: 0,
        }
    }

    /// Whitelist = `pool`, blocklist = the remaining rows.
    pub fn from_pool(m: usize, pool: &[usize], q: f64) -> Result<Self, SolverError> {
        let mut state = Self::new(m, q);
        state.listed.fill(false);
        for &i in pool {
            if i >= m {
                return Err(SolverError::InvalidPool(format!("index {i} >= m={m}")));
            }
            state.listed[i] = true;
        }
        state.rebuild()?;
        if state.whitelist.is_empty() {
            return Err(crate::sampling::SamplingError::EmptyPool.into());
        }
        Ok(state)
    }

    pub fn m(&self) -> usize {
        self.listed.len()
    }

    pub fn whitelist(&self) -> &[usize] {
        &self.whitelist
    }

    pub fn blocklist(&self) -> &[usize] {
        &self.blocklist
    }

    pub fn is_whitelisted(&self, i: usize) -> bool {
        self.listed[i]
    }

    pub fn sample_count(&self, i: usize) -> u32 {
        self.sample_count[i]
    }

    pub fn block_votes(&self, i: usize) -> u32 {
        self.block_votes[i]
    }

    pub fn q_current(&self) -> f64 {
        self.q_current
    }

    pub(super) fn set_q(&mut self, q: f64) {
        self.q_current = q;
    }

    /// Number of invariant checks run so far.
    pub fn checks(&self) -> usize {
        self.checks
    }

    /// Enables incremental tracking of corrupted rows in the whitelist.
    pub fn track_support(&mut self, support: &[usize]) -> Result<(), SolverError> {
        let mut mask = vec![false; self.m()];
        for &i in support {
            if i >= mask.len() {
                return Err(SolverError::Config(format!(
                    "support index {i} >= m={}",
                    mask.len()
                )));
            }
            mask[i] = true;
        }
        self.wl_corrupted = self.whitelist.iter().filter(|&&i| mask[i]).count();
        self.corrupted = Some(mask);
        Ok(())
    }

    /// `|WL ∩ support| / |WL|` when a support is tracked.
    pub fn wl_corruption_fraction(&self) -> Option<f64> {
        self.corrupted
            .as_ref()
            .map(|_| self.wl_corrupted as f64 / self.whitelist.len() as f64)
    }

    /// Counts one batch: every occurrence bumps the sample counter, and
    /// occurrences with `|r| > tau_thr` also earn a block vote.
    pub(super) fn record_batch<T: PartialOrd + Copy>(
        &mut self,
        batch: &[usize],
        magnitudes: &[T],
        tau_thr: T,
    ) {
        for (&i, &v) in batch.iter().zip(magnitudes) {
            self.sample_count[i] += 1;
            if v > tau_thr {
                self.block_votes[i] += 1;
            }
        }
    }

    pub(super) fn reset_counters(&mut self) {
        self.sample_count.fill(0);
        self.block_votes.fill(0);
    }

    /// Moves `rows` from the blocklist to the whitelist.
    pub fn move_to_whitelist(&mut self, rows: &[usize]) -> Result<(), SolverError> {
        self.relabel(rows, true)
    }

    /// Moves `rows` from the whitelist to the blocklist.
    pub fn move_to_blocklist(&mut self, rows: &[usize]) -> Result<(), SolverError> {
        self.relabel(rows, false)
    }

    fn relabel(&mut self, rows: &[usize], to_whitelist: bool) -> Result<(), SolverError> {
        for &i in rows {
            if i >= self.m() {
                return Err(SolverError::InvariantViolation(format!(
                    "row {i} out of range"
                )));
            }
            if self.listed[i] == to_whitelist {
                return Err(SolverError::InvariantViolation(format!(
                    "row {i} already on the {} list",
                    if to_whitelist { "white" } else { "block" }
                )));
            }
            self.listed[i] = to_whitelist;
        }
        self.rebuild()
    }

    fn rebuild(&mut self) -> Result<(), SolverError> {
        self.whitelist.clear();
        self.blocklist.clear();
        for (i, &w) in self.listed.iter().enumerate() {
            if w {
                self.whitelist.push(i);
            } else {
                self.blocklist.push(i);
            }
        }
        if let Some(mask) = &self.corrupted {
            self.wl_corrupted = self.whitelist.iter().filter(|&&i| mask[i]).count();
        }
        self.check_invariants()
    }

    /// Partition `WL ⊎ BL = [m]` and vote dominance `b[i] ≤ s[i]`.
    pub fn check_invariants(&mut self) -> Result<(), SolverError> {
        self.checks += 1;
        let m = self.m();
        if self.whitelist.len() + self.blocklist.len() != m {
            return Err(SolverError::InvariantViolation(format!(
                "|WL| + |BL| = {} + {} != m = {m}",
                self.whitelist.len(),
                self.blocklist.len()
            )));
        }
        let mut seen = vec![false; m];
        for (&i, on_wl) in self
            .whitelist
            .iter()
            .map(|i| (i, true))
            .chain(self.blocklist.iter().map(|i| (i, false)))
        {
            if i >= m || seen[i] {
                return Err(SolverError::InvariantViolation(format!(
                    "row {i} duplicated or out of range"
                )));
            }
            seen[i] = true;
            if self.listed[i] != on_wl {
                return Err(SolverError::InvariantViolation(format!(
                    "row {i} membership flag disagrees with its list"
                )));
            }
        }
        if let Some(i) = (0..m).find(|&i| self.block_votes[i] > self.sample_count[i]) {
            return Err(SolverError::InvariantViolation(format!(
                "row {i} has {} block votes but {} samples",
                self.block_votes[i], self.sample_count[i]
            )));
        }
        Ok(())
    }
}
