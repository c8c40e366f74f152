//! Event-driven particle engines: infinite-swapping pairs, standard
//! Fleming–Viot ensembles, and finite-rate swapping pairs.
//!
//! All three share the same skeleton: every particle slot carries an
//! exponential clock at its current net event rate; the soonest clock fires,
//! elapsed time is subtracted from the others (memorylessness), the event is
//! classified as a dynamics move or a kill/clone resolution, applied, and
//! only the affected slots get fresh rates and clocks. Each inter-event
//! interval is appended to the trajectory with its holding time, the full
//! set of pair positions, and the pair weights ρ, which is everything the
//! time-weighted estimators need.
//!
//! Randomness flows through a single [`RngStream`] in a fixed documented
//! order (see [`crate::rng`]), so runs are bitwise reproducible by seed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jump::{transition_rates_into, RateVector};
use crate::problem::{Direction, GridPolicy, ProblemSpec};
use crate::rng::RngStream;
use crate::swap::{finite_swap_rate, inf_swap_weight};

/// Which engine produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    InfiniteSwap,
    StandardForward,
    StandardBackward,
    FiniteSwap,
    /// Read back from disk; engine parameters unknown.
    Imported,
}

impl EngineKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EngineKind::InfiniteSwap => "infinite-swap",
            EngineKind::StandardForward => "standard-forward",
            EngineKind::StandardBackward => "standard-backward",
            EngineKind::FiniteSwap => "finite-swap",
            EngineKind::Imported => "imported",
        }
    }
}

/// Which member of a pair a slot refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Member {
    X,
    Y,
}

impl Member {
    fn other(self) -> Member {
        match self {
            Member::X => Member::Y,
            Member::Y => Member::X,
        }
    }
}

/// How the donor/victim member of the selected pair is chosen during a
/// kill/clone resolution.
///
/// Both rules pick the pair uniformly (a 1/N self-draw leaves the state
/// unchanged) and draw the fired particle's role — forward with probability
/// equal to its own weight. They differ only when the backward role is
/// drawn: `Complementary` selects the cross member with the complement
/// weight `1 − ρ'`, while `RoleWeighted` weights each member by its own
/// backward-role fraction, i.e. cross member with probability `ρ'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RebirthRule {
    #[default]
    Complementary,
    RoleWeighted,
}

impl RebirthRule {
    pub fn as_str(self) -> &'static str {
        match self {
            RebirthRule::Complementary => "complementary",
            RebirthRule::RoleWeighted => "role-weighted",
        }
    }
}

/// Per-particle event rates: symmetrized dynamics plus a signed kill/clone
/// rate. Positive `kill_clone` kills the particle (rebirth at a donor);
/// negative clones it onto a victim.
#[derive(Debug, Clone)]
pub struct EventRates {
    pub dynamics: RateVector,
    pub kill_clone: f64,
    /// Total event intensity `Σ dynamics + |kill_clone|`.
    pub net: f64,
}

impl EventRates {
    fn placeholder(dim: usize) -> Self {
        Self { dynamics: RateVector::zeros(dim), kill_clone: 0.0, net: 0.0 }
    }
}

/// Event rates for one particle with forward-role weight `w ∈ [0, 1]`.
///
/// Drift `(1 − 2w)·DV(p)` (so `w = 1` is the forward dynamics `−DV` and
/// `w = 0` the backward `+DV`), kill/clone rate `c(p) − (1 − w)·ΔV(p)`
/// (reducing to `c` and `c̄` at the endpoints, and to pure diffusion with
/// drift 0 at `w = ½`).
pub fn event_rates(
    p: &[f64],
    forward_weight: f64,
    spec: &ProblemSpec,
    h: f64,
) -> Result<EventRates> {
    if !(0.0..=1.0).contains(&forward_weight) {
        return Err(Error::InvalidInput(format!(
            "forward-role weight must lie in [0, 1] (got {forward_weight})"
        )));
    }
    let d = spec.dim();
    let mut er = EventRates::placeholder(d);
    let mut grad = vec![0.0; d];
    let mut b = vec![0.0; d];
    let a = vec![spec.noise_variance(); d];
    event_rates_into(p, forward_weight, spec, h, &mut er, &mut grad, &mut b, &a)?;
    Ok(er)
}

/// Allocation-free core of [`event_rates`]; `grad`/`b` are scratch buffers
/// and `a` the per-axis diffusion vector.
#[allow(clippy::too_many_arguments)]
fn event_rates_into(
    p: &[f64],
    w: f64,
    spec: &ProblemSpec,
    h: f64,
    out: &mut EventRates,
    grad: &mut [f64],
    b: &mut [f64],
    a: &[f64],
) -> Result<()> {
    spec.grad_v(p, grad);
    let drift_factor = 1.0 - 2.0 * w;
    for k in 0..p.len() {
        b[k] = drift_factor * grad[k];
    }
    transition_rates_into(b, a, h, &mut out.dynamics)?;
    out.kill_clone = spec.c(p) - (1.0 - w) * spec.lap_v(p);
    out.net = out.dynamics.total() + out.kill_clone.abs();
    Ok(())
}

/// Outcome of a kill/clone resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RebirthOutcome {
    /// The uniform pair draw hit the fired pair itself; nothing moves.
    Unmoved,
    /// Kill-then-clone: the fired member was reborn at a member of `donor`.
    Reborn { donor: usize },
    /// Clone-then-kill: the fired member's position overwrote a member of
    /// `victim`.
    ClonedOnto { victim: usize },
}

/// Resolve a kill/clone event for one pair member of an infinite-swapping
/// ensemble, mutating positions and refreshing the ρ of any pair whose
/// positions changed.
///
/// Draw order: pair index (one uniform; a self-draw stops here), then the
/// fired particle's role coin, then the member coin per [`RebirthRule`].
/// `kc > 0` kills the fired member (it is reborn at the selected donor
/// member); `kc < 0` clones it onto the selected victim member.
#[allow(clippy::too_many_arguments)]
pub fn kill_clone(
    xs: &mut [f64],
    ys: &mut [f64],
    rho: &mut [f64],
    dim: usize,
    fired_pair: usize,
    fired_member: Member,
    kc: f64,
    rule: RebirthRule,
    spec: &ProblemSpec,
    rng: &mut RngStream,
) -> RebirthOutcome {
    let n = rho.len();
    debug_assert!(kc != 0.0, "kill_clone fired with zero rate");
    let other_pair = rng.index(n);
    if other_pair == fired_pair {
        return RebirthOutcome::Unmoved;
    }
    // The fired particle's own forward-role weight.
    let w_fired = match fired_member {
        Member::X => rho[fired_pair],
        Member::Y => 1.0 - rho[fired_pair],
    };
    let forward_role = rng.uniform() < w_fired;
    // Weight of the selected pair's same-side member in the fired member's
    // role convention.
    let w_same = match fired_member {
        Member::X => rho[other_pair],
        Member::Y => 1.0 - rho[other_pair],
    };
    let u = rng.uniform();
    let same_side = if forward_role {
        u < w_same
    } else {
        match rule {
            RebirthRule::Complementary => !(u < 1.0 - w_same),
            RebirthRule::RoleWeighted => !(u < w_same),
        }
    };
    let chosen_member = if same_side { fired_member } else { fired_member.other() };

    let copy = |dst_member: Member,
                dst_pair: usize,
                src_member: Member,
                src_pair: usize,
                xs: &mut [f64],
                ys: &mut [f64]| {
        let src_range = src_pair * dim..(src_pair + 1) * dim;
        let dst_start = dst_pair * dim;
        match (dst_member, src_member) {
            (Member::X, Member::X) => xs.copy_within(src_range, dst_start),
            (Member::Y, Member::Y) => ys.copy_within(src_range, dst_start),
            (Member::X, Member::Y) => {
                xs[dst_start..dst_start + dim].copy_from_slice(&ys[src_range])
            }
            (Member::Y, Member::X) => {
                ys[dst_start..dst_start + dim].copy_from_slice(&xs[src_range])
            }
        }
    };

    let refresh = |pair: usize, xs: &[f64], ys: &[f64], rho: &mut [f64]| {
        rho[pair] = inf_swap_weight(
            &xs[pair * dim..(pair + 1) * dim],
            &ys[pair * dim..(pair + 1) * dim],
            spec,
        )
        .rho();
    };

    if kc > 0.0 {
        // Kill: the fired member is reborn at the chosen donor member. The
        // donor pair's positions are untouched, so its ρ refresh is a
        // numerical no-op and is skipped.
        copy(fired_member, fired_pair, chosen_member, other_pair, xs, ys);
        refresh(fired_pair, xs, ys, rho);
        RebirthOutcome::Reborn { donor: other_pair }
    } else {
        // Clone: the fired member's position overwrites the chosen victim
        // member; the fired pair itself is unchanged.
        copy(chosen_member, other_pair, fired_member, fired_pair, xs, ys);
        refresh(other_pair, xs, ys, rho);
        RebirthOutcome::ClonedOnto { victim: other_pair }
    }
}

/// One recorded inter-event interval: the ensemble state that held during
/// `(t − holding_dt, t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    /// Index of the event that ended this interval (0 for the final flush
    /// of a run that saw no events).
    pub event_index: u64,
    /// Interval end time.
    pub t: f64,
    /// Interval length (aggregated across events when striding).
    pub holding_dt: f64,
    /// Flattened x-ensemble positions, `n_pairs × dim`.
    pub xs: Vec<f64>,
    /// Flattened y-ensemble positions, `n_pairs × dim`.
    pub ys: Vec<f64>,
    /// Pair weights ρ, one per pair.
    pub rho: Vec<f64>,
}

/// Event totals by type.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    pub dynamics: u64,
    /// Kill-then-clone resolutions that moved the fired particle.
    pub kills: u64,
    /// Clone-then-kill resolutions that moved a victim.
    pub clones: u64,
    /// Kill/clone events whose uniform pair draw hit the fired pair.
    pub self_rebirths: u64,
    pub swaps: u64,
}

impl EventCounts {
    pub fn total(&self) -> u64 {
        self.dynamics + self.kills + self.clones + self.self_rebirths + self.swaps
    }
}

/// A completed run: every recorded interval plus bookkeeping.
#[derive(Debug, Clone)]
pub struct WeightedTrajectory {
    pub engine: EngineKind,
    pub n_pairs: usize,
    pub dim: usize,
    /// Final simulated time (the requested horizon).
    pub t_end: f64,
    pub records: Vec<TrajectoryRecord>,
    pub events: EventCounts,
    pub seed: u64,
}

/// Common simulation parameters.
#[derive(Debug, Clone)]
pub struct SimParams {
    pub n_pairs: usize,
    pub t_final: f64,
    pub grid: GridPolicy,
    pub seed: u64,
    /// Emit a trajectory record every `record_stride` events (holding times
    /// aggregate in between); 1 records every event.
    pub record_stride: usize,
    pub rebirth: RebirthRule,
    /// Replica stream index; 0 is the base stream for `seed`.
    pub replica: u64,
}

impl SimParams {
    pub fn new(n_pairs: usize, t_final: f64, grid: GridPolicy, seed: u64) -> Self {
        Self {
            n_pairs,
            t_final,
            grid,
            seed,
            record_stride: 1,
            rebirth: RebirthRule::default(),
            replica: 0,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn with_rebirth(mut self, rule: RebirthRule) -> Self {
        self.rebirth = rule;
        self
    }

    pub fn with_replica(mut self, replica: u64) -> Self {
        self.replica = replica;
        self
    }

    fn validate(&self, min_pairs: usize) -> Result<()> {
        if self.n_pairs < min_pairs {
            return Err(Error::InvalidInput(format!(
                "ensemble needs at least {min_pairs} pairs for rebirth (got {})",
                self.n_pairs
            )));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::InvalidInput(format!(
                "time horizon must be positive (got {})",
                self.t_final
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidInput("record stride must be at least 1".into()));
        }
        self.grid.validate()
    }
}

// ---------------------------------------------------------------------------
// Shared engine plumbing
// ---------------------------------------------------------------------------

/// Stride-aware trajectory recorder. Records always describe the state that
/// held over the accumulated interval ending at `t`.
struct Recorder {
    stride: usize,
    pending_dt: f64,
    since_emit: usize,
    records: Vec<TrajectoryRecord>,
}

impl Recorder {
    fn new(stride: usize) -> Self {
        Self { stride, pending_dt: 0.0, since_emit: 0, records: Vec::new() }
    }

    fn observe(&mut self, event_index: u64, t: f64, dt: f64, xs: &[f64], ys: &[f64], rho: &[f64]) {
        self.pending_dt += dt;
        self.since_emit += 1;
        if self.since_emit >= self.stride {
            self.emit(event_index, t, xs, ys, rho);
        }
    }

    fn emit(&mut self, event_index: u64, t: f64, xs: &[f64], ys: &[f64], rho: &[f64]) {
        self.records.push(TrajectoryRecord {
            event_index,
            t,
            holding_dt: self.pending_dt,
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            rho: rho.to_vec(),
        });
        self.pending_dt = 0.0;
        self.since_emit = 0;
    }

    /// Close the run: fold the final partial interval in and emit whatever
    /// is pending so the holding times sum to the full horizon.
    fn finish(
        &mut self,
        event_index: u64,
        t_final: f64,
        tail_dt: f64,
        xs: &[f64],
        ys: &[f64],
        rho: &[f64],
    ) {
        self.pending_dt += tail_dt;
        self.emit(event_index, t_final, xs, ys, rho);
    }
}

/// Index of the smallest clock (first wins ties) and its value, clamped to
/// a strictly positive holding time.
fn next_event(clocks: &[f64]) -> Result<(usize, f64)> {
    let mut best = f64::INFINITY;
    let mut at = usize::MAX;
    for (s, &c) in clocks.iter().enumerate() {
        if c < best {
            best = c;
            at = s;
        }
    }
    if at == usize::MAX || !best.is_finite() {
        return Err(Error::ZeroTotalRate);
    }
    // Exact clock ties after residual subtraction are measure-zero but not
    // impossible in floating point; keep holding times strictly positive.
    Ok((at, best.max(f64::MIN_POSITIVE)))
}

fn subtract_elapsed(clocks: &mut [f64], dt: f64) {
    for c in clocks.iter_mut() {
        *c = (*c - dt).max(0.0);
    }
}

// ---------------------------------------------------------------------------
// Infinite-swapping engine
// ---------------------------------------------------------------------------

/// Simulate the infinite-swapping pair ensemble.
///
/// `N` pairs, each carrying an x and a y member with role weights `(ρ, 1−ρ)`
/// refreshed after every position change. Member slot `2i` is the x member
/// of pair `i`, slot `2i + 1` its y member. Kill/clone events resolve via
/// [`kill_clone`]; rebirth needs a second pair, so `N ≥ 2`.
pub fn simulate_ins(spec: &ProblemSpec, params: &SimParams) -> Result<WeightedTrajectory> {
    params.validate(2)?;
    let d = spec.dim();
    let n = params.n_pairs;
    let mut rng = RngStream::replica(params.seed, params.replica);

    // Initial positions: pair-major, x before y, axes ascending.
    let mut xs = vec![0.0; n * d];
    let mut ys = vec![0.0; n * d];
    for i in 0..n {
        spec.domain().sample_into(&mut rng, &mut xs[i * d..(i + 1) * d]);
        spec.domain().sample_into(&mut rng, &mut ys[i * d..(i + 1) * d]);
    }
    let mut rho: Vec<f64> = (0..n)
        .map(|i| inf_swap_weight(&xs[i * d..(i + 1) * d], &ys[i * d..(i + 1) * d], spec).rho())
        .collect();

    let mut slots: Vec<EventRates> = (0..2 * n).map(|_| EventRates::placeholder(d)).collect();
    let mut clocks = vec![f64::INFINITY; 2 * n];
    let mut grad = vec![0.0; d];
    let mut bbuf = vec![0.0; d];
    let abuf = vec![spec.noise_variance(); d];

    // Rebuild rates and redraw the clock for one member slot.
    macro_rules! refresh_slot {
        ($s:expr) => {{
            let s: usize = $s;
            let pair = s / 2;
            let (p, w) = if s % 2 == 0 {
                (&xs[pair * d..(pair + 1) * d], rho[pair])
            } else {
                (&ys[pair * d..(pair + 1) * d], 1.0 - rho[pair])
            };
            let h = params.grid.sample(&mut rng);
            event_rates_into(p, w, spec, h, &mut slots[s], &mut grad, &mut bbuf, &abuf)?;
            clocks[s] = rng.exponential(slots[s].net);
        }};
    }

    for s in 0..2 * n {
        refresh_slot!(s);
    }

    let mut recorder = Recorder::new(params.record_stride);
    let mut counts = EventCounts::default();
    let mut t_now = 0.0;
    let mut event_index: u64 = 0;

    loop {
        let (s_fired, dt) = next_event(&clocks)?;
        if t_now + dt >= params.t_final {
            recorder.finish(event_index, params.t_final, params.t_final - t_now, &xs, &ys, &rho);
            break;
        }
        subtract_elapsed(&mut clocks, dt);
        t_now += dt;
        event_index += 1;
        recorder.observe(event_index, t_now, dt, &xs, &ys, &rho);

        let pair = s_fired / 2;
        let member = if s_fired % 2 == 0 { Member::X } else { Member::Y };
        let er = &slots[s_fired];
        let dyn_total = er.dynamics.total();
        let is_dynamics = rng.uniform() < dyn_total / er.net;
        if is_dynamics {
            counts.dynamics += 1;
            {
                let range = pair * d..(pair + 1) * d;
                let p = match member {
                    Member::X => &mut xs[range],
                    Member::Y => &mut ys[range],
                };
                let rates = &slots[s_fired].dynamics;
                crate::jump::one_step_in_place(p, rates, &mut rng, spec.domain())?;
            }
            rho[pair] =
                inf_swap_weight(&xs[pair * d..(pair + 1) * d], &ys[pair * d..(pair + 1) * d], spec)
                    .rho();
            // Both members' weights moved with ρ.
            refresh_slot!(2 * pair);
            refresh_slot!(2 * pair + 1);
        } else {
            let kc = er.kill_clone;
            match kill_clone(
                &mut xs,
                &mut ys,
                &mut rho,
                d,
                pair,
                member,
                kc,
                params.rebirth,
                spec,
                &mut rng,
            ) {
                RebirthOutcome::Unmoved => {
                    counts.self_rebirths += 1;
                    refresh_slot!(s_fired);
                }
                RebirthOutcome::Reborn { .. } => {
                    counts.kills += 1;
                    // The fired pair moved and its ρ changed; the donor pair
                    // is untouched and keeps its clocks.
                    refresh_slot!(2 * pair);
                    refresh_slot!(2 * pair + 1);
                }
                RebirthOutcome::ClonedOnto { victim } => {
                    counts.clones += 1;
                    let mut set = [s_fired, 2 * victim, 2 * victim + 1];
                    set.sort_unstable();
                    for s in set {
                        refresh_slot!(s);
                    }
                }
            }
        }
    }

    Ok(WeightedTrajectory {
        engine: EngineKind::InfiniteSwap,
        n_pairs: n,
        dim: d,
        t_end: params.t_final,
        records: recorder.records,
        events: counts,
        seed: params.seed,
    })
}

// ---------------------------------------------------------------------------
// Standard Fleming–Viot engine
// ---------------------------------------------------------------------------

/// Simulate an uncoupled Fleming–Viot ensemble in one fixed direction.
///
/// Forward particles run the drift `−DV` with kill rate `c` (estimating the
/// density side ψ); backward particles run `+DV` with `c̄ = c − ΔV`
/// (estimating φ). A killed particle is reborn at a uniformly chosen
/// ensemble member (the 1/N self-draw leaves it in place); a cloned one
/// overwrites a uniformly chosen victim. Needs `N ≥ 2` unless the direction
/// has a structurally zero kill rate, where independent trajectories are
/// valid and `N = 1` is allowed. Records reuse the pair schema with both
/// slots holding the same positions and ρ ≡ 1.
pub fn simulate_standard_fv(
    spec: &ProblemSpec,
    direction: Direction,
    params: &SimParams,
) -> Result<WeightedTrajectory> {
    let kill_free = direction == Direction::Forward && spec.c_is_zero();
    params.validate(if kill_free { 1 } else { 2 })?;
    let d = spec.dim();
    let n = params.n_pairs;
    let w = match direction {
        Direction::Forward => 1.0,
        Direction::Backward => 0.0,
    };
    let mut rng = RngStream::replica(params.seed, params.replica);

    let mut pos = vec![0.0; n * d];
    for i in 0..n {
        spec.domain().sample_into(&mut rng, &mut pos[i * d..(i + 1) * d]);
    }
    let rho = vec![1.0; n];

    let mut slots: Vec<EventRates> = (0..n).map(|_| EventRates::placeholder(d)).collect();
    let mut clocks = vec![f64::INFINITY; n];
    let mut grad = vec![0.0; d];
    let mut bbuf = vec![0.0; d];
    let abuf = vec![spec.noise_variance(); d];

    macro_rules! refresh_slot {
        ($i:expr) => {{
            let i: usize = $i;
            let h = params.grid.sample(&mut rng);
            event_rates_into(
                &pos[i * d..(i + 1) * d],
                w,
                spec,
                h,
                &mut slots[i],
                &mut grad,
                &mut bbuf,
                &abuf,
            )?;
            clocks[i] = rng.exponential(slots[i].net);
        }};
    }

    for i in 0..n {
        refresh_slot!(i);
    }

    let mut recorder = Recorder::new(params.record_stride);
    let mut counts = EventCounts::default();
    let mut t_now = 0.0;
    let mut event_index: u64 = 0;

    loop {
        let (fired, dt) = next_event(&clocks)?;
        if t_now + dt >= params.t_final {
            recorder.finish(event_index, params.t_final, params.t_final - t_now, &pos, &pos, &rho);
            break;
        }
        subtract_elapsed(&mut clocks, dt);
        t_now += dt;
        event_index += 1;
        recorder.observe(event_index, t_now, dt, &pos, &pos, &rho);

        let er = &slots[fired];
        let dyn_total = er.dynamics.total();
        if rng.uniform() < dyn_total / er.net {
            counts.dynamics += 1;
            crate::jump::one_step_in_place(
                &mut pos[fired * d..(fired + 1) * d],
                &slots[fired].dynamics,
                &mut rng,
                spec.domain(),
            )?;
            refresh_slot!(fired);
        } else {
            let kc = er.kill_clone;
            let other = rng.index(n);
            if other == fired {
                counts.self_rebirths += 1;
                refresh_slot!(fired);
            } else if kc > 0.0 {
                counts.kills += 1;
                pos.copy_within(other * d..(other + 1) * d, fired * d);
                refresh_slot!(fired);
            } else {
                counts.clones += 1;
                pos.copy_within(fired * d..(fired + 1) * d, other * d);
                let mut set = [fired, other];
                set.sort_unstable();
                for s in set {
                    refresh_slot!(s);
                }
            }
        }
    }

    Ok(WeightedTrajectory {
        engine: match direction {
            Direction::Forward => EngineKind::StandardForward,
            Direction::Backward => EngineKind::StandardBackward,
        },
        n_pairs: n,
        dim: d,
        t_end: params.t_final,
        records: recorder.records,
        events: counts,
        seed: params.seed,
    })
}

// ---------------------------------------------------------------------------
// Finite-swapping engine
// ---------------------------------------------------------------------------

/// Simulate pairs coupled by a finite Metropolis swap rate.
///
/// Each pair is fixed for the whole run and carries three clock families:
/// full forward rates on the x member (slot `2i`), full backward rates on
/// the y member (slot `2i + 1`), and a location swap `(x, y) → (y, x)` at
/// rate `finite_swap_rate(x, y, spec, swap_intensity)` (slot `2N + i`).
/// Kill/clone rebirth stays within the fired member's own ensemble.
/// Records carry ρ ≡ 1 so both marginals enter estimators with unit weight.
pub fn simulate_finite_swap(
    spec: &ProblemSpec,
    swap_intensity: f64,
    params: &SimParams,
) -> Result<WeightedTrajectory> {
    params.validate(2)?;
    if !(swap_intensity > 0.0) || !swap_intensity.is_finite() {
        return Err(Error::InvalidInput(format!(
            "swap intensity must be positive and finite (got {swap_intensity})"
        )));
    }
    let d = spec.dim();
    let n = params.n_pairs;
    let mut rng = RngStream::replica(params.seed, params.replica);

    let mut xs = vec![0.0; n * d];
    let mut ys = vec![0.0; n * d];
    for i in 0..n {
        spec.domain().sample_into(&mut rng, &mut xs[i * d..(i + 1) * d]);
        spec.domain().sample_into(&mut rng, &mut ys[i * d..(i + 1) * d]);
    }
    let rho = vec![1.0; n];

    let mut slots: Vec<EventRates> = (0..2 * n).map(|_| EventRates::placeholder(d)).collect();
    // Member clocks first, then one swap clock per pair.
    let mut clocks = vec![f64::INFINITY; 3 * n];
    let mut swap_rates = vec![0.0; n];
    let mut grad = vec![0.0; d];
    let mut bbuf = vec![0.0; d];
    let abuf = vec![spec.noise_variance(); d];

    macro_rules! refresh_member {
        ($s:expr) => {{
            let s: usize = $s;
            let pair = s / 2;
            let (p, w) = if s % 2 == 0 {
                (&xs[pair * d..(pair + 1) * d], 1.0)
            } else {
                (&ys[pair * d..(pair + 1) * d], 0.0)
            };
            let h = params.grid.sample(&mut rng);
            event_rates_into(p, w, spec, h, &mut slots[s], &mut grad, &mut bbuf, &abuf)?;
            clocks[s] = rng.exponential(slots[s].net);
        }};
    }
    macro_rules! refresh_swap {
        ($i:expr) => {{
            let i: usize = $i;
            swap_rates[i] = finite_swap_rate(
                &xs[i * d..(i + 1) * d],
                &ys[i * d..(i + 1) * d],
                spec,
                swap_intensity,
            )?;
            clocks[2 * n + i] = rng.exponential(swap_rates[i]);
        }};
    }

    for s in 0..2 * n {
        refresh_member!(s);
    }
    for i in 0..n {
        refresh_swap!(i);
    }

    let mut recorder = Recorder::new(params.record_stride);
    let mut counts = EventCounts::default();
    let mut t_now = 0.0;
    let mut event_index: u64 = 0;

    loop {
        let (s_fired, dt) = next_event(&clocks)?;
        if t_now + dt >= params.t_final {
            recorder.finish(event_index, params.t_final, params.t_final - t_now, &xs, &ys, &rho);
            break;
        }
        subtract_elapsed(&mut clocks, dt);
        t_now += dt;
        event_index += 1;
        recorder.observe(event_index, t_now, dt, &xs, &ys, &rho);

        if s_fired >= 2 * n {
            // Location swap: exchange the pair's positions.
            let pair = s_fired - 2 * n;
            counts.swaps += 1;
            let range = pair * d..(pair + 1) * d;
            xs[range.clone()].swap_with_slice(&mut ys[range]);
            refresh_member!(2 * pair);
            refresh_member!(2 * pair + 1);
            refresh_swap!(pair);
            continue;
        }

        let pair = s_fired / 2;
        let er = &slots[s_fired];
        let dyn_total = er.dynamics.total();
        if rng.uniform() < dyn_total / er.net {
            counts.dynamics += 1;
            {
                let range = pair * d..(pair + 1) * d;
                let p = if s_fired % 2 == 0 { &mut xs[range] } else { &mut ys[range] };
                crate::jump::one_step_in_place(
                    p,
                    &slots[s_fired].dynamics,
                    &mut rng,
                    spec.domain(),
                )?;
            }
            refresh_member!(s_fired);
            refresh_swap!(pair);
        } else {
            let kc = er.kill_clone;
            let ens: &mut [f64] = if s_fired % 2 == 0 { &mut xs } else { &mut ys };
            let other = rng.index(n);
            if other == pair {
                counts.self_rebirths += 1;
                refresh_member!(s_fired);
                refresh_swap!(pair);
            } else if kc > 0.0 {
                counts.kills += 1;
                ens.copy_within(other * d..(other + 1) * d, pair * d);
                refresh_member!(s_fired);
                refresh_swap!(pair);
            } else {
                counts.clones += 1;
                ens.copy_within(pair * d..(pair + 1) * d, other * d);
                let other_slot = 2 * other + (s_fired % 2);
                let mut set = [s_fired, other_slot];
                set.sort_unstable();
                for s in set {
                    refresh_member!(s);
                }
                let mut pairs = [pair, other];
                pairs.sort_unstable();
                for i in pairs {
                    refresh_swap!(i);
                }
            }
        }
    }

    Ok(WeightedTrajectory {
        engine: EngineKind::FiniteSwap,
        n_pairs: n,
        dim: d,
        t_end: params.t_final,
        records: recorder.records,
        events: counts,
        seed: params.seed,
    })
}
