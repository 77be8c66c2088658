//! Deterministic simulation of `p` processing elements running one SPMD
//! program.
//!
//! Every PE runs on its own OS thread, but threads only interact through a
//! shared hub. A collective completes when the last PE arrives; that PE
//! computes all outputs from the inputs indexed by rank and charges the
//! ledger from a fixed message schedule. Point-to-point messages go through
//! per-pair FIFO mailboxes and receives always name their source. Results and
//! ledgers therefore do not depend on how the host schedules the threads.
//!
//! ```
//! use topk_core::simnet::{Simulator, Sum};
//!
//! let sim = Simulator::new(8, 42).unwrap();
//! let run = sim.run(|ctx| ctx.all_reduce(1u64, Sum)).unwrap();
//! assert_eq!(run.results, vec![8; 8]);
//! ```

mod ledger;
mod payload;
mod route;
mod schedule;

use std::any::Any;
use std::cell::Cell;
use std::collections::VecDeque;
use std::panic::{self, AssertUnwindSafe};
use std::sync::{Condvar, Mutex, MutexGuard};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use ledger::{CostLedger, CostModel, TrafficClass};
pub use payload::{FixedWords, Payload};
pub use route::{hypercube_combine_route, route_uncombined, CountedKey};
pub use schedule::ceil_log2;

use crate::error::{param, Error, Result};
use schedule::Edge;

/// An associative binary operation for reductions and scans.
///
/// Associativity is the caller's responsibility and is not checked.
pub trait ReduceOp<T>: Send {
    fn combine(&self, a: &T, b: &T) -> T;
}

impl<T, F: Fn(&T, &T) -> T + Send> ReduceOp<T> for F {
    fn combine(&self, a: &T, b: &T) -> T {
        self(a, b)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sum;
#[derive(Debug, Clone, Copy, Default)]
pub struct Min;
#[derive(Debug, Clone, Copy, Default)]
pub struct Max;

macro_rules! scalar_ops {
    ($($t:ty),*) => {$(
        impl ReduceOp<$t> for Sum {
            fn combine(&self, a: &$t, b: &$t) -> $t {
                a + b
            }
        }
    )*};
}

scalar_ops!(u32, u64, usize, i64, f64);

impl<T: Ord + Clone> ReduceOp<T> for Min {
    fn combine(&self, a: &T, b: &T) -> T {
        a.min(b).clone()
    }
}

impl<T: Ord + Clone> ReduceOp<T> for Max {
    fn combine(&self, a: &T, b: &T) -> T {
        a.max(b).clone()
    }
}

impl<T> ReduceOp<Vec<T>> for Sum
where
    Sum: ReduceOp<T>,
{
    fn combine(&self, a: &Vec<T>, b: &Vec<T>) -> Vec<T> {
        a.iter().zip(b).map(|(x, y)| Sum.combine(x, y)).collect()
    }
}

/// Elementwise minimum of equal-length vectors.
#[derive(Debug, Clone, Copy, Default)]
pub struct ElemMin;
/// Elementwise maximum of equal-length vectors.
#[derive(Debug, Clone, Copy, Default)]
pub struct ElemMax;

impl<T: Ord + Clone + Send> ReduceOp<Vec<T>> for ElemMin {
    fn combine(&self, a: &Vec<T>, b: &Vec<T>) -> Vec<T> {
        a.iter().zip(b).map(|(x, y)| x.min(y).clone()).collect()
    }
}

impl<T: Ord + Clone + Send> ReduceOp<Vec<T>> for ElemMax {
    fn combine(&self, a: &Vec<T>, b: &Vec<T>) -> Vec<T> {
        a.iter().zip(b).map(|(x, y)| x.max(y).clone()).collect()
    }
}

/// Elementwise minimum over optional values where `None` means "absent".
#[derive(Debug, Clone, Copy, Default)]
pub struct MinSome;
/// Elementwise maximum over optional values where `None` means "absent".
#[derive(Debug, Clone, Copy, Default)]
pub struct MaxSome;

fn pick<T: Ord + Clone>(a: &Option<T>, b: &Option<T>, min: bool) -> Option<T> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if (x < y) == min { x.clone() } else { y.clone() }),
        (Some(x), None) | (None, Some(x)) => Some(x.clone()),
        (None, None) => None,
    }
}

impl<T: Ord + Clone> ReduceOp<Option<T>> for MinSome {
    fn combine(&self, a: &Option<T>, b: &Option<T>) -> Option<T> {
        pick(a, b, true)
    }
}

impl<T: Ord + Clone> ReduceOp<Option<T>> for MaxSome {
    fn combine(&self, a: &Option<T>, b: &Option<T>) -> Option<T> {
        pick(a, b, false)
    }
}

impl<T: Ord + Clone> ReduceOp<Vec<Option<T>>> for MinSome {
    fn combine(&self, a: &Vec<Option<T>>, b: &Vec<Option<T>>) -> Vec<Option<T>> {
        a.iter().zip(b).map(|(x, y)| pick(x, y, true)).collect()
    }
}

impl<T: Ord + Clone> ReduceOp<Vec<Option<T>>> for MaxSome {
    fn combine(&self, a: &Vec<Option<T>>, b: &Vec<Option<T>>) -> Vec<Option<T>> {
        a.iter().zip(b).map(|(x, y)| pick(x, y, false)).collect()
    }
}

/// SplitMix64 finaliser, used to derive independent stream seeds.
pub(crate) fn mix(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
enum Status {
    Running,
    InCollective(&'static str),
    Receiving(usize),
    Done,
}

type Boxed = Box<dyn Any + Send>;

struct Pending {
    name: &'static str,
    arrived: usize,
    inputs: Vec<Option<(Boxed, TrafficClass)>>,
}

struct HubState {
    status: Vec<Status>,
    pending: Option<Pending>,
    ready: Vec<Option<Boxed>>,
    mailboxes: Vec<VecDeque<Boxed>>,
    ledger: CostLedger,
    error: Option<Error>,
}

struct Hub {
    p: usize,
    state: Mutex<HubState>,
    wake: Vec<Condvar>,
}

/// Marker payload used to unwind a PE after the run has failed elsewhere.
struct Abort;

impl Hub {
    fn new(p: usize) -> Self {
        Hub {
            p,
            state: Mutex::new(HubState {
                status: vec![Status::Running; p],
                pending: None,
                ready: (0..p).map(|_| None).collect(),
                mailboxes: (0..p * p).map(|_| VecDeque::new()).collect(),
                ledger: CostLedger::new(p),
                error: None,
            }),
            wake: (0..p).map(|_| Condvar::new()).collect(),
        }
    }

    fn lock(&self) -> MutexGuard<'_, HubState> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn fail(&self, st: &mut HubState, err: Error) {
        if st.error.is_none() {
            st.error = Some(err);
        }
        for cv in &self.wake {
            cv.notify_one();
        }
    }

    /// Declares a deadlock when no PE can make progress any more.
    fn check_progress(&self, st: &mut HubState) {
        if st.status.contains(&Status::Running) {
            return;
        }
        let blocked: Vec<(usize, String)> = st
            .status
            .iter()
            .enumerate()
            .filter_map(|(pe, s)| match s {
                Status::InCollective(name) => Some((pe, format!("waits in {name}"))),
                Status::Receiving(src) => Some((pe, format!("waits to receive from PE {src}"))),
                _ => None,
            })
            .collect();
        if !blocked.is_empty() {
            self.fail(st, Error::Deadlock { blocked });
        }
    }
}

fn abort(guard: MutexGuard<'_, HubState>) -> ! {
    drop(guard);
    panic::resume_unwind(Box::new(Abort))
}

/// Handle through which a PE program talks to the simulated machine.
pub struct PeContext<'h> {
    hub: &'h Hub,
    rank: usize,
    rng: ChaCha8Rng,
    shared: ChaCha8Rng,
    class: Cell<TrafficClass>,
}

impl<'h> PeContext<'h> {
    /// Zero-based position of this PE, `0..p`.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// One-based PE number, `1..=p`.
    pub fn pe_id(&self) -> usize {
        self.rank + 1
    }

    pub fn p(&self) -> usize {
        self.hub.p
    }

    /// Random stream private to this PE.
    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Random stream that yields the same sequence on every PE, as long as
    /// all PEs draw from it identically.
    pub fn shared_rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.shared
    }

    /// Sets the accounting class of subsequently sent words and returns the
    /// previous class.
    pub fn set_traffic(&self, class: TrafficClass) -> TrafficClass {
        self.class.replace(class)
    }

    pub fn traffic(&self) -> TrafficClass {
        self.class.get()
    }

    /// Runs `f` with the traffic class temporarily set to `class`.
    pub fn with_traffic<R>(&mut self, class: TrafficClass, f: impl FnOnce(&mut Self) -> R) -> R {
        let old = self.set_traffic(class);
        let r = f(self);
        self.set_traffic(old);
        r
    }

    fn collective<I, O, F>(&self, name: &'static str, input: I, complete: F) -> O
    where
        I: Send + 'static,
        O: Send + 'static,
        F: FnOnce(Vec<I>) -> Result<(Vec<O>, Vec<Edge>)>,
    {
        self.collective_inner(name, input, true, |inputs, _| complete(inputs))
    }

    fn collective_inner<I, O, F>(&self, name: &'static str, input: I, charge: bool, complete: F) -> O
    where
        I: Send + 'static,
        O: Send + 'static,
        F: FnOnce(Vec<I>, &CostLedger) -> Result<(Vec<O>, Vec<Edge>)>,
    {
        let hub = self.hub;
        let me = self.rank;
        let mut st = hub.lock();
        if st.error.is_some() {
            abort(st);
        }
        if let Some(pending) = &st.pending {
            if pending.name != name {
                let waiting = (0..hub.p).filter(|&q| pending.inputs[q].is_some()).collect();
                let err = Error::CollectiveMismatch {
                    pe: me,
                    got: name.to_string(),
                    expected: pending.name.to_string(),
                    waiting,
                };
                hub.fail(&mut st, err);
                abort(st);
            }
        } else {
            st.pending = Some(Pending {
                name,
                arrived: 0,
                inputs: (0..hub.p).map(|_| None).collect(),
            });
        }
        let pending = st.pending.as_mut().expect("pending collective");
        pending.inputs[me] = Some((Box::new(input), self.class.get()));
        pending.arrived += 1;

        if pending.arrived == hub.p {
            let pending = st.pending.take().expect("pending collective");
            let mut inputs = Vec::with_capacity(hub.p);
            let mut classes = Vec::with_capacity(hub.p);
            for (q, slot) in pending.inputs.into_iter().enumerate() {
                let (boxed, class) = slot.expect("all PEs arrived");
                match boxed.downcast::<I>() {
                    Ok(v) => inputs.push(*v),
                    Err(_) => {
                        hub.fail(&mut st, Error::TypeMismatch { pe: q, from: me });
                        abort(st);
                    }
                }
                classes.push(class);
            }
            match complete(inputs, &st.ledger) {
                Ok((outputs, edges)) => {
                    let ledger = &mut st.ledger;
                    if charge {
                        let rounds = u64::from(ceil_log2(hub.p));
                        for s in ledger.startups.iter_mut() {
                            *s += rounds;
                        }
                        ledger.collectives += 1;
                    }
                    for e in &edges {
                        if e.words > 0 {
                            ledger.messages += 1;
                            ledger.charge(e.from, e.to, e.words as u64, classes[e.from]);
                        }
                    }
                    for (q, out) in outputs.into_iter().enumerate() {
                        st.ready[q] = Some(Box::new(out));
                        st.status[q] = Status::Running;
                    }
                    for (q, cv) in hub.wake.iter().enumerate() {
                        if q != me {
                            cv.notify_one();
                        }
                    }
                }
                Err(err) => {
                    hub.fail(&mut st, err);
                    abort(st);
                }
            }
        } else {
            st.status[me] = Status::InCollective(name);
            hub.check_progress(&mut st);
            while st.ready[me].is_none() {
                if st.error.is_some() {
                    abort(st);
                }
                st = hub.wake[me].wait(st).unwrap_or_else(|e| e.into_inner());
            }
        }
        let out = st.ready[me].take().expect("collective output");
        drop(st);
        *out.downcast::<O>().expect("collective output type")
    }

    /// Sends `value` to `dest` without blocking.
    ///
    /// Each message costs one startup at both endpoints and its words are
    /// charged to the sender's current traffic class. Sending to oneself is
    /// free.
    pub fn send<T: Payload>(&self, dest: usize, value: T) {
        let hub = self.hub;
        let me = self.rank;
        let mut st = hub.lock();
        if st.error.is_some() {
            abort(st);
        }
        if dest >= hub.p {
            hub.fail(&mut st, Error::Param(format!("PE {me} sends to PE {dest} but p = {}", hub.p)));
            abort(st);
        }
        if dest != me {
            let words = value.words() as u64;
            let ledger = &mut st.ledger;
            ledger.startups[me] += 1;
            ledger.startups[dest] += 1;
            ledger.messages += 1;
            ledger.charge(me, dest, words, self.class.get());
        }
        st.mailboxes[me * hub.p + dest].push_back(Box::new(value));
        if st.status[dest] == Status::Receiving(me) {
            st.status[dest] = Status::Running;
            hub.wake[dest].notify_one();
        }
    }

    /// Blocks until the next message from `src` arrives.
    pub fn recv<T: Payload>(&self, src: usize) -> T {
        let hub = self.hub;
        let me = self.rank;
        let mut st = hub.lock();
        if src >= hub.p {
            hub.fail(&mut st, Error::Param(format!("PE {me} receives from PE {src} but p = {}", hub.p)));
            abort(st);
        }
        let slot = src * hub.p + me;
        loop {
            if st.error.is_some() {
                abort(st);
            }
            if let Some(msg) = st.mailboxes[slot].pop_front() {
                st.status[me] = Status::Running;
                match msg.downcast::<T>() {
                    Ok(v) => return *v,
                    Err(_) => {
                        hub.fail(&mut st, Error::TypeMismatch { pe: me, from: src });
                        abort(st);
                    }
                }
            }
            st.status[me] = Status::Receiving(src);
            hub.check_progress(&mut st);
            if st.error.is_some() {
                abort(st);
            }
            st = hub.wake[me].wait(st).unwrap_or_else(|e| e.into_inner());
        }
    }

    pub fn barrier(&self) {
        let p = self.p();
        self.collective("barrier", (), |_: Vec<()>| Ok((vec![(); p], Vec::new())))
    }

    /// Copy of the ledger as of this point, taken collectively so that every
    /// PE observes the same snapshot. Costs nothing.
    pub fn ledger_checkpoint(&self) -> CostLedger {
        let p = self.p();
        self.collective_inner("ledger_checkpoint", (), false, move |_: Vec<()>, ledger| {
            Ok((vec![ledger.clone(); p], Vec::new()))
        })
    }

    /// Replicates `value` from `root` on every PE. Only the root's argument
    /// is used.
    pub fn broadcast<T: Payload + Clone>(&self, root: usize, value: Option<T>) -> T {
        let p = self.p();
        self.collective("broadcast", value, move |mut inputs: Vec<Option<T>>| {
            let Some(v) = inputs.get_mut(root).and_then(Option::take) else {
                return param(format!("broadcast root {root} supplied no value"));
            };
            let edges = schedule::broadcast(p, root, v.words());
            Ok((vec![v; p], edges))
        })
    }

    /// Combines all values in rank order; only `root` gets the result.
    pub fn reduce<T: Payload + Clone>(&self, root: usize, value: T, op: impl ReduceOp<T> + 'static) -> Option<T> {
        let p = self.p();
        self.collective("reduce", value, move |inputs: Vec<T>| {
            let m = uniform_words("reduce", &inputs)?;
            check_root(root, p)?;
            let total = fold(&inputs, &op);
            let out = (0..p).map(|q| (q == root).then(|| total.clone())).collect();
            Ok((out, schedule::reduce(p, root, m)))
        })
    }

    pub fn all_reduce<T: Payload + Clone>(&self, value: T, op: impl ReduceOp<T> + 'static) -> T {
        let p = self.p();
        self.collective("all_reduce", value, move |inputs: Vec<T>| {
            let m = uniform_words("all_reduce", &inputs)?;
            let total = fold(&inputs, &op);
            Ok((vec![total; p], schedule::all_reduce(p, m)))
        })
    }

    /// Inclusive prefix: PE `j` gets `x_0 ⊕ … ⊕ x_j`.
    pub fn scan<T: Payload + Clone>(&self, value: T, op: impl ReduceOp<T> + 'static) -> T {
        let p = self.p();
        self.collective("scan", value, move |inputs: Vec<T>| {
            let m = uniform_words("scan", &inputs)?;
            let mut out: Vec<T> = Vec::with_capacity(p);
            for x in inputs {
                let next = match out.last() {
                    Some(acc) => op.combine(acc, &x),
                    None => x,
                };
                out.push(next);
            }
            Ok((out, schedule::scan(p, m, false)))
        })
    }

    /// Exclusive prefix: PE `j` gets `x_0 ⊕ … ⊕ x_{j-1}`, PE 0 gets `None`.
    pub fn exscan<T: Payload + Clone>(&self, value: T, op: impl ReduceOp<T> + 'static) -> Option<T> {
        let p = self.p();
        self.collective("exscan", value, move |inputs: Vec<T>| {
            let m = uniform_words("exscan", &inputs)?;
            let mut out = Vec::with_capacity(p);
            let mut acc: Option<T> = None;
            for x in inputs {
                out.push(acc.clone());
                acc = Some(match acc {
                    Some(a) => op.combine(&a, &x),
                    None => x,
                });
            }
            Ok((out, schedule::scan(p, m, false)))
        })
    }

    /// Inclusive suffix: PE `j` gets `x_j ⊕ … ⊕ x_{p-1}`.
    pub fn scan_rev<T: Payload + Clone>(&self, value: T, op: impl ReduceOp<T> + 'static) -> T {
        let p = self.p();
        self.collective("scan_rev", value, move |inputs: Vec<T>| {
            let m = uniform_words("scan_rev", &inputs)?;
            let mut out: VecDeque<T> = VecDeque::with_capacity(p);
            for x in inputs.into_iter().rev() {
                let next = match out.front() {
                    Some(acc) => op.combine(&x, acc),
                    None => x,
                };
                out.push_front(next);
            }
            Ok((out.into(), schedule::scan(p, m, true)))
        })
    }

    /// Collects one value per PE at `root`, in rank order.
    pub fn gather<T: Payload>(&self, root: usize, value: T) -> Option<Vec<T>> {
        let p = self.p();
        self.collective("gather", value, move |inputs: Vec<T>| {
            check_root(root, p)?;
            let sizes: Vec<usize> = inputs.iter().map(Payload::words).collect();
            let edges = schedule::gather(p, root, &sizes);
            let mut all = Some(inputs);
            let out = (0..p).map(|q| if q == root { all.take() } else { None }).collect();
            Ok((out, edges))
        })
    }

    /// Hands the `q`-th entry of the root's vector to PE `q`.
    pub fn scatter<T: Payload>(&self, root: usize, values: Option<Vec<T>>) -> T {
        let p = self.p();
        self.collective("scatter", values, move |mut inputs: Vec<Option<Vec<T>>>| {
            check_root(root, p)?;
            let Some(vals) = inputs[root].take() else {
                return param(format!("scatter root {root} supplied no values"));
            };
            if vals.len() != p {
                return param(format!("scatter needs {p} values, root supplied {}", vals.len()));
            }
            let sizes: Vec<usize> = vals.iter().map(Payload::words).collect();
            Ok((vals, schedule::scatter(p, root, &sizes)))
        })
    }

    /// Every PE gets all values in rank order.
    pub fn all_gather<T: Payload + Clone>(&self, value: T) -> Vec<T> {
        let p = self.p();
        self.collective("all_gather", value, move |inputs: Vec<T>| {
            let sizes: Vec<usize> = inputs.iter().map(Payload::words).collect();
            let edges = schedule::all_gather(p, &sizes);
            Ok((vec![inputs; p], edges))
        })
    }

    /// All-gather of variable-length vectors, concatenated in rank order.
    pub fn all_gather_concat<T: Payload + Clone>(&self, values: Vec<T>) -> Vec<T> {
        self.all_gather(values).into_iter().flatten().collect()
    }
}

fn check_root(root: usize, p: usize) -> Result<()> {
    if root >= p {
        return param(format!("root {root} out of range for p = {p}"));
    }
    Ok(())
}

fn uniform_words<T: Payload>(op: &str, inputs: &[T]) -> Result<usize> {
    let words: Vec<usize> = inputs.iter().map(Payload::words).collect();
    if words.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::SizeMismatch { op: op.to_string(), words });
    }
    Ok(words.first().copied().unwrap_or(0))
}

fn fold<T: Clone>(inputs: &[T], op: &impl ReduceOp<T>) -> T {
    let mut acc = inputs[0].clone();
    for x in &inputs[1..] {
        acc = op.combine(&acc, x);
    }
    acc
}

/// Per-PE results and the cost ledger of one run.
#[derive(Debug, Clone)]
pub struct Run<R> {
    pub results: Vec<R>,
    pub ledger: CostLedger,
}

/// Runs SPMD programs on `p` simulated PEs.
#[derive(Debug, Clone)]
pub struct Simulator {
    p: usize,
    seed: u64,
    cost: CostModel,
}

impl Simulator {
    pub fn new(p: usize, seed: u64) -> Result<Self> {
        if p == 0 {
            return param("p must be at least 1");
        }
        Ok(Simulator { p, seed, cost: CostModel::default() })
    }

    pub fn with_cost(mut self, cost: CostModel) -> Self {
        self.cost = cost;
        self
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn cost(&self) -> CostModel {
        self.cost
    }

    pub fn run<R, F>(&self, program: F) -> Result<Run<R>>
    where
        R: Send,
        F: Fn(&mut PeContext<'_>) -> R + Sync,
    {
        self.run_with_inputs((0..self.p).map(|_| ()).collect(), |ctx, ()| program(ctx))
    }

    /// Runs `program` with PE `q` receiving `inputs[q]`.
    pub fn run_with_inputs<I, R, F>(&self, inputs: Vec<I>, program: F) -> Result<Run<R>>
    where
        I: Send,
        R: Send,
        F: Fn(&mut PeContext<'_>, I) -> R + Sync,
    {
        if inputs.len() != self.p {
            return param(format!("{} inputs for {} PEs", inputs.len(), self.p));
        }
        let hub = Hub::new(self.p);
        let shared_seed = mix(self.seed, 0);
        let outcomes: Vec<Option<R>> = std::thread::scope(|scope| {
            let handles: Vec<_> = inputs
                .into_iter()
                .enumerate()
                .map(|(rank, input)| {
                    let hub = &hub;
                    let program = &program;
                    let seed = self.seed;
                    scope.spawn(move || {
                        let mut ctx = PeContext {
                            hub,
                            rank,
                            rng: ChaCha8Rng::seed_from_u64(mix(seed, rank as u64 + 1)),
                            shared: ChaCha8Rng::seed_from_u64(shared_seed),
                            class: Cell::new(TrafficClass::Payload),
                        };
                        let outcome = panic::catch_unwind(AssertUnwindSafe(|| program(&mut ctx, input)));
                        let mut st = hub.lock();
                        st.status[rank] = Status::Done;
                        match outcome {
                            Ok(r) => {
                                hub.check_progress(&mut st);
                                Some(r)
                            }
                            Err(payload) => {
                                if !payload.is::<Abort>() {
                                    let message = panic_message(&payload);
                                    hub.fail(&mut st, Error::PePanicked { pe: rank, message });
                                }
                                None
                            }
                        }
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or(None))
                .collect()
        });
        let st = hub.state.into_inner().unwrap_or_else(|e| e.into_inner());
        if let Some(err) = st.error {
            return Err(err);
        }
        let results = outcomes
            .into_iter()
            .map(|r| r.expect("every PE finished"))
            .collect();
        Ok(Run { results, ledger: st.ledger })
    }
}

fn panic_message(payload: &Box<dyn Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string panic".to_string()
    }
}

/// Convenience wrapper returning `(results, ledger)`.
pub fn run_spmd<R, F>(p: usize, seed: u64, cost: CostModel, program: F) -> Result<(Vec<R>, CostLedger)>
where
    R: Send,
    F: Fn(&mut PeContext<'_>) -> R + Sync,
{
    let run = Simulator::new(p, seed)?.with_cost(cost).run(program)?;
    Ok((run.results, run.ledger))
}
