//! Edit sessions: current state, bounded undo history, revision counter.

use std::collections::{HashMap, VecDeque};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use texton_core::editing::{
    interpolate, modify_variations, rescale_gaussians, reshuffle, transfer_mean_align,
    transfer_replace, transform_texton, ReshuffleMode, ReshufflePlan, TextonOp, VariationEdit,
    DEFAULT_GAMMA,
};
use texton_core::estimation::{synth_world, LayoutSpec};
use texton_core::io::TextonDocument;
use texton_core::{GaussianSet, ImageFrame, Result, TextonError, Vec2, DEFAULT_FEATURE_DIM};

pub const UNDO_LIMIT: usize = 64;

/// Payload of `POST /sessions`.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CreateRequest {
    Document(TextonDocument),
    Synth(SynthSpec),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub k: usize,
    pub width: usize,
    pub height: usize,
    #[serde(default = "default_nf")]
    pub n_f: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_nf() -> usize {
    DEFAULT_FEATURE_DIM
}

impl SynthSpec {
    pub fn build(&self) -> Result<GaussianSet> {
        let frame = ImageFrame::new(self.width, self.height)?;
        Ok(synth_world(&LayoutSpec::new(frame, self.k, self.n_f), self.seed)?.truth)
    }
}

impl CreateRequest {
    pub fn build(&self) -> Result<GaussianSet> {
        match self {
            CreateRequest::Document(doc) => doc.to_set(),
            CreateRequest::Synth(spec) => spec.build(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Hard,
    Soft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferMode {
    Mean,
    Replace,
}

/// One editing command; each maps onto a single library operation.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum EditCommand {
    Move { index: usize, dx: f64, dy: f64 },
    Scale { index: usize, s: f64 },
    Rotate { index: usize, theta: f64 },
    Reshuffle {
        seed: u64,
        #[serde(default = "default_mode")]
        mode: ModeName,
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
    Vary { delta_f: f64, delta_u: f64 },
    Transfer {
        mode: TransferMode,
        appearance: TextonDocument,
        #[serde(default)]
        seed: u64,
    },
    Interpolate {
        other: TextonDocument,
        eta: f64,
        #[serde(default)]
        seed: u64,
    },
    Rescale { s: f64, anchor: [f64; 2] },
}

fn default_mode() -> ModeName {
    ModeName::Hard
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

impl EditCommand {
    pub fn apply(&self, set: &GaussianSet) -> Result<GaussianSet> {
        let out = match self {
            EditCommand::Move { index, dx, dy } => {
                transform_texton(set, *index, TextonOp::Move(Vec2::new(*dx, *dy)))?
            }
            EditCommand::Scale { index, s } => transform_texton(set, *index, TextonOp::Scale(*s))?,
            EditCommand::Rotate { index, theta } => {
                transform_texton(set, *index, TextonOp::Rotate(*theta))?
            }
            EditCommand::Reshuffle { seed, mode, gamma } => {
                let mode = match mode {
                    ModeName::Hard => ReshuffleMode::Hard,
                    ModeName::Soft => ReshuffleMode::Soft,
                };
                reshuffle(set, &ReshufflePlan::random(set.len(), mode, *seed).with_gamma(*gamma))?
            }
            EditCommand::Vary { delta_f, delta_u } => modify_variations(
                set,
                &VariationEdit {
                    feature: *delta_f,
                    covariance: *delta_u,
                },
            )?,
            EditCommand::Transfer {
                mode,
                appearance,
                seed,
            } => {
                let app = appearance.to_set()?;
                match mode {
                    TransferMode::Mean => transfer_mean_align(set, &app)?,
                    TransferMode::Replace => transfer_replace(set, &app, *seed)?,
                }
            }
            EditCommand::Interpolate { other, eta, seed } => {
                interpolate(set, &other.to_set()?, *eta, *seed)?
            }
            EditCommand::Rescale { s, anchor } => {
                rescale_gaussians(set, *s, Vec2::new(anchor[0], anchor[1]))?
            }
        };
        out.ensure_valid()?;
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    pub current: GaussianSet,
    pub history: VecDeque<GaussianSet>,
    pub revision: u64,
}

impl Session {
    pub fn new(set: GaussianSet) -> Self {
        Self {
            current: set,
            history: VecDeque::new(),
            revision: 0,
        }
    }

    /// Apply `cmd`; the state is untouched when it fails.
    pub fn apply(&mut self, cmd: &EditCommand) -> Result<()> {
        let next = cmd.apply(&self.current)?;
        if self.history.len() == UNDO_LIMIT {
            self.history.pop_front();
        }
        self.history.push_back(std::mem::replace(&mut self.current, next));
        self.revision += 1;
        Ok(())
    }

    /// Restore the previous state; `false` when there is nothing to undo.
    pub fn undo(&mut self) -> bool {
        match self.history.pop_back() {
            Some(prev) => {
                self.current = prev;
                self.revision += 1;
                true
            }
            None => false,
        }
    }
}

/// JSON view of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub id: String,
    pub revision: u64,
    pub history: usize,
    pub document: TextonDocument,
}

impl SessionState {
    pub fn of(id: &str, s: &Session) -> Self {
        Self {
            id: id.to_string(),
            revision: s.revision,
            history: s.history.len(),
            document: TextonDocument::from_set(&s.current, None),
        }
    }
}

/// All live sessions. Each session has its own lock, so edits to different
/// sessions never contend.
#[derive(Debug, Default)]
pub struct Registry {
    next: AtomicU64,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

impl Registry {
    pub fn create(&self, set: GaussianSet) -> Result<String> {
        set.ensure_valid()?;
        let n = self.next.fetch_add(1, Ordering::Relaxed) + 1;
        let id = format!("s{n:06}");
        self.sessions
            .write()
            .expect("registry lock poisoned")
            .insert(id.clone(), Arc::new(Mutex::new(Session::new(set))));
        Ok(id)
    }

    pub fn get(&self, id: &str) -> Option<Arc<Mutex<Session>>> {
        self.sessions
            .read()
            .expect("registry lock poisoned")
            .get(id)
            .cloned()
    }
}

/// Map library errors onto the session-level error kinds.
pub fn is_index_error(e: &TextonError) -> Option<usize> {
    match e {
        TextonError::IndexOutOfRange { index, .. } => Some(*index),
        _ => None,
    }
}
