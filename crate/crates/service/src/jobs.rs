//! Background t-SNE jobs with progress polling and cancellation.

use std::collections::HashMap;
use std::ops::ControlFlow;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Running,
    Done,
    Failed,
    Cancelled,
}

#[derive(Debug, Clone, Serialize)]
pub struct JobStatus {
    pub id: String,
    pub state: JobState,
    pub iteration: usize,
    pub total: usize,
    pub kl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Arc<Value>>,
}

#[derive(Debug)]
pub struct Job {
    status: Mutex<JobStatus>,
    cancel: AtomicBool,
}

impl Job {
    pub fn status(&self) -> JobStatus {
        self.status.lock().expect("job lock").clone()
    }

    pub fn cancel(&self) {
        self.cancel.store(true, Ordering::SeqCst);
    }

    /// Progress hook for the projection loop.
    pub fn progress(&self, iteration: usize, total: usize, kl: f64) -> ControlFlow<()> {
        {
            let mut s = self.status.lock().expect("job lock");
            s.iteration = iteration;
            s.total = total;
            s.kl = Some(kl);
        }
        if self.cancel.load(Ordering::SeqCst) {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    }

    pub fn finish(&self, outcome: Result<Arc<Value>, (JobState, String)>) {
        let mut s = self.status.lock().expect("job lock");
        match outcome {
            Ok(v) => {
                s.state = JobState::Done;
                s.result = Some(v);
            }
            Err((state, msg)) => {
                s.state = state;
                s.error = Some(msg);
            }
        }
    }
}

#[derive(Debug, Default)]
pub struct Jobs {
    jobs: Mutex<HashMap<String, Arc<Job>>>,
}

impl Jobs {
    /// Returns the running or finished job with this id, or registers a new
    /// one. The flag tells whether the job was created by this call.
    /// Cancelled and failed jobs are replaced.
    pub fn start(&self, id: &str, total: usize) -> (Arc<Job>, bool) {
        let mut jobs = self.jobs.lock().expect("jobs lock");
        if let Some(j) = jobs.get(id) {
            if matches!(j.status().state, JobState::Running | JobState::Done) {
                return (j.clone(), false);
            }
        }
        let job = Arc::new(Job {
            status: Mutex::new(JobStatus {
                id: id.to_string(),
                state: JobState::Running,
                iteration: 0,
                total,
                kl: None,
                error: None,
                result: None,
            }),
            cancel: AtomicBool::new(false),
        });
        jobs.insert(id.to_string(), job.clone());
        (job, true)
    }

    pub fn get(&self, id: &str) -> Option<Arc<Job>> {
        self.jobs.lock().expect("jobs lock").get(id).cloned()
    }
}
