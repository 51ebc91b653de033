use std::path::PathBuf;
use std::sync::mpsc::{self, Receiver, SyncSender};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use super::dub::{DubOutput, DubRequest, Dubber};
use crate::error::{Error, Result};

struct Job {
    req: DubRequest,
    out_dir: PathBuf,
    reply: mpsc::Sender<Result<DubOutput>>,
}

/// Fixed set of workers, each owning one model bundle, fed from a bounded
/// FIFO queue.
pub struct WorkerPool {
    queue: Option<SyncSender<Job>>,
    workers: Vec<JoinHandle<()>>,
}

impl WorkerPool {
    /// One worker per bundle; `queue_capacity` requests may wait before
    /// `dub` blocks the caller.
    pub fn new(bundles: Vec<Dubber>, queue_capacity: usize) -> Result<Self> {
        if bundles.is_empty() {
            return Err(Error::Config("worker pool needs at least one model bundle".into()));
        }
        let (tx, rx) = mpsc::sync_channel::<Job>(queue_capacity);
        let rx = Arc::new(Mutex::new(rx));
        let workers = bundles
            .into_iter()
            .map(|dubber| {
                let rx = Arc::clone(&rx);
                std::thread::spawn(move || worker(dubber, rx))
            })
            .collect();
        Ok(WorkerPool { queue: Some(tx), workers })
    }

    pub fn size(&self) -> usize {
        self.workers.len()
    }

    /// Queues `req` and waits for its result.
    pub fn dub(&self, req: DubRequest, out_dir: PathBuf) -> Result<DubOutput> {
        let (reply, result) = mpsc::channel();
        let queue = self.queue.as_ref().expect("queue open until drop");
        queue
            .send(Job { req, out_dir, reply })
            .map_err(|_| Error::InvalidRequest("worker pool has shut down".into()))?;
        result.recv().map_err(|_| Error::InvalidRequest("worker exited before replying".into()))?
    }
}

fn worker(dubber: Dubber, rx: Arc<Mutex<Receiver<Job>>>) {
    loop {
        let job = {
            let guard = rx.lock().expect("queue lock poisoned");
            guard.recv()
        };
        let Ok(job) = job else { return };
        let _ = job.reply.send(dubber.dub(&job.req, &job.out_dir));
    }
}

impl Drop for WorkerPool {
    fn drop(&mut self) {
        self.queue.take();
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}
