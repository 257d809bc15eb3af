use std::collections::BTreeMap;
use std::sync::RwLock;

use aec_core::agents::ExemplarSet;
use aec_core::refinement::ExemplarCache;

/// Exemplar cache shared by pipeline workers: many readers, one writer at
/// a time.
#[derive(Debug, Default)]
pub struct SharedExemplarCache {
    sets: RwLock<BTreeMap<String, ExemplarSet>>,
}

impl ExemplarCache for SharedExemplarCache {
    fn lookup(&self, event_type: &str) -> Option<ExemplarSet> {
        self.sets
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(event_type)
            .cloned()
    }

    fn store(&self, set: ExemplarSet) {
        self.sets
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .entry(set.event_type.clone())
            .or_insert(set);
    }
}
