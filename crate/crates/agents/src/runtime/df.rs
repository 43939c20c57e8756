use std::collections::BTreeMap;
use std::sync::Mutex;

use icn_core::acl::Aid;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PROCESS_CONTROL: &str = "process-control";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceDescription {
    pub provider: Aid,
    pub service_type: String,
    pub service_name: String,
    #[serde(default)]
    pub properties: BTreeMap<String, String>,
}

/// Every set field must match exactly; listed properties must all be present
/// with equal values.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DfTemplate {
    pub provider: Option<String>,
    pub service_type: Option<String>,
    pub service_name: Option<String>,
    pub properties: BTreeMap<String, String>,
}

impl DfTemplate {
    pub fn service_type(t: impl Into<String>) -> Self {
        DfTemplate {
            service_type: Some(t.into()),
            ..Default::default()
        }
    }

    pub fn service_name(n: impl Into<String>) -> Self {
        DfTemplate {
            service_name: Some(n.into()),
            ..Default::default()
        }
    }

    pub fn matches(&self, sd: &ServiceDescription) -> bool {
        self.provider.as_ref().map_or(true, |p| *p == sd.provider.name)
            && self.service_type.as_ref().map_or(true, |t| *t == sd.service_type)
            && self.service_name.as_ref().map_or(true, |n| *n == sd.service_name)
            && self
                .properties
                .iter()
                .all(|(k, v)| sd.properties.get(k) == Some(v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DfError {
    #[error("`{provider}` already registered service `{service_name}`")]
    Duplicate {
        provider: String,
        service_name: String,
    },
}

/// A subscriber to be told about a registration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DfNotification {
    pub subscription: u64,
    pub subscriber: Aid,
}

#[derive(Debug, Default)]
struct DfState {
    entries: Vec<ServiceDescription>,
    subscriptions: BTreeMap<u64, (Aid, DfTemplate)>,
    next_id: u64,
}

/// In-memory yellow pages. Registration order is kept so searches are
/// deterministic.
#[derive(Debug, Default)]
pub struct DirectoryFacilitator {
    state: Mutex<DfState>,
}

impl DirectoryFacilitator {
    pub fn new() -> Self {
        DirectoryFacilitator::default()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, DfState> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Stores `sd` and returns the subscriptions that must be notified.
    pub fn register(&self, sd: ServiceDescription) -> Result<Vec<DfNotification>, DfError> {
        let mut st = self.lock();
        if st
            .entries
            .iter()
            .any(|e| e.provider.name == sd.provider.name && e.service_name == sd.service_name)
        {
            return Err(DfError::Duplicate {
                provider: sd.provider.name,
                service_name: sd.service_name,
            });
        }
        let notify = st
            .subscriptions
            .iter()
            .filter(|(_, (_, t))| t.matches(&sd))
            .map(|(&id, (who, _))| DfNotification {
                subscription: id,
                subscriber: who.clone(),
            })
            .collect();
        st.entries.push(sd);
        Ok(notify)
    }

    pub fn deregister(&self, provider: &Aid, service_name: &str) -> bool {
        let mut st = self.lock();
        let before = st.entries.len();
        st.entries
            .retain(|e| !(e.provider.name == provider.name && e.service_name == service_name));
        st.entries.len() != before
    }

    pub fn search(&self, template: &DfTemplate) -> Vec<ServiceDescription> {
        self.lock()
            .entries
            .iter()
            .filter(|e| template.matches(e))
            .cloned()
            .collect()
    }

    pub fn subscribe(&self, subscriber: Aid, template: DfTemplate) -> u64 {
        let mut st = self.lock();
        st.next_id += 1;
        let id = st.next_id;
        st.subscriptions.insert(id, (subscriber, template));
        id
    }

    pub fn cancel(&self, subscription: u64) -> bool {
        self.lock().subscriptions.remove(&subscription).is_some()
    }

    pub fn len(&self) -> usize {
        self.lock().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sd(provider: &str, name: &str) -> ServiceDescription {
        ServiceDescription {
            provider: Aid::new(provider).unwrap(),
            service_type: PROCESS_CONTROL.into(),
            service_name: name.into(),
            properties: BTreeMap::new(),
        }
    }

    #[test]
    fn search_by_type_and_name() {
        let df = DirectoryFacilitator::new();
        assert!(df.search(&DfTemplate::service_type(PROCESS_CONTROL)).is_empty());
        for (i, p) in ["PLC1", "PLC2", "PLC3"].iter().enumerate() {
            df.register(sd(&format!("c{}@SCADA", i + 1), p)).unwrap();
        }
        assert_eq!(df.search(&DfTemplate::service_type(PROCESS_CONTROL)).len(), 3);
        let plc2 = df.search(&DfTemplate::service_name("PLC2"));
        assert_eq!(plc2, vec![sd("c2@SCADA", "PLC2")]);
    }

    #[test]
    fn duplicate_registration() {
        let df = DirectoryFacilitator::new();
        df.register(sd("c1@SCADA", "PLC1")).unwrap();
        assert!(matches!(
            df.register(sd("c1@SCADA", "PLC1")),
            Err(DfError::Duplicate { .. })
        ));
        assert!(df.deregister(&Aid::new("c1@SCADA").unwrap(), "PLC1"));
        df.register(sd("c1@SCADA", "PLC1")).unwrap();
    }

    #[test]
    fn subscriptions_fan_out_and_cancel() {
        let df = DirectoryFacilitator::new();
        let a = df.subscribe(Aid::new("a@P").unwrap(), DfTemplate::service_type(PROCESS_CONTROL));
        let b = df.subscribe(Aid::new("b@P").unwrap(), DfTemplate::service_name("PLC2"));
        let n = df.register(sd("c1@P", "PLC1")).unwrap();
        assert_eq!(n.iter().map(|n| n.subscription).collect::<Vec<_>>(), vec![a]);
        let n = df.register(sd("c2@P", "PLC2")).unwrap();
        assert_eq!(n.iter().map(|n| n.subscription).collect::<Vec<_>>(), vec![a, b]);
        assert!(df.cancel(a));
        let n = df.register(sd("c3@P", "PLC2")).unwrap();
        assert_eq!(n.iter().map(|n| n.subscription).collect::<Vec<_>>(), vec![b]);
    }
}
