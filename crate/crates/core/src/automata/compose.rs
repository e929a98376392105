use thiserror::Error;

use super::Network;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComposeError {
    #[error("automaton {0} appears in more than one part")]
    AutomatonClash(String),
    #[error("channel {0} is declared with different kinds or priorities")]
    ChannelMismatch(String),
    #[error("variable {0} is declared differently in two parts")]
    VariableMismatch(String),
}

/// Parallel composition. Automata keep their order (parts in order, then
/// automata within each part). Channels and variables declared identically
/// in several parts are merged.
pub fn compose(parts: &[Network]) -> Result<Network, ComposeError> {
    let mut out = Network::default();
    for p in parts {
        for a in &p.automata {
            if out.automaton(&a.name).is_some() {
                return Err(ComposeError::AutomatonClash(a.name.clone()));
            }
            out.automata.push(a.clone());
        }
        for c in &p.channels {
            match out.channel(&c.name) {
                Some(existing) if existing != c => return Err(ComposeError::ChannelMismatch(c.name.clone())),
                Some(_) => {}
                None => out.channels.push(c.clone()),
            }
        }
        for v in &p.variables {
            match out.variables.iter().find(|w| w.name() == v.name()) {
                Some(existing) if existing != v => return Err(ComposeError::VariableMismatch(v.name().to_string())),
                Some(_) => {}
                None => out.variables.push(v.clone()),
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{Channel, Location, TimedAutomaton};

    fn part(name: &str, ch: Channel) -> Network {
        Network {
            automata: vec![TimedAutomaton {
                name: name.into(),
                clocks: vec![],
                locations: vec![Location::new("l").initial()],
                edges: vec![],
            }],
            channels: vec![ch],
            variables: vec![],
        }
    }

    #[test]
    fn identity_and_associativity() {
        let a = part("A", Channel::broadcast("e", 0));
        let b = part("B", Channel::broadcast("e", 0));
        let c = part("C", Channel::handshake("h", 1));
        assert_eq!(compose(std::slice::from_ref(&a)).unwrap(), a);
        let left = compose(&[compose(&[a.clone(), b.clone()]).unwrap(), c.clone()]).unwrap();
        let flat = compose(&[a, b, c]).unwrap();
        assert_eq!(left, flat);
        assert_eq!(flat.channels.len(), 2);
    }

    #[test]
    fn clashes() {
        let a = part("A", Channel::broadcast("e", 0));
        assert_eq!(
            compose(&[a.clone(), a.clone()]),
            Err(ComposeError::AutomatonClash("A".into()))
        );
        let b = part("B", Channel::handshake("e", 0));
        assert_eq!(compose(&[a, b]), Err(ComposeError::ChannelMismatch("e".into())));
    }
}
