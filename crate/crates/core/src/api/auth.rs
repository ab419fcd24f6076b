use std::sync::Arc;

use axum::extract::{Request, State};
use axum::http::header::AUTHORIZATION;
use axum::middleware::Next;
use axum::response::{IntoResponse, Response};
use subtle::ConstantTimeEq;

use super::error::ApiError;
use super::AppState;
use crate::config::TokenEntry;

/// Authenticated caller, attached to the request by [`require_token`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Principal(pub String);

/// Match a presented token against the configured ones. Every entry is
/// compared so timing does not reveal which one matched.
pub fn auth_check(presented: &str, tokens: &[TokenEntry]) -> Option<Principal> {
    let mut found: Option<&TokenEntry> = None;
    for t in tokens {
        if bool::from(presented.as_bytes().ct_eq(t.token.as_bytes())) && found.is_none() {
            found = Some(t);
        }
    }
    found.map(|t| Principal(t.principal.clone()))
}

fn bearer(req: &Request) -> Option<&str> {
    let value = req.headers().get(AUTHORIZATION)?.to_str().ok()?;
    let (scheme, token) = value.split_once(' ')?;
    scheme.eq_ignore_ascii_case("bearer").then(|| token.trim())
}

pub async fn require_token(State(state): State<Arc<AppState>>, mut req: Request, next: Next) -> Response {
    let principal = bearer(&req)
        .filter(|t| !t.is_empty())
        .and_then(|t| auth_check(t, &state.tokens));
    match principal {
        Some(p) => {
            req.extensions_mut().insert(p);
            next.run(req).await
        }
        None => ApiError::unauthorized().into_response(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tokens() -> Vec<TokenEntry> {
        vec![
            TokenEntry {
                principal: "alice".into(),
                token: "alpha-token-1".into(),
            },
            TokenEntry {
                principal: "bob".into(),
                token: "bravo-token-2".into(),
            },
        ]
    }

    #[test]
    fn configured_token_accepted() {
        assert_eq!(auth_check("bravo-token-2", &tokens()), Some(Principal("bob".into())));
    }

    #[test]
    fn last_byte_differs() {
        assert_eq!(auth_check("alpha-token-2", &tokens()), None);
        assert_eq!(auth_check("alpha-token-", &tokens()), None);
        assert_eq!(auth_check("", &tokens()), None);
    }
}
