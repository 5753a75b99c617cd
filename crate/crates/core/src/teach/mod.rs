//! Live teaching: the simulation loop driven one step at a time by a client
//! that plays the teacher.
//!
//! A session babbles on creation, then each `advance` arbitrates and
//! proposes an action. When the arm holds a cube the proposal waits for a
//! `takeover` naming the drop (or for the window to expire); otherwise it is
//! executed at once. After a step the client may `congratulate` it, which
//! biases the next decision in the same situation. See [`protocol`] for the
//! messages.

pub mod protocol;
mod registry;
mod session;

pub use protocol::{parse_client, ClientMessage, ErrorCode, ServerBody, ServerMessage, PROTOCOL_VERSION};
pub use registry::{apply, create_session, SessionRegistry};
pub use session::{Advance, Session, SessionError, SessionSnapshot};
