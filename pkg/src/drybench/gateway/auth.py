"""Login gate for the monitoring bridge.

Credentials live in the config file as per-user salted PBKDF2-SHA256 hashes;
there is no user-management API.  Verification takes the same code path
whether or not the user exists, so response timing does not leak usernames.
Sessions are opaque random tokens with a TTL, re-checked on every message.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
import time
from dataclasses import dataclass

PBKDF2_ITERATIONS = 100_000
DEFAULT_TTL_S = 8 * 3600


class AuthError(Exception):
    pass


class BadCredentials(AuthError):
    """Unknown user or wrong password; the caller cannot tell which."""


class AuthExpired(AuthError):
    """Session token missing, unknown, or past its expiry."""


def hash_password(password: str, salt: bytes | None = None) -> tuple[str, str]:
    """Derive a storable (salt_hex, hash_hex) pair for a new password."""
    salt = salt if salt is not None else secrets.token_bytes(16)
    digest = hashlib.pbkdf2_hmac("sha256", password.encode(), salt, PBKDF2_ITERATIONS)
    return salt.hex(), digest.hex()


@dataclass(frozen=True)
class Session:
    session_id: str
    user: str
    created_at: float
    expires_at: float


class CredentialStore:
    def __init__(self, users: dict[str, tuple[str, str]]):
        """users maps name -> (salt_hex, pbkdf2_sha256_hash_hex)."""
        self._users = dict(users)
        # Dummy entry keeps the failure path doing real key derivation.
        self._dummy = hash_password(secrets.token_hex(8))

    @classmethod
    def with_password(cls, user: str, password: str) -> "CredentialStore":
        return cls({user: hash_password(password)})

    def verify(self, user: str, password: str) -> None:
        salt_hex, expected_hex = self._users.get(user, self._dummy)
        digest = hashlib.pbkdf2_hmac(
            "sha256", password.encode(), bytes.fromhex(salt_hex), PBKDF2_ITERATIONS
        )
        if user not in self._users or not hmac.compare_digest(digest.hex(), expected_hex):
            raise BadCredentials("bad user or password")


class SessionManager:
    def __init__(self, store: CredentialStore, ttl_s: float = DEFAULT_TTL_S,
                 clock=time.monotonic):
        self.store = store
        self.ttl_s = ttl_s
        self._clock = clock
        self._sessions: dict[str, Session] = {}

    def login(self, user: str, password: str) -> Session:
        self.store.verify(user, password)
        now = self._clock()
        session = Session(
            session_id=secrets.token_urlsafe(24),
            user=user,
            created_at=now,
            expires_at=now + self.ttl_s,
        )
        self._sessions[session.session_id] = session
        return session

    def validate(self, session_id: str | None) -> Session:
        """Check a token; raises AuthExpired on every kind of invalidity."""
        session = self._sessions.get(session_id or "")
        if session is None:
            raise AuthExpired("unknown session")
        if self._clock() >= session.expires_at:
            self._sessions.pop(session.session_id, None)
            raise AuthExpired("session expired")
        return session
