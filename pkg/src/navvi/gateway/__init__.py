"""Network gateway: wire schemas, session service, HTTP app, CLI."""

from .service import SessionService
from .wire import (
    WireError,
    parse_client_message,
    parse_server_message,
    encode_server_message,
)

__all__ = [
    "SessionService",
    "WireError",
    "parse_client_message",
    "parse_server_message",
    "encode_server_message",
]
