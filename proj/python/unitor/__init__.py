"""Mail-borne command and control for IoT nodes, secured with Edon80.

Thin wrapper around the C++ core; see ``unitor._core`` for the full API.
"""

from ._core import (  # noqa: F401
    AuthError,
    Broker,
    CommandFrame,
    ConfigError,
    ControllerService,
    DropReason,
    Edon80,
    Envelope,
    FilterPolicy,
    FrameKind,
    IV64,
    IvLog,
    IvReuseError,
    Key80,
    NodeDaemon,
    Quasigroup4,
    TcpTransport,
    TransportError,
    e_transform,
    encode_frame,
    enumerate_order4,
    filter,
    nist_smoke,
    open_body,
    pad_iv,
    parse_frame,
    quasigroup_number,
    quasigroups_for_date,
    rotation_indices,
    seal_body,
    standard_quad,
    subject_for,
    validate,
    xor_seal,
)

__all__ = [name for name in dir() if not name.startswith("_")]
