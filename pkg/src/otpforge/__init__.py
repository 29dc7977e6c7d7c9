"""Reconstruction of a time-stepped OTP token, its verifier and a forgery study."""

from .digitizer import TokenKey, body, prf20
from .timebase import STEP, SyncModel, counter_at, step_delta
from .token import Otp, PressKind, TokenState, new_token, press
from .verifier import BARE, Reason, Registry, VerifierConfig, VerifyOutcome, provision, verify

__version__ = "0.1.0"

__all__ = [
    "BARE", "Otp", "PressKind", "Reason", "Registry", "STEP", "SyncModel", "TokenKey",
    "TokenState", "VerifierConfig", "VerifyOutcome", "body", "counter_at", "new_token",
    "prf20", "press", "provision", "step_delta", "verify",
]
