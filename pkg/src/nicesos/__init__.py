"""Bounds and nice sum-of-squares certificates for nonlocal games."""
from .algebra import Kind, Letter, Polynomial, Signature
from .certificate import SosCertificate, extract, is_nice, load_cert, save_cert, verify
from .games import GamePolynomial, NonlocalGame, builtin, classical_value, game_polynomial
from .nicify import nicify_level1
from .relaxation import build_npa, build_onesided, npa_basis
from .sdp import solve

__version__ = "0.1.0"

__all__ = [
    "GamePolynomial",
    "Kind",
    "Letter",
    "NonlocalGame",
    "Polynomial",
    "Signature",
    "SosCertificate",
    "build_npa",
    "build_onesided",
    "builtin",
    "classical_value",
    "extract",
    "game_polynomial",
    "is_nice",
    "load_cert",
    "nicify_level1",
    "npa_basis",
    "save_cert",
    "solve",
    "verify",
]
