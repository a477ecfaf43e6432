"""Seeded regime-switching series generator."""
from .generator import GenConfig, Regime, generate, generate_with_regimes

__all__ = ['GenConfig', 'Regime', 'generate', 'generate_with_regimes']
