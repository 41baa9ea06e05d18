"""Thermalization of a harmonic particle in an ohmic oscillator bath."""
