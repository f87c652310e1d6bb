"""SI constants used by the bound calculators (CODATA to the stored digits)."""

from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    G: float = 6.674e-11        # m^3 kg^-1 s^-2
    hbar: float = 1.0546e-34    # J s
    amu: float = 1.6605e-27     # kg
    earth_mass: float = 5.97e24 # kg


CODATA = PhysicalConstants()
