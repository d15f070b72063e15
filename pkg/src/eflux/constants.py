"""Physical constants and unit conversions.

Internally energies are in hartree and lengths in bohr.  Times cross the API
in femtoseconds, so the dynamics layer carries angular frequencies in fs^-1
and the single conversion factor below does all the bookkeeping.
"""

# atomic time units per femtosecond (1 fs = 41.34... hbar/E_h)
AU_TIME_PER_FS = 41.341374575751

# angular frequency in fs^-1 corresponding to a 1 hartree level spacing (hbar = 1)
OMEGA_FS_PER_HARTREE = AU_TIME_PER_FS

# hbar/m_e expressed in bohr^2/fs (equals 1 in atomic units)
HBAR_OVER_ME_BOHR2_FS = AU_TIME_PER_FS

PROTON_MASS_ME = 1836.15267343

# reduced mass of two protons, in electron masses
H2P_REDUCED_MASS = PROTON_MASS_ME / 2.0

# Morse surrogate defaults for the hydrogen molecular ion ground state
MORSE_DE = 0.1026          # hartree
MORSE_QE = 2.0             # bohr
MORSE_PERIOD_FS = 14.8     # target fundamental (0->1) vibrational period

# variational 1s exponent near the equilibrium distance
LCAO_ZETA = 1.24
