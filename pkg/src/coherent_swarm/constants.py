"""Physical constants shared by every module."""

#: Speed of light in vacuum, m/s. Used for every range/phase conversion.
C = 299_792_458.0


def wavelength(freq_hz: float) -> float:
    """Free-space wavelength in metres."""
    return C / freq_hz
