"""Exception types shared across the simulator."""


class ConfigError(ValueError):
    """Invalid or unknown configuration fields."""


class CapabilityError(ValueError):
    """Request exceeds what the antenna array can do (e.g. streams + nulls > antennas)."""


class SingularChannelError(ValueError):
    """Aggregate channel matrix is rank deficient; caller may drop a user and retry."""
