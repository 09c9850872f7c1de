"""Exception hierarchy for archprobe."""


class ArchprobeError(Exception):
    """Base class for all archprobe errors."""


class CalibrationError(ArchprobeError):
    """Timer calibration failed (e.g. non-monotone clock source)."""


class ProtocolError(ArchprobeError):
    """Invalid measurement protocol usage (empty samples, bad counts)."""


class KernelError(ArchprobeError):
    """A measurement kernel failed during a protocol run."""

    def __init__(self, message: str, pass_index: int):
        super().__init__(f"{message} (pass {pass_index})")
        self.pass_index = pass_index


class InsufficientWorkError(ArchprobeError):
    """Measured interval too short relative to timer resolution."""


class CapabilityError(ArchprobeError):
    """The execution backend does not support the requested operation."""


class TopologyError(ArchprobeError):
    """Topology source could not be parsed or is inconsistent."""


class PlacementError(ArchprobeError):
    """Thread placement request cannot be satisfied."""


class ValidationError(ArchprobeError):
    """One or more benchmark parameter sets failed validation."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class ClaimsParseError(ArchprobeError):
    """A key-value claims/config file is malformed."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class ReportError(ArchprobeError):
    """Report serialization or deserialization failed."""
