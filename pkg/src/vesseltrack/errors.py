"""Exception hierarchy.

Each error family carries the process exit code the CLI reports for it.
"""


class VesselTrackError(Exception):
    exit_code = 1


class ConfigError(VesselTrackError):
    """Unreadable or invalid input file / configuration."""

    exit_code = 3


# calibration
class CalibrationError(VesselTrackError):
    exit_code = 10


class InsufficientCorrespondences(CalibrationError):
    exit_code = 10


class NoConsensus(CalibrationError):
    exit_code = 11


class DegenerateGeometry(CalibrationError):
    exit_code = 12


class PointAtInfinity(CalibrationError):
    exit_code = 13


# timeline
class InvalidWarp(VesselTrackError):
    exit_code = 14


# measurement models
class MeasurementError(VesselTrackError):
    exit_code = 15


class EmptyPointSet(MeasurementError):
    pass


class CoincidentWithSensor(MeasurementError):
    pass


class NondegenerateCovarianceRequired(MeasurementError):
    pass


# filter / fusion
class AllWeightsDegenerate(VesselTrackError):
    exit_code = 20


class NoDetectionInBin(VesselTrackError):
    exit_code = 21


class NoSensorAvailable(VesselTrackError):
    exit_code = 22


# simulation / evaluation
class BadWaypoints(ConfigError):
    exit_code = 30


class EmptyZone(VesselTrackError):
    exit_code = 31
