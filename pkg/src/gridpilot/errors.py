"""Error types shared across the harness.

Every failure mode callers are expected to handle has its own class so that
tests and the gateway can match on type instead of message text.
"""


class GridPilotError(Exception):
    """Base class for all harness errors."""


# --- world -------------------------------------------------------------

class NonDivisibleExtent(GridPilotError):
    """Grid resolution does not evenly tile the world extent."""


class ObstacleOutOfBounds(GridPilotError):
    """An obstacle does not fit inside the world extent."""


class CellNotFound(GridPilotError):
    """A cell index does not exist in the grid."""


class OutOfBounds(GridPilotError):
    """A queried position lies outside the world extent."""


class WorldFileInvalid(GridPilotError):
    """A world description file failed to parse or validate."""


# --- agent -------------------------------------------------------------

class LimitExceeded(GridPilotError):
    """A velocity command violates the agent's speed limits."""


# --- streams -----------------------------------------------------------

class MissionNotFound(GridPilotError):
    """No mission with the requested id is registered."""


class MissionAlreadyActive(GridPilotError):
    """A mission session is already open."""


class NoActiveMission(GridPilotError):
    """A stream was called without an open mission session."""


class EnvironmentNotSensed(GridPilotError):
    """The environment has not been loaded into the session yet."""


class ObstacleNotFound(GridPilotError):
    """No obstacle with the requested id exists in the world."""


class InvalidQuantum(GridPilotError):
    """Maneuver duration is not one of the admissible quanta."""


class ArgsInvalid(GridPilotError):
    """Stream call arguments failed schema validation."""


# --- planner -----------------------------------------------------------

class StrategyUnnecessary(GridPilotError):
    """The requested avoidance strategy is not needed on this path."""


class StrategyInfeasible(GridPilotError):
    """The requested avoidance strategy cannot produce a valid plan."""


class BoundNotAboveStart(GridPilotError):
    """Altitude bypass requested with a height bound at or below start."""


class CeilingExceeded(GridPilotError):
    """A planned cruise altitude exceeds the world ceiling."""


# --- llm bridge --------------------------------------------------------

class BudgetExceeded(GridPilotError):
    """The per-mission API call budget is exhausted."""


class ProviderUnavailable(GridPilotError):
    """The model provider failed to produce a response."""


class MalformedToolCall(GridPilotError):
    """A provider tool call failed schema validation."""


class UnknownModel(GridPilotError):
    """A model name is missing from the price table."""


# --- mission -----------------------------------------------------------

class MissionFileInvalid(GridPilotError):
    """A mission description file failed to parse or validate."""


class PlanningFailed(GridPilotError):
    """The direct-control loop could not plan a way to the goal."""


class MalformedLog(GridPilotError):
    """A mission log failed to parse or failed schema checks."""


class ReplayDivergence(GridPilotError):
    """Replaying a log did not reproduce it field-for-field."""


# --- gateway -----------------------------------------------------------

class SessionNotFound(GridPilotError):
    """No session with the requested id exists."""


class Busy(GridPilotError):
    """The session is mid-execution and cannot accept the request."""


class Conflict(GridPilotError):
    """Another active session already holds this world."""
