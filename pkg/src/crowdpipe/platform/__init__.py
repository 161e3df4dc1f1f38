"""Crowdsourcing platform: local service, HTTP wire, clients, simulation."""

from .types import Assignment, TaskRecord, TaskView, WorkerProfile
from .local import LocalPlatform
from .client import HttpClient, InProcessClient, OfflineClient, PlatformClient
from .simulate import TranscriptEntry, WorkerPool, make_profiles, simulate_workers

__all__ = [
    "Assignment",
    "TaskRecord",
    "TaskView",
    "WorkerProfile",
    "LocalPlatform",
    "PlatformClient",
    "InProcessClient",
    "HttpClient",
    "OfflineClient",
    "WorkerPool",
    "TranscriptEntry",
    "make_profiles",
    "simulate_workers",
]
