from . import cyclone, diagnose, ingest, score, seasonal

COMMANDS = [ingest, seasonal, cyclone, score, diagnose]

__all__ = ["COMMANDS"]
