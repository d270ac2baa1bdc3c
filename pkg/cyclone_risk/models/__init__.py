from .run_manifest import RunRecord

__all__ = ["RunRecord"]
