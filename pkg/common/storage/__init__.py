from common.storage.uow import RunStore

__all__ = ["RunStore"]
