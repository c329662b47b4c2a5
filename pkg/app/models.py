from datetime import datetime, timezone
from enum import Enum
from typing import Optional

from sqlmodel import Field, SQLModel


def _utcnow() -> datetime:
    return datetime.now(tz=timezone.utc)


class ComparatorKind(str, Enum):
    EUCLIDEAN = "euclidean"
    COSINE = "cosine"
    TWO_COV_SUBJECT = "2cov-subject"
    TWO_COV_VENDOR = "2cov-vendor"


class ProtectedTemplateRecord(SQLModel, table=True):
    id: Optional[int] = Field(default=None, primary_key=True, description="Row identifier")
    subject_id: str = Field(index=True, max_length=255, description="Enrolled subject identifier")
    comparator: ComparatorKind = Field(description="Comparator the reference was built for")
    feature_dim: int = Field(ge=1, description="Feature dimension F")
    key_id: str = Field(max_length=64, description="Fingerprint of the encrypting public key")
    payload: str = Field(description="Serialized template file (JSON)")
    created_at: datetime = Field(default_factory=_utcnow, description="Enrolment timestamp")

    def __repr__(self):
        return f"<ProtectedTemplateRecord(subject_id={self.subject_id}, comparator={self.comparator.value})>"


class VendorModelRecord(SQLModel, table=True):
    id: Optional[int] = Field(default=None, primary_key=True, description="Row identifier")
    feature_dim: int = Field(ge=1, description="Feature dimension F")
    key_id: str = Field(max_length=64, description="Fingerprint of the vendor public key pk2")
    payload: str = Field(description="Serialized encrypted model file (JSON)")
    created_at: datetime = Field(default_factory=_utcnow, description="Upload timestamp")

    def __repr__(self):
        return f"<VendorModelRecord(id={self.id}, key_id={self.key_id})>"
