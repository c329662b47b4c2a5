from typing import List, Optional

from sqlalchemy.pool import StaticPool
from sqlmodel import Session, SQLModel, create_engine, select

from .comparators import EncryptedModel
from .exceptions import ReferenceNotFoundError
from .models import ComparatorKind, ProtectedTemplateRecord, VendorModelRecord
from .service import (
    ProtectedReference,
    encrypted_model_from_file,
    encrypted_model_to_file,
    parse_model,
    reference_from_file,
    reference_to_file,
)
from .schemas import EncryptedModelFile, TemplateFile
from .util import DATABASE_URL


def make_engine(url: str = DATABASE_URL):
    if url == "sqlite://" or (url.startswith("sqlite") and ":memory:" in url):
        # in-memory sqlite: all sessions share one connection
        engine = create_engine(url, connect_args={"check_same_thread": False}, poolclass=StaticPool)
    else:
        engine = create_engine(url)
    SQLModel.metadata.create_all(engine)
    return engine


class TemplateStore:
    """Protected references (DB_controller) and encrypted vendor models (DB_vendor)."""

    def __init__(self, url: str = DATABASE_URL, engine=None):
        self.engine = engine if engine is not None else make_engine(url)

    def add_reference(self, subject_id: str, ref: ProtectedReference) -> ProtectedTemplateRecord:
        payload = reference_to_file(ref, subject_id)
        record = ProtectedTemplateRecord(
            subject_id=subject_id,
            comparator=payload.comparator,
            feature_dim=payload.feature_dim,
            key_id=payload.key_id,
            payload=payload.model_dump_json(),
        )
        with Session(self.engine) as session:
            session.add(record)
            session.commit()
            session.refresh(record)
        return record

    def get_reference(self, subject_id: str, comparator: Optional[ComparatorKind] = None) -> ProtectedReference:
        with Session(self.engine) as session:
            statement = select(ProtectedTemplateRecord).where(ProtectedTemplateRecord.subject_id == subject_id)
            if comparator is not None:
                statement = statement.where(ProtectedTemplateRecord.comparator == ComparatorKind(comparator))
            record = session.exec(statement.order_by(ProtectedTemplateRecord.id.desc())).first()
        if record is None:
            kind = f" ({ComparatorKind(comparator).value})" if comparator is not None else ""
            raise ReferenceNotFoundError(f"no reference enrolled for subject {subject_id!r}{kind}")
        return reference_from_file(parse_model(record.payload, TemplateFile, f"reference {subject_id}"))

    def subjects(self, comparator: Optional[ComparatorKind] = None) -> List[str]:
        with Session(self.engine) as session:
            statement = select(ProtectedTemplateRecord.subject_id)
            if comparator is not None:
                statement = statement.where(ProtectedTemplateRecord.comparator == ComparatorKind(comparator))
            return sorted(set(session.exec(statement).all()))

    def add_vendor_model(self, enc_model: EncryptedModel) -> VendorModelRecord:
        payload = encrypted_model_to_file(enc_model)
        record = VendorModelRecord(feature_dim=payload.feature_dim, key_id=payload.key_id,
                                   payload=payload.model_dump_json())
        with Session(self.engine) as session:
            session.add(record)
            session.commit()
            session.refresh(record)
        return record

    def get_vendor_model(self, key_id: Optional[str] = None) -> EncryptedModel:
        with Session(self.engine) as session:
            statement = select(VendorModelRecord)
            if key_id is not None:
                statement = statement.where(VendorModelRecord.key_id == key_id)
            record = session.exec(statement.order_by(VendorModelRecord.id.desc())).first()
        if record is None:
            raise ReferenceNotFoundError("no vendor model stored" + (f" under key {key_id}" if key_id else ""))
        return encrypted_model_from_file(parse_model(record.payload, EncryptedModelFile, "vendor model"))
