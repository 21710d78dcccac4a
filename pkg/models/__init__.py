from flask_sqlalchemy import SQLAlchemy
from sqlalchemy.orm import DeclarativeBase


class Base(DeclarativeBase):
    """Declarative base shared by the run-registry models."""
    pass


db = SQLAlchemy(model_class=Base)
