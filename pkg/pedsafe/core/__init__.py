from .errors import (
    DegenerateError, DomainError, EmptyTableError, NonConvergenceError,
    PedsafeError, SchemaError, UnsatisfiableError, UsageError
)
from .models import Command, RunConfig, Settings
