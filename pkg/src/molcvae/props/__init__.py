"""Property calculators: Crippen ClogP/CMR, QED, SAS, Ghose filter and conditions."""

from molcvae.props.conditions import (
    CONDITION_KEYS,
    GRIDS,
    PROPERTY_NAMES,
    SCALES,
    TOLERANCES,
    ConditionError,
    ConditionVector,
    active_mask,
    PropertyVector,
    compute_properties,
    condition_satisfied,
    ghose_pass,
)
from molcvae.props.crippen import TypingError, clogp, cmr
from molcvae.props.descriptors import DescriptorSet, descriptors
from molcvae.props.qed import qed, qed_from_descriptors
from molcvae.props.sas import sas
from molcvae.props.tables import DATA_ENV, TableError

__all__ = [
    "CONDITION_KEYS", "GRIDS", "PROPERTY_NAMES", "SCALES", "TOLERANCES", "ConditionError",
    "ConditionVector", "active_mask", "PropertyVector", "compute_properties", "condition_satisfied", "ghose_pass",
    "TypingError", "clogp", "cmr", "DescriptorSet", "descriptors", "qed", "qed_from_descriptors",
    "sas", "DATA_ENV", "TableError",
]
